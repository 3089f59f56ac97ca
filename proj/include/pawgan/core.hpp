#ifndef PAWGAN_CORE_HPP
#define PAWGAN_CORE_HPP

// Shared plumbing: error types, deterministic number formatting, small
// filesystem helpers and a chunked parallel_for.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

namespace pawgan {

namespace fs = std::filesystem;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or config. CLI maps this to exit code 1.
class UsageError : public Error {
public:
  using Error::Error;
};

// A required upstream artifact is absent or its content hash no longer
// matches what the producing stage recorded. CLI maps this to exit code 2.
class MissingDependencyError : public Error {
public:
  using Error::Error;
};

// Synthetic records reached an evaluation split.
class ContaminationError : public Error {
public:
  using Error::Error;
};

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

inline void check_usage(bool cond, const std::string& msg) {
  if (!cond) throw UsageError(msg);
}

// Shortest round-trip decimal form, locale independent. All emitted
// artifacts go through this so that byte-level reproduction audits work.
inline std::string fmt_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_real(double v, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  check(res.ec == std::errc() && res.ptr == s.data() + s.size(),
        "not a real number: '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  check(res.ec == std::errc() && res.ptr == s.data() + s.size(),
        "not an integer: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string> split_char(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::string read_text_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  check(in.good(), "cannot open file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<uint8_t> read_binary_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  check(in.good(), "cannot open file: " + p.string());
  in.seekg(0, std::ios::end);
  std::vector<uint8_t> buf(static_cast<size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  check(in.good(), "short read: " + p.string());
  return buf;
}

inline void write_text_file(const fs::path& p, std::string_view text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  check(out.good(), "cannot write file: " + p.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  check(out.good(), "write failed: " + p.string());
}

inline void write_binary_file(const fs::path& p, const void* data, size_t n) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  check(out.good(), "cannot write file: " + p.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  check(out.good(), "write failed: " + p.string());
}

// Sorted listing; directory iteration order is unspecified and everything
// downstream assumes a stable record order.
inline std::vector<fs::path> list_dir_sorted(const fs::path& dir) {
  check(fs::exists(dir), "directory does not exist: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// Little-endian binary stream helpers for checkpoint files.
class BinWriter {
public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(std::string_view s) {
    u32(static_cast<uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void f32s(const float* p, size_t n) {
    u64(n);
    const uint8_t* b = reinterpret_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n * 4);
  }
  const std::vector<uint8_t>& bytes() const { return buf_; }
  void save(const fs::path& p) const { write_binary_file(p, buf_.data(), buf_.size()); }

private:
  std::vector<uint8_t> buf_;
};

class BinReader {
public:
  explicit BinReader(std::vector<uint8_t> data) : buf_(std::move(data)) {}
  static BinReader from_file(const fs::path& p) { return BinReader(read_binary_file(p)); }

  uint8_t u8() { return take(1)[0]; }
  uint32_t u32() {
    const uint8_t* p = take(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  uint64_t u64() {
    const uint8_t* p = take(8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  int32_t i32() { return static_cast<int32_t>(u32()); }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    uint32_t n = u32();
    const uint8_t* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  void f32s(float* out, size_t expect) {
    uint64_t n = u64();
    check(n == expect, "binary stream: tensor size mismatch");
    std::memcpy(out, take(n * 4), n * 4);
  }
  bool at_end() const { return pos_ == buf_.size(); }

private:
  const uint8_t* take(size_t n) {
    check(pos_ + n <= buf_.size(), "binary stream: truncated");
    const uint8_t* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::vector<uint8_t> buf_;
  size_t pos_ = 0;
};

// Runs fn(i) for i in [0,n). Each index owns its outputs, so the result is
// identical for any thread count.
inline void parallel_for(size_t n, const std::function<void(size_t)>& fn, unsigned max_threads = 0) {
  unsigned hw = max_threads ? max_threads : std::thread::hardware_concurrency();
  if (hw <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  unsigned workers = static_cast<unsigned>(std::min<size_t>(hw, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<size_t> cursor{0};
  std::exception_ptr first_error = nullptr;
  std::mutex err_mx;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        size_t i = cursor.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mx);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace pawgan

#endif
