#ifndef PAWGAN_IMAGE_HPP
#define PAWGAN_IMAGE_HPP

// Raster images. The pipeline's own outputs are binary PPM (deterministic
// bytes, trivial to hash); ingestion additionally decodes PNG and JPEG when
// the codecs are compiled in.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "pawgan/core.hpp"

#ifdef PAWGAN_WITH_PNG
#include <png.h>
#endif
#ifdef PAWGAN_WITH_JPEG
#include <csetjmp>
#include <jpeglib.h>
#endif

namespace pawgan {

// Interleaved row-major 8-bit image, 1 or 3 channels.
struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint8_t> data;

  ImageU8() = default;
  ImageU8(int w, int h, int c, uint8_t fill = 0)
      : width(w), height(h), channels(c),
        data(static_cast<size_t>(w) * h * c, fill) {}

  bool empty() const { return data.empty(); }
  size_t size() const { return data.size(); }

  uint8_t& at(int x, int y, int c) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  uint8_t at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

class DecodeError : public Error {
public:
  using Error::Error;
};

// ---------------------------------------------------------------- PPM (P5/P6)

namespace detail {
inline int ppm_token(const std::vector<uint8_t>& buf, size_t& pos) {
  // Skips whitespace and '#' comments, then parses a decimal token.
  for (;;) {
    while (pos < buf.size() && std::isspace(buf[pos])) ++pos;
    if (pos < buf.size() && buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= buf.size() || !std::isdigit(buf[pos]))
    throw DecodeError("ppm: malformed header");
  long v = 0;
  while (pos < buf.size() && std::isdigit(buf[pos])) {
    v = v * 10 + (buf[pos] - '0');
    if (v > 1 << 30) throw DecodeError("ppm: header value overflow");
    ++pos;
  }
  return static_cast<int>(v);
}
}  // namespace detail

inline ImageU8 decode_ppm(const std::vector<uint8_t>& buf) {
  if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '5' && buf[1] != '6'))
    throw DecodeError("ppm: bad magic");
  int channels = buf[1] == '6' ? 3 : 1;
  size_t pos = 2;
  int w = detail::ppm_token(buf, pos);
  int h = detail::ppm_token(buf, pos);
  int maxval = detail::ppm_token(buf, pos);
  if (w <= 0 || h <= 0 || maxval != 255) throw DecodeError("ppm: unsupported header");
  if (pos >= buf.size() || !std::isspace(buf[pos])) throw DecodeError("ppm: malformed header");
  ++pos;  // single whitespace byte before raster
  ImageU8 img(w, h, channels);
  if (buf.size() - pos < img.size()) throw DecodeError("ppm: truncated raster");
  std::memcpy(img.data.data(), buf.data() + pos, img.size());
  return img;
}

inline std::vector<uint8_t> encode_ppm(const ImageU8& img) {
  check(img.channels == 1 || img.channels == 3, "ppm: channels must be 1 or 3");
  std::string header = std::string(img.channels == 3 ? "P6" : "P5") + "\n" +
                       std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  return out;
}

// ---------------------------------------------------------------------- PNG

#ifdef PAWGAN_WITH_PNG
inline ImageU8 decode_png(const std::vector<uint8_t>& buf) {
  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&pi, buf.data(), buf.size()))
    throw DecodeError(std::string("png: ") + pi.message);
  bool gray = (pi.format & PNG_FORMAT_FLAG_COLOR) == 0 && (pi.format & PNG_FORMAT_FLAG_ALPHA) == 0;
  pi.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  ImageU8 img(static_cast<int>(pi.width), static_cast<int>(pi.height), gray ? 1 : 3);
  if (!png_image_finish_read(&pi, nullptr, img.data.data(), 0, nullptr)) {
    png_image_free(&pi);
    throw DecodeError(std::string("png: ") + pi.message);
  }
  return img;
}

inline std::vector<uint8_t> encode_png(const ImageU8& img) {
  check(img.channels == 1 || img.channels == 3, "png: channels must be 1 or 3");
  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t bytes = 0;
  if (!png_image_write_to_memory(&pi, nullptr, &bytes, 0, img.data.data(), 0, nullptr))
    throw Error(std::string("png write: ") + pi.message);
  std::vector<uint8_t> out(bytes);
  if (!png_image_write_to_memory(&pi, out.data(), &bytes, 0, img.data.data(), 0, nullptr))
    throw Error(std::string("png write: ") + pi.message);
  out.resize(bytes);
  return out;
}
#endif

// --------------------------------------------------------------------- JPEG

#ifdef PAWGAN_WITH_JPEG
namespace detail {
struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};
inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}
}  // namespace detail

inline ImageU8 decode_jpeg(const std::vector<uint8_t>& buf) {
  jpeg_decompress_struct cinfo;
  detail::JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = detail::jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DecodeError("jpeg: corrupt stream");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, buf.data(), static_cast<unsigned long>(buf.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  ImageU8 img(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height), 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    uint8_t* row = img.data.data() +
                   static_cast<size_t>(cinfo.output_scanline) * img.width * img.channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}
#endif

// ---------------------------------------------------------------- dispatch

inline bool is_supported_image_ext(const fs::path& p) {
  std::string e = p.extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(c));
  if (e == ".ppm" || e == ".pgm") return true;
#ifdef PAWGAN_WITH_PNG
  if (e == ".png") return true;
#endif
#ifdef PAWGAN_WITH_JPEG
  if (e == ".jpg" || e == ".jpeg") return true;
#endif
  return false;
}

inline ImageU8 decode_image(const std::vector<uint8_t>& buf, const std::string& what = "buffer") {
  if (buf.size() >= 2 && buf[0] == 'P' && (buf[1] == '5' || buf[1] == '6')) return decode_ppm(buf);
#ifdef PAWGAN_WITH_PNG
  if (buf.size() >= 4 && buf[0] == 0x89 && buf[1] == 'P' && buf[2] == 'N' && buf[3] == 'G')
    return decode_png(buf);
#endif
#ifdef PAWGAN_WITH_JPEG
  if (buf.size() >= 2 && buf[0] == 0xFF && buf[1] == 0xD8) return decode_jpeg(buf);
#endif
  throw DecodeError("unrecognized image format: " + what);
}

inline ImageU8 load_image(const fs::path& p) {
  try {
    return decode_image(read_binary_file(p), p.string());
  } catch (const DecodeError& e) {
    throw DecodeError(p.string() + ": " + e.what());
  }
}

inline void save_image(const fs::path& p, const ImageU8& img) {
  std::string ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));
  std::vector<uint8_t> bytes;
  if (ext == ".ppm" || ext == ".pgm") {
    bytes = encode_ppm(img);
#ifdef PAWGAN_WITH_PNG
  } else if (ext == ".png") {
    bytes = encode_png(img);
#endif
  } else {
    throw Error("save_image: unsupported extension " + ext);
  }
  write_binary_file(p, bytes.data(), bytes.size());
}

// ------------------------------------------------------------------ resize

// Bilinear, pixel centers at i+0.5. Deterministic: plain double arithmetic,
// no SIMD shortcuts.
inline ImageU8 resize_bilinear(const ImageU8& src, int dst_w, int dst_h) {
  check(dst_w > 0 && dst_h > 0, "resize: size must be positive");
  check(!src.empty(), "resize: empty source");
  if (dst_w == src.width && dst_h == src.height) return src;
  ImageU8 dst(dst_w, dst_h, src.channels);
  const double sx = static_cast<double>(src.width) / dst_w;
  const double sy = static_cast<double>(src.height) / dst_h;
  for (int y = 0; y < dst_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y0c = std::clamp(y0, 0, src.height - 1);
    int y1c = std::clamp(y0 + 1, 0, src.height - 1);
    for (int x = 0; x < dst_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x0c = std::clamp(x0, 0, src.width - 1);
      int x1c = std::clamp(x0 + 1, 0, src.width - 1);
      for (int c = 0; c < src.channels; ++c) {
        double v = (1 - wy) * ((1 - wx) * src.at(x0c, y0c, c) + wx * src.at(x1c, y0c, c)) +
                   wy * ((1 - wx) * src.at(x0c, y1c, c) + wx * src.at(x1c, y1c, c));
        dst.at(x, y, c) = static_cast<uint8_t>(std::clamp(v + 0.5, 0.0, 255.0));
      }
    }
  }
  return dst;
}

// Bit-exact region copy, half-open box.
inline ImageU8 crop_region(const ImageU8& src, int x0, int y0, int x1, int y1) {
  check(x0 >= 0 && y0 >= 0 && x1 <= src.width && y1 <= src.height && x0 < x1 && y0 < y1,
        "crop_region: box outside image");
  ImageU8 out(x1 - x0, y1 - y0, src.channels);
  for (int y = y0; y < y1; ++y) {
    const uint8_t* s = &src.data[(static_cast<size_t>(y) * src.width + x0) * src.channels];
    uint8_t* d = &out.data[static_cast<size_t>(y - y0) * out.width * out.channels];
    std::memcpy(d, s, static_cast<size_t>(x1 - x0) * src.channels);
  }
  return out;
}

inline ImageU8 to_rgb(const ImageU8& src) {
  if (src.channels == 3) return src;
  check(src.channels == 1, "to_rgb: unsupported channel count");
  ImageU8 out(src.width, src.height, 3);
  for (size_t i = 0; i < src.data.size(); ++i) {
    out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = src.data[i];
  }
  return out;
}

// CHW float in [-1,1]; the network-facing layout.
inline void image_to_chw(const ImageU8& img, float* out) {
  const int hw = img.width * img.height;
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out[c * hw + y * img.width + x] = static_cast<float>(img.at(x, y, c)) / 127.5f - 1.0f;
}

inline ImageU8 chw_to_image(const float* in, int channels, int height, int width) {
  ImageU8 img(width, height, channels);
  const int hw = width * height;
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        float v = (in[c * hw + y * width + x] + 1.0f) * 127.5f;
        img.at(x, y, c) = static_cast<uint8_t>(std::clamp(v + 0.5f, 0.0f, 255.0f));
      }
  return img;
}

}  // namespace pawgan

#endif
