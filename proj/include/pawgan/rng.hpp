#ifndef PAWGAN_RNG_HPP
#define PAWGAN_RNG_HPP

// PCG32 with explicit two-word state. Checkpoints serialize the raw state,
// which keeps resumed runs bit-identical to uninterrupted ones on any
// platform; std:: engines do not give a portable guarantee we can pin.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pawgan/core.hpp"

namespace pawgan {

class Rng {
public:
  explicit Rng(uint64_t seed = 0, uint64_t stream = 1) { reseed(seed, stream); }

  void reseed(uint64_t seed, uint64_t stream = 1) {
    state_ = 0;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  uint32_t next_u32() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  uint64_t next_u64() {
    uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Unbiased bounded draw (rejection).
  uint32_t bounded(uint32_t bound) {
    if (bound <= 1) return 0;
    uint32_t threshold = (0u - bound) % bound;
    for (;;) {
      uint32_t r = next_u32();
      if (r >= threshold) return r % bound;
    }
  }

  // [0,1)
  double uniform() { return next_u32() * (1.0 / 4294967296.0); }
  float uniformf() { return static_cast<float>(uniform()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller without a cached spare: state after N draws is a pure
  // function of N, which checkpoint/resume relies on.
  double normal() {
    double u1 = 0.0;
    do { u1 = uniform(); } while (u1 <= 1e-12);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  float normalf() { return static_cast<float>(normal()); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = bounded(static_cast<uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::string serialize() const {
    return std::to_string(state_) + " " + std::to_string(inc_);
  }

  static Rng deserialize(std::string_view text) {
    auto parts = split_ws(text);
    check(parts.size() == 2, "bad rng state: '" + std::string(text) + "'");
    Rng r;
    r.state_ = static_cast<uint64_t>(std::stoull(parts[0]));
    r.inc_ = static_cast<uint64_t>(std::stoull(parts[1]));
    return r;
  }

  uint64_t raw_state() const { return state_; }
  uint64_t raw_inc() const { return inc_; }
  void set_raw(uint64_t state, uint64_t inc) { state_ = state; inc_ = inc; }

private:
  uint64_t state_ = 0;
  uint64_t inc_ = 1;
};

}  // namespace pawgan

#endif
