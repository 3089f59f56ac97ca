#ifndef PAWGAN_TENSOR_HPP
#define PAWGAN_TENSOR_HPP

// Minimal NCHW float tensor. Fully-connected activations use (N, C, 1, 1).

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "pawgan/core.hpp"

namespace pawgan::nn {

using EMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<EMat>;
using ConstMatMap = Eigen::Map<const EMat>;

struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<float> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_ = 1, int w_ = 1)
      : n(n_), c(c_), h(h_), w(w_),
        v(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0f) {}

  static Tensor like(const Tensor& t) { return Tensor(t.n, t.c, t.h, t.w); }

  size_t size() const { return v.size(); }
  int chw() const { return c * h * w; }
  int hw() const { return h * w; }
  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  float* data() { return v.data(); }
  const float* data() const { return v.data(); }
  float* sample(int i) { return v.data() + static_cast<size_t>(i) * chw(); }
  const float* sample(int i) const { return v.data() + static_cast<size_t>(i) * chw(); }

  float& at(int ni, int ci, int yi, int xi) {
    return v[((static_cast<size_t>(ni) * c + ci) * h + yi) * w + xi];
  }
  float at(int ni, int ci, int yi, int xi) const {
    return v[((static_cast<size_t>(ni) * c + ci) * h + yi) * w + xi];
  }

  void zero() { std::fill(v.begin(), v.end(), 0.0f); }

  // (N, CHW) view
  MatMap rows() { return MatMap(v.data(), n, chw()); }
  ConstMatMap rows() const { return ConstMatMap(v.data(), n, chw()); }
};

inline bool all_finite(const Tensor& t) {
  for (float x : t.v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace pawgan::nn

#endif
