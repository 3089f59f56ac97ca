#ifndef PAWGAN_NN_HPP
#define PAWGAN_NN_HPP

// Layer zoo with hand-rolled backprop, enough for the desk-scale models:
// strided/1x1/depthwise conv, nearest upsample, batch norm, linear heads.
// Convolution is im2col plus an Eigen GEMM. Everything is single-threaded
// and deterministic for a fixed seed.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "pawgan/hash.hpp"
#include "pawgan/rng.hpp"
#include "pawgan/tensor.hpp"

namespace pawgan::nn {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string name_, Tensor value_) : name(std::move(name_)), value(std::move(value_)) {
    grad = Tensor::like(value);
  }
};

struct NamedTensor {
  std::string name;
  Tensor* t = nullptr;
};

inline void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->grad.zero();
}

// ----------------------------------------------------------------- init

inline void fill_normal(Tensor& t, Rng& rng, float stddev) {
  for (auto& x : t.v) x = rng.normalf() * stddev;
}

inline void init_he(Tensor& t, Rng& rng, int fan_in, float gain = std::sqrt(2.0f)) {
  fill_normal(t, rng, gain / std::sqrt(static_cast<float>(fan_in)));
}

// ----------------------------------------------------------------- layers

class Layer {
public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, bool train) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual void params(std::vector<Param*>& out) {}
  // Persistent non-parameter state (running stats).
  virtual void state(std::vector<NamedTensor>& out) {}
  virtual std::string kind() const = 0;
};

namespace detail {

inline void im2col(const float* x, int C, int H, int W, int k, int stride, int pad,
                   int OH, int OW, float* col) {
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* row = col + (static_cast<size_t>(c) * k * k + ky * k + kx) *
                               (static_cast<size_t>(OH) * OW);
        for (int oy = 0; oy < OH; ++oy) {
          int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) {
            std::fill(row + static_cast<size_t>(oy) * OW, row + (static_cast<size_t>(oy) + 1) * OW, 0.0f);
            continue;
          }
          const float* src = x + (static_cast<size_t>(c) * H + iy) * W;
          for (int ox = 0; ox < OW; ++ox) {
            int ix = ox * stride - pad + kx;
            row[static_cast<size_t>(oy) * OW + ox] = (ix >= 0 && ix < W) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

inline void col2im_add(const float* col, int C, int H, int W, int k, int stride, int pad,
                       int OH, int OW, float* dx) {
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* row = col + (static_cast<size_t>(c) * k * k + ky * k + kx) *
                                     (static_cast<size_t>(OH) * OW);
        for (int oy = 0; oy < OH; ++oy) {
          int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          float* dst = dx + (static_cast<size_t>(c) * H + iy) * W;
          for (int ox = 0; ox < OW; ++ox) {
            int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < W) dst[ix] += row[static_cast<size_t>(oy) * OW + ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

class Conv2d : public Layer {
public:
  Conv2d(int in_c, int out_c, int k, int stride, int pad, Rng& rng, std::string name = "conv")
      : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad),
        weight_(name + ".W", Tensor(out_c, in_c * k * k)),
        bias_(name + ".b", Tensor(out_c, 1)) {
    init_he(weight_.value, rng, in_c * k * k);
  }

  Tensor forward(const Tensor& x, bool) override {
    x_ = x;
    int OH = out_dim(x.h), OW = out_dim(x.w);
    Tensor y(x.n, out_c_, OH, OW);
    const int ckk = in_c_ * k_ * k_;
    std::vector<float> col(static_cast<size_t>(ckk) * OH * OW);
    ConstMatMap Wm(weight_.value.data(), out_c_, ckk);
    for (int s = 0; s < x.n; ++s) {
      detail::im2col(x.sample(s), in_c_, x.h, x.w, k_, stride_, pad_, OH, OW, col.data());
      ConstMatMap colm(col.data(), ckk, OH * OW);
      MatMap ym(y.sample(s), out_c_, OH * OW);
      ym.noalias() = Wm * colm;
      for (int oc = 0; oc < out_c_; ++oc) ym.row(oc).array() += bias_.value.v[oc];
    }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    int OH = dy.h, OW = dy.w;
    const int ckk = in_c_ * k_ * k_;
    Tensor dx(x_.n, in_c_, x_.h, x_.w);
    std::vector<float> col(static_cast<size_t>(ckk) * OH * OW);
    std::vector<float> dcol(static_cast<size_t>(ckk) * OH * OW);
    ConstMatMap Wm(weight_.value.data(), out_c_, ckk);
    MatMap dWm(weight_.grad.data(), out_c_, ckk);
    for (int s = 0; s < x_.n; ++s) {
      detail::im2col(x_.sample(s), in_c_, x_.h, x_.w, k_, stride_, pad_, OH, OW, col.data());
      ConstMatMap colm(col.data(), ckk, OH * OW);
      ConstMatMap dym(dy.sample(s), out_c_, OH * OW);
      dWm.noalias() += dym * colm.transpose();
      for (int oc = 0; oc < out_c_; ++oc) bias_.grad.v[oc] += dym.row(oc).sum();
      MatMap dcolm(dcol.data(), ckk, OH * OW);
      dcolm.noalias() = Wm.transpose() * dym;
      detail::col2im_add(dcol.data(), in_c_, x_.h, x_.w, k_, stride_, pad_, OH, OW, dx.sample(s));
    }
    return dx;
  }

  void params(std::vector<Param*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }
  std::string kind() const override { return "conv2d"; }

private:
  int out_dim(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

  int in_c_, out_c_, k_, stride_, pad_;
  Param weight_, bias_;
  Tensor x_;
};

class DepthwiseConv2d : public Layer {
public:
  DepthwiseConv2d(int channels, int k, int stride, int pad, Rng& rng, std::string name = "dwconv")
      : c_(channels), k_(k), stride_(stride), pad_(pad),
        weight_(name + ".W", Tensor(channels, k * k)),
        bias_(name + ".b", Tensor(channels, 1)) {
    init_he(weight_.value, rng, k * k);
  }

  Tensor forward(const Tensor& x, bool) override {
    x_ = x;
    int OH = (x.h + 2 * pad_ - k_) / stride_ + 1;
    int OW = (x.w + 2 * pad_ - k_) / stride_ + 1;
    Tensor y(x.n, c_, OH, OW);
    for (int s = 0; s < x.n; ++s)
      for (int c = 0; c < c_; ++c) {
        const float* W = weight_.value.data() + static_cast<size_t>(c) * k_ * k_;
        float b = bias_.value.v[c];
        for (int oy = 0; oy < OH; ++oy)
          for (int ox = 0; ox < OW; ++ox) {
            float acc = b;
            for (int ky = 0; ky < k_; ++ky) {
              int iy = oy * stride_ - pad_ + ky;
              if (iy < 0 || iy >= x.h) continue;
              for (int kx = 0; kx < k_; ++kx) {
                int ix = ox * stride_ - pad_ + kx;
                if (ix < 0 || ix >= x.w) continue;
                acc += x.at(s, c, iy, ix) * W[ky * k_ + kx];
              }
            }
            y.at(s, c, oy, ox) = acc;
          }
      }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx(x_.n, c_, x_.h, x_.w);
    for (int s = 0; s < x_.n; ++s)
      for (int c = 0; c < c_; ++c) {
        const float* W = weight_.value.data() + static_cast<size_t>(c) * k_ * k_;
        float* dW = weight_.grad.data() + static_cast<size_t>(c) * k_ * k_;
        for (int oy = 0; oy < dy.h; ++oy)
          for (int ox = 0; ox < dy.w; ++ox) {
            float g = dy.at(s, c, oy, ox);
            bias_.grad.v[c] += g;
            for (int ky = 0; ky < k_; ++ky) {
              int iy = oy * stride_ - pad_ + ky;
              if (iy < 0 || iy >= x_.h) continue;
              for (int kx = 0; kx < k_; ++kx) {
                int ix = ox * stride_ - pad_ + kx;
                if (ix < 0 || ix >= x_.w) continue;
                dW[ky * k_ + kx] += g * x_.at(s, c, iy, ix);
                dx.at(s, c, iy, ix) += g * W[ky * k_ + kx];
              }
            }
          }
      }
    return dx;
  }

  void params(std::vector<Param*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }
  std::string kind() const override { return "dwconv2d"; }

private:
  int c_, k_, stride_, pad_;
  Param weight_, bias_;
  Tensor x_;
};

class Linear : public Layer {
public:
  Linear(int in_f, int out_f, Rng& rng, std::string name = "fc", float gain = std::sqrt(2.0f))
      : in_f_(in_f), out_f_(out_f),
        weight_(name + ".W", Tensor(out_f, in_f)),
        bias_(name + ".b", Tensor(out_f, 1)) {
    init_he(weight_.value, rng, in_f, gain);
  }

  Tensor forward(const Tensor& x, bool) override {
    check(x.chw() == in_f_, "linear: expected " + std::to_string(in_f_) + " features, got " +
                                std::to_string(x.chw()));
    x_ = x;
    Tensor y(x.n, out_f_);
    ConstMatMap xm(x.data(), x.n, in_f_);
    ConstMatMap Wm(weight_.value.data(), out_f_, in_f_);
    MatMap ym(y.data(), x.n, out_f_);
    ym.noalias() = xm * Wm.transpose();
    for (int i = 0; i < x.n; ++i)
      for (int j = 0; j < out_f_; ++j) ym(i, j) += bias_.value.v[j];
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx(x_.n, x_.c, x_.h, x_.w);
    ConstMatMap dym(dy.data(), dy.n, out_f_);
    ConstMatMap xm(x_.data(), x_.n, in_f_);
    ConstMatMap Wm(weight_.value.data(), out_f_, in_f_);
    MatMap dWm(weight_.grad.data(), out_f_, in_f_);
    dWm.noalias() += dym.transpose() * xm;
    for (int j = 0; j < out_f_; ++j) bias_.grad.v[j] += dym.col(j).sum();
    MatMap dxm(dx.data(), x_.n, in_f_);
    dxm.noalias() = dym * Wm;
    return dx;
  }

  void params(std::vector<Param*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }
  std::string kind() const override { return "linear"; }

private:
  int in_f_, out_f_;
  Param weight_, bias_;
  Tensor x_;
};

class LeakyReLU : public Layer {
public:
  explicit LeakyReLU(float alpha = 0.2f) : alpha_(alpha) {}

  Tensor forward(const Tensor& x, bool) override {
    x_ = x;
    Tensor y = x;
    for (auto& v : y.v)
      if (v < 0) v *= alpha_;
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx = dy;
    for (size_t i = 0; i < dx.v.size(); ++i)
      if (x_.v[i] < 0) dx.v[i] *= alpha_;
    return dx;
  }

  std::string kind() const override { return "leaky_relu"; }

private:
  float alpha_;
  Tensor x_;
};

class ReLU : public Layer {
public:
  Tensor forward(const Tensor& x, bool) override {
    x_ = x;
    Tensor y = x;
    for (auto& v : y.v)
      if (v < 0) v = 0;
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx = dy;
    for (size_t i = 0; i < dx.v.size(); ++i)
      if (x_.v[i] < 0) dx.v[i] = 0;
    return dx;
  }

  std::string kind() const override { return "relu"; }

private:
  Tensor x_;
};

class Tanh : public Layer {
public:
  Tensor forward(const Tensor& x, bool) override {
    Tensor y = x;
    for (auto& v : y.v) v = std::tanh(v);
    y_ = y;
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx = dy;
    for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= 1.0f - y_.v[i] * y_.v[i];
    return dx;
  }

  std::string kind() const override { return "tanh"; }

private:
  Tensor y_;
};

class BatchNorm2d : public Layer {
public:
  BatchNorm2d(int channels, std::string name = "bn", float momentum = 0.1f, float eps = 1e-5f)
      : c_(channels), momentum_(momentum), eps_(eps),
        gamma_(name + ".gamma", Tensor(channels, 1)),
        beta_(name + ".beta", Tensor(channels, 1)),
        running_mean_(channels, 1), running_var_(channels, 1) {
    std::fill(gamma_.value.v.begin(), gamma_.value.v.end(), 1.0f);
    std::fill(running_var_.v.begin(), running_var_.v.end(), 1.0f);
    name_ = std::move(name);
  }

  Tensor forward(const Tensor& x, bool train) override {
    train_ = train;
    const int B = x.n * x.h * x.w;
    Tensor y = Tensor::like(x);
    if (train) {
      check(B > 1, "batchnorm: reduction set too small");
      xhat_ = Tensor::like(x);
      invstd_.assign(c_, 0.0f);
      batch_ = B;
      for (int c = 0; c < c_; ++c) {
        double sum = 0, sq = 0;
        for (int s = 0; s < x.n; ++s) {
          const float* p = x.data() + (static_cast<size_t>(s) * c_ + c) * x.hw();
          for (int i = 0; i < x.hw(); ++i) {
            sum += p[i];
            sq += static_cast<double>(p[i]) * p[i];
          }
        }
        double mean = sum / B;
        double var = sq / B - mean * mean;
        if (var < 0) var = 0;
        float inv = 1.0f / std::sqrt(static_cast<float>(var) + eps_);
        invstd_[c] = inv;
        float g = gamma_.value.v[c], b = beta_.value.v[c];
        for (int s = 0; s < x.n; ++s) {
          const float* p = x.data() + (static_cast<size_t>(s) * c_ + c) * x.hw();
          float* xh = xhat_.data() + (static_cast<size_t>(s) * c_ + c) * x.hw();
          float* out = y.data() + (static_cast<size_t>(s) * c_ + c) * x.hw();
          for (int i = 0; i < x.hw(); ++i) {
            xh[i] = (p[i] - static_cast<float>(mean)) * inv;
            out[i] = g * xh[i] + b;
          }
        }
        float unbiased = static_cast<float>(var) * (B > 1 ? static_cast<float>(B) / (B - 1) : 1.0f);
        running_mean_.v[c] = (1 - momentum_) * running_mean_.v[c] + momentum_ * static_cast<float>(mean);
        running_var_.v[c] = (1 - momentum_) * running_var_.v[c] + momentum_ * unbiased;
      }
    } else {
      for (int c = 0; c < c_; ++c) {
        float inv = 1.0f / std::sqrt(running_var_.v[c] + eps_);
        float g = gamma_.value.v[c], b = beta_.value.v[c], m = running_mean_.v[c];
        for (int s = 0; s < x.n; ++s) {
          const float* p = x.data() + (static_cast<size_t>(s) * c_ + c) * x.hw();
          float* out = y.data() + (static_cast<size_t>(s) * c_ + c) * x.hw();
          for (int i = 0; i < x.hw(); ++i) out[i] = g * (p[i] - m) * inv + b;
        }
      }
    }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    check(train_, "batchnorm: backward in eval mode is not supported");
    Tensor dx = Tensor::like(dy);
    const int B = batch_;
    for (int c = 0; c < c_; ++c) {
      double dbeta = 0, dgamma = 0;
      for (int s = 0; s < dy.n; ++s) {
        const float* g = dy.data() + (static_cast<size_t>(s) * c_ + c) * dy.hw();
        const float* xh = xhat_.data() + (static_cast<size_t>(s) * c_ + c) * dy.hw();
        for (int i = 0; i < dy.hw(); ++i) {
          dbeta += g[i];
          dgamma += static_cast<double>(g[i]) * xh[i];
        }
      }
      gamma_.grad.v[c] += static_cast<float>(dgamma);
      beta_.grad.v[c] += static_cast<float>(dbeta);
      float scale = gamma_.value.v[c] * invstd_[c];
      float mb = static_cast<float>(dbeta / B);
      float mg = static_cast<float>(dgamma / B);
      for (int s = 0; s < dy.n; ++s) {
        const float* g = dy.data() + (static_cast<size_t>(s) * c_ + c) * dy.hw();
        const float* xh = xhat_.data() + (static_cast<size_t>(s) * c_ + c) * dy.hw();
        float* out = dx.data() + (static_cast<size_t>(s) * c_ + c) * dy.hw();
        for (int i = 0; i < dy.hw(); ++i) out[i] = scale * (g[i] - mb - xh[i] * mg);
      }
    }
    return dx;
  }

  void params(std::vector<Param*>& out) override {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }
  void state(std::vector<NamedTensor>& out) override {
    out.push_back({name_ + ".running_mean", &running_mean_});
    out.push_back({name_ + ".running_var", &running_var_});
  }
  std::string kind() const override { return "batchnorm2d"; }

private:
  int c_;
  float momentum_, eps_;
  Param gamma_, beta_;
  Tensor running_mean_, running_var_;
  Tensor xhat_;
  std::vector<float> invstd_;
  int batch_ = 0;
  bool train_ = true;
  std::string name_;
};

class Upsample2x : public Layer {
public:
  Tensor forward(const Tensor& x, bool) override {
    in_h_ = x.h;
    in_w_ = x.w;
    Tensor y(x.n, x.c, x.h * 2, x.w * 2);
    for (int s = 0; s < x.n; ++s)
      for (int c = 0; c < x.c; ++c)
        for (int yy = 0; yy < y.h; ++yy)
          for (int xx = 0; xx < y.w; ++xx)
            y.at(s, c, yy, xx) = x.at(s, c, yy / 2, xx / 2);
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx(dy.n, dy.c, in_h_, in_w_);
    for (int s = 0; s < dy.n; ++s)
      for (int c = 0; c < dy.c; ++c)
        for (int yy = 0; yy < dy.h; ++yy)
          for (int xx = 0; xx < dy.w; ++xx)
            dx.at(s, c, yy / 2, xx / 2) += dy.at(s, c, yy, xx);
    return dx;
  }

  std::string kind() const override { return "upsample2x"; }

private:
  int in_h_ = 0, in_w_ = 0;
};

class GlobalAvgPool : public Layer {
public:
  Tensor forward(const Tensor& x, bool) override {
    in_h_ = x.h;
    in_w_ = x.w;
    Tensor y(x.n, x.c);
    const float inv = 1.0f / x.hw();
    for (int s = 0; s < x.n; ++s)
      for (int c = 0; c < x.c; ++c) {
        const float* p = x.data() + (static_cast<size_t>(s) * x.c + c) * x.hw();
        double acc = 0;
        for (int i = 0; i < x.hw(); ++i) acc += p[i];
        y.at(s, c, 0, 0) = static_cast<float>(acc) * inv;
      }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx(dy.n, dy.c, in_h_, in_w_);
    const float inv = 1.0f / (in_h_ * in_w_);
    for (int s = 0; s < dy.n; ++s)
      for (int c = 0; c < dy.c; ++c) {
        float g = dy.at(s, c, 0, 0) * inv;
        float* p = dx.data() + (static_cast<size_t>(s) * dy.c + c) * dx.hw();
        for (int i = 0; i < dx.hw(); ++i) p[i] = g;
      }
    return dx;
  }

  std::string kind() const override { return "global_avg_pool"; }

private:
  int in_h_ = 0, in_w_ = 0;
};

// Reshape (N, F) <-> (N, C, H, W); used after the generator's input fc.
class Reshape : public Layer {
public:
  Reshape(int c, int h, int w) : c_(c), h_(h), w_(w) {}

  Tensor forward(const Tensor& x, bool) override {
    check(x.chw() == c_ * h_ * w_, "reshape: element count mismatch");
    in_c_ = x.c; in_h_ = x.h; in_w_ = x.w;
    Tensor y = x;
    y.c = c_; y.h = h_; y.w = w_;
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx = dy;
    dx.c = in_c_; dx.h = in_h_; dx.w = in_w_;
    return dx;
  }

  std::string kind() const override { return "reshape"; }

private:
  int c_, h_, w_;
  int in_c_ = 0, in_h_ = 0, in_w_ = 0;
};

// MobileNetV2-style inverted residual: 1x1 expand, 3x3 depthwise, 1x1 project,
// skip connection when the shapes line up.
class InvertedResidual : public Layer {
public:
  InvertedResidual(int in_c, int out_c, int stride, int expand, Rng& rng, const std::string& name)
      : in_c_(in_c), out_c_(out_c), stride_(stride) {
    int mid = in_c * expand;
    expand_ = std::make_unique<Conv2d>(in_c, mid, 1, 1, 0, rng, name + ".expand");
    dw_ = std::make_unique<DepthwiseConv2d>(mid, 3, stride, 1, rng, name + ".dw");
    project_ = std::make_unique<Conv2d>(mid, out_c, 1, 1, 0, rng, name + ".project");
    use_skip_ = stride == 1 && in_c == out_c;
  }

  Tensor forward(const Tensor& x, bool train) override {
    Tensor t = relu1_.forward(expand_->forward(x, train), train);
    t = relu2_.forward(dw_->forward(t, train), train);
    Tensor y = project_->forward(t, train);
    if (use_skip_)
      for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += x.v[i];
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor d = project_->backward(dy);
    d = dw_->backward(relu2_.backward(d));
    d = expand_->backward(relu1_.backward(d));
    if (use_skip_)
      for (size_t i = 0; i < d.v.size(); ++i) d.v[i] += dy.v[i];
    return d;
  }

  void params(std::vector<Param*>& out) override {
    expand_->params(out);
    dw_->params(out);
    project_->params(out);
  }
  std::string kind() const override { return "inverted_residual"; }

private:
  int in_c_, out_c_, stride_;
  bool use_skip_ = false;
  std::unique_ptr<Conv2d> expand_, project_;
  std::unique_ptr<DepthwiseConv2d> dw_;
  ReLU relu1_, relu2_;
};

// ----------------------------------------------------------------- network

class Sequential {
public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  template <class L, class... Args>
  L* add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L* raw = layer.get();
    layers_.push_back(std::move(layer));
    return raw;
  }

  Tensor forward(const Tensor& x, bool train) {
    Tensor t = x;
    for (auto& l : layers_) t = l->forward(t, train);
    return t;
  }

  Tensor backward(const Tensor& dy) {
    Tensor t = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) t = (*it)->backward(t);
    return t;
  }

  std::vector<Param*> params() {
    std::vector<Param*> out;
    for (auto& l : layers_) l->params(out);
    return out;
  }

  std::vector<NamedTensor> state() {
    std::vector<NamedTensor> out;
    for (Param* p : params()) out.push_back({p->name, &p->value});
    for (auto& l : layers_) l->state(out);
    return out;
  }

  size_t depth() const { return layers_.size(); }

private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// ----------------------------------------------------------------- losses

inline float softplus(float x) {
  return std::max(x, 0.0f) + std::log1p(std::exp(-std::abs(x)));
}

inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

struct LossGrad {
  double loss = 0;
  Tensor grad;
};

// Mean squared error over every element.
inline LossGrad mse_loss(const Tensor& pred, const Tensor& target) {
  check(pred.same_shape(target), "mse: shape mismatch");
  LossGrad out;
  out.grad = Tensor::like(pred);
  double acc = 0;
  const double inv = 1.0 / static_cast<double>(pred.size());
  for (size_t i = 0; i < pred.v.size(); ++i) {
    double d = static_cast<double>(pred.v[i]) - target.v[i];
    acc += d * d;
    out.grad.v[i] = static_cast<float>(2.0 * d * inv);
  }
  out.loss = acc * inv;
  return out;
}

// Softmax cross entropy, labels are 0-based rows of logits (N, C).
inline LossGrad softmax_ce(const Tensor& logits, const std::vector<int>& labels) {
  check(static_cast<size_t>(logits.n) == labels.size(), "ce: label count mismatch");
  LossGrad out;
  out.grad = Tensor::like(logits);
  const int C = logits.chw();
  double total = 0;
  for (int s = 0; s < logits.n; ++s) {
    const float* row = logits.sample(s);
    float* g = out.grad.sample(s);
    float mx = row[0];
    for (int j = 1; j < C; ++j) mx = std::max(mx, row[j]);
    double denom = 0;
    for (int j = 0; j < C; ++j) denom += std::exp(static_cast<double>(row[j]) - mx);
    int y = labels[s];
    check(y >= 0 && y < C, "ce: label out of range");
    total += -(static_cast<double>(row[y]) - mx - std::log(denom));
    for (int j = 0; j < C; ++j) {
      double p = std::exp(static_cast<double>(row[j]) - mx) / denom;
      g[j] = static_cast<float>((p - (j == y ? 1.0 : 0.0)) / logits.n);
    }
  }
  out.loss = total / logits.n;
  return out;
}

inline int argmax_row(const Tensor& logits, int row) {
  const float* p = logits.sample(row);
  int best = 0;
  for (int j = 1; j < logits.chw(); ++j)
    if (p[j] > p[best]) best = j;
  return best;
}

// ----------------------------------------------------------------- optim

class Adam {
public:
  Adam() = default;
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void attach(const std::vector<Param*>& params) {
    params_ = params;
    m_.clear();
    v_.clear();
    for (Param* p : params) {
      m_.push_back(Tensor::like(p->value));
      v_.push_back(Tensor::like(p->value));
    }
    t_ = 0;
  }

  void step() {
    ++t_;
    const float inv_c1 = static_cast<float>(1.0 / (1.0 - std::pow(beta1_, static_cast<double>(t_))));
    const float inv_c2 = static_cast<float>(1.0 / (1.0 - std::pow(beta2_, static_cast<double>(t_))));
    const float lr = static_cast<float>(lr_), eps = static_cast<float>(eps_);
    const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
    for (size_t i = 0; i < params_.size(); ++i) {
      Tensor& val = params_[i]->value;
      Tensor& g = params_[i]->grad;
      Tensor& m = m_[i];
      Tensor& v = v_[i];
      for (size_t j = 0; j < val.v.size(); ++j) {
        m.v[j] = b1 * m.v[j] + (1 - b1) * g.v[j];
        v.v[j] = b2 * v.v[j] + (1 - b2) * g.v[j] * g.v[j];
        float mhat = m.v[j] * inv_c1;
        float vhat = v.v[j] * inv_c2;
        val.v[j] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

  void zero() { zero_grads(params_); }

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  int64_t steps() const { return t_; }

  void serialize(BinWriter& w) const {
    w.u64(static_cast<uint64_t>(t_));
    w.f64(lr_);
    w.f64(beta1_);
    w.f64(beta2_);
    w.f64(eps_);
    w.u32(static_cast<uint32_t>(m_.size()));
    for (size_t i = 0; i < m_.size(); ++i) {
      w.f32s(m_[i].data(), m_[i].size());
      w.f32s(v_[i].data(), v_[i].size());
    }
  }

  void deserialize(BinReader& r) {
    t_ = static_cast<int64_t>(r.u64());
    lr_ = r.f64();
    beta1_ = r.f64();
    beta2_ = r.f64();
    eps_ = r.f64();
    uint32_t n = r.u32();
    check(n == m_.size(), "adam: parameter count mismatch on load");
    for (size_t i = 0; i < m_.size(); ++i) {
      r.f32s(m_[i].data(), m_[i].size());
      r.f32s(v_[i].data(), v_[i].size());
    }
  }

private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int64_t t_ = 0;
  std::vector<Param*> params_;
  std::vector<Tensor> m_, v_;
};

class Sgd {
public:
  Sgd() = default;
  Sgd(double lr, double momentum = 0.9) : lr_(lr), momentum_(momentum) {}

  void attach(const std::vector<Param*>& params) {
    params_ = params;
    vel_.clear();
    for (Param* p : params) vel_.push_back(Tensor::like(p->value));
  }

  void step() {
    for (size_t i = 0; i < params_.size(); ++i) {
      Tensor& val = params_[i]->value;
      Tensor& g = params_[i]->grad;
      Tensor& v = vel_[i];
      for (size_t j = 0; j < val.v.size(); ++j) {
        v.v[j] = static_cast<float>(momentum_) * v.v[j] + g.v[j];
        val.v[j] -= static_cast<float>(lr_) * v.v[j];
      }
    }
  }

  void zero() { zero_grads(params_); }

private:
  double lr_ = 1e-2, momentum_ = 0.9;
  std::vector<Param*> params_;
  std::vector<Tensor> vel_;
};

// ----------------------------------------------------------- serialization

inline void write_state(BinWriter& w, const std::vector<NamedTensor>& state) {
  w.str("pawgan.state");
  w.u32(1);
  w.u32(static_cast<uint32_t>(state.size()));
  for (const auto& nt : state) {
    w.str(nt.name);
    w.i32(nt.t->n);
    w.i32(nt.t->c);
    w.i32(nt.t->h);
    w.i32(nt.t->w);
    w.f32s(nt.t->data(), nt.t->size());
  }
}

inline void read_state(BinReader& r, const std::vector<NamedTensor>& state) {
  check(r.str() == "pawgan.state", "state blob: bad magic");
  check(r.u32() == 1, "state blob: unsupported version");
  uint32_t n = r.u32();
  check(n == state.size(), "state blob: tensor count mismatch");
  for (const auto& nt : state) {
    std::string name = r.str();
    check(name == nt.name, "state blob: expected tensor '" + nt.name + "', found '" + name + "'");
    int dims[4] = {r.i32(), r.i32(), r.i32(), r.i32()};
    check(dims[0] == nt.t->n && dims[1] == nt.t->c && dims[2] == nt.t->h && dims[3] == nt.t->w,
          "state blob: shape mismatch for '" + name + "'");
    r.f32s(nt.t->data(), nt.t->size());
  }
}

// Stable hash of a parameter set; the reproducibility tests compare these.
inline std::string state_hash(const std::vector<NamedTensor>& state) {
  Sha256 h;
  for (const auto& nt : state) {
    h.update(nt.name);
    h.update(nt.t->data(), nt.t->size() * sizeof(float));
  }
  auto d = h.digest();
  return to_hex(d.data(), d.size());
}

}  // namespace pawgan::nn

#endif
