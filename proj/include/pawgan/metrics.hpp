#ifndef PAWGAN_METRICS_HPP
#define PAWGAN_METRICS_HPP

// Distribution and classification metrics: Gaussian feature statistics, the
// PSD matrix square root, Frechet distance between feature Gaussians, and
// plain accuracy. All linear algebra is double precision.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pawgan/core.hpp"
#include "pawgan/image.hpp"
#include "pawgan/rng.hpp"

namespace pawgan::metrics {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct GaussianStats {
  VectorXd mu;
  MatrixXd sigma;
  int64_t n = 0;

  int dim() const { return static_cast<int>(mu.size()); }
};

// Sample mean and unbiased covariance; symmetry enforced by (S+S^T)/2.
inline GaussianStats gaussian_stats(const std::vector<VectorXd>& features) {
  check(features.size() >= 2, "gaussian_stats: need at least 2 samples");
  const auto d = features.front().size();
  for (const auto& f : features)
    check(f.size() == d, "gaussian_stats: feature dimension mismatch");
  const auto n = static_cast<Eigen::Index>(features.size());
  MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) X.row(i) = features[static_cast<size_t>(i)];
  GaussianStats out;
  out.n = n;
  out.mu = X.colwise().mean();
  MatrixXd centered = X.rowwise() - out.mu.transpose();
  MatrixXd s = (centered.transpose() * centered) / static_cast<double>(n - 1);
  out.sigma = 0.5 * (s + s.transpose());
  return out;
}

// Symmetric square root of a PSD matrix via eigendecomposition. Eigenvalues
// in [-eps, 0) are treated as round-off and clamped to zero with
// eps = 1e-6 * max eigenvalue; anything below -eps is rejected.
inline MatrixXd sqrtm_psd(const MatrixXd& a) {
  check(a.rows() == a.cols(), "sqrtm_psd: matrix must be square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  check((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale,
        "sqrtm_psd: matrix is not symmetric within tolerance");
  MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  check(es.info() == Eigen::Success, "sqrtm_psd: eigendecomposition failed");
  VectorXd lam = es.eigenvalues();
  const double lam_max = std::max(0.0, lam.maxCoeff());
  const double eps = 1e-6 * lam_max;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    check(lam(i) >= -eps - 1e-300, "sqrtm_psd: strongly indefinite input (eigenvalue " +
                                       fmt_real(lam(i)) + " < -" + fmt_real(eps) + ")");
    lam(i) = lam(i) > 0 ? std::sqrt(lam(i)) : 0.0;
  }
  MatrixXd root = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (root + root.transpose());
}

struct FidReport {
  double value = 0;
  std::string extractor;
  int64_t n_x = 0, n_g = 0;
  double shrinkage_x = 0, shrinkage_g = 0;  // lambda added to the diagonal
  bool clamped = false;
  double clamp_magnitude = 0;  // |raw value| when a tiny negative was clamped

  std::string to_text() const {
    std::string s;
    s += "metric fid\n";
    s += "value " + fmt_real(value) + "\n";
    s += "extractor " + (extractor.empty() ? std::string("unspecified") : extractor) + "\n";
    s += "n_x " + std::to_string(n_x) + "\n";
    s += "n_g " + std::to_string(n_g) + "\n";
    s += "shrinkage_x " + fmt_real(shrinkage_x) + "\n";
    s += "shrinkage_g " + fmt_real(shrinkage_g) + "\n";
    s += "clamped " + std::string(clamped ? "1" : "0") + "\n";
    if (clamped) s += "clamp_magnitude " + fmt_real(clamp_magnitude) + "\n";
    return s;
  }
};

namespace detail {
// Diagonal shrinkage keeps the Frechet distance defined when there are fewer
// samples than feature dimensions.
inline double shrink_if_needed(const GaussianStats& s, MatrixXd& sigma) {
  sigma = s.sigma;
  if (s.n >= s.dim() || s.dim() == 0) return 0.0;
  double mean_diag = sigma.diagonal().mean();
  double lambda = 1e-6 * std::max(mean_diag, 0.0);
  if (lambda <= 0) lambda = 1e-12;
  sigma.diagonal().array() += lambda;
  return lambda;
}
}  // namespace detail

// ||mu_x - mu_g||^2 + Tr(Sx + Sg - 2*sqrt(Sx Sg)), with the cross term
// evaluated through the symmetrized product sqrt(sqrt(Sx) Sg sqrt(Sx)).
inline double fid(const GaussianStats& x, const GaussianStats& g, FidReport* report = nullptr) {
  check(x.dim() == g.dim(), "fid: dimension mismatch (" + std::to_string(x.dim()) + " vs " +
                                std::to_string(g.dim()) + ")");
  MatrixXd sx, sg;
  double lx = detail::shrink_if_needed(x, sx);
  double lg = detail::shrink_if_needed(g, sg);

  MatrixXd root_x = sqrtm_psd(sx);
  MatrixXd inner = root_x * sg * root_x;
  MatrixXd cross = sqrtm_psd(0.5 * (inner + inner.transpose()));

  double mean_term = (x.mu - g.mu).squaredNorm();
  double raw = mean_term + sx.trace() + sg.trace() - 2.0 * cross.trace();

  double value = raw;
  bool clamped = false;
  if (raw < 0) {
    check(raw > -1e-6 * std::max(1.0, sx.trace() + sg.trace()),
          "fid: negative beyond round-off: " + fmt_real(raw));
    value = 0.0;
    clamped = true;
  }
  if (report) {
    report->value = value;
    report->n_x = x.n;
    report->n_g = g.n;
    report->shrinkage_x = lx;
    report->shrinkage_g = lg;
    report->clamped = clamped;
    report->clamp_magnitude = clamped ? -raw : 0.0;
  }
  return value;
}

// Fraction of matching prediction/label pairs.
inline double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  check(!predictions.empty(), "accuracy: empty input");
  check(predictions.size() == labels.size(), "accuracy: length mismatch");
  size_t hits = 0;
  for (size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

// ------------------------------------------------------ feature extractors

// Maps an image to a fixed-dimension feature vector. The descriptor string
// identifies the extractor in every emitted report; FID values are only
// comparable under the same descriptor.
struct FeatureExtractor {
  std::string descriptor;
  int dim = 0;
  std::function<VectorXd(const ImageU8&)> extract;
};

// Pixels in [-1,1], flattened CHW. Only sensible for tiny images.
inline FeatureExtractor flatten_extractor(int channels, int height, int width) {
  FeatureExtractor fe;
  fe.dim = channels * height * width;
  fe.descriptor = "flatten-v1/in" + std::to_string(channels) + "x" + std::to_string(height) +
                  "x" + std::to_string(width);
  int c = channels, h = height, w = width;
  fe.extract = [c, h, w, dim = fe.dim](const ImageU8& img) {
    ImageU8 rgb = c == 3 ? to_rgb(img) : img;
    check(rgb.channels == c, "flatten extractor: channel mismatch");
    ImageU8 sized = resize_bilinear(rgb, w, h);
    std::vector<float> chw(static_cast<size_t>(dim));
    image_to_chw(sized, chw.data());
    VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = chw[static_cast<size_t>(i)];
    return v;
  };
  return fe;
}

// Fixed seeded Gaussian random projection of [-1,1] pixels. Cheap, fully
// deterministic stand-in for a pretrained feature network at desk scale.
inline FeatureExtractor random_projection_extractor(int out_dim, int channels, int height,
                                                    int width, uint64_t seed) {
  FeatureExtractor fe;
  fe.dim = out_dim;
  fe.descriptor = "randproj-v1/in" + std::to_string(channels) + "x" + std::to_string(height) +
                  "x" + std::to_string(width) + "/d" + std::to_string(out_dim) + "/seed" +
                  std::to_string(seed);
  const int in_dim = channels * height * width;
  auto proj = std::make_shared<Eigen::MatrixXf>(out_dim, in_dim);
  Rng rng(seed, 0x9d5f);
  const float scale = 1.0f / std::sqrt(static_cast<float>(in_dim));
  for (int r = 0; r < out_dim; ++r)
    for (int c = 0; c < in_dim; ++c) (*proj)(r, c) = rng.normalf() * scale;
  int ch = channels, h = height, w = width;
  fe.extract = [proj, ch, h, w, in_dim, out_dim](const ImageU8& img) {
    ImageU8 rgb = ch == 3 ? to_rgb(img) : img;
    ImageU8 sized = resize_bilinear(rgb, w, h);
    Eigen::VectorXf x(in_dim);
    std::vector<float> chw(static_cast<size_t>(in_dim));
    image_to_chw(sized, chw.data());
    for (int i = 0; i < in_dim; ++i) x(i) = chw[static_cast<size_t>(i)];
    Eigen::VectorXf y = (*proj) * x;
    return y.cast<double>().eval();
  };
  return fe;
}

inline GaussianStats stats_of_images(const FeatureExtractor& fe, const std::vector<ImageU8>& images) {
  std::vector<VectorXd> feats(images.size());
  parallel_for(images.size(), [&](size_t i) { feats[i] = fe.extract(images[i]); });
  return gaussian_stats(feats);
}

}  // namespace pawgan::metrics

#endif
