#pragma once

// Shared-space correlation learning: regularized CCA, Deep CCA with
// per-modality MLP encoders, and the category-based variant that re-pairs
// items within their category before the correlation objective.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eacorr/numlin.hpp"

namespace eacorr {

enum class Side { x, y };

template <typename Scalar>
struct CcaModel {
  Matrix<Scalar> proj_x;         // dx x k
  Matrix<Scalar> proj_y;         // dy x k
  Vector<Scalar> correlations;   // k, in [0, 1], descending
  RowVector<Scalar> mean_x;
  RowVector<Scalar> mean_y;
  Scalar rx = 0;
  Scalar ry = 0;

  Index dim() const { return correlations.size(); }
  Index input_dim(Side side) const { return side == Side::x ? proj_x.rows() : proj_y.rows(); }
};

/// Canonical correlation analysis of paired rows. Both covariances are
/// whitened with inv_sqrt_sym (ridges rx, ry) and the whitened
/// cross-covariance is factored by SVD.
template <typename DX, typename DY>
CcaModel<typename DX::Scalar> cca_fit(const Eigen::MatrixBase<DX>& x,
                                      const Eigen::MatrixBase<DY>& y, Index k,
                                      typename DX::Scalar rx, typename DX::Scalar ry) {
  using Scalar = typename DX::Scalar;
  const Index n = x.rows();
  if (y.rows() != n) throw DataError("cca_fit: paired inputs differ in row count");
  if (n < 3) throw ConfigError("cca_fit: need at least 3 paired rows");
  if (k < 1 || k > std::min({x.cols(), y.cols(), n - 1})) {
    throw ConfigError("cca_fit: k=" + std::to_string(k) + " outside [1, " +
                      std::to_string(std::min({x.cols(), y.cols(), n - 1})) + "]");
  }
  if (!x.allFinite() || !y.allFinite()) throw DataError("cca_fit: non-finite input");

  CcaModel<Scalar> model;
  model.rx = rx;
  model.ry = ry;
  model.mean_x = x.colwise().mean();
  model.mean_y = y.colwise().mean();
  const Matrix<Scalar> xc = x.rowwise() - model.mean_x;
  const Matrix<Scalar> yc = y.rowwise() - model.mean_y;
  const Scalar denom = Scalar(n - 1);

  Matrix<Scalar> cxx = xc.transpose() * xc / denom;
  Matrix<Scalar> cyy = yc.transpose() * yc / denom;
  cxx = (cxx + cxx.transpose()) / Scalar(2);
  cyy = (cyy + cyy.transpose()) / Scalar(2);
  const Matrix<Scalar> wx = inv_sqrt_sym(cxx, rx);
  const Matrix<Scalar> wy = inv_sqrt_sym(cyy, ry);
  const Matrix<Scalar> t = wx * (xc.transpose() * yc / denom) * wy;

  const Svd<Scalar> f = svd(t);
  model.proj_x = wx * f.u.leftCols(k);
  model.proj_y = wy * f.v.leftCols(k);
  model.correlations = f.s.head(k).cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  return model;
}

/// (data - mean_side) * proj_side.
template <typename Scalar, typename Derived>
Matrix<Scalar> cca_project(const CcaModel<Scalar>& model, const Eigen::MatrixBase<Derived>& data,
                           Side side, std::optional<Index> k = std::nullopt) {
  const Matrix<Scalar>& proj = side == Side::x ? model.proj_x : model.proj_y;
  const RowVector<Scalar>& mean = side == Side::x ? model.mean_x : model.mean_y;
  if (data.cols() != proj.rows()) {
    throw DataError(std::string("cca_project: ") + (side == Side::x ? "x" : "y") +
                    " side expects " + std::to_string(proj.rows()) + " columns, got " +
                    std::to_string(data.cols()));
  }
  const Index use = k.value_or(model.dim());
  if (use < 1 || use > model.dim()) throw ConfigError("cca_project: k exceeds model dimension");
  return (data.rowwise() - mean) * proj.leftCols(use);
}

// ---------------------------------------------------------------- Deep CCA

struct DenseLayer {
  Eigen::MatrixXd weight;  // in x out
  Eigen::VectorXd bias;    // out
};

/// Multilayer perceptron: tanh on hidden layers, identity on the output.
class EncoderStack {
 public:
  EncoderStack() = default;
  /// Normal weights with std 1/sqrt(fan_in), zero biases. `sizes` = {input, hidden..., output}.
  EncoderStack(const std::vector<Index>& sizes, std::uint64_t seed);
  explicit EncoderStack(std::vector<DenseLayer> layers);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  /// Forward pass keeping every layer's output for backpropagation.
  std::vector<Eigen::MatrixXd> forward_trace(const Eigen::MatrixXd& x) const;

  /// Gradients of a loss with respect to the parameters, given the trace of
  /// a forward pass and d(loss)/d(output).
  std::vector<DenseLayer> backward(const std::vector<Eigen::MatrixXd>& trace,
                                   const Eigen::MatrixXd& grad_output) const;

  std::vector<Index> sizes() const;
  Index input_dim() const { return layers_.empty() ? 0 : layers_.front().weight.rows(); }
  Index output_dim() const { return layers_.empty() ? 0 : layers_.back().weight.cols(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
};

struct DccaLossGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad_h1;
  Eigen::MatrixXd grad_h2;
};

/// Negative sum of the top-k canonical correlations between the rows of h1
/// and h2 (covariances with divisor n-1, ridge r on both), with the
/// closed-form gradient obtained from the SVD of the whitened
/// cross-covariance.
DccaLossGrad dcca_loss_grad(const Eigen::MatrixXd& h1, const Eigen::MatrixXd& h2, Index k,
                            double r);

struct DccaConfig {
  std::vector<Index> hidden{256, 128};
  Index output_dim = 40;
  double ridge = 1e-4;
  int epochs = 100;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  double category_pair_prob = 0.0;  // 0 = plain DCCA
};

void validate(const DccaConfig& cfg);

/// Pairs given as row indices into two row tables, so repeated rows (one
/// audio vector shared by many EEG records) are encoded once.
struct PairIndex {
  std::vector<Index> x;
  std::vector<Index> y;

  std::size_t size() const { return x.size(); }
  static PairIndex identity(Index n);
};

/// Keeps each pair with probability 1-p; otherwise replaces its y partner
/// with the y partner of a uniformly drawn pair of the same category.
PairIndex expand_category_pairs(const PairIndex& pairs, std::span<const int> labels, double p,
                                std::uint64_t seed);

/// Matrix form of the above over row-aligned X and Y.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> expand_category_pairs(const Eigen::MatrixXd& x,
                                                                  const Eigen::MatrixXd& y,
                                                                  std::span<const int> labels,
                                                                  double p, std::uint64_t seed);

/// Column-wise standardization fitted on training rows.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // zero-variance columns keep scale 1

  static Standardizer fit(const Eigen::MatrixXd& rows);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
};

struct DccaModel {
  Standardizer input_x;
  Standardizer input_y;
  EncoderStack encoder_x;
  EncoderStack encoder_y;
  CcaModel<double> head;
  std::vector<double> loss_trace;  // objective before each update, then the final value

  Eigen::MatrixXd project(const Eigen::MatrixXd& data, Side side,
                          std::optional<Index> k = std::nullopt) const;
};

/// Inputs are standardized per column, then full-batch momentum gradient
/// descent runs on the correlation objective through both encoders, followed by a CCA head on the encoder outputs. Labels are
/// required when category_pair_prob > 0; pairs are then re-drawn every epoch.
DccaModel dcca_fit(const Eigen::MatrixXd& x_rows, const Eigen::MatrixXd& y_rows,
                   const PairIndex& pairs, const DccaConfig& cfg,
                   std::span<const int> labels = {});

DccaModel dcca_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const DccaConfig& cfg,
                   std::span<const int> labels = {});

}  // namespace eacorr
