#include <cmath>
#include <map>

#include "eacorr/corr.hpp"
#include "eacorr/error.hpp"
#include "eacorr/random.hpp"

namespace eacorr {

EncoderStack::EncoderStack(const std::vector<Index>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw ConfigError("EncoderStack: need input and output sizes");
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] < 1 || sizes[l + 1] < 1) throw ConfigError("EncoderStack: layer sizes must be >= 1");
    DenseLayer layer;
    layer.weight.resize(sizes[l], sizes[l + 1]);
    const double scale = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    for (Index i = 0; i < layer.weight.rows(); ++i)
      for (Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = scale * rng.normal();
    layer.bias = Eigen::VectorXd::Zero(sizes[l + 1]);
    layers_.push_back(std::move(layer));
  }
}

EncoderStack::EncoderStack(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("EncoderStack: no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bias.size() != layers_[l].weight.cols()) {
      throw DataError("EncoderStack: bias size mismatch in layer " + std::to_string(l));
    }
    if (l > 0 && layers_[l].weight.rows() != layers_[l - 1].weight.cols()) {
      throw DataError("EncoderStack: layer " + std::to_string(l) + " does not chain");
    }
  }
}

std::vector<Index> EncoderStack::sizes() const {
  std::vector<Index> out;
  if (layers_.empty()) return out;
  out.push_back(layers_.front().weight.rows());
  for (const auto& l : layers_) out.push_back(l.weight.cols());
  return out;
}

std::vector<Eigen::MatrixXd> EncoderStack::forward_trace(const Eigen::MatrixXd& x) const {
  if (x.cols() != input_dim()) {
    throw DataError("EncoderStack: expected " + std::to_string(input_dim()) + " inputs, got " +
                    std::to_string(x.cols()));
  }
  std::vector<Eigen::MatrixXd> trace;
  trace.reserve(layers_.size() + 1);
  trace.push_back(x);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd a = trace.back() * layers_[l].weight;
    a.rowwise() += layers_[l].bias.transpose();
    // tanh(a) = 1 - 2 / (exp(2a) + 1); Eigen vectorizes exp but not tanh for doubles.
    if (l + 1 < layers_.size()) a = 1.0 - 2.0 / ((2.0 * a.array()).exp() + 1.0);
    trace.push_back(std::move(a));
  }
  return trace;
}

Eigen::MatrixXd EncoderStack::forward(const Eigen::MatrixXd& x) const {
  return std::move(forward_trace(x).back());
}

std::vector<DenseLayer> EncoderStack::backward(const std::vector<Eigen::MatrixXd>& trace,
                                               const Eigen::MatrixXd& grad_output) const {
  std::vector<DenseLayer> grads(layers_.size());
  Eigen::MatrixXd delta = grad_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    grads[l].weight = trace[l].transpose() * delta;
    grads[l].bias = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = (delta * layers_[l].weight.transpose()).cwiseProduct(
          (1.0 - trace[l].array().square()).matrix());
    }
  }
  return grads;
}

DccaLossGrad dcca_loss_grad(const Eigen::MatrixXd& h1, const Eigen::MatrixXd& h2, Index k,
                            double r) {
  const Index n = h1.rows();
  if (h2.rows() != n) throw DataError("dcca_loss_grad: batches differ in row count");
  if (n < 3) throw ConfigError("dcca_loss_grad: batch too small");
  if (k < 1 || k > std::min(h1.cols(), h2.cols())) {
    throw ConfigError("dcca_loss_grad: k outside [1, min(o1, o2)]");
  }
  if (r < 0.0) throw ConfigError("dcca_loss_grad: ridge must be nonnegative");

  const Eigen::MatrixXd c1 = centered(h1);
  const Eigen::MatrixXd c2 = centered(h2);
  const double denom = static_cast<double>(n - 1);
  Eigen::MatrixXd s11 = c1.transpose() * c1 / denom;
  Eigen::MatrixXd s22 = c2.transpose() * c2 / denom;
  s11 = (s11 + s11.transpose()) / 2.0;
  s22 = (s22 + s22.transpose()) / 2.0;
  const Eigen::MatrixXd s12 = c1.transpose() * c2 / denom;

  if (r == 0.0) {
    for (const Eigen::MatrixXd* s : {&s11, &s22}) {
      const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                     *s, Eigen::EigenvaluesOnly).eigenvalues();
      if (!(ev.minCoeff() > kEigenFloor * ev.maxCoeff())) {
        throw NumericalError("dcca_loss_grad: degenerate covariance with zero ridge");
      }
    }
  }
  const Eigen::MatrixXd a = inv_sqrt_sym(s11, r);
  const Eigen::MatrixXd b = inv_sqrt_sym(s22, r);
  const Svd<double> f = svd(Eigen::MatrixXd(a * s12 * b));
  const Eigen::MatrixXd uk = f.u.leftCols(k);
  const Eigen::MatrixXd vk = f.v.leftCols(k);
  const Eigen::VectorXd dk = f.s.head(k);

  // d(sum sigma)/d(Sigma12), d/d(Sigma11), d/d(Sigma22).
  const Eigen::MatrixXd d12 = a * uk * vk.transpose() * b;
  const Eigen::MatrixXd d11 = -0.5 * a * uk * dk.asDiagonal() * uk.transpose() * a;
  const Eigen::MatrixXd d22 = -0.5 * b * vk * dk.asDiagonal() * vk.transpose() * b;

  DccaLossGrad out;
  out.loss = -dk.sum();
  out.grad_h1 = -(2.0 * c1 * d11 + c2 * d12.transpose()) / denom;
  out.grad_h2 = -(2.0 * c2 * d22 + c1 * d12) / denom;
  return out;
}

void validate(const DccaConfig& cfg) {
  if (cfg.output_dim < 1) throw ConfigError("dcca: output_dim must be >= 1");
  for (Index h : cfg.hidden) {
    if (h < 1) throw ConfigError("dcca: hidden sizes must be >= 1");
  }
  if (cfg.ridge < 0.0) throw ConfigError("dcca: ridge must be nonnegative");
  if (cfg.epochs < 0) throw ConfigError("dcca: epochs must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("dcca: learning rate must be positive");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) throw ConfigError("dcca: momentum outside [0, 1)");
  if (!(cfg.category_pair_prob >= 0.0 && cfg.category_pair_prob <= 1.0)) {
    throw ConfigError("dcca: category_pair_prob outside [0, 1]");
  }
}

PairIndex PairIndex::identity(Index n) {
  PairIndex p;
  p.x.resize(static_cast<std::size_t>(n));
  p.y.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) p.x[static_cast<std::size_t>(i)] = p.y[static_cast<std::size_t>(i)] = i;
  return p;
}

PairIndex expand_category_pairs(const PairIndex& pairs, std::span<const int> labels, double p,
                                std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("expand_category_pairs: p outside [0, 1]");
  if (pairs.x.size() != pairs.y.size()) throw DataError("expand_category_pairs: ragged pairs");
  if (labels.size() != pairs.size()) {
    throw DataError("expand_category_pairs: " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(pairs.size()) + " pairs");
  }
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw DataError("expand_category_pairs: negative label");
    members[labels[i]].push_back(i);
  }
  PairIndex out = pairs;
  Rng rng(seed);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (rng.uniform() < p) {
      const auto& pool = members[labels[i]];
      out.y[i] = pairs.y[pool[rng.below(pool.size())]];
    }
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> expand_category_pairs(const Eigen::MatrixXd& x,
                                                                  const Eigen::MatrixXd& y,
                                                                  std::span<const int> labels,
                                                                  double p, std::uint64_t seed) {
  if (x.rows() != y.rows()) throw DataError("expand_category_pairs: row count mismatch");
  const PairIndex re = expand_category_pairs(PairIndex::identity(x.rows()), labels, p, seed);
  Eigen::MatrixXd y_out(y.rows(), y.cols());
  for (std::size_t i = 0; i < re.size(); ++i) y_out.row(static_cast<Index>(i)) = y.row(re.y[i]);
  return {x, std::move(y_out)};
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<Index>& rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

Eigen::MatrixXd scatter_add_rows(const Eigen::MatrixXd& g, const std::vector<Index>& rows,
                                 Index n_rows) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_rows, g.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(rows[i]) += g.row(static_cast<Index>(i));
  return out;
}

void check_pairs(const PairIndex& pairs, Index nx, Index ny) {
  if (pairs.x.size() != pairs.y.size()) throw DataError("dcca_fit: ragged pair index");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs.x[i] < 0 || pairs.x[i] >= nx || pairs.y[i] < 0 || pairs.y[i] >= ny) {
      throw DataError("dcca_fit: pair index out of range");
    }
  }
}

struct Momentum {
  std::vector<DenseLayer> velocity;

  explicit Momentum(const EncoderStack& enc) {
    for (const auto& l : enc.layers()) {
      velocity.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                          Eigen::VectorXd::Zero(l.bias.size())});
    }
  }

  void step(EncoderStack& enc, const std::vector<DenseLayer>& grads, double lr, double mu) {
    auto& layers = enc.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      velocity[l].weight = mu * velocity[l].weight - lr * grads[l].weight;
      velocity[l].bias = mu * velocity[l].bias - lr * grads[l].bias;
      layers[l].weight += velocity[l].weight;
      layers[l].bias += velocity[l].bias;
    }
  }
};

constexpr std::uint64_t kStreamEncoderX = 1;
constexpr std::uint64_t kStreamEncoderY = 2;
constexpr std::uint64_t kStreamPairing = 3;

}  // namespace

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows) {
  Standardizer s;
  s.mean = rows.colwise().mean();
  s.scale = Eigen::RowVectorXd::Ones(rows.cols());
  if (rows.rows() > 1) {
    const Eigen::RowVectorXd var =
        (rows.rowwise() - s.mean).colwise().squaredNorm() / double(rows.rows() - 1);
    for (Index j = 0; j < rows.cols(); ++j) {
      if (var(j) > 0.0) s.scale(j) = std::sqrt(var(j));
    }
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != mean.size()) throw DataError("Standardizer: dimension mismatch");
  return (rows.rowwise() - mean).array().rowwise() / scale.array();
}

Eigen::MatrixXd DccaModel::project(const Eigen::MatrixXd& data, Side side,
                                   std::optional<Index> k) const {
  const EncoderStack& enc = side == Side::x ? encoder_x : encoder_y;
  const Standardizer& in = side == Side::x ? input_x : input_y;
  return cca_project(head, enc.forward(in.apply(data)), side, k);
}

DccaModel dcca_fit(const Eigen::MatrixXd& x_rows, const Eigen::MatrixXd& y_rows,
                   const PairIndex& pairs, const DccaConfig& cfg, std::span<const int> labels) {
  validate(cfg);
  check_pairs(pairs, x_rows.rows(), y_rows.rows());
  const bool repair = cfg.category_pair_prob > 0.0;
  if (repair && labels.size() != pairs.size()) {
    throw ConfigError("dcca_fit: category re-pairing needs one label per pair");
  }
  if (static_cast<Index>(pairs.size()) < 3) throw ConfigError("dcca_fit: need at least 3 pairs");
  if (!x_rows.allFinite() || !y_rows.allFinite()) throw DataError("dcca_fit: non-finite input");

  auto sizes_for = [&](Index in) {
    std::vector<Index> s{in};
    s.insert(s.end(), cfg.hidden.begin(), cfg.hidden.end());
    s.push_back(cfg.output_dim);
    return s;
  };
  DccaModel model;
  model.input_x = Standardizer::fit(x_rows);
  model.input_y = Standardizer::fit(y_rows);
  const Eigen::MatrixXd xs = model.input_x.apply(x_rows);
  const Eigen::MatrixXd ys = model.input_y.apply(y_rows);
  model.encoder_x = EncoderStack(sizes_for(x_rows.cols()), derive_seed(cfg.seed, kStreamEncoderX));
  model.encoder_y = EncoderStack(sizes_for(y_rows.cols()), derive_seed(cfg.seed, kStreamEncoderY));
  Momentum mom_x(model.encoder_x);
  Momentum mom_y(model.encoder_y);

  const std::uint64_t pairing_seed = derive_seed(cfg.seed, kStreamPairing);
  auto pairing_for = [&](int epoch) {
    return repair ? expand_category_pairs(pairs, labels, cfg.category_pair_prob,
                                          derive_seed(pairing_seed, static_cast<std::uint64_t>(epoch)))
                  : pairs;
  };

  model.loss_trace.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const PairIndex batch = pairing_for(epoch);
    const auto tx = model.encoder_x.forward_trace(xs);
    const auto ty = model.encoder_y.forward_trace(ys);
    const DccaLossGrad lg = dcca_loss_grad(gather_rows(tx.back(), batch.x),
                                           gather_rows(ty.back(), batch.y), cfg.output_dim,
                                           cfg.ridge);
    if (!std::isfinite(lg.loss) || !lg.grad_h1.allFinite() || !lg.grad_h2.allFinite()) {
      throw NumericalError("dcca_fit: non-finite loss at epoch " + std::to_string(epoch));
    }
    model.loss_trace.push_back(lg.loss);
    const auto gx = model.encoder_x.backward(tx, scatter_add_rows(lg.grad_h1, batch.x, x_rows.rows()));
    const auto gy = model.encoder_y.backward(ty, scatter_add_rows(lg.grad_h2, batch.y, y_rows.rows()));
    mom_x.step(model.encoder_x, gx, cfg.learning_rate, cfg.momentum);
    mom_y.step(model.encoder_y, gy, cfg.learning_rate, cfg.momentum);
  }

  const PairIndex final_batch = pairing_for(cfg.epochs);
  const Eigen::MatrixXd hx = gather_rows(model.encoder_x.forward(xs), final_batch.x);
  const Eigen::MatrixXd hy = gather_rows(model.encoder_y.forward(ys), final_batch.y);
  const double final_loss = dcca_loss_grad(hx, hy, cfg.output_dim, cfg.ridge).loss;
  if (!std::isfinite(final_loss)) {
    throw NumericalError("dcca_fit: non-finite loss at epoch " + std::to_string(cfg.epochs));
  }
  model.loss_trace.push_back(final_loss);
  model.head = cca_fit(hx, hy, std::min<Index>(cfg.output_dim, static_cast<Index>(final_batch.size()) - 1),
                       cfg.ridge, cfg.ridge);
  return model;
}

DccaModel dcca_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const DccaConfig& cfg,
                   std::span<const int> labels) {
  if (x.rows() != y.rows()) throw DataError("dcca_fit: paired inputs differ in row count");
  return dcca_fit(x, y, PairIndex::identity(x.rows()), cfg, labels);
}

}  // namespace eacorr
