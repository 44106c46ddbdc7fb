#include <cmath>
#include <sstream>

#include "eacorr/classifiers.hpp"
#include "eacorr/error.hpp"
#include "eacorr/random.hpp"

namespace eacorr {

namespace {

void check_labels(std::span<const int> y, Eigen::Index rows, int n_classes) {
  if (static_cast<Eigen::Index>(y.size()) != rows) {
    throw DataError("labels: " + std::to_string(y.size()) + " labels for " +
                    std::to_string(rows) + " rows");
  }
  for (int label : y) {
    if (label < 0 || label >= n_classes) {
      throw DataError("labels: label " + std::to_string(label) + " outside [0, " +
                      std::to_string(n_classes) + ")");
    }
  }
}

Eigen::MatrixXd one_hot(std::span<const int> y, int n_classes) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(y.size()), n_classes);
  for (std::size_t i = 0; i < y.size(); ++i) t(static_cast<Eigen::Index>(i), y[i]) = 1.0;
  return t;
}

// Row-wise log-sum-exp normalized probabilities of the logits.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

}  // namespace

SoftmaxLossGrad softmax_loss_grad(const SoftmaxModel& model, const Eigen::MatrixXd& x,
                                  std::span<const int> y, double l2) {
  const int c = static_cast<int>(model.n_classes());
  check_labels(y, x.rows(), c);
  if (x.cols() != model.input_dim()) throw DataError("softmax: feature dimension mismatch");
  const auto n = static_cast<double>(x.rows());

  Eigen::MatrixXd logits = x * model.weights;
  logits.rowwise() += model.bias.transpose();
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  const Eigen::VectorXd log_norm =
      row_max.array() + (logits.colwise() - row_max).array().exp().rowwise().sum().log();
  double nll = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) nll += log_norm(i) - logits(i, y[i]);

  const Eigen::MatrixXd p = softmax_rows(logits);
  const Eigen::MatrixXd diff = p - one_hot(y, c);

  SoftmaxLossGrad out;
  out.loss = nll / n + 0.5 * l2 * model.weights.squaredNorm();
  out.grad_weights = x.transpose() * diff / n + l2 * model.weights;
  out.grad_bias = diff.colwise().sum().transpose() / n;
  return out;
}

SoftmaxModel softmax_fit(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes,
                         const SoftmaxConfig& cfg) {
  if (n_classes < 2) throw ConfigError("softmax_fit: need at least 2 classes");
  if (x.rows() < n_classes) throw DataError("softmax_fit: fewer rows than classes");
  if (!x.allFinite()) throw DataError("softmax_fit: non-finite features");
  check_labels(y, x.rows(), n_classes);
  std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
  for (int label : y) ++counts[static_cast<std::size_t>(label)];
  for (int c = 0; c < n_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw DataError("softmax_fit: class " + std::to_string(c) + " has no samples");
    }
  }
  if (cfg.epochs < 0 || !(cfg.learning_rate > 0.0) || cfg.l2 < 0.0) {
    throw ConfigError("softmax_fit: invalid optimizer settings");
  }

  SoftmaxModel model;
  model.weights = Eigen::MatrixXd::Zero(x.cols(), n_classes);
  model.bias = Eigen::VectorXd::Zero(n_classes);
  if (cfg.init_scale > 0.0) {
    Rng rng(cfg.seed);
    for (Eigen::Index i = 0; i < model.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < model.weights.cols(); ++j)
        model.weights(i, j) = cfg.init_scale * rng.normal();
  }

  model.loss_trace.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const SoftmaxLossGrad g = softmax_loss_grad(model, x, y, cfg.l2);
    if (!std::isfinite(g.loss)) {
      throw NumericalError("softmax_fit: non-finite loss at epoch " + std::to_string(epoch));
    }
    model.loss_trace.push_back(g.loss);
    model.weights -= cfg.learning_rate * g.grad_weights;
    model.bias -= cfg.learning_rate * g.grad_bias;
  }
  model.loss_trace.push_back(softmax_loss_grad(model, x, y, cfg.l2).loss);
  return model;
}

Eigen::MatrixXd predict_proba(const SoftmaxModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.input_dim()) throw DataError("softmax: feature dimension mismatch");
  Eigen::MatrixXd logits = x * model.weights;
  logits.rowwise() += model.bias.transpose();
  return softmax_rows(logits);
}

std::vector<int> predict(const SoftmaxModel& model, const Eigen::MatrixXd& x) {
  return argmax_rows(predict_proba(model, x));
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()), 0);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < scores.cols(); ++j) {
      if (scores(i, j) > scores(i, best)) best = static_cast<int>(j);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

Evaluation evaluate(std::span<const int> y_true, std::span<const int> y_pred, int n_classes) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("evaluate: " + std::to_string(y_true.size()) + " true labels vs " +
                    std::to_string(y_pred.size()) + " predictions");
  }
  check_labels(y_true, static_cast<Eigen::Index>(y_true.size()), n_classes);
  check_labels(y_pred, static_cast<Eigen::Index>(y_pred.size()), n_classes);
  Evaluation out;
  out.confusion = ConfusionMatrix::Zero(n_classes, n_classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) ++out.confusion(y_true[i], y_pred[i]);
  out.accuracy = y_true.empty() ? 0.0
                                : static_cast<double>(out.confusion.trace()) /
                                      static_cast<double>(y_true.size());
  return out;
}

std::string confusion_to_csv(const ConfusionMatrix& m, const std::vector<std::string>& names) {
  if (static_cast<Eigen::Index>(names.size()) != m.rows() || m.rows() != m.cols()) {
    throw DataError("confusion_to_csv: names do not match matrix size");
  }
  std::ostringstream out;
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
  return out.str();
}

ConfusionMatrix confusion_from_csv(const std::string& csv, std::vector<std::string>* names) {
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> header;
  if (!std::getline(in, line)) throw DataError("confusion csv: empty");
  {
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) header.push_back(field);
  }
  const auto c = static_cast<Eigen::Index>(header.size());
  ConfusionMatrix m(c, c);
  for (Eigen::Index i = 0; i < c; ++i) {
    if (!std::getline(in, line)) throw DataError("confusion csv: missing rows");
    std::istringstream ls(line);
    std::string field;
    for (Eigen::Index j = 0; j < c; ++j) {
      if (!std::getline(ls, field, ',')) throw DataError("confusion csv: short row");
      m(i, j) = std::stol(field);
    }
  }
  if (names) *names = std::move(header);
  return m;
}

}  // namespace eacorr
