#include <algorithm>
#include <cmath>

#include "eacorr/classifiers.hpp"
#include "eacorr/error.hpp"
#include "eacorr/random.hpp"

namespace eacorr {

double kernel_value(const KernelSpec& k, const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (k.type == KernelType::linear) return a.dot(b);
  return std::exp(-k.gamma * (a - b).squaredNorm());
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& k, const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw DataError("kernel_matrix: dimension mismatch");
  Eigen::MatrixXd g = a * b.transpose();
  if (k.type == KernelType::linear) return g;
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      g(i, j) = std::exp(-k.gamma * std::max(0.0, na(i) + nb(j) - 2.0 * g(i, j)));
    }
  }
  return g;
}

namespace {

// Platt's sequential minimal optimization with a full error cache.
class Smo {
 public:
  Smo(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double c, double tol,
      std::uint64_t seed)
      : k_(gram), y_(y), c_(c), tol_(tol), rng_(seed),
        alpha_(Eigen::VectorXd::Zero(y.size())), error_(-y) {}

  SmoSolution run(int max_passes) {
    const Eigen::Index n = y_.size();
    SmoSolution out;
    bool examine_all = true;
    long changed = 0;
    while ((changed > 0 || examine_all) && out.passes < max_passes) {
      changed = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (examine_all || non_bound(i)) changed += examine(i);
      }
      ++out.passes;
      if (examine_all && changed == 0) {
        out.converged = true;
        break;
      }
      if (examine_all) {
        examine_all = false;
      } else if (changed == 0) {
        examine_all = true;
      }
    }
    out.alpha = alpha_;
    out.bias = bias_;
    return out;
  }

 private:
  bool non_bound(Eigen::Index i) const { return alpha_(i) > 0.0 && alpha_(i) < c_; }

  int examine(Eigen::Index i2) {
    const double r2 = error_(i2) * y_(i2);
    const double a2 = alpha_(i2);
    if (!((r2 < -tol_ && a2 < c_) || (r2 > tol_ && a2 > 0.0))) return 0;

    const Eigen::Index n = y_.size();
    Eigen::Index best = -1;
    double best_gap = -1.0;
    Eigen::Index n_free = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!non_bound(i)) continue;
      ++n_free;
      const double gap = std::abs(error_(i) - error_(i2));
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (n_free > 1 && take_step(best, i2)) return 1;

    Eigen::Index start = static_cast<Eigen::Index>(rng_.below(static_cast<std::uint64_t>(n)));
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Index i1 = (start + k) % n;
      if (non_bound(i1) && take_step(i1, i2)) return 1;
    }
    start = static_cast<Eigen::Index>(rng_.below(static_cast<std::uint64_t>(n)));
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Index i1 = (start + k) % n;
      if (take_step(i1, i2)) return 1;
    }
    return 0;
  }

  double snap(double a) const {
    if (a < 1e-12 * c_) return 0.0;
    if (a > c_ * (1.0 - 1e-12)) return c_;
    return a;
  }

  bool take_step(Eigen::Index i1, Eigen::Index i2) {
    if (i1 == i2) return false;
    const double a1_old = alpha_(i1);
    const double a2_old = alpha_(i2);
    const double y1 = y_(i1);
    const double y2 = y_(i2);
    const double e1 = error_(i1);
    const double e2 = error_(i2);
    const double s = y1 * y2;

    double lo, hi;
    if (y1 != y2) {
      lo = std::max(0.0, a2_old - a1_old);
      hi = std::min(c_, c_ + a2_old - a1_old);
    } else {
      lo = std::max(0.0, a1_old + a2_old - c_);
      hi = std::min(c_, a1_old + a2_old);
    }
    if (hi - lo <= 1e-14 * c_) return false;

    const double k11 = k_(i1, i1);
    const double k12 = k_(i1, i2);
    const double k22 = k_(i2, i2);
    const double eta = k11 + k22 - 2.0 * k12;

    double a2;
    if (eta > 0.0) {
      a2 = std::clamp(a2_old + y2 * (e1 - e2) / eta, lo, hi);
    } else {
      // Objective at both ends of the segment.
      const double f1 = y1 * (e1 - bias_) - a1_old * k11 - s * a2_old * k12;
      const double f2 = y2 * (e2 - bias_) - s * a1_old * k12 - a2_old * k22;
      const double l1 = a1_old + s * (a2_old - lo);
      const double h1 = a1_old + s * (a2_old - hi);
      const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                            s * lo * l1 * k12;
      const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                            s * hi * h1 * k12;
      if (obj_lo < obj_hi - kEps) {
        a2 = lo;
      } else if (obj_lo > obj_hi + kEps) {
        a2 = hi;
      } else {
        a2 = a2_old;
      }
    }
    a2 = snap(a2);
    if (std::abs(a2 - a2_old) < kEps * (a2 + a2_old + kEps)) return false;
    const double a1 = snap(std::clamp(a1_old + s * (a2_old - a2), 0.0, c_));

    const double d1 = y1 * (a1 - a1_old);
    const double d2 = y2 * (a2 - a2_old);
    const double b1 = bias_ - e1 - d1 * k11 - d2 * k12;
    const double b2 = bias_ - e2 - d1 * k12 - d2 * k22;
    double b_new;
    if (a1 > 0.0 && a1 < c_) {
      b_new = b1;
    } else if (a2 > 0.0 && a2 < c_) {
      b_new = b2;
    } else {
      b_new = 0.5 * (b1 + b2);
    }
    error_ += d1 * k_.col(i1) + d2 * k_.col(i2);
    error_.array() += b_new - bias_;
    bias_ = b_new;
    alpha_(i1) = a1;
    alpha_(i2) = a2;
    return true;
  }

  static constexpr double kEps = 1e-8;

  const Eigen::MatrixXd& k_;
  const Eigen::VectorXd& y_;
  double c_;
  double tol_;
  Rng rng_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd error_;  // f(x_i) - y_i
  double bias_ = 0.0;
};

}  // namespace

SmoSolution smo_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& labels, double c_reg,
                      double tol, int max_passes, std::uint64_t seed) {
  if (gram.rows() != gram.cols() || gram.rows() != labels.size()) {
    throw DataError("smo_solve: kernel/label size mismatch");
  }
  if (!(c_reg > 0.0) || !(tol > 0.0) || max_passes < 1) {
    throw ConfigError("smo_solve: invalid C, tolerance or pass limit");
  }
  return Smo(gram, labels, c_reg, tol, seed).run(max_passes);
}

SvmModel svm_fit(const Eigen::MatrixXd& x, std::span<const int> y, const SvmConfig& cfg) {
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw DataError("svm_fit: label count mismatch");
  if (!x.allFinite()) throw DataError("svm_fit: non-finite features");
  if (y.empty()) throw DataError("svm_fit: no training data");
  const int n_classes = *std::max_element(y.begin(), y.end()) + 1;
  if (*std::min_element(y.begin(), y.end()) < 0) throw DataError("svm_fit: negative label");
  if (std::all_of(y.begin(), y.end(), [&](int v) { return v == y[0]; })) {
    throw DataError("svm_fit: need at least 2 categories");
  }

  SvmModel model;
  model.kernel = cfg.kernel;
  model.c_reg = cfg.c_reg;
  model.input_dim = x.cols();
  if (model.kernel.type == KernelType::rbf && model.kernel.gamma <= 0.0) {
    const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
    const double mean_var =
        x.rows() > 1 ? xc.squaredNorm() / double(x.rows() - 1) / double(x.cols()) : 0.0;
    model.kernel.gamma = mean_var > 0.0 ? 1.0 / (double(x.cols()) * mean_var) : 1.0;
  }

  const Eigen::MatrixXd gram = kernel_matrix(model.kernel, x, x);
  for (int c = 0; c < n_classes; ++c) {
    Eigen::VectorXd labels(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) labels(i) = y[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
    BinaryMachine m;
    if ((labels.array() > 0).any()) {
      const SmoSolution sol = smo_solve(gram, labels, cfg.c_reg, cfg.tol, cfg.max_passes,
                                        derive_seed(cfg.seed, static_cast<std::uint64_t>(c)));
      std::vector<Eigen::Index> sv;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (sol.alpha(i) > 0.0) sv.push_back(i);
      }
      m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
      m.alpha.resize(static_cast<Eigen::Index>(sv.size()));
      m.labels.resize(static_cast<Eigen::Index>(sv.size()));
      for (std::size_t j = 0; j < sv.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        m.support_vectors.row(jj) = x.row(sv[j]);
        m.alpha(jj) = sol.alpha(sv[j]);
        m.labels(jj) = labels(sv[j]);
      }
      m.bias = sol.bias;
      m.converged = sol.converged;
      m.passes = sol.passes;
    } else {
      m.support_vectors.resize(0, x.cols());
      m.bias = -1.0;
      m.converged = true;
    }
    model.machines.push_back(std::move(m));
  }
  return model;
}

Eigen::MatrixXd decision_values(const SvmModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.input_dim) throw DataError("svm: feature dimension mismatch");
  Eigen::MatrixXd out(x.rows(), model.n_classes());
  for (int c = 0; c < model.n_classes(); ++c) {
    const BinaryMachine& m = model.machines[static_cast<std::size_t>(c)];
    Eigen::VectorXd f = Eigen::VectorXd::Constant(x.rows(), m.bias);
    if (m.support_vectors.rows() > 0) {
      f += kernel_matrix(model.kernel, x, m.support_vectors) * m.alpha.cwiseProduct(m.labels);
    }
    out.col(c) = f;
  }
  return out;
}

std::vector<int> predict(const SvmModel& model, const Eigen::MatrixXd& x) {
  return argmax_rows(decision_values(model, x));
}

}  // namespace eacorr
