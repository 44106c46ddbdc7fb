#pragma once

// Supervised heads: multinomial logistic regression (softmax) trained by
// full-batch gradient descent, one-vs-rest kernel SVM trained by SMO, and
// accuracy/confusion evaluation.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace eacorr {

// ---------------------------------------------------------------- softmax

struct SoftmaxConfig {
  int epochs = 300;
  double learning_rate = 0.1;
  double l2 = 1e-4;
  /// Std-dev of the random weight initialization; 0 gives a zero-initialized model.
  double init_scale = 0.0;
  std::uint64_t seed = 0;
};

struct SoftmaxModel {
  Eigen::MatrixXd weights;  // d x C
  Eigen::VectorXd bias;     // C
  std::vector<double> loss_trace;  // loss before each epoch, then the final loss

  Eigen::Index input_dim() const { return weights.rows(); }
  Eigen::Index n_classes() const { return weights.cols(); }
  double final_loss() const { return loss_trace.empty() ? 0.0 : loss_trace.back(); }
};

struct SoftmaxLossGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad_weights;
  Eigen::VectorXd grad_bias;
};

/// Mean cross-entropy plus (l2/2)*||W||^2, and its gradient.
SoftmaxLossGrad softmax_loss_grad(const SoftmaxModel& model, const Eigen::MatrixXd& x,
                                  std::span<const int> y, double l2);

SoftmaxModel softmax_fit(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes,
                         const SoftmaxConfig& cfg);

/// Row-wise class probabilities.
Eigen::MatrixXd predict_proba(const SoftmaxModel& model, const Eigen::MatrixXd& x);
std::vector<int> predict(const SoftmaxModel& model, const Eigen::MatrixXd& x);

// ---------------------------------------------------------------- SVM

enum class KernelType { linear, rbf };

struct KernelSpec {
  KernelType type = KernelType::rbf;
  /// RBF width; <= 0 at fit time means 1 / (d * mean feature variance).
  double gamma = 0.0;
};

double kernel_value(const KernelSpec& k, const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b);

/// Kernel matrix between the rows of a and the rows of b.
Eigen::MatrixXd kernel_matrix(const KernelSpec& k, const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b);

struct SvmConfig {
  KernelSpec kernel;
  double c_reg = 1.0;
  double tol = 1e-3;
  int max_passes = 1000;
  std::uint64_t seed = 0;
};

/// One binary machine: f(x) = sum_i alpha_i y_i K(sv_i, x) + bias.
struct BinaryMachine {
  Eigen::MatrixXd support_vectors;  // rows
  Eigen::VectorXd alpha;            // in [0, C_reg]
  Eigen::VectorXd labels;           // +-1
  double bias = 0.0;
  bool converged = false;
  int passes = 0;
};

struct SvmModel {
  KernelSpec kernel;  // gamma resolved
  double c_reg = 1.0;
  Eigen::Index input_dim = 0;
  std::vector<BinaryMachine> machines;  // machine c separates class c from the rest

  int n_classes() const { return static_cast<int>(machines.size()); }
};

/// Solution of a single binary SMO problem over all training points.
struct SmoSolution {
  Eigen::VectorXd alpha;
  double bias = 0.0;
  bool converged = false;
  int passes = 0;
};

/// Platt's SMO on a precomputed kernel matrix with labels in {-1, +1}.
SmoSolution smo_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& labels,
                      double c_reg, double tol, int max_passes, std::uint64_t seed);

SvmModel svm_fit(const Eigen::MatrixXd& x, std::span<const int> y, const SvmConfig& cfg);

/// n x C one-vs-rest decision values.
Eigen::MatrixXd decision_values(const SvmModel& model, const Eigen::MatrixXd& x);
std::vector<int> predict(const SvmModel& model, const Eigen::MatrixXd& x);

/// Index of the largest entry per row; ties go to the lowest index.
std::vector<int> argmax_rows(const Eigen::MatrixXd& scores);

// ---------------------------------------------------------------- evaluation

/// Rows = true class, columns = predicted class.
using ConfusionMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

struct Evaluation {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
};

Evaluation evaluate(std::span<const int> y_true, std::span<const int> y_pred, int n_classes);

std::string confusion_to_csv(const ConfusionMatrix& m, const std::vector<std::string>& names);
ConfusionMatrix confusion_from_csv(const std::string& csv, std::vector<std::string>* names = nullptr);

}  // namespace eacorr
