#include <doctest.h>

#include <set>

#include "eacorr/corr.hpp"
#include "eacorr/error.hpp"
#include "eacorr/random.hpp"
#include "oracles.hpp"

using namespace eacorr;

namespace {

Eigen::MatrixXd gaussian(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

// Paired data sharing `shared` latent directions.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> paired(Index n, Index dx, Index dy, Index shared,
                                                   std::uint64_t seed) {
  const auto z = gaussian(n, shared, seed);
  Eigen::MatrixXd x = z * gaussian(shared, dx, seed + 1) + gaussian(n, dx, seed + 2);
  Eigen::MatrixXd y = z * gaussian(shared, dy, seed + 3) + gaussian(n, dy, seed + 4);
  return {x, y};
}

double column_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  return ca.dot(cb) / (ca.norm() * cb.norm());
}

}  // namespace

TEST_CASE("cca correlations match the generalized eigenproblem oracle") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto [x, y] = paired(120, 6, 5, 2, seed * 10);
    for (double r : {0.0, 0.1}) {
      const auto model = cca_fit(x, y, 5, r, r);
      const auto ref = oracle::cca_correlations(x, y, 5, r, r);
      for (Index i = 0; i < 5; ++i) {
        CHECK(model.correlations(i) == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("cca of identical and rotated views") {
  const auto x = gaussian(50, 4, 1);
  const auto same = cca_fit(x, x, 4, 0.0, 0.0);
  CHECK((same.correlations.array() - 1.0).abs().maxCoeff() < 1e-8);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(4, 4, 2)).householderQ();
  const auto rotated = cca_fit(x, Eigen::MatrixXd(x * q), 4, 0.0, 0.0);
  CHECK((rotated.correlations.array() - 1.0).abs().maxCoeff() < 1e-8);
}

TEST_CASE("cca of independent views is small") {
  const auto x = gaussian(10000, 5, 3);
  const auto y = gaussian(10000, 5, 4);
  const auto model = cca_fit(x, y, 5, 0.0, 0.0);
  CHECK(model.correlations.maxCoeff() < 0.2);
}

TEST_CASE("cca projections are whitened and correlated as reported") {
  const auto [x, y] = paired(300, 7, 6, 3, 5);
  const auto model = cca_fit(x, y, 6, 0.0, 0.0);
  const Eigen::MatrixXd px = cca_project(model, x, Side::x);
  const Eigen::MatrixXd py = cca_project(model, y, Side::y);
  CHECK((sample_covariance(px) - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((sample_covariance(py) - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-6);
  for (Index i = 0; i < 6; ++i) {
    CHECK(column_corr(px.col(i), py.col(i)) == doctest::Approx(model.correlations(i)).epsilon(1e-6));
  }
  for (Index i = 1; i < 6; ++i) CHECK(model.correlations(i - 1) >= model.correlations(i));
  const Eigen::MatrixXd mean = model.mean_x;
  CHECK(cca_project(model, mean, Side::x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(cca_project(model, x, Side::x, 2).cols() == 2);
  CHECK_THROWS_AS(cca_project(model, y, Side::x), DataError);
  CHECK_THROWS_AS(cca_project(model, x, Side::x, 7), ConfigError);
}

TEST_CASE("cca is invariant under affine maps") {
  const auto [x, y] = paired(200, 5, 4, 2, 6);
  const auto base = cca_fit(x, y, 4, 0.0, 0.0);
  const Eigen::MatrixXd a = gaussian(5, 5, 7) + 3.0 * Eigen::MatrixXd::Identity(5, 5);
  Eigen::MatrixXd xt = x * a;
  xt.rowwise() += Eigen::RowVectorXd::Constant(5, 4.0);
  const auto moved = cca_fit(xt, y, 4, 0.0, 0.0);
  CHECK((base.correlations - moved.correlations).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("cca preconditions") {
  const auto x = gaussian(10, 3, 8);
  CHECK_THROWS_AS(cca_fit(x, gaussian(9, 3, 9), 2, 0.0, 0.0), DataError);
  CHECK_THROWS_AS(cca_fit(x, gaussian(10, 3, 9), 4, 0.0, 0.0), ConfigError);
  CHECK_THROWS_AS(cca_fit(Eigen::MatrixXd(gaussian(2, 3, 1)), gaussian(2, 3, 2), 1, 0.0, 0.0), ConfigError);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(10, 3);
  CHECK_THROWS_AS(cca_fit(zero, x, 2, 0.0, 0.0), NumericalError);
}

TEST_CASE("dcca gradient matches central differences") {
  const double h = 1e-5;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto h1 = gaussian(20, 4, seed);
    const Eigen::MatrixXd h2 = 0.7 * h1 * gaussian(4, 4, seed + 50) + gaussian(20, 4, seed + 99);
    const Index k = 1 + static_cast<Index>(seed % 3);
    const double r = seed % 2 ? 1e-3 : 0.0;
    const auto lg = dcca_loss_grad(h1, h2, k, r);
    Eigen::MatrixXd fd1(20, 4), fd2(20, 4);
    for (Index i = 0; i < 20; ++i) {
      for (Index j = 0; j < 4; ++j) {
        Eigen::MatrixXd p = h1, m = h1;
        p(i, j) += h;
        m(i, j) -= h;
        fd1(i, j) = (dcca_loss_grad(p, h2, k, r).loss - dcca_loss_grad(m, h2, k, r).loss) / (2 * h);
        p = h2;
        m = h2;
        p(i, j) += h;
        m(i, j) -= h;
        fd2(i, j) = (dcca_loss_grad(h1, p, k, r).loss - dcca_loss_grad(h1, m, k, r).loss) / (2 * h);
      }
    }
    CHECK((lg.grad_h1 - fd1).norm() / fd1.norm() < 1e-4);
    CHECK((lg.grad_h2 - fd2).norm() / fd2.norm() < 1e-4);
  }
}

TEST_CASE("dcca loss properties") {
  const auto h = gaussian(30, 5, 11);
  CHECK(dcca_loss_grad(h, h, 3, 0.0).loss == doctest::Approx(-3.0).epsilon(1e-8));
  const auto other = gaussian(30, 5, 12);
  const auto a = dcca_loss_grad(h, other, 4, 1e-4);
  const auto b = dcca_loss_grad(other, h, 4, 1e-4);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
  CHECK((a.grad_h1 - b.grad_h2).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(a.loss <= 0.0);
  CHECK(a.loss >= -4.0);
  CHECK_THROWS_AS(dcca_loss_grad(h, other, 6, 0.0), ConfigError);
  CHECK_THROWS_AS(dcca_loss_grad(gaussian(2, 5, 1), gaussian(2, 5, 2), 1, 0.0), ConfigError);
  CHECK_THROWS_AS(dcca_loss_grad(Eigen::MatrixXd::Zero(30, 5), other, 2, 0.0), NumericalError);
}

TEST_CASE("encoder forward and backward") {
  EncoderStack enc({3, 5, 2}, 4);
  CHECK(enc.sizes() == std::vector<Index>{3, 5, 2});
  const auto x = gaussian(7, 3, 13);
  const auto trace = enc.forward_trace(x);
  REQUIRE(trace.size() == 3);
  CHECK((trace[1].array().abs() < 1.0).all());
  CHECK((trace.back() - enc.forward(x)).cwiseAbs().maxCoeff() == 0.0);

  // Backward against finite differences of sum(out .* w).
  const auto w = gaussian(7, 2, 14);
  const auto grads = enc.backward(trace, w);
  const double h = 1e-6;
  for (std::size_t l = 0; l < 2; ++l) {
    for (Index i = 0; i < enc.layers()[l].weight.rows(); ++i) {
      for (Index j = 0; j < enc.layers()[l].weight.cols(); ++j) {
        EncoderStack p = enc, m = enc;
        p.layers()[l].weight(i, j) += h;
        m.layers()[l].weight(i, j) -= h;
        const double fd = ((p.forward(x).array() * w.array()).sum() - (m.forward(x).array() * w.array()).sum()) / (2 * h);
        CHECK(grads[l].weight(i, j) == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
  CHECK_THROWS_AS(enc.forward(gaussian(2, 4, 1)), DataError);
}

TEST_CASE("zero hidden weights reduce the encoder to an affine map") {
  std::vector<DenseLayer> layers(2);
  layers[0].weight = Eigen::MatrixXd::Zero(3, 4);
  layers[0].bias = Eigen::VectorXd::Zero(4);
  layers[1].weight = gaussian(4, 2, 15);
  layers[1].bias = Eigen::VectorXd::Constant(2, 0.25);
  const EncoderStack enc(layers);
  const auto out = enc.forward(gaussian(5, 3, 16));
  for (Index i = 0; i < 5; ++i) CHECK((out.row(i).array() - 0.25).abs().maxCoeff() < 1e-15);
  std::vector<DenseLayer> broken = layers;
  broken[1].weight = Eigen::MatrixXd::Zero(3, 2);
  CHECK_THROWS_AS((void)EncoderStack(broken), DataError);
}

TEST_CASE("category re-pairing") {
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) labels.push_back(i / 20);
  const auto ident = PairIndex::identity(60);
  const auto same = expand_category_pairs(ident, labels, 0.0, 1);
  CHECK(same.x == ident.x);
  CHECK(same.y == ident.y);
  const auto all = expand_category_pairs(ident, labels, 1.0, 2);
  REQUIRE(all.size() == 60);
  int moved = 0;
  for (std::size_t i = 0; i < 60; ++i) {
    CHECK(labels[static_cast<std::size_t>(all.y[i])] == labels[i]);
    CHECK(all.x[i] == ident.x[i]);
    moved += all.y[i] != ident.y[i];
  }
  CHECK(moved > 40);
  const auto half = expand_category_pairs(ident, labels, 0.5, 3);
  int kept = 0;
  for (std::size_t i = 0; i < 60; ++i) kept += half.y[i] == ident.y[i];
  CHECK(kept > 20);
  CHECK(kept < 60);

  std::vector<int> single{0, 1, 1, 1};
  const auto lone = expand_category_pairs(PairIndex::identity(4), single, 1.0, 4);
  CHECK(lone.y[0] == 0);
  CHECK_THROWS_AS(expand_category_pairs(ident, labels, 1.5, 1), ConfigError);

  const auto x = gaussian(60, 2, 17);
  const auto y = gaussian(60, 3, 18);
  const auto [xe, ye] = expand_category_pairs(x, y, labels, 1.0, 5);
  CHECK((xe - x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ye.rows() == 60);
}

TEST_CASE("dcca_fit is deterministic and improves the objective") {
  const auto [x, y] = paired(200, 6, 5, 2, 19);
  DccaConfig cfg;
  cfg.hidden = {8};
  cfg.output_dim = 3;
  cfg.epochs = 30;
  cfg.learning_rate = 1e-2;
  cfg.seed = 3;
  const auto a = dcca_fit(x, y, cfg, {});
  const auto b = dcca_fit(x, y, cfg, {});
  REQUIRE(a.loss_trace.size() == 31);
  CHECK(a.loss_trace == b.loss_trace);
  for (std::size_t l = 0; l < a.encoder_x.layers().size(); ++l) {
    CHECK((a.encoder_x.layers()[l].weight.array() == b.encoder_x.layers()[l].weight.array()).all());
  }
  CHECK(a.loss_trace.back() < a.loss_trace.front());
  CHECK(a.project(x, Side::x).cols() == 3);
  CHECK(a.project(y, Side::y, 2).cols() == 2);

  cfg.category_pair_prob = 0.5;
  CHECK_THROWS_AS(dcca_fit(x, y, cfg, {}), ConfigError);
}

TEST_CASE("dcca loss trace is monotone at a small learning rate") {
  const auto [x, y] = paired(60, 4, 4, 2, 20);
  DccaConfig cfg;
  cfg.hidden = {6};
  cfg.output_dim = 2;
  cfg.epochs = 40;
  cfg.learning_rate = 1e-4;
  cfg.momentum = 0.0;
  cfg.seed = 4;
  const auto m = dcca_fit(x, y, cfg, {});
  for (std::size_t i = 1; i < m.loss_trace.size(); ++i) {
    CHECK(m.loss_trace[i] <= m.loss_trace[i - 1] + 1e-6);
  }
}

TEST_CASE("dcca on linear ground truth approaches classical cca") {
  const auto x = gaussian(400, 5, 21);
  const Eigen::MatrixXd y = x * gaussian(5, 5, 22) + 0.05 * gaussian(400, 5, 23);
  const auto cca = cca_fit(x, y, 3, 1e-4, 1e-4);
  DccaConfig cfg;
  cfg.hidden = {16};
  cfg.output_dim = 5;
  cfg.epochs = 200;
  cfg.learning_rate = 1e-2;
  cfg.seed = 5;
  const auto m = dcca_fit(x, y, cfg, {});
  CHECK(m.head.correlations.head(3).sum() >= cca.correlations.sum() - 0.05);
}

TEST_CASE("DccaConfig validation") {
  DccaConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.category_pair_prob = -0.1;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = DccaConfig{};
  cfg.output_dim = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = DccaConfig{};
  cfg.ridge = -1.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}
