#include <doctest.h>

#include "eacorr/error.hpp"
#include "eacorr/numlin.hpp"
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

Eigen::MatrixXd spd(Index d, std::uint64_t seed) {
  const Eigen::MatrixXd a = gaussian(d + 5, d, seed);
  return a.transpose() * a / static_cast<double>(d + 4);
}

}  // namespace

TEST_CASE("sample covariance matches the direct double loop") {
  const auto x = gaussian(40, 6, 1);
  const auto y = gaussian(40, 3, 2);
  CHECK((sample_covariance(x) - oracle::covariance(x, x)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((cross_covariance(x, y) - oracle::covariance(x, y)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(centered(x).colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sym_eig agrees with Jacobi and reconstructs") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = spd(8, seed);
    const auto e = sym_eig(s);
    const auto ref = oracle::jacobi_eigenvalues(s);
    for (Index i = 0; i < 8; ++i) CHECK(e.values(i) == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-10));
    for (Index i = 1; i < 8; ++i) CHECK(e.values(i - 1) >= e.values(i));
    const Eigen::MatrixXd back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    CHECK((back - s).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("svd reconstructs with canonical signs") {
  const auto a = gaussian(9, 4, 3);
  const auto f = svd(a);
  const Eigen::MatrixXd back = f.u * f.s.asDiagonal() * f.v.transpose();
  CHECK((back - a).cwiseAbs().maxCoeff() < 1e-12);
  for (Index j = 0; j < f.u.cols(); ++j) {
    Index arg;
    f.u.col(j).cwiseAbs().maxCoeff(&arg);
    CHECK(f.u(arg, j) > 0.0);
  }
  const auto ref = oracle::jacobi_eigenvalues(a.transpose() * a);
  for (Index i = 0; i < 4; ++i) {
    CHECK(f.s(i) == doctest::Approx(std::sqrt(ref[static_cast<std::size_t>(i)])).epsilon(1e-10));
  }
}

TEST_CASE("inv_sqrt_sym whitens") {
  const auto s = spd(6, 4);
  for (double eps : {0.0, 1e-4, 0.5}) {
    const Eigen::MatrixXd r = inv_sqrt_sym(s, eps);
    const Eigen::MatrixXd reg = s + eps * Eigen::MatrixXd::Identity(6, 6);
    CHECK((r * reg * r - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3) * 4.0;
  CHECK((inv_sqrt_sym(id, 0.0) - 0.5 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("inv_sqrt_sym error cases") {
  Eigen::MatrixXd asym = spd(4, 5);
  asym(0, 1) += 1.0;
  CHECK_THROWS_AS(inv_sqrt_sym(asym, 0.0), DataError);
  CHECK_THROWS_AS(inv_sqrt_sym(spd(4, 5), -1.0), ConfigError);
  Eigen::MatrixXd indefinite = Eigen::MatrixXd::Identity(3, 3);
  indefinite(2, 2) = -1.0;
  CHECK_THROWS_AS(inv_sqrt_sym(indefinite, 0.0), NumericalError);
  CHECK_THROWS_AS(inv_sqrt_sym(Eigen::MatrixXd::Zero(3, 3), 0.0), NumericalError);
  // Rank-deficient but PSD: floored, finite.
  const Eigen::MatrixXd v = gaussian(5, 2, 6);
  const Eigen::MatrixXd low = v * v.transpose();
  CHECK(inv_sqrt_sym(low, 0.0).allFinite());
}

TEST_CASE("pca variances are the covariance eigenvalues") {
  const Eigen::MatrixXd x = gaussian(60, 7, 7) * spd(7, 8);
  const auto model = pca_fit(x, 4);
  const auto ref = oracle::jacobi_eigenvalues(oracle::covariance(x, x));
  for (Index i = 0; i < 4; ++i) {
    CHECK(model.variances(i) == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-10));
  }
  CHECK((model.components.transpose() * model.components - Eigen::MatrixXd::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  const Eigen::MatrixXd z = pca_transform(model, x);
  const Eigen::MatrixXd cz = sample_covariance(z);
  for (Index i = 0; i < 4; ++i) {
    CHECK(cz(i, i) == doctest::Approx(model.variances(i)).epsilon(1e-10));
    for (Index j = 0; j < 4; ++j) {
      if (i != j) CHECK(std::abs(cz(i, j)) < 1e-9);
    }
  }
}

TEST_CASE("pca with n-1 < d uses the Gram route and agrees with the covariance route") {
  const auto x = gaussian(12, 40, 9);
  const auto wide = pca_fit(x, 5);
  // Same data padded with duplicate rows reaches the covariance route.
  Eigen::MatrixXd tall(48, 40);
  tall << x, x, x, x;
  const auto tall_model = pca_fit(tall, 5);
  // Four copies of the rows: covariance scales by 4 * 11 / 47.
  const auto ref = oracle::jacobi_eigenvalues(oracle::covariance(x, x));
  for (Index i = 0; i < 5; ++i) {
    CHECK(wide.variances(i) == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-9));
    CHECK(std::abs(wide.components.col(i).dot(tall_model.components.col(i))) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(tall_model.variances(i) == doctest::Approx(ref[static_cast<std::size_t>(i)] * 11.0 * 4.0 / 47.0).epsilon(1e-9));
  }
}

TEST_CASE("pca full rank reconstruction is exact") {
  const auto x = gaussian(30, 5, 10);
  const auto model = pca_fit(x, 5);
  const Eigen::MatrixXd back = pca_reconstruct(model, pca_transform(model, x));
  CHECK((back - x).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd mean_row = model.mean;
  CHECK(pca_transform(model, mean_row).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pca preconditions") {
  const auto x = gaussian(10, 4, 11);
  CHECK_THROWS_AS(pca_fit(x, 0), ConfigError);
  CHECK_THROWS_AS(pca_fit(x, 5), ConfigError);
  Eigen::MatrixXd bad = x;
  bad(2, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(pca_fit(bad, 2), DataError);
  const auto model = pca_fit(x, 2);
  CHECK_THROWS_AS(pca_transform(model, gaussian(3, 5, 1)), DataError);
}

TEST_CASE("numlin templates work in single precision") {
  const Eigen::MatrixXf x = gaussian(50, 4, 12).cast<float>();
  const auto model = pca_fit(x, 2);
  CHECK(model.variances(0) >= model.variances(1));
  const Eigen::MatrixXf r = inv_sqrt_sym(Eigen::MatrixXf(sample_covariance(x)), 1e-3f);
  CHECK(r.allFinite());
}
