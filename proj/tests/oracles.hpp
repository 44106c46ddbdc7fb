#pragma once

// Independent reference implementations used by the tests. Nothing here
// calls into the library's solvers; Eigen is used only as storage.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;

/// Cyclic Jacobi rotations on a symmetric matrix; eigenvalues descending.
inline std::vector<double> jacobi_eigenvalues(Mat a, double tol = 1e-15, int max_sweeps = 100) {
  const long n = a.rows();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0, total = 0.0;
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < n; ++j) {
        total += a(i, j) * a(i, j);
        if (i != j) off += a(i, j) * a(i, j);
      }
    }
    if (off <= tol * tol * total) break;
    for (long p = 0; p < n - 1; ++p) {
      for (long q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (long k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (long k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

/// Lower Cholesky factor by the textbook triple loop.
inline Mat cholesky(const Mat& b) {
  const long n = b.rows();
  Mat l = Mat::Zero(n, n);
  for (long j = 0; j < n; ++j) {
    double d = b(j, j);
    for (long k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= 0.0) throw std::runtime_error("oracle::cholesky: not positive definite");
    l(j, j) = std::sqrt(d);
    for (long i = j + 1; i < n; ++i) {
      double s = b(i, j);
      for (long k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

/// Solves L X = B for lower-triangular L by forward substitution.
inline Mat forward_solve(const Mat& l, const Mat& b) {
  Mat x = b;
  for (long c = 0; c < b.cols(); ++c) {
    for (long i = 0; i < l.rows(); ++i) {
      double s = x(i, c);
      for (long k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  }
  return x;
}

inline Mat covariance(const Mat& a, const Mat& b) {
  const long n = a.rows();
  Mat out = Mat::Zero(a.cols(), b.cols());
  std::vector<double> ma(static_cast<std::size_t>(a.cols()), 0.0), mb(static_cast<std::size_t>(b.cols()), 0.0);
  for (long j = 0; j < a.cols(); ++j) {
    for (long i = 0; i < n; ++i) ma[static_cast<std::size_t>(j)] += a(i, j) / static_cast<double>(n);
  }
  for (long j = 0; j < b.cols(); ++j) {
    for (long i = 0; i < n; ++i) mb[static_cast<std::size_t>(j)] += b(i, j) / static_cast<double>(n);
  }
  for (long p = 0; p < a.cols(); ++p) {
    for (long q = 0; q < b.cols(); ++q) {
      double s = 0.0;
      for (long i = 0; i < n; ++i) {
        s += (a(i, p) - ma[static_cast<std::size_t>(p)]) * (b(i, q) - mb[static_cast<std::size_t>(q)]);
      }
      out(p, q) = s / static_cast<double>(n - 1);
    }
  }
  return out;
}

/// Canonical correlations as the top generalized eigenvalues of
/// [0 Cxy; Cyx 0] v = rho [Cxx+rx I 0; 0 Cyy+ry I] v, reduced to a standard
/// symmetric problem with the Cholesky factor of the right-hand block.
inline std::vector<double> cca_correlations(const Mat& x, const Mat& y, long k, double rx, double ry) {
  const long dx = x.cols(), dy = y.cols(), d = dx + dy;
  Mat a = Mat::Zero(d, d), b = Mat::Zero(d, d);
  const Mat cxy = covariance(x, y);
  a.block(0, dx, dx, dy) = cxy;
  a.block(dx, 0, dy, dx) = cxy.transpose();
  b.block(0, 0, dx, dx) = covariance(x, x) + rx * Mat::Identity(dx, dx);
  b.block(dx, dx, dy, dy) = covariance(y, y) + ry * Mat::Identity(dy, dy);
  const Mat l = cholesky(b);
  const Mat t = forward_solve(l, a);                          // L^-1 A
  const Mat c = forward_solve(l, Mat(t.transpose()));         // L^-1 (L^-1 A)^T = L^-1 A L^-T
  const Mat sym = (c + c.transpose()) / 2.0;
  auto ev = jacobi_eigenvalues(sym);
  ev.resize(static_cast<std::size_t>(k));
  return ev;
}

/// Rank (from 1) of gallery item j by counting better-scored items, with
/// ties going to the lower id. No sorting involved.
inline std::size_t rank_by_count(const std::vector<double>& scores, std::size_t j) {
  std::size_t better = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > scores[j] || (scores[i] == scores[j] && i < j)) ++better;
  }
  return better + 1;
}

/// MRR1 over queries (rows of `scores`), one relevant gallery column each.
inline double mrr1(const Mat& scores, const std::vector<std::size_t>& relevant) {
  double sum = 0.0;
  for (long q = 0; q < scores.rows(); ++q) {
    std::vector<double> row(static_cast<std::size_t>(scores.cols()));
    for (long j = 0; j < scores.cols(); ++j) row[static_cast<std::size_t>(j)] = scores(q, j);
    sum += 1.0 / static_cast<double>(rank_by_count(row, relevant[static_cast<std::size_t>(q)]));
  }
  return sum / static_cast<double>(scores.rows());
}

/// Average precision: mean over relevant items r of
/// |{relevant ranked at or above r}| / rank(r).
inline double average_precision(const std::vector<double>& scores, const std::vector<std::size_t>& relevant) {
  std::vector<std::pair<std::size_t, double>> terms;
  for (std::size_t r : relevant) {
    const std::size_t rr = rank_by_count(scores, r);
    std::size_t hits = 0;
    for (std::size_t o : relevant) {
      if (rank_by_count(scores, o) <= rr) ++hits;
    }
    terms.emplace_back(rr, static_cast<double>(hits) / static_cast<double>(rr));
  }
  // Summed best rank first so the rounding is comparable bit for bit.
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (const auto& t : terms) sum += t.second;
  return sum / static_cast<double>(relevant.size());
}

inline double map_score(const Mat& scores, const std::vector<std::vector<std::size_t>>& relevant) {
  double sum = 0.0;
  for (long q = 0; q < scores.rows(); ++q) {
    std::vector<double> row(static_cast<std::size_t>(scores.cols()));
    for (long j = 0; j < scores.cols(); ++j) row[static_cast<std::size_t>(j)] = scores(q, j);
    sum += average_precision(row, relevant[static_cast<std::size_t>(q)]);
  }
  return sum / static_cast<double>(scores.rows());
}

/// Chance-level MRR1 and MAP for one retrieval fold, estimated by ranking
/// with i.i.d. uniform scores. Gallery sizes follow the retrieval protocol:
/// `per_segment` EEG records per audio segment, `n_segments` audios.
struct ChanceLevels {
  double mrr1 = 0.0;
  double map = 0.0;
};

inline ChanceLevels monte_carlo_chance(std::size_t n_segments, std::size_t per_segment, int trials,
                                       unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double mrr = 0.0, ap = 0.0;
  for (int t = 0; t < trials; ++t) {
    // EEG query against the audio gallery.
    std::vector<double> s(n_segments);
    for (auto& v : s) v = u(gen);
    mrr += 1.0 / static_cast<double>(rank_by_count(s, 0));
    // Audio query against the EEG gallery; the first per_segment are relevant.
    std::vector<double> g(n_segments * per_segment);
    for (auto& v : g) v = u(gen);
    std::vector<double> rel(g.begin(), g.begin() + static_cast<long>(per_segment));
    std::sort(rel.begin(), rel.end(), std::greater<>());
    double sum = 0.0;
    for (std::size_t i = 0; i < rel.size(); ++i) {
      std::size_t rank = 1;
      for (double v : g) rank += v > rel[i] ? 1 : 0;
      sum += static_cast<double>(i + 1) / static_cast<double>(rank);
    }
    ap += sum / static_cast<double>(per_segment);
  }
  return {mrr / trials, ap / trials};
}

/// True when a and b are at most `n` representable doubles apart.
inline bool within_ulps(double a, double b, int n) {
  for (int i = 0; i < n && a != b; ++i) a = std::nextafter(a, b);
  return a == b;
}

inline double harmonic(int n) {
  double h = 0.0;
  for (int i = 1; i <= n; ++i) h += 1.0 / i;
  return h;
}

}  // namespace oracle
