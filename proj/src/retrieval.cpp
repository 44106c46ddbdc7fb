#include "eacorr/retrieval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "eacorr/error.hpp"

namespace eacorr {

std::string to_string(Similarity s) { return s == Similarity::cosine ? "cosine" : "euclidean"; }

Similarity similarity_from_string(const std::string& s) {
  if (s == "cosine") return Similarity::cosine;
  if (s == "euclidean") return Similarity::euclidean;
  throw ConfigError("unknown similarity '" + s + "'");
}

double similarity(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                  const Eigen::Ref<const Eigen::RowVectorXd>& b, Similarity metric) {
  if (metric == Similarity::euclidean) return -(a - b).norm();
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return -1.0;
  return a.dot(b) / (na * nb);
}

namespace {

RankedList order(std::size_t query_id, std::vector<double> scores) {
  RankedList out;
  out.query_id = query_id;
  out.gallery_ids.resize(scores.size());
  std::iota(out.gallery_ids.begin(), out.gallery_ids.end(), std::size_t{0});
  std::stable_sort(out.gallery_ids.begin(), out.gallery_ids.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  out.scores.reserve(scores.size());
  for (std::size_t id : out.gallery_ids) out.scores.push_back(scores[id]);
  return out;
}

std::size_t rank_of(const RankedList& list, std::size_t id) {
  const auto it = std::find(list.gallery_ids.begin(), list.gallery_ids.end(), id);
  if (it == list.gallery_ids.end()) {
    throw DataError("relevant id " + std::to_string(id) + " missing from gallery of query " +
                    std::to_string(list.query_id));
  }
  return static_cast<std::size_t>(it - list.gallery_ids.begin()) + 1;
}

Eigen::MatrixXd unit_rows(const Eigen::MatrixXd& m, std::vector<bool>& zero) {
  Eigen::MatrixXd out = m;
  zero.assign(static_cast<std::size_t>(m.rows()), false);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n == 0.0) {
      zero[static_cast<std::size_t>(i)] = true;
    } else {
      out.row(i) /= n;
    }
  }
  return out;
}

}  // namespace

RankedList rank_gallery(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                        const Eigen::MatrixXd& gallery, Similarity metric, std::size_t query_id) {
  if (gallery.rows() == 0) throw DataError("rank_gallery: empty gallery");
  if (gallery.cols() != query.size()) throw DataError("rank_gallery: dimension mismatch");
  std::vector<double> scores(static_cast<std::size_t>(gallery.rows()));
  for (Eigen::Index j = 0; j < gallery.rows(); ++j) {
    scores[static_cast<std::size_t>(j)] = similarity(query, gallery.row(j), metric);
  }
  return order(query_id, std::move(scores));
}

std::vector<RankedList> rank_all(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& gallery,
                                 Similarity metric) {
  if (gallery.rows() == 0) throw DataError("rank_all: empty gallery");
  if (gallery.cols() != queries.cols()) throw DataError("rank_all: dimension mismatch");
  std::vector<RankedList> out;
  out.reserve(static_cast<std::size_t>(queries.rows()));
  if (metric == Similarity::euclidean) {
    for (Eigen::Index i = 0; i < queries.rows(); ++i) {
      out.push_back(rank_gallery(queries.row(i), gallery, metric, static_cast<std::size_t>(i)));
    }
    return out;
  }
  std::vector<bool> zq, zg;
  const Eigen::MatrixXd s = unit_rows(queries, zq) * unit_rows(gallery, zg).transpose();
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    std::vector<double> scores(static_cast<std::size_t>(gallery.rows()));
    for (Eigen::Index j = 0; j < gallery.rows(); ++j) {
      const bool degenerate = zq[static_cast<std::size_t>(i)] || zg[static_cast<std::size_t>(j)];
      scores[static_cast<std::size_t>(j)] = degenerate ? -1.0 : s(i, j);
    }
    out.push_back(order(static_cast<std::size_t>(i), std::move(scores)));
  }
  return out;
}

double mrr1(std::span<const RankedList> lists, std::span<const std::size_t> relevant) {
  if (lists.size() != relevant.size()) throw DataError("mrr1: one relevant id per query required");
  if (lists.empty()) throw DataError("mrr1: no queries");
  double sum = 0.0;
  for (std::size_t q = 0; q < lists.size(); ++q) {
    sum += 1.0 / static_cast<double>(rank_of(lists[q], relevant[q]));
  }
  return sum / static_cast<double>(lists.size());
}

double average_precision(const RankedList& list, std::span<const std::size_t> relevant) {
  if (relevant.empty()) throw DataError("average_precision: empty relevance set");
  std::vector<std::size_t> ranks;
  ranks.reserve(relevant.size());
  for (std::size_t id : relevant) ranks.push_back(rank_of(list, id));
  std::sort(ranks.begin(), ranks.end());
  if (std::adjacent_find(ranks.begin(), ranks.end()) != ranks.end()) {
    throw DataError("average_precision: duplicate relevant id");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    sum += static_cast<double>(i + 1) / static_cast<double>(ranks[i]);
  }
  return sum / static_cast<double>(ranks.size());
}

double map_score(std::span<const RankedList> lists,
                 std::span<const std::vector<std::size_t>> relevant) {
  if (lists.size() != relevant.size()) throw DataError("map_score: one relevance set per query required");
  if (lists.empty()) throw DataError("map_score: no queries");
  double sum = 0.0;
  for (std::size_t q = 0; q < lists.size(); ++q) sum += average_precision(lists[q], relevant[q]);
  return sum / static_cast<double>(lists.size());
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace

RetrievalReport sweep_components(std::string method, std::span<const FoldProjections> folds,
                                 std::span<const Eigen::Index> ks, Similarity metric) {
  if (folds.empty()) throw DataError("sweep_components: no folds");
  RetrievalReport report;
  report.method = std::move(method);
  for (Eigen::Index k : ks) {
    RetrievalRow row;
    row.k = k;
    for (const auto& f : folds) {
      if (k < 1 || k > f.eeg.cols() || k > f.audio.cols()) {
        throw ConfigError("sweep_components: k=" + std::to_string(k) +
                          " exceeds the shared-space dimension " + std::to_string(f.eeg.cols()));
      }
      if (f.eeg_segments.size() != static_cast<std::size_t>(f.eeg.rows()) ||
          f.audio_segments.size() != static_cast<std::size_t>(f.audio.rows())) {
        throw DataError("sweep_components: identity/row count mismatch");
      }
      const Eigen::MatrixXd q = f.eeg.leftCols(k);
      const Eigen::MatrixXd g = f.audio.leftCols(k);

      std::vector<std::size_t> relevant_audio;
      relevant_audio.reserve(f.eeg_segments.size());
      for (std::size_t seg : f.eeg_segments) {
        const auto it = std::find(f.audio_segments.begin(), f.audio_segments.end(), seg);
        if (it == f.audio_segments.end()) throw DataError("sweep_components: EEG segment without audio");
        relevant_audio.push_back(static_cast<std::size_t>(it - f.audio_segments.begin()));
      }
      row.mrr1_per_fold.push_back(mrr1(rank_all(q, g, metric), relevant_audio));

      std::vector<std::vector<std::size_t>> relevant_eeg(f.audio_segments.size());
      for (std::size_t a = 0; a < f.audio_segments.size(); ++a) {
        for (std::size_t e = 0; e < f.eeg_segments.size(); ++e) {
          if (f.eeg_segments[e] == f.audio_segments[a]) relevant_eeg[a].push_back(e);
        }
      }
      row.map_per_fold.push_back(map_score(rank_all(g, q, metric), relevant_eeg));
    }
    std::tie(row.mrr1_mean, row.mrr1_std) = mean_std(row.mrr1_per_fold);
    std::tie(row.map_mean, row.map_std) = mean_std(row.map_per_fold);
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

std::string exact(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError(FormatErrc::parse, "cannot parse number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string report_to_csv(const RetrievalReport& report) {
  std::string out = "k,mrr1_mean,mrr1_std,map_mean,map_std\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.k) + ',' + exact(r.mrr1_mean) + ',' + exact(r.mrr1_std) + ',' +
           exact(r.map_mean) + ',' + exact(r.map_std) + '\n';
  }
  return out;
}

RetrievalReport report_from_csv(const std::string& csv, std::string method) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "k,mrr1_mean,mrr1_std,map_mean,map_std") {
    throw FormatError(FormatErrc::parse, "retrieval csv: unexpected header");
  }
  RetrievalReport report;
  report.method = std::move(method);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != 5) throw FormatError(FormatErrc::parse, "retrieval csv: bad row '" + line + "'");
    RetrievalRow r;
    r.k = static_cast<Eigen::Index>(parse_double(f[0]));
    r.mrr1_mean = parse_double(f[1]);
    r.mrr1_std = parse_double(f[2]);
    r.map_mean = parse_double(f[3]);
    r.map_std = parse_double(f[4]);
    report.rows.push_back(std::move(r));
  }
  return report;
}

}  // namespace eacorr
