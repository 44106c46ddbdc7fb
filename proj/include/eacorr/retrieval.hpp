#pragma once

// Cross-modal retrieval in a shared space: gallery ranking, MRR1 and MAP,
// and the component-count sweep over cross-validation folds.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace eacorr {

enum class Similarity { cosine, euclidean };

std::string to_string(Similarity s);
Similarity similarity_from_string(const std::string& s);

/// Gallery rows ordered best first; ties broken by ascending gallery id.
struct RankedList {
  std::size_t query_id = 0;
  std::vector<std::size_t> gallery_ids;
  std::vector<double> scores;
};

/// Cosine similarity, or negative Euclidean distance. Zero-norm vectors
/// score -1 under cosine.
double similarity(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                  const Eigen::Ref<const Eigen::RowVectorXd>& b, Similarity metric);

RankedList rank_gallery(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                        const Eigen::MatrixXd& gallery, Similarity metric = Similarity::cosine,
                        std::size_t query_id = 0);

/// One ranked list per query row.
std::vector<RankedList> rank_all(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& gallery,
                                 Similarity metric = Similarity::cosine);

/// Mean over queries of 1 / rank of the single relevant gallery id (ranks from 1).
double mrr1(std::span<const RankedList> lists, std::span<const std::size_t> relevant);

/// Average precision of one ranked list against a relevance set.
double average_precision(const RankedList& list, std::span<const std::size_t> relevant);

/// Mean average precision over queries.
double map_score(std::span<const RankedList> lists,
                 std::span<const std::vector<std::size_t>> relevant);

/// Shared-space coordinates of one test fold. Queries for MRR1 are the EEG
/// rows, its gallery the audio rows; MAP swaps the roles.
struct FoldProjections {
  Eigen::MatrixXd eeg;                   // n_eeg x K
  std::vector<std::size_t> eeg_segments;
  Eigen::MatrixXd audio;                 // n_audio x K
  std::vector<std::size_t> audio_segments;
};

struct RetrievalRow {
  Eigen::Index k = 0;
  std::vector<double> mrr1_per_fold;
  std::vector<double> map_per_fold;
  double mrr1_mean = 0.0;
  double mrr1_std = 0.0;
  double map_mean = 0.0;
  double map_std = 0.0;
};

struct RetrievalReport {
  std::string method;
  std::vector<RetrievalRow> rows;
};

/// MRR1 (EEG -> audio) and MAP (audio -> EEG) using the first k shared
/// components, per fold and averaged (std with divisor folds-1).
RetrievalReport sweep_components(std::string method, std::span<const FoldProjections> folds,
                                 std::span<const Eigen::Index> ks,
                                 Similarity metric = Similarity::cosine);

/// `k,mrr1_mean,mrr1_std,map_mean,map_std` with round-trip precision.
std::string report_to_csv(const RetrievalReport& report);
RetrievalReport report_from_csv(const std::string& csv, std::string method = {});

}  // namespace eacorr
