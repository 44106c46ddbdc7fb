#pragma once

// Paired audio/EEG corpus: manifest, per-record identities, a latent-factor
// generator for synthetic corpora, and segment-level stratified folds.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace eacorr {

enum class Modality { audio, eeg };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

struct DatasetManifest {
  std::vector<std::string> categories;
  std::size_t n_segments = 0;
  std::size_t n_subjects = 0;
  std::size_t n_reps = 0;
  std::size_t audio_dim = 0;
  std::size_t eeg_dim = 0;

  std::size_t n_categories() const { return categories.size(); }
  std::size_t segments_per_category() const { return n_segments / categories.size(); }
  /// Segments are grouped into contiguous equal blocks per category.
  std::size_t category_of(std::size_t segment) const {
    return segment / segments_per_category();
  }
  std::size_t eeg_records_per_segment() const { return n_subjects * n_reps; }
  std::size_t n_eeg_records() const { return n_segments * n_subjects * n_reps; }
  std::size_t dim(Modality m) const { return m == Modality::audio ? audio_dim : eeg_dim; }

  /// 8 singing categories, 160 segments, 9 subjects x 5 repetitions,
  /// 1152-d audio and 512-d EEG features.
  static DatasetManifest standard();

  bool operator==(const DatasetManifest&) const = default;
};

/// Validates and builds a manifest. Throws ConfigError when the segment
/// count is not a multiple of the category count or any count is zero.
DatasetManifest build_manifest(std::vector<std::string> categories,
                               std::size_t n_segments, std::size_t n_subjects,
                               std::size_t n_reps, std::size_t audio_dim,
                               std::size_t eeg_dim);

void validate(const DatasetManifest& manifest);

struct RecordId {
  std::size_t segment = 0;
  std::optional<std::size_t> subject;
  std::optional<std::size_t> repetition;
  std::size_t category = 0;
  Modality modality = Modality::audio;

  bool operator==(const RecordId&) const = default;
};

/// Records of one modality: row i of `vectors` belongs to `ids[i]`.
struct FeatureSet {
  Modality modality = Modality::audio;
  Eigen::MatrixXd vectors;
  std::vector<RecordId> ids;

  std::size_t size() const { return ids.size(); }
  std::vector<int> categories() const;
  std::vector<std::size_t> segments() const;
  /// Rows at the given positions, in order.
  FeatureSet subset(const std::vector<std::size_t>& rows) const;
};

/// Checks identity/manifest consistency and vector dimensions.
void validate(const FeatureSet& set, const DatasetManifest& manifest);

struct GenConfig {
  std::size_t latent_dim_shared = 4;
  std::size_t latent_dim_audio_only = 8;
  std::size_t latent_dim_eeg_only = 8;
  double category_scale = 1.0;          // spread of the per-category latent means
  double segment_spread = 2.0;          // within-category spread of private latents
  double shared_segment_spread = 0.5;   // within-category spread of shared latents
  double sigma_audio = 0.5;
  double sigma_eeg = 4.0;
  double sigma_subject = 1.0;
  std::uint64_t seed = 1;
};

void validate(const GenConfig& cfg);

struct PairedCorpus {
  DatasetManifest manifest;
  FeatureSet audio;  // one row per segment, ordered by segment
  FeatureSet eeg;    // ordered by (segment, subject, repetition)
};

/// Latent-factor corpus. Per segment z = [z_shared, z_audio, z_eeg] is drawn
/// around its category mean; audio = A [z_shared; z_audio] + noise and
/// EEG = B [z_shared; z_eeg] + subject offset + noise.
PairedCorpus generate_synthetic(const DatasetManifest& manifest, const GenConfig& cfg);

struct FoldPlan {
  std::size_t n_folds = 0;
  std::vector<std::size_t> assignment;  // segment -> fold

  std::vector<std::size_t> segments_in(std::size_t fold) const;
  bool operator==(const FoldPlan&) const = default;
};

/// Shuffles segments within each category and deals them round-robin.
FoldPlan stratified_folds(const DatasetManifest& manifest, std::size_t n_folds,
                          std::uint64_t seed);

/// (train, test) partition by the fold of each record's segment.
std::pair<FeatureSet, FeatureSet> split(const FeatureSet& records,
                                        const FoldPlan& plan, std::size_t test_fold);

}  // namespace eacorr
