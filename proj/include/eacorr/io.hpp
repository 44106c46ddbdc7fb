#pragma once

// File formats.
//
// Feature file (little-endian):
//   "FMTX" | u32 version = 1 | u64 rows | u64 cols | rows*cols f64, row-major
// Total size is exactly 24 + 8*rows*cols bytes.
//
// Matrix container (models):
//   "FMTC" | u32 version = 1 | u32 count |
//   count x (u32 name length | name bytes | u64 absolute offset)
// followed by one embedded feature-file block per entry at its offset.
//
// Identity sidecar: CSV
//   record_id,segment_id,subject_id,repetition_id,category_id,modality
// with empty subject/repetition fields for audio records.

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eacorr/dataset.hpp"

namespace eacorr {

inline constexpr std::uint32_t kFormatVersion = 1;

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Reads a feature file; `expected_cols` (when given) is checked against the header.
Eigen::MatrixXd read_matrix(const std::filesystem::path& path,
                            std::optional<std::size_t> expected_cols = std::nullopt);

/// Ordered named matrices persisted as one container file.
class MatrixBundle {
 public:
  void put(std::string name, Eigen::MatrixXd m);
  void put_scalar(std::string name, double v);
  void put_vector(std::string name, const Eigen::VectorXd& v);

  bool contains(const std::string& name) const;
  const Eigen::MatrixXd& get(const std::string& name) const;
  double get_scalar(const std::string& name) const;
  Eigen::VectorXd get_vector(const std::string& name) const;

  const std::vector<std::pair<std::string, Eigen::MatrixXd>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, Eigen::MatrixXd>> entries_;
};

void write_bundle(const std::filesystem::path& path, const MatrixBundle& bundle);
MatrixBundle read_bundle(const std::filesystem::path& path);

void write_identities(const std::filesystem::path& path, const std::vector<RecordId>& ids);
std::vector<RecordId> read_identities(const std::filesystem::path& path);

/// Sidecar path for a feature file: same stem, ".csv" extension.
std::filesystem::path sidecar_path(const std::filesystem::path& feature_path);

/// Writes the vectors to `path` and identities to its sidecar.
void write_features(const std::filesystem::path& path, const FeatureSet& records);

/// Loads a feature file with its sidecar. With a manifest, dimensions and
/// identities are validated against it.
FeatureSet load_features(const std::filesystem::path& path,
                         const DatasetManifest* manifest = nullptr);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

void write_fold_plan(const std::filesystem::path& path, const FoldPlan& plan);
FoldPlan read_fold_plan(const std::filesystem::path& path);

/// Writes `contents` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& contents);
std::string read_text(const std::filesystem::path& path);

}  // namespace eacorr
