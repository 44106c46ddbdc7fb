#pragma once

// End-to-end experiment: generate or ingest a paired corpus, split it into
// stratified folds, run the three classification scenarios and the three
// shared-space methods, and write reports.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eacorr/classifiers.hpp"
#include "eacorr/corr.hpp"
#include "eacorr/dataset.hpp"
#include "eacorr/retrieval.hpp"

namespace eacorr {

/// Fixed stage indices mixed into the master seed by derive_seed().
enum class Stage : std::uint64_t {
  generate = 1,
  folds = 2,
  svm = 3,
  softmax = 4,
  dcca = 5,
  cdcca = 6,
  shuffle = 7,
};

std::uint64_t stage_seed(std::uint64_t master, Stage stage);

struct ClassifierSettings {
  Eigen::Index pca_dim = 20;
  SvmConfig svm;
  bool run_softmax = true;
  SoftmaxConfig softmax;
};

inline const std::vector<std::string> kScenarios{"audio", "eeg", "fused"};
inline const std::vector<std::string> kMethods{"CCA", "DCCA", "C-DCCA"};

struct RetrievalSettings {
  std::vector<Eigen::Index> ks{10, 15, 20, 25, 30, 35, 40};
  std::vector<std::string> methods = kMethods;
  double cca_ridge = 1e-4;
  Similarity metric = Similarity::cosine;
  DccaConfig dcca;
  DccaConfig cdcca;
  /// Breaks the audio/EEG pairing by permuting EEG segment identities
  /// within each fold (chance-level control).
  bool shuffle_pairs = false;
};

struct ExperimentConfig {
  DatasetManifest manifest = DatasetManifest::standard();
  GenConfig gen;  // seed is derived from master_seed
  std::size_t n_folds = 10;
  ClassifierSettings classifier;
  RetrievalSettings retrieval;
  bool run_classification = true;
  bool run_retrieval = true;
  std::uint64_t master_seed = 20180101;
  std::filesystem::path output_dir = "eacorr_out";
  /// When set, features are read from this directory instead of generated.
  std::optional<std::filesystem::path> features_dir;

  ExperimentConfig();
};

void validate(const ExperimentConfig& cfg);

/// Parses a JSON config; absent keys keep their defaults.
ExperimentConfig parse_config(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& cfg);
/// FNV-1a 64 of the canonical JSON form.
std::string config_hash(const ExperimentConfig& cfg);

struct ScenarioResult {
  std::string scenario;  // "audio", "eeg" or "fused"
  std::string model;     // "PCA-SVM" or "Softmax"
  std::vector<double> fold_accuracy;
  std::vector<double> fold_train_accuracy;
  double accuracy = 0.0;        // mean over folds
  double train_accuracy = 0.0;  // mean over folds
  ConfusionMatrix confusion;    // summed over folds
};

struct RunMetadata {
  std::uint64_t master_seed = 0;
  std::string config_hash;
  std::string started_at;
  std::string finished_at;
};

struct ReportBundle {
  std::vector<std::string> categories;
  std::vector<ScenarioResult> scenarios;     // audio, eeg, fused
  std::optional<ScenarioResult> eeg_softmax;
  std::vector<RetrievalReport> retrieval;    // CCA, DCCA, C-DCCA
  RunMetadata meta;
  std::vector<std::string> files;            // written, relative to the output dir

  const ScenarioResult& scenario(const std::string& name) const;
  const RetrievalReport& method(const std::string& name) const;
};

/// Generated corpus or one ingested from `features_dir`
/// (manifest.json, audio.fmtx/.csv, eeg.fmtx/.csv).
PairedCorpus load_or_generate(const ExperimentConfig& cfg);

/// Runs every enabled stage over all folds and writes the outputs.
ReportBundle run_pipeline(const ExperimentConfig& cfg);

/// Result of the classification scenarios only (no files written).
std::vector<ScenarioResult> classify_scenarios(const PairedCorpus& corpus, const FoldPlan& plan,
                                               const ExperimentConfig& cfg);

/// Shared-space retrieval for the configured methods (no files written).
std::vector<RetrievalReport> retrieval_methods(const PairedCorpus& corpus, const FoldPlan& plan,
                                               const ExperimentConfig& cfg,
                                               std::string* dcca_log_json = nullptr);

/// Trains `method` ("CCA", "DCCA" or "C-DCCA") on the training side of
/// `fold` and projects that fold's test records into the learned space.
FoldProjections fit_and_project(const std::string& method, const FeatureSet& audio,
                                const FeatureSet& eeg, const FoldPlan& plan, std::size_t fold,
                                const ExperimentConfig& cfg,
                                std::vector<double>* loss_trace = nullptr);

/// Per EEG record: the EEG vector followed by its segment's audio vector.
FeatureSet fuse_features(const FeatureSet& eeg, const FeatureSet& audio);

/// Permutes EEG segment identities among the records of each fold.
FeatureSet shuffle_pairings(const FeatureSet& eeg, const FoldPlan& plan, std::uint64_t seed);

/// Aligned text tables: accuracies by modality, then MRR1 and MAP by
/// component count for each method. Throws DataError if a scenario or
/// method is missing.
std::string make_report(const ReportBundle& bundle);

std::string file_name_for_scenario(const std::string& scenario);
std::string file_name_for_method(const std::string& method);

std::string summary_to_json(const ReportBundle& bundle, const ExperimentConfig& cfg);
/// Rebuilds a bundle from summary.json and the CSVs next to it.
ReportBundle load_bundle(const std::filesystem::path& output_dir);

}  // namespace eacorr
