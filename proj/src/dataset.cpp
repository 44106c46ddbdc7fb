#include "eacorr/dataset.hpp"

#include <cmath>
#include <numeric>

#include "eacorr/error.hpp"
#include "eacorr/random.hpp"

namespace eacorr {

std::string to_string(Modality m) { return m == Modality::audio ? "audio" : "eeg"; }

Modality modality_from_string(const std::string& s) {
  if (s == "audio") return Modality::audio;
  if (s == "eeg") return Modality::eeg;
  throw DataError("unknown modality '" + s + "'");
}

DatasetManifest DatasetManifest::standard() {
  return build_manifest({"Chant", "Child singing", "Choir", "Female singing", "Male singing",
                         "Rapping", "Synthetic singing", "Yodeling"},
                        160, 9, 5, 1152, 512);
}

void validate(const DatasetManifest& m) {
  if (m.categories.empty()) throw ConfigError("manifest: no categories");
  if (m.n_segments == 0 || m.n_subjects == 0 || m.n_reps == 0 || m.audio_dim == 0 ||
      m.eeg_dim == 0) {
    throw ConfigError("manifest: all counts must be >= 1");
  }
  if (m.n_segments % m.categories.size() != 0) {
    throw ConfigError("manifest: " + std::to_string(m.n_segments) +
                      " segments not divisible by " +
                      std::to_string(m.categories.size()) + " categories");
  }
}

DatasetManifest build_manifest(std::vector<std::string> categories, std::size_t n_segments,
                               std::size_t n_subjects, std::size_t n_reps,
                               std::size_t audio_dim, std::size_t eeg_dim) {
  DatasetManifest m{std::move(categories), n_segments, n_subjects, n_reps, audio_dim, eeg_dim};
  validate(m);
  return m;
}

std::vector<int> FeatureSet::categories() const {
  std::vector<int> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(static_cast<int>(id.category));
  return out;
}

std::vector<std::size_t> FeatureSet::segments() const {
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(id.segment);
  return out;
}

FeatureSet FeatureSet::subset(const std::vector<std::size_t>& rows) const {
  FeatureSet out;
  out.modality = modality;
  out.vectors.resize(static_cast<Eigen::Index>(rows.size()), vectors.cols());
  out.ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.vectors.row(static_cast<Eigen::Index>(i)) =
        vectors.row(static_cast<Eigen::Index>(rows[i]));
    out.ids.push_back(ids[rows[i]]);
  }
  return out;
}

void validate(const FeatureSet& set, const DatasetManifest& m) {
  if (static_cast<std::size_t>(set.vectors.rows()) != set.ids.size()) {
    throw DataError("feature set: " + std::to_string(set.vectors.rows()) + " rows but " +
                    std::to_string(set.ids.size()) + " identities");
  }
  if (static_cast<std::size_t>(set.vectors.cols()) != m.dim(set.modality)) {
    throw DataError("feature set: " + to_string(set.modality) + " vectors have " +
                    std::to_string(set.vectors.cols()) + " columns, manifest says " +
                    std::to_string(m.dim(set.modality)));
  }
  for (const auto& id : set.ids) {
    if (id.modality != set.modality) throw DataError("feature set: mixed modalities");
    if (id.segment >= m.n_segments) throw DataError("feature set: segment id out of range");
    if (id.category != m.category_of(id.segment)) {
      throw DataError("feature set: category of segment " + std::to_string(id.segment) +
                      " disagrees with the manifest");
    }
    if (id.modality == Modality::eeg) {
      if (!id.subject || !id.repetition || *id.subject >= m.n_subjects ||
          *id.repetition >= m.n_reps) {
        throw DataError("feature set: EEG record with missing or out-of-range subject/repetition");
      }
    } else if (id.subject || id.repetition) {
      throw DataError("feature set: audio record carries a subject/repetition");
    }
  }
}

void validate(const GenConfig& cfg) {
  if (cfg.latent_dim_shared == 0 || cfg.latent_dim_audio_only == 0 ||
      cfg.latent_dim_eeg_only == 0) {
    throw ConfigError("generator: latent dimensions must be >= 1");
  }
  for (double s : {cfg.category_scale, cfg.segment_spread, cfg.shared_segment_spread,
                   cfg.sigma_audio, cfg.sigma_eeg, cfg.sigma_subject}) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw ConfigError("generator: scales must be finite and nonnegative");
    }
  }
}

namespace {

Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  // Fill row by row so the stream order is independent of storage order.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

enum Stream : std::uint64_t {
  kCategoryMeans = 1,
  kSegmentLatents,
  kAudioMixing,
  kEegMixing,
  kSubjectOffsets,
  kAudioNoise,
  kEegNoise,
};

}  // namespace

PairedCorpus generate_synthetic(const DatasetManifest& manifest, const GenConfig& cfg) {
  validate(manifest);
  validate(cfg);
  using Eigen::Index;
  const auto sh = static_cast<Index>(cfg.latent_dim_shared);
  const auto la = static_cast<Index>(cfg.latent_dim_audio_only);
  const auto le = static_cast<Index>(cfg.latent_dim_eeg_only);
  const Index latent = sh + la + le;
  const auto n_seg = static_cast<Index>(manifest.n_segments);
  const auto n_cat = static_cast<Index>(manifest.n_categories());
  const auto da = static_cast<Index>(manifest.audio_dim);
  const auto de = static_cast<Index>(manifest.eeg_dim);

  Rng cat_rng(derive_seed(cfg.seed, kCategoryMeans));
  const Eigen::MatrixXd cat_means = gaussian(cat_rng, n_cat, latent, cfg.category_scale);

  Rng seg_rng(derive_seed(cfg.seed, kSegmentLatents));
  Eigen::MatrixXd z = gaussian(seg_rng, n_seg, latent, 1.0);
  z.leftCols(sh) *= cfg.shared_segment_spread;
  z.rightCols(la + le) *= cfg.segment_spread;
  for (Index s = 0; s < n_seg; ++s) {
    z.row(s) += cat_means.row(static_cast<Index>(manifest.category_of(static_cast<std::size_t>(s))));
  }

  Rng a_rng(derive_seed(cfg.seed, kAudioMixing));
  const Eigen::MatrixXd mix_a = gaussian(a_rng, sh + la, da, 1.0 / std::sqrt(double(sh + la)));
  Rng b_rng(derive_seed(cfg.seed, kEegMixing));
  const Eigen::MatrixXd mix_b = gaussian(b_rng, sh + le, de, 1.0 / std::sqrt(double(sh + le)));

  Eigen::MatrixXd z_audio(n_seg, sh + la);
  z_audio << z.leftCols(sh), z.middleCols(sh, la);
  Eigen::MatrixXd z_eeg(n_seg, sh + le);
  z_eeg << z.leftCols(sh), z.rightCols(le);

  PairedCorpus out;
  out.manifest = manifest;

  Rng an_rng(derive_seed(cfg.seed, kAudioNoise));
  out.audio.modality = Modality::audio;
  out.audio.vectors = z_audio * mix_a + gaussian(an_rng, n_seg, da, cfg.sigma_audio);
  out.audio.ids.reserve(manifest.n_segments);
  for (std::size_t s = 0; s < manifest.n_segments; ++s) {
    out.audio.ids.push_back({s, std::nullopt, std::nullopt, manifest.category_of(s), Modality::audio});
  }

  Rng u_rng(derive_seed(cfg.seed, kSubjectOffsets));
  const Eigen::MatrixXd offsets =
      gaussian(u_rng, static_cast<Index>(manifest.n_subjects), de, cfg.sigma_subject);
  const Eigen::MatrixXd eeg_clean = z_eeg * mix_b;

  Rng en_rng(derive_seed(cfg.seed, kEegNoise));
  out.eeg.modality = Modality::eeg;
  out.eeg.vectors.resize(static_cast<Index>(manifest.n_eeg_records()), de);
  out.eeg.ids.reserve(manifest.n_eeg_records());
  Index row = 0;
  for (std::size_t s = 0; s < manifest.n_segments; ++s) {
    for (std::size_t subj = 0; subj < manifest.n_subjects; ++subj) {
      for (std::size_t rep = 0; rep < manifest.n_reps; ++rep, ++row) {
        auto r = out.eeg.vectors.row(row);
        r = eeg_clean.row(static_cast<Index>(s)) + offsets.row(static_cast<Index>(subj));
        for (Index j = 0; j < de; ++j) r(j) += cfg.sigma_eeg * en_rng.normal();
        out.eeg.ids.push_back({s, subj, rep, manifest.category_of(s), Modality::eeg});
      }
    }
  }
  return out;
}

std::vector<std::size_t> FoldPlan::segments_in(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < assignment.size(); ++s) {
    if (assignment[s] == fold) out.push_back(s);
  }
  return out;
}

FoldPlan stratified_folds(const DatasetManifest& manifest, std::size_t n_folds,
                          std::uint64_t seed) {
  validate(manifest);
  if (n_folds < 2) throw ConfigError("stratified_folds: need at least 2 folds");
  const std::size_t per_cat = manifest.segments_per_category();
  if (per_cat < n_folds) {
    throw ConfigError("stratified_folds: " + std::to_string(per_cat) +
                      " segments per category cannot fill " + std::to_string(n_folds) +
                      " folds");
  }
  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.assignment.assign(manifest.n_segments, 0);
  Rng rng(seed);
  std::vector<std::size_t> block(per_cat);
  for (std::size_t c = 0; c < manifest.n_categories(); ++c) {
    std::iota(block.begin(), block.end(), c * per_cat);
    rng.shuffle(std::span<std::size_t>(block));
    for (std::size_t i = 0; i < per_cat; ++i) plan.assignment[block[i]] = i % n_folds;
  }
  return plan;
}

std::pair<FeatureSet, FeatureSet> split(const FeatureSet& records, const FoldPlan& plan,
                                        std::size_t test_fold) {
  if (test_fold >= plan.n_folds) {
    throw ConfigError("split: fold " + std::to_string(test_fold) + " out of range (" +
                      std::to_string(plan.n_folds) + " folds)");
  }
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t i = 0; i < records.ids.size(); ++i) {
    const std::size_t seg = records.ids[i].segment;
    if (seg >= plan.assignment.size()) throw DataError("split: segment not covered by fold plan");
    (plan.assignment[seg] == test_fold ? test_rows : train_rows).push_back(i);
  }
  return {records.subset(train_rows), records.subset(test_rows)};
}

}  // namespace eacorr
