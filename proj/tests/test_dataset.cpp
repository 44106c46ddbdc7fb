#include <doctest.h>

#include <map>
#include <set>

#include "eacorr/dataset.hpp"
#include "eacorr/error.hpp"
#include "eacorr/random.hpp"

using namespace eacorr;

namespace {

DatasetManifest small_manifest() {
  return build_manifest({"a", "b", "c", "d"}, 16, 3, 2, 12, 8);
}

}  // namespace

TEST_CASE("standard manifest matches the recording protocol") {
  const auto m = DatasetManifest::standard();
  CHECK(m.n_categories() == 8);
  CHECK(m.n_segments == 160);
  CHECK(m.n_eeg_records() == 7200);
  CHECK(m.audio_dim == 1152);
  CHECK(m.eeg_dim == 512);
  CHECK(m.category_of(0) == 0);
  CHECK(m.category_of(19) == 0);
  CHECK(m.category_of(20) == 1);
  CHECK(m.category_of(159) == 7);
}

TEST_CASE("build_manifest preconditions") {
  const auto tiny = build_manifest({"only"}, 1, 1, 1, 2, 2);
  CHECK(tiny.n_eeg_records() == 1);
  std::vector<std::string> eight{"1", "2", "3", "4", "5", "6", "7", "8"};
  CHECK_THROWS_AS(build_manifest(eight, 100, 9, 5, 1152, 512), ConfigError);
  CHECK_THROWS_AS(build_manifest(eight, 160, 0, 5, 1152, 512), ConfigError);
  CHECK_THROWS_AS(build_manifest({}, 160, 9, 5, 1152, 512), ConfigError);
}

TEST_CASE("generate_synthetic shapes and identities") {
  const auto m = small_manifest();
  GenConfig cfg;
  cfg.seed = 7;
  const auto c = generate_synthetic(m, cfg);
  CHECK(c.audio.vectors.rows() == 16);
  CHECK(c.audio.vectors.cols() == 12);
  CHECK(c.eeg.vectors.rows() == 16 * 3 * 2);
  CHECK(c.eeg.vectors.cols() == 8);
  CHECK_NOTHROW(validate(c.audio, m));
  CHECK_NOTHROW(validate(c.eeg, m));
  for (std::size_t i = 0; i < c.audio.ids.size(); ++i) {
    CHECK(c.audio.ids[i].segment == i);
    CHECK_FALSE(c.audio.ids[i].subject.has_value());
  }
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  for (const auto& id : c.eeg.ids) {
    REQUIRE(id.subject.has_value());
    CHECK(id.category == m.category_of(id.segment));
    seen.insert({id.segment, *id.subject, *id.repetition});
  }
  CHECK(seen.size() == c.eeg.ids.size());
}

TEST_CASE("default corpus record counts") {
  const auto c = generate_synthetic(DatasetManifest::standard(), GenConfig{});
  CHECK(c.audio.vectors.rows() == 160);
  CHECK(c.audio.vectors.cols() == 1152);
  CHECK(c.eeg.vectors.rows() == 7200);
  CHECK(c.eeg.vectors.cols() == 512);
}

TEST_CASE("noiseless EEG repeats exactly within a segment") {
  GenConfig cfg;
  cfg.sigma_eeg = 0.0;
  cfg.sigma_subject = 0.0;
  const auto m = small_manifest();
  const auto c = generate_synthetic(m, cfg);
  std::map<std::size_t, Eigen::RowVectorXd> first;
  for (std::size_t i = 0; i < c.eeg.ids.size(); ++i) {
    const auto seg = c.eeg.ids[i].segment;
    const Eigen::RowVectorXd row = c.eeg.vectors.row(static_cast<Eigen::Index>(i));
    if (!first.count(seg)) {
      first[seg] = row;
    } else {
      CHECK((row.array() == first[seg].array()).all());
    }
  }
}

TEST_CASE("generation is deterministic per seed") {
  const auto m = small_manifest();
  GenConfig cfg;
  cfg.seed = 99;
  const auto a = generate_synthetic(m, cfg);
  const auto b = generate_synthetic(m, cfg);
  CHECK((a.audio.vectors.array() == b.audio.vectors.array()).all());
  CHECK((a.eeg.vectors.array() == b.eeg.vectors.array()).all());
  cfg.seed = 100;
  const auto d = generate_synthetic(m, cfg);
  CHECK_FALSE((a.audio.vectors.array() == d.audio.vectors.array()).all());
}

TEST_CASE("GenConfig validation") {
  GenConfig cfg;
  cfg.latent_dim_shared = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = GenConfig{};
  cfg.sigma_eeg = -1.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("stratified folds on the default manifest") {
  const auto m = DatasetManifest::standard();
  const auto plan = stratified_folds(m, 10, 5);
  REQUIRE(plan.assignment.size() == 160);
  for (std::size_t f = 0; f < 10; ++f) {
    const auto segs = plan.segments_in(f);
    CHECK(segs.size() == 16);
    std::map<std::size_t, int> per_cat;
    for (auto s : segs) ++per_cat[m.category_of(s)];
    CHECK(per_cat.size() == 8);
    for (const auto& [cat, count] : per_cat) CHECK(count == 2);
  }
  CHECK(stratified_folds(m, 10, 5) == plan);
  CHECK_FALSE(stratified_folds(m, 10, 6) == plan);
}

TEST_CASE("stratified folds with uneven shares") {
  const auto m = build_manifest({"a", "b"}, 14, 1, 1, 2, 2);
  const auto plan = stratified_folds(m, 3, 1);
  for (std::size_t f = 0; f < 3; ++f) {
    std::map<std::size_t, int> per_cat;
    for (auto s : plan.segments_in(f)) ++per_cat[m.category_of(s)];
    for (const auto& [cat, count] : per_cat) CHECK((count == 2 || count == 3));
  }
}

TEST_CASE("stratified folds preconditions") {
  const auto m = small_manifest();
  CHECK_THROWS_AS(stratified_folds(m, 1, 0), ConfigError);
  CHECK_THROWS_AS(stratified_folds(m, 5, 0), ConfigError);  // 4 segments per category
}

TEST_CASE("split keeps every EEG record with its segment's fold") {
  const auto m = DatasetManifest::standard();
  GenConfig cfg;
  const auto c = generate_synthetic(m, cfg);
  const auto plan = stratified_folds(m, 10, 3);
  for (std::size_t f = 0; f < 10; ++f) {
    const auto [train, test] = split(c.eeg, plan, f);
    CHECK(test.size() == 720);
    CHECK(train.size() == 6480);
    for (const auto& id : test.ids) CHECK(plan.assignment[id.segment] == f);
    for (const auto& id : train.ids) CHECK(plan.assignment[id.segment] != f);
  }
  CHECK_THROWS_AS(split(c.eeg, plan, 10), ConfigError);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
  Rng r(11);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(r.below(7) < 7);
  }
}
