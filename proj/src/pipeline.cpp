#include "eacorr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "eacorr/error.hpp"
#include "eacorr/io.hpp"
#include "eacorr/numlin.hpp"
#include "eacorr/random.hpp"

namespace eacorr {
namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t stage_seed(std::uint64_t master, Stage stage) {
  return derive_seed(master, static_cast<std::uint64_t>(stage));
}

ExperimentConfig::ExperimentConfig() {
  // Pipeline ridges are larger than the library defaults: 6480 noisy EEG
  // rows against 512 dimensions need more shrinkage for stable projections.
  retrieval.cca_ridge = 100.0;
  for (DccaConfig* d : {&retrieval.dcca, &retrieval.cdcca}) {
    d->ridge = 1.0;
    d->learning_rate = 1e-2;
    d->epochs = 60;
  }
  retrieval.cdcca.category_pair_prob = 0.5;
}

void validate(const ExperimentConfig& cfg) {
  validate(cfg.manifest);
  validate(cfg.gen);
  if (cfg.n_folds < 2) throw ConfigError("config: n_folds must be >= 2");
  if (cfg.classifier.pca_dim < 1) throw ConfigError("config: pca_dim must be >= 1");
  if (cfg.retrieval.ks.empty()) throw ConfigError("config: empty component sweep");
  for (auto k : cfg.retrieval.ks) {
    if (k < 1) throw ConfigError("config: component counts must be >= 1");
  }
  for (const auto& m : cfg.retrieval.methods) {
    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end()) {
      throw ConfigError("config: unknown method '" + m + "'");
    }
  }
  validate(cfg.retrieval.dcca);
  validate(cfg.retrieval.cdcca);
  if (cfg.retrieval.cca_ridge < 0.0) throw ConfigError("config: cca_ridge must be nonnegative");
  const auto k_max = *std::max_element(cfg.retrieval.ks.begin(), cfg.retrieval.ks.end());
  for (const auto& m : cfg.retrieval.methods) {
    if (m == "DCCA" && k_max > cfg.retrieval.dcca.output_dim) {
      throw ConfigError("config: sweep k exceeds DCCA output_dim");
    }
    if (m == "C-DCCA" && k_max > cfg.retrieval.cdcca.output_dim) {
      throw ConfigError("config: sweep k exceeds C-DCCA output_dim");
    }
  }
}

// ---------------------------------------------------------------- config JSON

namespace {

json dcca_to_json(const DccaConfig& c) {
  return {{"hidden", c.hidden},          {"output_dim", c.output_dim},
          {"ridge", c.ridge},            {"epochs", c.epochs},
          {"learning_rate", c.learning_rate}, {"momentum", c.momentum},
          {"category_pair_prob", c.category_pair_prob}};
}

void dcca_from_json(const json& j, DccaConfig& c) {
  c.hidden = j.value("hidden", c.hidden);
  c.output_dim = j.value("output_dim", c.output_dim);
  c.ridge = j.value("ridge", c.ridge);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.category_pair_prob = j.value("category_pair_prob", c.category_pair_prob);
}

json config_json(const ExperimentConfig& cfg) {
  const auto& m = cfg.manifest;
  const auto& g = cfg.gen;
  const auto& c = cfg.classifier;
  const auto& r = cfg.retrieval;
  json j;
  j["master_seed"] = cfg.master_seed;
  j["n_folds"] = cfg.n_folds;
  j["run_classification"] = cfg.run_classification;
  j["run_retrieval"] = cfg.run_retrieval;
  j["output_dir"] = cfg.output_dir.string();
  j["features_dir"] = cfg.features_dir ? json(cfg.features_dir->string()) : json(nullptr);
  j["manifest"] = {{"categories", m.categories}, {"n_segments", m.n_segments},
                   {"n_subjects", m.n_subjects}, {"n_reps", m.n_reps},
                   {"audio_dim", m.audio_dim},   {"eeg_dim", m.eeg_dim}};
  j["generator"] = {{"latent_dim_shared", g.latent_dim_shared},
                    {"latent_dim_audio_only", g.latent_dim_audio_only},
                    {"latent_dim_eeg_only", g.latent_dim_eeg_only},
                    {"category_scale", g.category_scale},
                    {"segment_spread", g.segment_spread},
                    {"shared_segment_spread", g.shared_segment_spread},
                    {"sigma_audio", g.sigma_audio},
                    {"sigma_eeg", g.sigma_eeg},
                    {"sigma_subject", g.sigma_subject}};
  j["classifier"] = {
      {"pca_dim", c.pca_dim},
      {"svm",
       {{"kernel", c.svm.kernel.type == KernelType::rbf ? "rbf" : "linear"},
        {"gamma", c.svm.kernel.gamma},
        {"c_reg", c.svm.c_reg},
        {"tol", c.svm.tol},
        {"max_passes", c.svm.max_passes}}},
      {"softmax",
       {{"enabled", c.run_softmax},
        {"epochs", c.softmax.epochs},
        {"learning_rate", c.softmax.learning_rate},
        {"l2", c.softmax.l2}}}};
  j["retrieval"] = {{"ks", r.ks},
                    {"methods", r.methods},
                    {"cca_ridge", r.cca_ridge},
                    {"metric", to_string(r.metric)},
                    {"shuffle_pairs", r.shuffle_pairs},
                    {"dcca", dcca_to_json(r.dcca)},
                    {"cdcca", dcca_to_json(r.cdcca)}};
  return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  ExperimentConfig cfg;
  try {
    const json j = json::parse(json_text);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.n_folds = j.value("n_folds", cfg.n_folds);
    cfg.run_classification = j.value("run_classification", cfg.run_classification);
    cfg.run_retrieval = j.value("run_retrieval", cfg.run_retrieval);
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("features_dir") && !j["features_dir"].is_null()) {
      cfg.features_dir = j["features_dir"].get<std::string>();
    }
    if (j.contains("manifest")) {
      const auto& m = j["manifest"];
      auto& t = cfg.manifest;
      t.categories = m.value("categories", t.categories);
      t.n_segments = m.value("n_segments", t.n_segments);
      t.n_subjects = m.value("n_subjects", t.n_subjects);
      t.n_reps = m.value("n_reps", t.n_reps);
      t.audio_dim = m.value("audio_dim", t.audio_dim);
      t.eeg_dim = m.value("eeg_dim", t.eeg_dim);
    }
    if (j.contains("generator")) {
      const auto& g = j["generator"];
      auto& t = cfg.gen;
      t.latent_dim_shared = g.value("latent_dim_shared", t.latent_dim_shared);
      t.latent_dim_audio_only = g.value("latent_dim_audio_only", t.latent_dim_audio_only);
      t.latent_dim_eeg_only = g.value("latent_dim_eeg_only", t.latent_dim_eeg_only);
      t.category_scale = g.value("category_scale", t.category_scale);
      t.segment_spread = g.value("segment_spread", t.segment_spread);
      t.shared_segment_spread = g.value("shared_segment_spread", t.shared_segment_spread);
      t.sigma_audio = g.value("sigma_audio", t.sigma_audio);
      t.sigma_eeg = g.value("sigma_eeg", t.sigma_eeg);
      t.sigma_subject = g.value("sigma_subject", t.sigma_subject);
    }
    if (j.contains("classifier")) {
      const auto& c = j["classifier"];
      auto& t = cfg.classifier;
      t.pca_dim = c.value("pca_dim", t.pca_dim);
      if (c.contains("svm")) {
        const auto& s = c["svm"];
        const std::string kernel = s.value("kernel", std::string("rbf"));
        if (kernel != "rbf" && kernel != "linear") throw ConfigError("config: unknown kernel '" + kernel + "'");
        t.svm.kernel.type = kernel == "rbf" ? KernelType::rbf : KernelType::linear;
        t.svm.kernel.gamma = s.value("gamma", t.svm.kernel.gamma);
        t.svm.c_reg = s.value("c_reg", t.svm.c_reg);
        t.svm.tol = s.value("tol", t.svm.tol);
        t.svm.max_passes = s.value("max_passes", t.svm.max_passes);
      }
      if (c.contains("softmax")) {
        const auto& s = c["softmax"];
        t.run_softmax = s.value("enabled", t.run_softmax);
        t.softmax.epochs = s.value("epochs", t.softmax.epochs);
        t.softmax.learning_rate = s.value("learning_rate", t.softmax.learning_rate);
        t.softmax.l2 = s.value("l2", t.softmax.l2);
      }
    }
    if (j.contains("retrieval")) {
      const auto& r = j["retrieval"];
      auto& t = cfg.retrieval;
      t.ks = r.value("ks", t.ks);
      t.methods = r.value("methods", t.methods);
      t.cca_ridge = r.value("cca_ridge", t.cca_ridge);
      if (r.contains("metric")) t.metric = similarity_from_string(r["metric"].get<std::string>());
      t.shuffle_pairs = r.value("shuffle_pairs", t.shuffle_pairs);
      if (r.contains("dcca")) dcca_from_json(r["dcca"], t.dcca);
      if (r.contains("cdcca")) dcca_from_json(r["cdcca"], t.cdcca);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

std::string config_hash(const ExperimentConfig& cfg) {
  // Where results go does not change them.
  auto j = config_json(cfg);
  j.erase("output_dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------- stages

namespace {

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Runs `fn`, prefixing any library error with the stage name and fold.
template <typename Fn>
auto in_stage(const std::string& stage, std::optional<std::size_t> fold, Fn&& fn) {
  const std::string where =
      "stage '" + stage + "'" + (fold ? " fold " + std::to_string(*fold) : std::string()) + ": ";
  try {
    return fn();
  } catch (const FormatError& e) {
    throw FormatError(e.code(), where + e.what());
  } catch (const DataError& e) {
    throw DataError(where + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(where + e.what());
  }
}

}  // namespace

FeatureSet fuse_features(const FeatureSet& eeg, const FeatureSet& audio) {
  std::map<std::size_t, Eigen::Index> audio_row;
  for (std::size_t i = 0; i < audio.ids.size(); ++i) audio_row[audio.ids[i].segment] = static_cast<Eigen::Index>(i);
  FeatureSet out;
  out.modality = Modality::eeg;
  out.ids = eeg.ids;
  out.vectors.resize(eeg.vectors.rows(), eeg.vectors.cols() + audio.vectors.cols());
  for (std::size_t i = 0; i < eeg.ids.size(); ++i) {
    const auto it = audio_row.find(eeg.ids[i].segment);
    if (it == audio_row.end()) throw DataError("fuse: EEG record without audio segment");
    const auto r = static_cast<Eigen::Index>(i);
    out.vectors.row(r) << eeg.vectors.row(r), audio.vectors.row(it->second);
  }
  return out;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

ScenarioResult run_svm_scenario(const std::string& name, const FeatureSet& records,
                                const FoldPlan& plan, const ExperimentConfig& cfg) {
  const int n_classes = static_cast<int>(cfg.manifest.n_categories());
  ScenarioResult res;
  res.scenario = name;
  res.model = "PCA-SVM";
  res.confusion = ConfusionMatrix::Zero(n_classes, n_classes);
  const std::uint64_t base = derive_seed(stage_seed(cfg.master_seed, Stage::svm),
                                         static_cast<std::uint64_t>(std::find(kScenarios.begin(), kScenarios.end(), name) - kScenarios.begin()));
  for (std::size_t fold = 0; fold < plan.n_folds; ++fold) {
    in_stage("classify-" + name, fold, [&] {
      const auto [train, test] = split(records, plan, fold);
      const auto pca = pca_fit(train.vectors, cfg.classifier.pca_dim);
      const Eigen::MatrixXd z_train = pca_transform(pca, train.vectors);
      const Eigen::MatrixXd z_test = pca_transform(pca, test.vectors);
      SvmConfig svm = cfg.classifier.svm;
      svm.seed = derive_seed(base, fold);
      const std::vector<int> y_train = train.categories();
      const std::vector<int> y_test = test.categories();
      const SvmModel model = svm_fit(z_train, y_train, svm);
      const Evaluation ev = evaluate(y_test, predict(model, z_test), n_classes);
      const Evaluation ev_train = evaluate(y_train, predict(model, z_train), n_classes);
      res.fold_accuracy.push_back(ev.accuracy);
      res.fold_train_accuracy.push_back(ev_train.accuracy);
      res.confusion += ev.confusion;
      spdlog::info("{} fold {}: test accuracy {:.4f} (train {:.4f})", name, fold, ev.accuracy,
                   ev_train.accuracy);
    });
  }
  res.accuracy = mean_of(res.fold_accuracy);
  res.train_accuracy = mean_of(res.fold_train_accuracy);
  return res;
}

ScenarioResult run_softmax_scenario(const FeatureSet& eeg, const FoldPlan& plan,
                                    const ExperimentConfig& cfg) {
  const int n_classes = static_cast<int>(cfg.manifest.n_categories());
  ScenarioResult res;
  res.scenario = "eeg";
  res.model = "Softmax";
  res.confusion = ConfusionMatrix::Zero(n_classes, n_classes);
  for (std::size_t fold = 0; fold < plan.n_folds; ++fold) {
    in_stage("classify-eeg-softmax", fold, [&] {
      const auto [train, test] = split(eeg, plan, fold);
      const Standardizer norm = Standardizer::fit(train.vectors);
      SoftmaxConfig sc = cfg.classifier.softmax;
      sc.seed = derive_seed(stage_seed(cfg.master_seed, Stage::softmax), fold);
      const std::vector<int> y_train = train.categories();
      const std::vector<int> y_test = test.categories();
      const SoftmaxModel model = softmax_fit(norm.apply(train.vectors), y_train, n_classes, sc);
      const Evaluation ev = evaluate(y_test, predict(model, norm.apply(test.vectors)), n_classes);
      const Evaluation ev_train =
          evaluate(y_train, predict(model, norm.apply(train.vectors)), n_classes);
      res.fold_accuracy.push_back(ev.accuracy);
      res.fold_train_accuracy.push_back(ev_train.accuracy);
      res.confusion += ev.confusion;
    });
  }
  res.accuracy = mean_of(res.fold_accuracy);
  res.train_accuracy = mean_of(res.fold_train_accuracy);
  return res;
}

}  // namespace

PairedCorpus load_or_generate(const ExperimentConfig& cfg) {
  if (!cfg.features_dir) {
    GenConfig gen = cfg.gen;
    gen.seed = stage_seed(cfg.master_seed, Stage::generate);
    return in_stage("generate", std::nullopt, [&] { return generate_synthetic(cfg.manifest, gen); });
  }
  return in_stage("ingest", std::nullopt, [&] {
    const fs::path dir = *cfg.features_dir;
    PairedCorpus corpus;
    corpus.manifest = read_manifest(dir / "manifest.json");
    corpus.audio = load_features(dir / "audio.fmtx", &corpus.manifest);
    corpus.eeg = load_features(dir / "eeg.fmtx", &corpus.manifest);
    if (corpus.audio.modality != Modality::audio || corpus.eeg.modality != Modality::eeg) {
      throw DataError("ingest: audio.fmtx/eeg.fmtx hold the wrong modality");
    }
    std::vector<bool> seen(corpus.manifest.n_segments, false);
    for (const auto& id : corpus.audio.ids) {
      if (seen[id.segment]) throw DataError("ingest: duplicate audio segment " + std::to_string(id.segment));
      seen[id.segment] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw DataError("ingest: every segment needs exactly one audio record");
    }
    return corpus;
  });
}

std::vector<ScenarioResult> classify_scenarios(const PairedCorpus& corpus, const FoldPlan& plan,
                                               const ExperimentConfig& cfg) {
  std::vector<ScenarioResult> out;
  out.push_back(run_svm_scenario("audio", corpus.audio, plan, cfg));
  out.push_back(run_svm_scenario("eeg", corpus.eeg, plan, cfg));
  const FeatureSet fused = in_stage("fuse", std::nullopt, [&] { return fuse_features(corpus.eeg, corpus.audio); });
  out.push_back(run_svm_scenario("fused", fused, plan, cfg));
  return out;
}

FeatureSet shuffle_pairings(const FeatureSet& eeg, const FoldPlan& plan, std::uint64_t seed) {
  FeatureSet out = eeg;
  for (std::size_t fold = 0; fold < plan.n_folds; ++fold) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < eeg.ids.size(); ++i) {
      if (plan.assignment.at(eeg.ids[i].segment) == fold) rows.push_back(i);
    }
    std::vector<std::size_t> perm = rows;
    Rng rng(derive_seed(seed, fold));
    rng.shuffle(std::span<std::size_t>(perm));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      out.ids[rows[j]].segment = eeg.ids[perm[j]].segment;
      out.ids[rows[j]].category = eeg.ids[perm[j]].category;
    }
  }
  return out;
}

FoldProjections fit_and_project(const std::string& method, const FeatureSet& audio,
                                const FeatureSet& eeg, const FoldPlan& plan, std::size_t fold,
                                const ExperimentConfig& cfg, std::vector<double>* loss_trace) {
  const auto& rs = cfg.retrieval;
  const Eigen::Index k_max = *std::max_element(rs.ks.begin(), rs.ks.end());
  const auto [audio_train, audio_test] = split(audio, plan, fold);
  const auto [eeg_train, eeg_test] = split(eeg, plan, fold);

  std::map<std::size_t, Eigen::Index> audio_row;
  for (std::size_t i = 0; i < audio_train.ids.size(); ++i) {
    audio_row[audio_train.ids[i].segment] = static_cast<Eigen::Index>(i);
  }
  PairIndex pairs;
  for (const auto& id : eeg_train.ids) {
    const auto it = audio_row.find(id.segment);
    if (it == audio_row.end()) throw DataError("EEG record without a training audio segment");
    pairs.x.push_back(static_cast<Eigen::Index>(pairs.x.size()));
    pairs.y.push_back(it->second);
  }

  FoldProjections proj;
  proj.eeg_segments = eeg_test.segments();
  proj.audio_segments = audio_test.segments();
  if (method == "CCA") {
    Eigen::MatrixXd paired_audio(eeg_train.vectors.rows(), audio_train.vectors.cols());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      paired_audio.row(static_cast<Eigen::Index>(i)) = audio_train.vectors.row(pairs.y[i]);
    }
    const auto model = cca_fit(eeg_train.vectors, paired_audio, k_max, rs.cca_ridge, rs.cca_ridge);
    proj.eeg = cca_project(model, eeg_test.vectors, Side::x);
    proj.audio = cca_project(model, audio_test.vectors, Side::y);
  } else if (method == "DCCA" || method == "C-DCCA") {
    const bool category = method == "C-DCCA";
    DccaConfig dc = category ? rs.cdcca : rs.dcca;
    dc.seed = derive_seed(stage_seed(cfg.master_seed, category ? Stage::cdcca : Stage::dcca), fold);
    const DccaModel model = dcca_fit(eeg_train.vectors, audio_train.vectors, pairs, dc, eeg_train.categories());
    proj.eeg = model.project(eeg_test.vectors, Side::x);
    proj.audio = model.project(audio_test.vectors, Side::y);
    if (loss_trace) *loss_trace = model.loss_trace;
  } else {
    throw ConfigError("unknown method '" + method + "'");
  }
  return proj;
}

std::vector<RetrievalReport> retrieval_methods(const PairedCorpus& corpus, const FoldPlan& plan,
                                               const ExperimentConfig& cfg,
                                               std::string* dcca_log_json) {
  const auto& rs = cfg.retrieval;
  const FeatureSet eeg = rs.shuffle_pairs
                             ? shuffle_pairings(corpus.eeg, plan, stage_seed(cfg.master_seed, Stage::shuffle))
                             : corpus.eeg;

  std::map<std::string, std::vector<FoldProjections>> projections;
  json log = json::object();
  for (std::size_t fold = 0; fold < plan.n_folds; ++fold) {
    for (const auto& method : rs.methods) {
      std::vector<double> trace;
      projections[method].push_back(in_stage(method, fold, [&] {
        return fit_and_project(method, corpus.audio, eeg, plan, fold, cfg, &trace);
      }));
      if (!trace.empty()) {
        log[method].push_back({{"fold", fold}, {"loss", trace}});
        spdlog::info("{} fold {}: loss {:.4f} -> {:.4f}", method, fold, trace.front(), trace.back());
      }
    }
  }

  std::vector<RetrievalReport> out;
  for (const auto& method : rs.methods) {
    out.push_back(in_stage("retrieve-" + method, std::nullopt, [&] {
      return sweep_components(method, projections[method], rs.ks, rs.metric);
    }));
  }
  if (dcca_log_json) *dcca_log_json = log.dump(1) + "\n";
  return out;
}

const ScenarioResult& ReportBundle::scenario(const std::string& name) const {
  for (const auto& s : scenarios) {
    if (s.scenario == name) return s;
  }
  throw DataError("report bundle: missing scenario '" + name + "'");
}

const RetrievalReport& ReportBundle::method(const std::string& name) const {
  for (const auto& r : retrieval) {
    if (r.method == name) return r;
  }
  throw DataError("report bundle: missing method '" + name + "'");
}

std::string file_name_for_scenario(const std::string& scenario) {
  return "confusion_" + scenario + ".csv";
}

std::string file_name_for_method(const std::string& method) {
  std::string s = "retrieval_";
  for (char c : method) {
    if (c != '-') s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s + ".csv";
}

ReportBundle run_pipeline(const ExperimentConfig& cfg) {
  validate(cfg);
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  {
    const fs::path probe = cfg.output_dir / ".write_probe";
    std::ofstream out(probe);
    if (!out) throw ConfigError("output directory " + cfg.output_dir.string() + " is not writable");
    out.close();
    fs::remove(probe, ec);
  }

  ReportBundle bundle;
  bundle.meta.master_seed = cfg.master_seed;
  bundle.meta.config_hash = config_hash(cfg);
  bundle.meta.started_at = now_utc();

  const PairedCorpus corpus = load_or_generate(cfg);
  bundle.categories = corpus.manifest.categories;
  const FoldPlan plan = in_stage("folds", std::nullopt, [&] {
    return stratified_folds(corpus.manifest, cfg.n_folds, stage_seed(cfg.master_seed, Stage::folds));
  });
  write_fold_plan(cfg.output_dir / "folds.csv", plan);
  bundle.files.push_back("folds.csv");

  if (cfg.run_classification) {
    bundle.scenarios = classify_scenarios(corpus, plan, cfg);
    for (const auto& s : bundle.scenarios) {
      const std::string name = file_name_for_scenario(s.scenario);
      write_text(cfg.output_dir / name, confusion_to_csv(s.confusion, bundle.categories));
      bundle.files.push_back(name);
    }
    if (cfg.classifier.run_softmax) {
      bundle.eeg_softmax = run_softmax_scenario(corpus.eeg, plan, cfg);
      write_text(cfg.output_dir / "confusion_eeg_softmax.csv",
                 confusion_to_csv(bundle.eeg_softmax->confusion, bundle.categories));
      bundle.files.push_back("confusion_eeg_softmax.csv");
    }
  }
  if (cfg.run_retrieval) {
    std::string log;
    bundle.retrieval = retrieval_methods(corpus, plan, cfg, &log);
    for (const auto& r : bundle.retrieval) {
      const std::string name = file_name_for_method(r.method);
      write_text(cfg.output_dir / name, report_to_csv(r));
      bundle.files.push_back(name);
    }
    write_text(cfg.output_dir / "dcca_log.json", log);
    bundle.files.push_back("dcca_log.json");
  }

  if (cfg.run_classification && cfg.run_retrieval &&
      cfg.retrieval.methods.size() == kMethods.size()) {
    write_text(cfg.output_dir / "report.txt", make_report(bundle));
    bundle.files.push_back("report.txt");
  }
  bundle.meta.finished_at = now_utc();
  bundle.files.push_back("summary.json");
  write_text(cfg.output_dir / "summary.json", summary_to_json(bundle, cfg));
  return bundle;
}

}  // namespace eacorr
