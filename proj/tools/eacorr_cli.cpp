// eacorr command-line front end. Every subcommand reads and writes the
// library's file formats, so stages can be chained through files; `run`
// executes the whole experiment in one go.

#include <cstdio>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "eacorr/error.hpp"
#include "eacorr/io.hpp"
#include "eacorr/numlin.hpp"
#include "eacorr/pipeline.hpp"
#include "eacorr/random.hpp"

namespace fs = std::filesystem;
using namespace eacorr;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

// Options shared by most subcommands; unset flags leave the config untouched.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> folds;
  std::optional<std::string> out;
};

void add_common(CLI::App* app, Common& c, bool with_out = true) {
  app->add_option("-c,--config", c.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--folds", c.folds, "number of folds");
  if (with_out) app->add_option("-o,--out", c.out, "output path");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig() : parse_config(read_text(c.config_path));
  if (c.seed) cfg.master_seed = *c.seed;
  if (c.folds) cfg.n_folds = *c.folds;
  if (c.out) cfg.output_dir = *c.out;
  validate(cfg);
  return cfg;
}

fs::path need(const std::optional<std::string>& out, const char* what) {
  if (!out) throw ConfigError(std::string("missing --out (") + what + ")");
  return *out;
}

struct Corpus {
  PairedCorpus corpus;
  FoldPlan plan;
};

// Features from a directory written by `gen` and folds from `split`.
Corpus load_corpus(const fs::path& dir, const fs::path& folds_path) {
  Corpus c;
  c.corpus.manifest = read_manifest(dir / "manifest.json");
  c.corpus.audio = load_features(dir / "audio.fmtx", &c.corpus.manifest);
  c.corpus.eeg = load_features(dir / "eeg.fmtx", &c.corpus.manifest);
  c.plan = read_fold_plan(folds_path);
  if (c.plan.assignment.size() != c.corpus.manifest.n_segments) {
    throw DataError("fold plan does not cover the manifest's segments");
  }
  return c;
}

Eigen::VectorXd as_vector(const std::vector<std::size_t>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = static_cast<double>(v[i]);
  return out;
}

std::vector<std::size_t> as_ids(const Eigen::VectorXd& v) {
  std::vector<std::size_t> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) < 0 || v(i) != std::floor(v(i))) throw DataError("projection bundle: bad segment id");
    out.push_back(static_cast<std::size_t>(v(i)));
  }
  return out;
}

void print(const std::string& s) { std::fwrite(s.data(), 1, s.size(), stdout); }

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("eacorr");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  spdlog::cfg::load_env_levels();  // SPDLOG_LEVEL=info|debug|...

  CLI::App app{"EEG/audio classification and cross-modal correlation experiments"};
  app.require_subcommand(1);

  // gen
  Common gen_opts;
  auto* gen = app.add_subcommand("gen", "generate a synthetic paired corpus");
  add_common(gen, gen_opts);

  // split
  Common split_opts;
  std::string split_features;
  auto* split_cmd = app.add_subcommand("split", "write a stratified fold plan");
  add_common(split_cmd, split_opts);
  split_cmd->add_option("--features-dir", split_features, "directory with manifest.json")->required();

  // pca
  std::string pca_in, pca_transform_out;
  std::optional<std::string> pca_out;
  Eigen::Index pca_dim = 20;
  auto* pca = app.add_subcommand("pca", "fit PCA on a feature file");
  pca->add_option("-i,--input", pca_in, "feature file (.fmtx)")->required()->check(CLI::ExistingFile);
  pca->add_option("-k,--dim", pca_dim, "number of components");
  pca->add_option("-o,--out", pca_out, "model container (.fmtc)");
  pca->add_option("--transform", pca_transform_out, "also write the projected features here");

  // train
  Common train_opts;
  std::string train_features, train_folds, train_scenario = "eeg", train_model = "svm";
  std::size_t train_fold = 0;
  auto* train = app.add_subcommand("train", "train and evaluate a classifier on one fold");
  add_common(train, train_opts);
  train->add_option("--features-dir", train_features)->required();
  train->add_option("--fold-plan", train_folds, "folds.csv from `split`")->required();
  train->add_option("--fold", train_fold, "test fold index");
  train->add_option("--scenario", train_scenario)->check(CLI::IsMember({"audio", "eeg", "fused"}));
  train->add_option("--model", train_model)->check(CLI::IsMember({"svm", "softmax"}));

  // fuse
  std::string fuse_eeg, fuse_audio;
  std::optional<std::string> fuse_out;
  auto* fuse = app.add_subcommand("fuse", "concatenate EEG and audio features per EEG record");
  fuse->add_option("--eeg", fuse_eeg)->required()->check(CLI::ExistingFile);
  fuse->add_option("--audio", fuse_audio)->required()->check(CLI::ExistingFile);
  fuse->add_option("-o,--out", fuse_out, "fused feature file (.fmtx)");

  // cca / dcca / cdcca
  std::map<std::string, std::string> method_of{{"cca", "CCA"}, {"dcca", "DCCA"}, {"cdcca", "C-DCCA"}};
  Common shared_opts;
  std::string shared_features, shared_folds;
  std::size_t shared_fold = 0;
  std::vector<CLI::App*> shared_cmds;
  for (const auto& [name, method] : method_of) {
    auto* cmd = app.add_subcommand(name, "fit " + method + " on one fold and project its test records");
    add_common(cmd, shared_opts);
    cmd->add_option("--features-dir", shared_features)->required();
    cmd->add_option("--fold-plan", shared_folds)->required();
    cmd->add_option("--fold", shared_fold, "test fold index");
    shared_cmds.push_back(cmd);
  }

  // retrieve
  Common retrieve_opts;
  std::vector<std::string> retrieve_inputs;
  std::string retrieve_method = "CCA", retrieve_metric = "cosine";
  std::vector<Eigen::Index> retrieve_ks;
  auto* retrieve = app.add_subcommand("retrieve", "MRR1/MAP sweep over per-fold projection files");
  add_common(retrieve, retrieve_opts);
  retrieve->add_option("inputs", retrieve_inputs, "projection containers, one per fold")->required();
  retrieve->add_option("--method", retrieve_method, "label for the report");
  retrieve->add_option("--metric", retrieve_metric)->check(CLI::IsMember({"cosine", "euclidean"}));
  retrieve->add_option("--ks", retrieve_ks, "component counts");

  // run
  Common run_opts;
  std::string run_features;
  bool run_shuffle = false;
  auto* run = app.add_subcommand("run", "full experiment: classification and retrieval");
  add_common(run, run_opts);
  run->add_option("--features-dir", run_features, "ingest features instead of generating");
  run->add_flag("--shuffle-pairs", run_shuffle, "break EEG/audio pairing (chance control)");

  // report
  std::string report_dir;
  auto* report = app.add_subcommand("report", "print tables from a finished run");
  report->add_option("dir", report_dir, "output directory of `run`")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) {
      const ExperimentConfig cfg = resolve(gen_opts);
      const PairedCorpus corpus = load_or_generate(cfg);
      const fs::path dir = need(gen_opts.out, "directory");
      write_manifest(dir / "manifest.json", corpus.manifest);
      write_features(dir / "audio.fmtx", corpus.audio);
      write_features(dir / "eeg.fmtx", corpus.eeg);
    } else if (*split_cmd) {
      const ExperimentConfig cfg = resolve(split_opts);
      const DatasetManifest m = read_manifest(fs::path(split_features) / "manifest.json");
      write_fold_plan(need(split_opts.out, "fold plan csv"),
                      stratified_folds(m, cfg.n_folds, stage_seed(cfg.master_seed, Stage::folds)));
    } else if (*pca) {
      const Eigen::MatrixXd x = read_matrix(pca_in);
      const auto model = pca_fit(x, pca_dim);
      if (pca_out) {
        MatrixBundle b;
        b.put("mean", model.mean);
        b.put("components", model.components);
        b.put_vector("variances", model.variances);
        write_bundle(*pca_out, b);
      }
      if (!pca_transform_out.empty()) write_matrix(pca_transform_out, pca_transform(model, x));
      for (Eigen::Index i = 0; i < model.variances.size(); ++i) std::printf("%g\n", model.variances(i));
    } else if (*train) {
      const ExperimentConfig cfg = resolve(train_opts);
      const Corpus c = load_corpus(train_features, train_folds);
      const FeatureSet data = train_scenario == "audio" ? c.corpus.audio
                              : train_scenario == "eeg" ? c.corpus.eeg
                                                        : fuse_features(c.corpus.eeg, c.corpus.audio);
      const auto [tr, te] = split(data, c.plan, train_fold);
      const int n_classes = static_cast<int>(c.corpus.manifest.n_categories());
      std::vector<int> predicted;
      if (train_model == "svm") {
        const auto p = pca_fit(tr.vectors, cfg.classifier.pca_dim);
        SvmConfig sc = cfg.classifier.svm;
        const auto scenario_index = static_cast<std::uint64_t>(
            std::find(kScenarios.begin(), kScenarios.end(), train_scenario) - kScenarios.begin());
        sc.seed = derive_seed(derive_seed(stage_seed(cfg.master_seed, Stage::svm), scenario_index), train_fold);
        const SvmModel model = svm_fit(pca_transform(p, tr.vectors), tr.categories(), sc);
        predicted = eacorr::predict(model, pca_transform(p, te.vectors));
      } else {
        const Standardizer norm = Standardizer::fit(tr.vectors);
        SoftmaxConfig sc = cfg.classifier.softmax;
        sc.seed = derive_seed(stage_seed(cfg.master_seed, Stage::softmax), train_fold);
        const SoftmaxModel model = softmax_fit(norm.apply(tr.vectors), tr.categories(), n_classes, sc);
        predicted = eacorr::predict(model, norm.apply(te.vectors));
      }
      const Evaluation ev = evaluate(te.categories(), predicted, n_classes);
      std::printf("accuracy %.6f\n", ev.accuracy);
      if (train_opts.out) write_text(*train_opts.out, confusion_to_csv(ev.confusion, c.corpus.manifest.categories));
    } else if (*fuse) {
      const FeatureSet eeg = load_features(fuse_eeg);
      const FeatureSet audio = load_features(fuse_audio);
      write_features(need(fuse_out, "fused feature file"), fuse_features(eeg, audio));
    } else if (*retrieve) {
      const ExperimentConfig cfg = resolve(retrieve_opts);
      std::vector<FoldProjections> folds;
      for (const auto& path : retrieve_inputs) {
        const MatrixBundle b = read_bundle(path);
        folds.push_back({b.get("eeg"), as_ids(b.get_vector("eeg_segments")), b.get("audio"),
                         as_ids(b.get_vector("audio_segments"))});
      }
      const auto ks = retrieve_ks.empty() ? cfg.retrieval.ks : retrieve_ks;
      const RetrievalReport r =
          sweep_components(retrieve_method, folds, ks, similarity_from_string(retrieve_metric));
      const std::string csv = report_to_csv(r);
      if (retrieve_opts.out) {
        write_text(*retrieve_opts.out, csv);
      } else {
        print(csv);
      }
    } else if (*run) {
      ExperimentConfig cfg = resolve(run_opts);
      if (!run_features.empty()) cfg.features_dir = run_features;
      if (run_shuffle) cfg.retrieval.shuffle_pairs = true;
      const ReportBundle bundle = run_pipeline(cfg);
      if (cfg.run_classification && cfg.run_retrieval && cfg.retrieval.methods.size() == kMethods.size()) {
        print(make_report(bundle));
      }
      std::printf("outputs written to %s\n", cfg.output_dir.string().c_str());
    } else if (*report) {
      print(make_report(load_bundle(report_dir)));
    } else {
      for (std::size_t i = 0; i < shared_cmds.size(); ++i) {
        if (!*shared_cmds[i]) continue;
        const std::string method = method_of.at(shared_cmds[i]->get_name());
        const ExperimentConfig cfg = resolve(shared_opts);
        const Corpus c = load_corpus(shared_features, shared_folds);
        const FoldProjections p =
            fit_and_project(method, c.corpus.audio, c.corpus.eeg, c.plan, shared_fold, cfg);
        MatrixBundle b;
        b.put("eeg", p.eeg);
        b.put_vector("eeg_segments", as_vector(p.eeg_segments));
        b.put("audio", p.audio);
        b.put_vector("audio_segments", as_vector(p.audio_segments));
        write_bundle(need(shared_opts.out, "projection container"), b);
      }
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kNumerical;
  }
  return kOk;
}
