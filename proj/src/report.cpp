#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eacorr/error.hpp"
#include "eacorr/io.hpp"
#include "eacorr/pipeline.hpp"

namespace eacorr {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

void table(std::ostringstream& out, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out << (c ? "  " : "") << pad(cells[c], width[c]);
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
}

void metric_table(std::ostringstream& out, const ReportBundle& bundle, bool use_map) {
  std::vector<const RetrievalReport*> reports;
  for (const auto& m : kMethods) reports.push_back(&bundle.method(m));
  std::vector<std::string> header{"Number of components"};
  for (const auto& m : kMethods) header.push_back(m);
  std::vector<std::vector<std::string>> rows;
  const auto& first = reports.front()->rows;
  for (std::size_t i = 0; i < first.size(); ++i) {
    std::vector<std::string> row{std::to_string(first[i].k)};
    for (const auto* r : reports) {
      if (r->rows.size() != first.size() || r->rows[i].k != first[i].k) {
        throw DataError("make_report: methods disagree on the component sweep");
      }
      row.push_back(fixed(use_map ? r->rows[i].map_mean : r->rows[i].mrr1_mean, 4));
    }
    rows.push_back(std::move(row));
  }
  table(out, header, rows);
}

json scenario_json(const ScenarioResult& s) {
  return {{"scenario", s.scenario},
          {"model", s.model},
          {"accuracy", s.accuracy},
          {"train_accuracy", s.train_accuracy},
          {"fold_accuracy", s.fold_accuracy},
          {"fold_train_accuracy", s.fold_train_accuracy}};
}

ScenarioResult scenario_from_json(const json& j) {
  ScenarioResult s;
  s.scenario = j.at("scenario").get<std::string>();
  s.model = j.at("model").get<std::string>();
  s.accuracy = j.at("accuracy").get<double>();
  s.train_accuracy = j.at("train_accuracy").get<double>();
  s.fold_accuracy = j.at("fold_accuracy").get<std::vector<double>>();
  s.fold_train_accuracy = j.at("fold_train_accuracy").get<std::vector<double>>();
  return s;
}

}  // namespace

std::string make_report(const ReportBundle& bundle) {
  if (bundle.retrieval.empty()) throw DataError("make_report: bundle has no retrieval methods");
  const auto& audio = bundle.scenario("audio");
  const auto& eeg = bundle.scenario("eeg");
  const auto& fused = bundle.scenario("fused");
  for (const auto& m : kMethods) bundle.method(m);

  std::ostringstream out;
  out << "Classification accuracy (mean over folds)\n";
  std::vector<std::string> header{"Audio PCA-SVM"};
  std::vector<std::string> row{fixed(100.0 * audio.accuracy, 1) + "%"};
  if (bundle.eeg_softmax) {
    header.push_back("EEG Softmax");
    row.push_back(fixed(100.0 * bundle.eeg_softmax->accuracy, 1) + "%");
  }
  header.push_back("EEG PCA-SVM");
  row.push_back(fixed(100.0 * eeg.accuracy, 1) + "%");
  header.push_back("Audio & EEG PCA-SVM");
  row.push_back(fixed(100.0 * fused.accuracy, 1) + "%");
  table(out, header, {row});

  out << "\nMRR1 (EEG queries, audio gallery)\n";
  metric_table(out, bundle, false);
  out << "\nMAP (audio queries, EEG gallery)\n";
  metric_table(out, bundle, true);
  return out.str();
}

std::string summary_to_json(const ReportBundle& bundle, const ExperimentConfig& cfg) {
  json j;
  j["master_seed"] = bundle.meta.master_seed;
  j["config_hash"] = bundle.meta.config_hash;
  j["started_at"] = bundle.meta.started_at;
  j["finished_at"] = bundle.meta.finished_at;
  j["config"] = json::parse(config_to_json(cfg));
  j["categories"] = bundle.categories;
  j["scenarios"] = json::array();
  for (const auto& s : bundle.scenarios) {
    json e = scenario_json(s);
    e["file"] = file_name_for_scenario(s.scenario);
    j["scenarios"].push_back(std::move(e));
  }
  if (bundle.eeg_softmax) {
    json e = scenario_json(*bundle.eeg_softmax);
    e["file"] = "confusion_eeg_softmax.csv";
    j["eeg_softmax"] = std::move(e);
  }
  j["retrieval"] = json::array();
  for (const auto& r : bundle.retrieval) {
    json rows = json::array();
    for (const auto& row : r.rows) {
      rows.push_back({{"k", row.k},
                      {"mrr1_mean", row.mrr1_mean},
                      {"mrr1_std", row.mrr1_std},
                      {"map_mean", row.map_mean},
                      {"map_std", row.map_std},
                      {"mrr1_per_fold", row.mrr1_per_fold},
                      {"map_per_fold", row.map_per_fold}});
    }
    j["retrieval"].push_back({{"method", r.method}, {"file", file_name_for_method(r.method)}, {"rows", rows}});
  }
  j["files"] = bundle.files;
  return j.dump(2) + "\n";
}

ReportBundle load_bundle(const fs::path& output_dir) {
  json j;
  try {
    j = json::parse(read_text(output_dir / "summary.json"));
  } catch (const json::exception& e) {
    throw FormatError(FormatErrc::parse, std::string("summary.json: ") + e.what());
  }
  ReportBundle b;
  try {
    b.meta.master_seed = j.at("master_seed").get<std::uint64_t>();
    b.meta.config_hash = j.at("config_hash").get<std::string>();
    b.meta.started_at = j.at("started_at").get<std::string>();
    b.meta.finished_at = j.at("finished_at").get<std::string>();
    b.categories = j.at("categories").get<std::vector<std::string>>();
    b.files = j.at("files").get<std::vector<std::string>>();
    for (const auto& e : j.at("scenarios")) {
      ScenarioResult s = scenario_from_json(e);
      s.confusion = confusion_from_csv(read_text(output_dir / e.at("file").get<std::string>()));
      b.scenarios.push_back(std::move(s));
    }
    if (j.contains("eeg_softmax")) {
      const auto& e = j["eeg_softmax"];
      ScenarioResult s = scenario_from_json(e);
      s.confusion = confusion_from_csv(read_text(output_dir / e.at("file").get<std::string>()));
      b.eeg_softmax = std::move(s);
    }
    for (const auto& e : j.at("retrieval")) {
      const std::string method = e.at("method").get<std::string>();
      RetrievalReport r = report_from_csv(read_text(output_dir / e.at("file").get<std::string>()), method);
      const auto& rows = e.at("rows");
      if (rows.size() != r.rows.size()) throw DataError("load_bundle: " + method + " row count mismatch");
      for (std::size_t i = 0; i < r.rows.size(); ++i) {
        r.rows[i].mrr1_per_fold = rows[i].at("mrr1_per_fold").get<std::vector<double>>();
        r.rows[i].map_per_fold = rows[i].at("map_per_fold").get<std::vector<double>>();
      }
      b.retrieval.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw FormatError(FormatErrc::parse, std::string("summary.json: ") + e.what());
  }
  return b;
}

}  // namespace eacorr
