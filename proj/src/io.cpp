#include "eacorr/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eacorr/error.hpp"

namespace eacorr {
namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMatrixMagic{'F', 'M', 'T', 'X'};
constexpr std::array<char, 4> kBundleMagic{'F', 'M', 'T', 'C'};
constexpr std::size_t kHeaderBytes = 24;

template <typename T>
void put_le(std::string& buf, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  auto bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<char>(bits & 0xff));
    bits >>= 8;
  }
}

template <typename T>
T get_le(const char* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) {
    bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  }
  return std::bit_cast<T>(bits);
}

void encode_matrix(std::string& buf, const Eigen::MatrixXd& m) {
  buf.append(kMatrixMagic.data(), kMatrixMagic.size());
  put_le<std::uint32_t>(buf, kFormatVersion);
  put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(m.cols()));
  const std::size_t start = buf.size();
  const std::size_t n = static_cast<std::size_t>(m.size());
  if constexpr (std::endian::native == std::endian::little) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    buf.resize(start + 8 * n);
    if (n > 0) std::memcpy(buf.data() + start, rm.data(), 8 * n);
  } else {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) put_le<double>(buf, m(i, j));
  }
}

/// Decodes one matrix block at `offset`; returns the matrix and its end offset.
std::pair<Eigen::MatrixXd, std::size_t> decode_matrix(const std::string& bytes,
                                                      std::size_t offset,
                                                      const std::string& what) {
  if (bytes.size() < offset + kHeaderBytes) {
    throw FormatError(FormatErrc::truncated, what + ": truncated header");
  }
  const char* p = bytes.data() + offset;
  if (!std::equal(kMatrixMagic.begin(), kMatrixMagic.end(), p)) {
    throw FormatError(FormatErrc::bad_magic, what + ": bad magic");
  }
  const auto version = get_le<std::uint32_t>(p + 4);
  if (version != kFormatVersion) {
    throw FormatError(FormatErrc::version_mismatch,
                      what + ": unsupported version " + std::to_string(version));
  }
  const auto rows = get_le<std::uint64_t>(p + 8);
  const auto cols = get_le<std::uint64_t>(p + 16);
  const std::size_t avail = bytes.size() - offset - kHeaderBytes;
  if (cols != 0 && rows > avail / 8 / cols) {
    throw FormatError(FormatErrc::truncated, what + ": truncated payload");
  }
  const std::size_t n = rows * cols;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const char* data = p + kHeaderBytes;
  if constexpr (std::endian::native == std::endian::little) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(m.rows(), m.cols());
    if (n > 0) std::memcpy(rm.data(), data, 8 * n);
    m = rm;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      m(static_cast<Eigen::Index>(i / cols), static_cast<Eigen::Index>(i % cols)) =
          get_le<double>(data + 8 * i);
    }
  }
  return {std::move(m), offset + kHeaderBytes + 8 * n};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void dump(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatErrc::io, "write failed for " + path.string());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::size_t parse_index(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw FormatError(FormatErrc::parse, what + ": cannot parse '" + s + "'");
  }
}

}  // namespace

void write_matrix(const fs::path& path, const Eigen::MatrixXd& m) {
  std::string buf;
  buf.reserve(kHeaderBytes + 8 * static_cast<std::size_t>(m.size()));
  encode_matrix(buf, m);
  dump(path, buf);
}

Eigen::MatrixXd read_matrix(const fs::path& path, std::optional<std::size_t> expected_cols) {
  const std::string bytes = slurp(path);
  auto [m, end] = decode_matrix(bytes, 0, path.string());
  if (end != bytes.size()) {
    throw FormatError(FormatErrc::truncated, path.string() + ": trailing bytes after payload");
  }
  if (expected_cols && static_cast<std::size_t>(m.cols()) != *expected_cols) {
    throw FormatError(FormatErrc::dimension_mismatch,
                      path.string() + ": expected " + std::to_string(*expected_cols) +
                          " columns, found " + std::to_string(m.cols()));
  }
  return m;
}

void MatrixBundle::put(std::string name, Eigen::MatrixXd m) {
  for (auto& [n, v] : entries_) {
    if (n == name) {
      v = std::move(m);
      return;
    }
  }
  entries_.emplace_back(std::move(name), std::move(m));
}

void MatrixBundle::put_scalar(std::string name, double v) {
  put(std::move(name), Eigen::MatrixXd::Constant(1, 1, v));
}

void MatrixBundle::put_vector(std::string name, const Eigen::VectorXd& v) {
  put(std::move(name), Eigen::MatrixXd(v));
}

bool MatrixBundle::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

const Eigen::MatrixXd& MatrixBundle::get(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  throw FormatError(FormatErrc::parse, "container has no entry '" + name + "'");
}

double MatrixBundle::get_scalar(const std::string& name) const {
  const auto& m = get(name);
  if (m.size() != 1) throw FormatError(FormatErrc::dimension_mismatch, name + ": not a scalar");
  return m(0, 0);
}

Eigen::VectorXd MatrixBundle::get_vector(const std::string& name) const {
  const auto& m = get(name);
  if (m.cols() != 1) throw FormatError(FormatErrc::dimension_mismatch, name + ": not a vector");
  return m.col(0);
}

void write_bundle(const fs::path& path, const MatrixBundle& bundle) {
  std::size_t toc = 4 + 4 + 4;
  for (const auto& [name, m] : bundle.entries()) toc += 4 + name.size() + 8;
  std::string body;
  std::vector<std::uint64_t> offsets;
  for (const auto& [name, m] : bundle.entries()) {
    offsets.push_back(toc + body.size());
    encode_matrix(body, m);
  }
  std::string buf;
  buf.append(kBundleMagic.data(), kBundleMagic.size());
  put_le<std::uint32_t>(buf, kFormatVersion);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(bundle.entries().size()));
  for (std::size_t i = 0; i < bundle.entries().size(); ++i) {
    const auto& name = bundle.entries()[i].first;
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(name.size()));
    buf += name;
    put_le<std::uint64_t>(buf, offsets[i]);
  }
  buf += body;
  dump(path, buf);
}

MatrixBundle read_bundle(const fs::path& path) {
  const std::string bytes = slurp(path);
  const std::string what = path.string();
  if (bytes.size() < 12) throw FormatError(FormatErrc::truncated, what + ": truncated header");
  if (!std::equal(kBundleMagic.begin(), kBundleMagic.end(), bytes.data())) {
    throw FormatError(FormatErrc::bad_magic, what + ": bad magic");
  }
  if (get_le<std::uint32_t>(bytes.data() + 4) != kFormatVersion) {
    throw FormatError(FormatErrc::version_mismatch, what + ": unsupported version");
  }
  const auto count = get_le<std::uint32_t>(bytes.data() + 8);
  std::size_t pos = 12;
  MatrixBundle bundle;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (bytes.size() < pos + 4) throw FormatError(FormatErrc::truncated, what + ": truncated table");
    const auto len = get_le<std::uint32_t>(bytes.data() + pos);
    pos += 4;
    if (bytes.size() < pos + len + 8) {
      throw FormatError(FormatErrc::truncated, what + ": truncated table");
    }
    std::string name = bytes.substr(pos, len);
    pos += len;
    const auto offset = get_le<std::uint64_t>(bytes.data() + pos);
    pos += 8;
    auto [m, end] = decode_matrix(bytes, offset, what + "[" + name + "]");
    bundle.put(std::move(name), std::move(m));
  }
  return bundle;
}

void write_identities(const fs::path& path, const std::vector<RecordId>& ids) {
  std::string out = "record_id,segment_id,subject_id,repetition_id,category_id,modality\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& id = ids[i];
    out += std::to_string(i) + ',' + std::to_string(id.segment) + ',';
    if (id.subject) out += std::to_string(*id.subject);
    out += ',';
    if (id.repetition) out += std::to_string(*id.repetition);
    out += ',' + std::to_string(id.category) + ',' + to_string(id.modality) + '\n';
  }
  dump(path, out);
}

std::vector<RecordId> read_identities(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string line;
  if (!std::getline(in, line) ||
      line != "record_id,segment_id,subject_id,repetition_id,category_id,modality") {
    throw FormatError(FormatErrc::parse, path.string() + ": unexpected sidecar header");
  }
  std::vector<RecordId> ids;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw FormatError(FormatErrc::parse, path.string() + ": bad row '" + line + "'");
    if (parse_index(f[0], path.string()) != ids.size()) {
      throw FormatError(FormatErrc::parse, path.string() + ": record ids must be 0..n-1 in order");
    }
    RecordId id;
    id.segment = parse_index(f[1], path.string());
    if (!f[2].empty()) id.subject = parse_index(f[2], path.string());
    if (!f[3].empty()) id.repetition = parse_index(f[3], path.string());
    id.category = parse_index(f[4], path.string());
    try {
      id.modality = modality_from_string(f[5]);
    } catch (const DataError& e) {
      throw FormatError(FormatErrc::parse, path.string() + ": " + e.what());
    }
    ids.push_back(id);
  }
  return ids;
}

fs::path sidecar_path(const fs::path& feature_path) {
  fs::path p = feature_path;
  p.replace_extension(".csv");
  return p;
}

void write_features(const fs::path& path, const FeatureSet& records) {
  if (static_cast<std::size_t>(records.vectors.rows()) != records.ids.size()) {
    throw DataError("write_features: row/identity count mismatch");
  }
  write_matrix(path, records.vectors);
  write_identities(sidecar_path(path), records.ids);
}

FeatureSet load_features(const fs::path& path, const DatasetManifest* manifest) {
  std::vector<RecordId> ids = read_identities(sidecar_path(path));
  FeatureSet set;
  set.modality = ids.empty() ? Modality::audio : ids.front().modality;
  std::optional<std::size_t> cols;
  if (manifest) cols = manifest->dim(set.modality);
  set.vectors = read_matrix(path, cols);
  set.ids = std::move(ids);
  if (static_cast<std::size_t>(set.vectors.rows()) != set.ids.size()) {
    throw FormatError(FormatErrc::dimension_mismatch,
                      path.string() + ": " + std::to_string(set.vectors.rows()) +
                          " rows but sidecar lists " + std::to_string(set.ids.size()));
  }
  if (manifest) validate(set, *manifest);
  return set;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
  nlohmann::json j = {{"categories", m.categories}, {"n_segments", m.n_segments},
                      {"n_subjects", m.n_subjects}, {"n_reps", m.n_reps},
                      {"audio_dim", m.audio_dim},   {"eeg_dim", m.eeg_dim}};
  dump(path, j.dump(2) + "\n");
}

DatasetManifest read_manifest(const fs::path& path) {
  try {
    const auto j = nlohmann::json::parse(slurp(path));
    return build_manifest(j.at("categories").get<std::vector<std::string>>(),
                          j.at("n_segments").get<std::size_t>(),
                          j.at("n_subjects").get<std::size_t>(), j.at("n_reps").get<std::size_t>(),
                          j.at("audio_dim").get<std::size_t>(), j.at("eeg_dim").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrc::parse, path.string() + ": " + e.what());
  }
}

void write_fold_plan(const fs::path& path, const FoldPlan& plan) {
  std::string out = "segment_id,fold\n";
  for (std::size_t s = 0; s < plan.assignment.size(); ++s) {
    out += std::to_string(s) + ',' + std::to_string(plan.assignment[s]) + '\n';
  }
  dump(path, out);
}

FoldPlan read_fold_plan(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string line;
  if (!std::getline(in, line) || line != "segment_id,fold") {
    throw FormatError(FormatErrc::parse, path.string() + ": unexpected fold plan header");
  }
  FoldPlan plan;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 2 || parse_index(f[0], path.string()) != plan.assignment.size()) {
      throw FormatError(FormatErrc::parse, path.string() + ": bad row '" + line + "'");
    }
    plan.assignment.push_back(parse_index(f[1], path.string()));
  }
  for (auto f : plan.assignment) plan.n_folds = std::max(plan.n_folds, f + 1);
  return plan;
}

void write_text(const fs::path& path, const std::string& contents) { dump(path, contents); }

std::string read_text(const fs::path& path) { return slurp(path); }

}  // namespace eacorr
