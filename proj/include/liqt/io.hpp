// Copyright 2026 The li-qt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Persistence: event logs as CSV with a JSON sidecar, operators as JSON,
// trajectory snapshots as CSV, and run manifests with SHA-256 digests.
//
//   SG log        events.csv  index,outcome        + events.json
//   EPRB log      pairs.csv   index,x,y            + pairs.json
//   detector data clicks.csv  tau,j,count          + clicks.json
//
// Numbers are written in shortest round-trip form, so identical inputs give
// byte-identical files.

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "liqt/eprb.hpp"
#include "liqt/separation.hpp"
#include "liqt/sg.hpp"
#include "liqt/wave.hpp"

#ifndef LIQT_VERSION
#define LIQT_VERSION "0.1.0"
#endif

namespace liqt::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kVersion = LIQT_VERSION;

inline std::string format_double(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail(ErrorCode::CorruptData, "not a number: '" + std::string(s) + "'");
  return v;
}

inline std::int64_t parse_int(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail(ErrorCode::CorruptData, "not an integer: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  for (;;) {
    const auto pos = line.find(sep);
    out.push_back(line.substr(0, pos));
    if (pos == std::string_view::npos) return out;
    line.remove_prefix(pos + 1);
  }
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

/// Lines without the trailing newline; a final empty line is dropped.
inline std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    const auto pos = text.find('\n');
    auto line = text.substr(0, pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    if (pos == std::string_view::npos) break;
    text.remove_prefix(pos + 1);
  }
  return out;
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": " + e.what());
  }
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorCode::Io, "SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

inline std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// JSON helpers.

inline json to_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

inline UnitVector3 unit_from_json(const json& j, const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 3)
    fail(ErrorCode::SchemaMismatch, "field '" + key + "' must be a 3-vector");
  try {
    return UnitVector3(Vec3{j.at(key)[0].get<double>(), j.at(key)[1].get<double>(), j.at(key)[2].get<double>()});
  } catch (const json::exception&) {
    fail(ErrorCode::SchemaMismatch, "field '" + key + "' must hold numbers");
  }
}

template <typename T>
T field(const json& j, const std::string& key) {
  if (!j.contains(key)) fail(ErrorCode::SchemaMismatch, "sidecar lacks '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::SchemaMismatch, "sidecar field '" + key + "' has the wrong type");
  }
}

inline json to_json(const ExperimentConditions& c) { return {{"label", c.label()}, {"parameters", c.parameters()}}; }

inline ExperimentConditions conditions_from_json(const json& j) {
  if (!j.is_object()) return {};
  return ExperimentConditions(j.value("label", std::string()),
                              j.value("parameters", std::map<std::string, std::string>{}));
}

inline void check_kind(const json& sidecar, std::string_view kind) {
  if (field<std::string>(sidecar, "kind") != kind)
    fail(ErrorCode::SchemaMismatch, "sidecar kind is not '" + std::string(kind) + "'");
  if (field<int>(sidecar, "schema") != kSchemaVersion) fail(ErrorCode::SchemaMismatch, "unsupported schema version");
}

inline void check_header(std::string_view line, std::string_view expected) {
  if (line != expected) fail(ErrorCode::SchemaMismatch, "expected CSV header '" + std::string(expected) + "'");
}

/// Paths of a log: either the CSV itself or the directory holding it.
inline std::pair<fs::path, fs::path> log_paths(const fs::path& path, std::string_view stem) {
  const fs::path csv = fs::is_directory(path) ? path / (std::string(stem) + ".csv") : path;
  fs::path sidecar = csv;
  sidecar.replace_extension(".json");
  return {csv, sidecar};
}

// ---------------------------------------------------------------------------
// SG event logs.

inline std::vector<fs::path> save_event_log(const EventLog& log, const fs::path& dir) {
  std::string csv = "index,outcome\n";
  csv.reserve(csv.size() + log.size() * 10);
  for (std::size_t i = 0; i < log.size(); ++i) {
    csv += std::to_string(i);
    csv += log.outcomes[i].value() == 1 ? ",1\n" : ",-1\n";
  }
  const json sidecar = {{"kind", "sg"},
                        {"schema", kSchemaVersion},
                        {"a", to_json(log.a.vec())},
                        {"m", to_json(log.m_direction.vec())},
                        {"theta", log.theta},
                        {"seed", log.seed},
                        {"N", log.size()},
                        {"conditions", to_json(log.conditions)}};
  write_file(dir / "events.csv", csv);
  write_file(dir / "events.json", sidecar.dump(2) + "\n");
  return {dir / "events.csv", dir / "events.json"};
}

inline EventLog load_event_log(const fs::path& path) {
  const auto [csv_path, sidecar_path] = log_paths(path, "events");
  const json sidecar = read_json(sidecar_path);
  check_kind(sidecar, "sg");
  EventLog log;
  log.a = unit_from_json(sidecar, "a");
  log.m_direction = unit_from_json(sidecar, "m");
  log.theta = field<double>(sidecar, "theta");
  log.seed = field<std::uint64_t>(sidecar, "seed");
  log.conditions = conditions_from_json(sidecar.value("conditions", json()));
  const std::string text = read_file(csv_path);
  const auto rows = lines(text);
  if (rows.empty()) fail(ErrorCode::SchemaMismatch, "empty event file");
  check_header(rows[0], "index,outcome");
  log.outcomes.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cols = split(rows[r]);
    if (cols.size() != 2) fail(ErrorCode::CorruptData, "row " + std::to_string(r) + " needs 2 columns");
    if (parse_int(cols[0]) != static_cast<std::int64_t>(r - 1))
      fail(ErrorCode::CorruptData, "event index out of sequence at row " + std::to_string(r));
    const auto v = parse_int(cols[1]);
    if (v != 1 && v != -1) fail(ErrorCode::CorruptData, "outcome must be +1 or -1");
    log.outcomes.push_back(Outcome(static_cast<int>(v)));
  }
  log.validate(field<std::size_t>(sidecar, "N"));
  return log;
}

// ---------------------------------------------------------------------------
// EPRB pair logs.

inline std::vector<fs::path> save_pair_log(const PairEventLog& log, const fs::path& dir) {
  std::string csv = "index,x,y\n";
  csv.reserve(csv.size() + log.size() * 14);
  for (std::size_t i = 0; i < log.size(); ++i) {
    csv += std::to_string(i);
    csv += log.pairs[i].x.value() == 1 ? ",1" : ",-1";
    csv += log.pairs[i].y.value() == 1 ? ",1\n" : ",-1\n";
  }
  const json sidecar = {{"kind", "eprb"},
                        {"schema", kSchemaVersion},
                        {"a1", to_json(log.a1.vec())},
                        {"a2", to_json(log.a2.vec())},
                        {"theta", log.theta},
                        {"seed", log.seed},
                        {"N", log.size()},
                        {"conditions", to_json(log.conditions)}};
  write_file(dir / "pairs.csv", csv);
  write_file(dir / "pairs.json", sidecar.dump(2) + "\n");
  return {dir / "pairs.csv", dir / "pairs.json"};
}

namespace detail {

inline std::vector<PairOutcome> parse_pairs(std::string_view text) {
  const auto rows = lines(text);
  if (rows.empty()) fail(ErrorCode::SchemaMismatch, "empty pair file");
  check_header(rows[0], "index,x,y");
  std::vector<PairOutcome> pairs;
  pairs.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cols = split(rows[r]);
    if (cols.size() != 3) fail(ErrorCode::CorruptData, "row " + std::to_string(r) + " needs 3 columns");
    if (parse_int(cols[0]) != static_cast<std::int64_t>(r - 1))
      fail(ErrorCode::CorruptData, "pair index out of sequence at row " + std::to_string(r));
    const auto x = parse_int(cols[1]), y = parse_int(cols[2]);
    if ((x != 1 && x != -1) || (y != 1 && y != -1)) fail(ErrorCode::CorruptData, "outcomes must be +1 or -1");
    pairs.push_back({Outcome(static_cast<int>(x)), Outcome(static_cast<int>(y))});
  }
  return pairs;
}

}  // namespace detail

inline PairEventLog load_pair_log(const fs::path& path) {
  const auto [csv_path, sidecar_path] = log_paths(path, "pairs");
  const json sidecar = read_json(sidecar_path);
  check_kind(sidecar, "eprb");
  PairEventLog log;
  log.a1 = unit_from_json(sidecar, "a1");
  log.a2 = unit_from_json(sidecar, "a2");
  log.theta = field<double>(sidecar, "theta");
  log.seed = field<std::uint64_t>(sidecar, "seed");
  log.conditions = conditions_from_json(sidecar.value("conditions", json()));
  log.pairs = detail::parse_pairs(read_file(csv_path));
  log.validate(field<std::size_t>(sidecar, "N"));
  return log;
}

/// Pair CSV from elsewhere, without a sidecar; the magnet directions are
/// supplied by the caller.
inline PairEventLog load_external_pairs(const fs::path& csv, const UnitVector3& a1, const UnitVector3& a2) {
  PairEventLog log;
  log.a1 = a1;
  log.a2 = a2;
  log.theta = angle_between(a1, a2);
  log.conditions = ExperimentConditions("external", {{"source", csv.filename().string()}});
  log.pairs = detail::parse_pairs(read_file(csv));
  log.validate();
  return log;
}

// ---------------------------------------------------------------------------
// Detector clicks.

inline std::vector<fs::path> save_detector_data(const DetectorData& data, const fs::path& dir) {
  data.validate();
  std::string csv = "tau,j,count\n";
  for (std::size_t t = 0; t < data.clicks.n_t(); ++t)
    for (int j = -data.k_det; j <= data.k_det; ++j)
      csv += std::to_string(t) + "," + std::to_string(j) + "," + std::to_string(data.at(t, j)) + "\n";
  const json sidecar = {{"kind", "clicks"}, {"schema", kSchemaVersion}, {"K_det", data.k_det},
                        {"N", data.n_repeats}, {"slices", data.clicks.n_t()}, {"seed", data.seed}};
  write_file(dir / "clicks.csv", csv);
  write_file(dir / "clicks.json", sidecar.dump(2) + "\n");
  return {dir / "clicks.csv", dir / "clicks.json"};
}

inline DetectorData load_detector_data(const fs::path& path) {
  const auto [csv_path, sidecar_path] = log_paths(path, "clicks");
  const json sidecar = read_json(sidecar_path);
  check_kind(sidecar, "clicks");
  DetectorData data;
  data.k_det = field<int>(sidecar, "K_det");
  data.n_repeats = field<std::uint64_t>(sidecar, "N");
  data.seed = field<std::uint64_t>(sidecar, "seed");
  const auto slices = field<std::size_t>(sidecar, "slices");
  require(data.k_det >= 0, ErrorCode::SchemaMismatch, "K_det must be nonnegative");
  const auto width = static_cast<std::size_t>(2 * data.k_det + 1);
  data.clicks = Field<std::uint64_t>(slices, width, 0);
  const std::string text = read_file(csv_path);
  const auto rows = lines(text);
  if (rows.empty()) fail(ErrorCode::SchemaMismatch, "empty click file");
  check_header(rows[0], "tau,j,count");
  if (rows.size() - 1 != slices * width) fail(ErrorCode::CorruptData, "click table has the wrong number of rows");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cols = split(rows[r]);
    if (cols.size() != 3) fail(ErrorCode::CorruptData, "row " + std::to_string(r) + " needs 3 columns");
    const auto tau = parse_int(cols[0]), j = parse_int(cols[1]), c = parse_int(cols[2]);
    if (tau < 0 || static_cast<std::size_t>(tau) >= slices || j < -data.k_det || j > data.k_det || c < 0)
      fail(ErrorCode::CorruptData, "click row " + std::to_string(r) + " out of range");
    data.clicks(static_cast<std::size_t>(tau), static_cast<std::size_t>(j + data.k_det)) = static_cast<std::uint64_t>(c);
  }
  data.validate();
  return data;
}

using LoadedEvents = std::variant<EventLog, PairEventLog, DetectorData>;

/// Loads whichever log lives at `path` (a CSV file or a directory holding one),
/// dispatching on the sidecar kind.
inline LoadedEvents load_events(const fs::path& path) {
  fs::path sidecar;
  if (fs::is_directory(path)) {
    for (const char* stem : {"events", "pairs", "clicks"})
      if (fs::exists(path / (std::string(stem) + ".json"))) sidecar = path / (std::string(stem) + ".json");
    if (sidecar.empty()) fail(ErrorCode::SchemaMismatch, "no event sidecar in " + path.string());
  } else {
    sidecar = path;
    sidecar.replace_extension(".json");
  }
  const auto kind = field<std::string>(read_json(sidecar), "kind");
  if (kind == "sg") return load_event_log(sidecar.replace_extension(".csv"));
  if (kind == "eprb") return load_pair_log(sidecar.replace_extension(".csv"));
  if (kind == "clicks") return load_detector_data(sidecar.replace_extension(".csv"));
  fail(ErrorCode::SchemaMismatch, "unknown log kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Operators.

inline json operator_to_json(const HermitianOperator& op) {
  json rows = json::array();
  for (int r = 0; r < op.dim(); ++r) {
    json row = json::array();
    for (int c = 0; c < op.dim(); ++c) row.push_back({op(r, c).real(), op(r, c).imag()});
    rows.push_back(row);
  }
  return {{"dim", op.dim()}, {"entries", rows}};
}

inline HermitianOperator operator_from_json(const json& j) {
  const int dim = field<int>(j, "dim");
  const auto& entries = j.at("entries");
  if (!entries.is_array() || static_cast<int>(entries.size()) != dim)
    fail(ErrorCode::SchemaMismatch, "operator entries do not match dim");
  ComplexMatrix m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    if (static_cast<int>(entries[r].size()) != dim) fail(ErrorCode::SchemaMismatch, "ragged operator row");
    for (int c = 0; c < dim; ++c) m(r, c) = Complex(entries[r][c][0].get<double>(), entries[r][c][1].get<double>());
  }
  return HermitianOperator(m);
}

// ---------------------------------------------------------------------------
// Tabular inputs for the separation procedure.

namespace detail {

struct Table {
  std::map<std::string, std::size_t> columns;
  std::vector<std::vector<double>> rows;

  double get(std::size_t r, const std::string& name, std::optional<double> fallback = std::nullopt) const {
    const auto it = columns.find(name);
    if (it == columns.end()) {
      if (fallback) return *fallback;
      fail(ErrorCode::SchemaMismatch, "missing column '" + name + "'");
    }
    return rows[r][it->second];
  }
};

inline Table read_table(const fs::path& path) {
  const std::string text = read_file(path);
  const auto rows = lines(text);
  if (rows.empty()) fail(ErrorCode::SchemaMismatch, "empty table " + path.string());
  Table t;
  const auto header = split(rows[0]);
  for (std::size_t c = 0; c < header.size(); ++c) t.columns.emplace(std::string(header[c]), c);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].empty()) continue;
    const auto cols = split(rows[r]);
    if (cols.size() != header.size()) fail(ErrorCode::CorruptData, "row " + std::to_string(r) + " has the wrong width");
    std::vector<double> v;
    for (auto c : cols) v.push_back(parse_double(c));
    t.rows.push_back(std::move(v));
  }
  return t;
}

inline UnitVector3 unit_columns(const Table& t, std::size_t r, const std::string& prefix) {
  return UnitVector3(Vec3{t.get(r, prefix + "_x"), t.get(r, prefix + "_y"), t.get(r, prefix + "_z")});
}

}  // namespace detail

inline constexpr std::string_view kSgCorrelationHeader = "a_x,a_y,a_z,m_x,m_y,m_z,mean_x,std_error";
inline constexpr std::string_view kEprbCorrelationHeader =
    "a1_x,a1_y,a1_z,a2_x,a2_y,a2_z,mean_x,mean_y,mean_xy,std_error";

/// Columns a_*, m_*, mean_x and optionally std_error.
inline std::vector<SgObservation> load_sg_correlations(const fs::path& path) {
  const auto t = detail::read_table(path);
  std::vector<SgObservation> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    out.push_back({detail::unit_columns(t, r, "a"), detail::unit_columns(t, r, "m"), t.get(r, "mean_x"),
                   t.get(r, "std_error", 0.0)});
  return out;
}

inline std::string sg_correlations_csv(std::span<const SgObservation> obs) {
  std::string csv = std::string(kSgCorrelationHeader) + "\n";
  for (const auto& o : obs) {
    for (double v : {o.a.x(), o.a.y(), o.a.z(), o.m.x(), o.m.y(), o.m.z(), o.mean_x, o.std_error})
      csv += format_double(v) + ",";
    csv.back() = '\n';
  }
  return csv;
}

/// Columns a1_*, a2_*, mean_x, mean_y, mean_xy and optionally std_error.
inline std::vector<EprbObservation> load_eprb_correlations(const fs::path& path) {
  const auto t = detail::read_table(path);
  std::vector<EprbObservation> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    out.push_back({detail::unit_columns(t, r, "a1"), detail::unit_columns(t, r, "a2"), t.get(r, "mean_x"),
                   t.get(r, "mean_y"), t.get(r, "mean_xy"), t.get(r, "std_error", 0.0)});
  return out;
}

inline std::string eprb_correlations_csv(std::span<const EprbObservation> obs) {
  std::string csv = std::string(kEprbCorrelationHeader) + "\n";
  for (const auto& o : obs) {
    for (double v : {o.a1.x(), o.a1.y(), o.a1.z(), o.a2.x(), o.a2.y(), o.a2.z(), o.mean_x, o.mean_y, o.mean_xy,
                     o.std_error})
      csv += format_double(v) + ",";
    csv.back() = '\n';
  }
  return csv;
}

// ---------------------------------------------------------------------------
// Trajectories.

/// One snapshot as x,re_psi,im_psi,P,S (x in length units, psi in
/// length^-1/2, P in 1/length, S in action units). S is empty where the
/// phase is undefined.
inline std::string snapshot_csv(std::span<const Complex> psi, const SpatialGrid& grid, double lambda,
                                double floor = 1e-12) {
  WaveField w{ComplexField(1, psi.size()), std::nullopt};
  std::copy(psi.begin(), psi.end(), w.psi.slice(0).begin());
  std::optional<PolarField> polar;
  try {
    polar = wave_to_polar(w, lambda, floor);
  } catch (const Error&) {
  }
  std::string csv = "x,re_psi,im_psi,P,S\n";
  for (std::size_t i = 0; i < psi.size(); ++i) {
    csv += format_double(grid.x(i)) + "," + format_double(psi[i].real()) + "," + format_double(psi[i].imag()) + "," +
           format_double(std::norm(psi[i])) + ",";
    if (polar && polar->is_valid(0, i)) csv += format_double(polar->S(0, i));
    csv += "\n";
  }
  return csv;
}

// ---------------------------------------------------------------------------
// Manifests.

struct RunManifest {
  json config;
  std::string version = std::string(kVersion);
  std::vector<std::uint64_t> seeds;
  std::string timestamp;
  std::map<std::string, std::string> digests;  ///< path relative to the run directory -> SHA-256

  json to_json() const {
    return {{"schema", kSchemaVersion}, {"version", version}, {"config", config},
            {"seeds", seeds},           {"timestamp", timestamp}, {"outputs", digests}};
  }

  static RunManifest from_json(const json& j) {
    RunManifest m;
    if (field<int>(j, "schema") != kSchemaVersion) fail(ErrorCode::SchemaMismatch, "unsupported manifest schema");
    m.config = j.value("config", json());
    m.version = field<std::string>(j, "version");
    m.seeds = field<std::vector<std::uint64_t>>(j, "seeds");
    m.timestamp = field<std::string>(j, "timestamp");
    m.digests = field<std::map<std::string, std::string>>(j, "outputs");
    return m;
  }
};

inline constexpr std::string_view kManifestName = "manifest.json";

/// Hashes `outputs` (relative to `dir`) and writes dir/manifest.json.
inline RunManifest write_manifest(const fs::path& dir, json config, std::vector<std::uint64_t> seeds,
                                  const std::vector<fs::path>& outputs) {
  RunManifest m;
  m.config = std::move(config);
  m.seeds = std::move(seeds);
  m.timestamp = utc_timestamp();
  for (const auto& p : outputs) {
    const auto rel = p.is_absolute() ? fs::relative(p, dir) : p;
    m.digests[rel.generic_string()] = sha256_file(dir / rel);
  }
  write_file(dir / kManifestName, m.to_json().dump(2) + "\n");
  return m;
}

struct DigestMismatch {
  std::string path;
  std::string expected;
  std::string actual;  ///< empty when the file is missing
};

/// Recomputes every digest listed in dir/manifest.json.
inline std::vector<DigestMismatch> verify_manifest(const fs::path& dir) {
  const auto m = RunManifest::from_json(read_json(dir / kManifestName));
  std::vector<DigestMismatch> bad;
  for (const auto& [path, digest] : m.digests) {
    const auto full = dir / path;
    const std::string actual = fs::exists(full) ? sha256_file(full) : std::string();
    if (actual != digest) bad.push_back({path, digest, actual});
  }
  return bad;
}

}  // namespace liqt::io
