// Copyright 2026 The asattr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// File formats.
//
// Panel container (".asp"):
//   bytes 0..3    "ASP1"
//   bytes 4..27   N, T, D as little-endian uint64
//   payload       N*T*D little-endian float64, index ((i*T)+t)*D+d
//   trailer       N agent ids, each terminated by '\n'
//
// CSV files start with a "#schema=<name>.v<k>" line, then a header row.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "asattr/core.hpp"
#include "asattr/panel.hpp"

namespace asattr {

inline constexpr char kPanelMagic[4] = {'A', 'S', 'P', '1'};

namespace detail {

inline void PutU64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t GetU64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) {
    Fail(ErrorKind::kData, "panel file truncated in header");
  }
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

inline std::ifstream OpenIn(const std::string& path,
                            std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) Fail(ErrorKind::kUsage, "cannot open '" + path + "'");
  return in;
}

inline std::ofstream OpenOut(const std::string& path,
                             std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) Fail(ErrorKind::kUsage, "cannot write '" + path + "'");
  return out;
}

inline std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    out.push_back(cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double ParseDouble(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    Fail(ErrorKind::kData, where + ": not a number '" + s + "'");
  }
}

}  // namespace detail

inline void WritePanelBinary(std::ostream& os, const FeaturePanel& p) {
  os.write(kPanelMagic, 4);
  detail::PutU64(os, p.n_agents());
  detail::PutU64(os, p.n_steps());
  detail::PutU64(os, p.n_dims());
  for (double v : p.values()) detail::PutU64(os, std::bit_cast<std::uint64_t>(v));
  for (const auto& id : p.agent_ids()) {
    Require(id.find('\n') == std::string::npos, "agent id contains a newline");
    os << id << '\n';
  }
}

inline FeaturePanel ReadPanelBinary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kPanelMagic, 4) != 0) {
    Fail(ErrorKind::kData, "not an ASP1 panel file");
  }
  const std::uint64_t n = detail::GetU64(is);
  const std::uint64_t t = detail::GetU64(is);
  const std::uint64_t d = detail::GetU64(is);
  if (n == 0 || t == 0 || d == 0 || n > (std::uint64_t{1} << 40) / (t * d)) {
    Fail(ErrorKind::kData, "panel header has implausible dimensions");
  }
  std::vector<double> values(n * t * d);
  for (double& v : values) v = std::bit_cast<double>(detail::GetU64(is));
  std::vector<std::string> ids;
  ids.reserve(n);
  std::string line;
  while (ids.size() < n && std::getline(is, line)) ids.push_back(line);
  if (ids.size() != n) Fail(ErrorKind::kData, "panel file truncated in ids");
  try {
    return FeaturePanel(n, t, d, std::move(values), std::move(ids));
  } catch (const Error& e) {
    Fail(ErrorKind::kData, e.what());
  }
}

inline void WritePanelBinary(const std::string& path, const FeaturePanel& p) {
  auto os = detail::OpenOut(path, std::ios::out | std::ios::binary);
  WritePanelBinary(os, p);
}

inline FeaturePanel ReadPanelBinary(const std::string& path) {
  auto is = detail::OpenIn(path, std::ios::in | std::ios::binary);
  return ReadPanelBinary(is);
}

inline void WriteSchemaLine(std::ostream& os, std::string_view schema) {
  os << "#schema=" << schema << '\n';
}

// agent_id,step,<dim names...>
inline void WritePanelCsv(std::ostream& os, const FeaturePanel& p) {
  WriteSchemaLine(os, "panel.v1");
  os << "agent_id,step";
  for (const auto& name : p.dim_names()) os << ',' << name;
  os << '\n';
  for (std::size_t i = 0; i < p.n_agents(); ++i) {
    for (std::size_t t = 0; t < p.n_steps(); ++t) {
      os << p.agent_ids()[i] << ',' << t;
      for (std::size_t d = 0; d < p.n_dims(); ++d) {
        os << ',' << fmt::format("{:.17g}", p.at(i, t, d));
      }
      os << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Events

// One JSON object with ts, actor, kind and optional text, target, id.
inline std::optional<EventRecord> ParseEventLine(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  EventRecord e;
  auto ts = j.find("ts");
  auto actor = j.find("actor");
  auto kind = j.find("kind");
  if (ts == j.end() || !ts->is_number_integer()) return std::nullopt;
  if (actor == j.end() || !actor->is_string()) return std::nullopt;
  if (kind == j.end() || !kind->is_string()) return std::nullopt;
  const auto k = ParseEventKind(kind->get<std::string>());
  if (!k) return std::nullopt;
  e.ts = ts->get<std::int64_t>();
  e.actor = actor->get<std::string>();
  e.kind = *k;
  for (auto [name, slot] : {std::pair{"text", &e.text}, std::pair{"target", &e.target},
                            std::pair{"id", &e.id}}) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) continue;
    if (!it->is_string()) return std::nullopt;
    *slot = it->get<std::string>();
  }
  if (!e.Valid()) return std::nullopt;
  return e;
}

struct EventFile {
  std::vector<EventRecord> events;
  std::size_t malformed = 0;
};

inline EventFile ReadEventsJsonl(std::istream& is) {
  EventFile out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (auto e = ParseEventLine(line)) {
      out.events.push_back(std::move(*e));
    } else {
      ++out.malformed;
    }
  }
  return out;
}

inline std::string EventToJson(const EventRecord& e) {
  nlohmann::json j;
  j["ts"] = e.ts;
  j["actor"] = e.actor;
  j["kind"] = std::string(ToString(e.kind));
  if (e.text) j["text"] = *e.text;
  if (e.target) j["target"] = *e.target;
  if (e.id) j["id"] = *e.id;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Small CSV inputs

// Numeric matrix; an optional "#..." line and a non-numeric header row are
// skipped.
inline FeatureMatrix ReadMatrixCsv(std::istream& is, const std::string& what) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  bool first_data = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = detail::SplitCsvLine(line);
    if (cells.empty()) continue;
    if (first_data) {
      first_data = false;
      char* end = nullptr;
      std::strtod(cells[0].c_str(), &end);
      if (end == cells[0].c_str()) continue;  // header row
    }
    if (cols == 0) cols = cells.size();
    if (cells.size() != cols) {
      Fail(ErrorKind::kData, what + ": ragged row " + std::to_string(rows + 1));
    }
    for (const auto& c : cells) values.push_back(detail::ParseDouble(c, what));
    ++rows;
  }
  if (rows == 0) Fail(ErrorKind::kData, what + ": no rows");
  return FeatureMatrix(rows, cols, std::move(values));
}

inline FeatureMatrix ReadMatrixCsv(const std::string& path) {
  auto is = detail::OpenIn(path);
  return ReadMatrixCsv(is, path);
}

// actor,count
inline std::unordered_map<std::string, double> ReadFollowerSnapshot(
    const std::string& path) {
  auto is = detail::OpenIn(path);
  std::unordered_map<std::string, double> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = detail::SplitCsvLine(line);
    if (cells.size() != 2) Fail(ErrorKind::kData, path + ": expected actor,count");
    char* end = nullptr;
    const double v = std::strtod(cells[1].c_str(), &end);
    if (end == cells[1].c_str()) continue;  // header row
    if (!(v >= 0.0)) Fail(ErrorKind::kData, path + ": negative follower count");
    out[cells[0]] = v;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flat key = value configuration

class KeyValueConfig {
 public:
  static KeyValueConfig Parse(std::istream& is, const std::string& origin) {
    KeyValueConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        Fail(ErrorKind::kUsage,
             origin + ":" + std::to_string(lineno) + ": expected key = value");
      }
      cfg.values_[Trim(line.substr(0, eq))] = Trim(line.substr(eq + 1));
    }
    return cfg;
  }

  static KeyValueConfig Load(const std::string& path) {
    auto is = detail::OpenIn(path);
    return Parse(is, path);
  }

  bool Has(const std::string& key) const { return values_.contains(key); }

  std::string Get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  // Comma-separated list; empty when absent.
  std::vector<std::string> GetList(const std::string& key) const {
    std::vector<std::string> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    for (auto& cell : detail::SplitCsvLine(it->second)) {
      if (!cell.empty()) out.push_back(cell);
    }
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  // Canonical "key=value\n" text, for hashing.
  std::string Canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

 private:
  static std::string Trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

inline std::uint64_t Fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace asattr
