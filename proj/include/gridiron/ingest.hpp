/*
 * Gridiron
 * Copyright (c) The Gridiron Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "gridiron/core_model.hpp"
#include "gridiron/error.hpp"
#include "gridiron/rational.hpp"

namespace gridiron {

/// One VM as it appears in the raw trace, before any cleanup.
struct RawVmRow {
  std::string vm_id;
  std::string deployment_id;
  std::int64_t created_s = 0;
  std::optional<std::int64_t> deleted_s;  // empty: alive at trace end
  int cores = 1;
  Gigabytes memory_gb{1};

  friend bool operator==(const RawVmRow&, const RawVmRow&) = default;
};

struct PreprocessStats {
  std::size_t raw_vm_count = 0;
  std::size_t raw_deployment_count = 0;
  std::size_t invalid_timestamp_count = 0;
  std::size_t instant_vm_count = 0;
  std::size_t final_vm_count = 0;
  std::size_t final_deployment_count = 0;

  friend bool operator==(const PreprocessStats&, const PreprocessStats&) = default;
};

inline nlohmann::ordered_json to_json(const PreprocessStats& s) {
  return {{"raw_vm_count", s.raw_vm_count},
          {"raw_deployment_count", s.raw_deployment_count},
          {"invalid_timestamp_count", s.invalid_timestamp_count},
          {"instant_vm_count", s.instant_vm_count},
          {"final_vm_count", s.final_vm_count},
          {"final_deployment_count", s.final_deployment_count}};
}

// ---------------------------------------------------------------------------
// Trace schema

/// Maps trace columns onto RawVmRow fields. A column is referenced by header
/// name (requires a header line) or by zero-based index.
struct SchemaConfig {
  struct Column {
    std::string name;
    std::optional<std::size_t> index;
  };

  char delimiter = ',';
  bool has_header = true;
  std::int64_t time_unit_seconds = 1;
  bool open_buckets = false;  // read ">24" style size buckets as their bound
  Column vm_id{"vm_id", {}};
  Column deployment_id{"deployment_id", {}};
  Column created{"created_s", {}};
  Column deleted{"deleted_s", {}};
  Column cores{"cores", {}};
  Column memory{"memory_gb", {}};

  /// The header-bearing CSV written by `synth` and accepted by default.
  static SchemaConfig native() { return {}; }

  /// Resource Central 2017 vmtable.csv: no header; vmid, subscriptionid,
  /// deploymentid, created, deleted, max/avg/p95 cpu, category, cores, memory.
  static SchemaConfig azure_2017() {
    SchemaConfig s;
    s.has_header = false;
    s.open_buckets = true;
    s.vm_id = {"", 0};
    s.deployment_id = {"", 2};
    s.created = {"", 3};
    s.deleted = {"", 4};
    s.cores = {"", 9};
    s.memory = {"", 10};
    return s;
  }

  static SchemaConfig from_json(const nlohmann::json& j) {
    SchemaConfig s;
    if (j.contains("preset")) {
      auto preset = j.at("preset").get<std::string>();
      if (preset == "azure_2017")
        s = azure_2017();
      else if (preset != "native")
        throw Error("unknown schema preset '" + preset + "'");
    }
    if (j.contains("delimiter")) {
      auto d = j.at("delimiter").get<std::string>();
      if (d == "\\t") d = "\t";
      if (d.size() != 1) throw Error("schema delimiter must be one character");
      s.delimiter = d[0];
    }
    if (j.contains("header")) s.has_header = j.at("header").get<bool>();
    if (j.contains("open_buckets")) s.open_buckets = j.at("open_buckets").get<bool>();
    if (j.contains("time_unit_seconds"))
      s.time_unit_seconds = j.at("time_unit_seconds").get<std::int64_t>();
    if (s.time_unit_seconds <= 0) throw Error("time_unit_seconds must be positive");
    if (j.contains("columns")) {
      const auto& cols = j.at("columns");
      auto read = [&](const char* key, Column& col) {
        if (!cols.contains(key)) return;
        const auto& v = cols.at(key);
        if (v.is_number_unsigned())
          col = {"", v.get<std::size_t>()};
        else if (v.is_string())
          col = {v.get<std::string>(), {}};
        else
          throw Error(std::string("column '") + key + "' must be a name or an index");
      };
      read("vm_id", s.vm_id);
      read("deployment_id", s.deployment_id);
      read("created", s.created);
      read("deleted", s.deleted);
      read("cores", s.cores);
      read("memory", s.memory);
    }
    return s;
  }

  nlohmann::ordered_json to_json() const {
    auto col = [](const Column& c) -> nlohmann::ordered_json {
      if (c.index) return *c.index;
      return c.name;
    };
    return {{"delimiter", std::string(1, delimiter)},
            {"header", has_header},
            {"time_unit_seconds", time_unit_seconds},
            {"open_buckets", open_buckets},
            {"columns",
             {{"vm_id", col(vm_id)},
              {"deployment_id", col(deployment_id)},
              {"created", col(created)},
              {"deleted", col(deleted)},
              {"cores", col(cores)},
              {"memory", col(memory)}}}};
  }
};

inline SchemaConfig load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open schema file: " + path);
  try {
    return SchemaConfig::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema " + path + ": " + e.what());
  }
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(delim, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

template <typename Int>
Int parse_int(std::string_view field, std::size_t line, const char* what) {
  Int value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(line, std::string("unparseable ") + what + " '" + std::string(field) + "'");
  return value;
}

// Seconds, accepting integral or decimal values in the schema's unit.
inline std::int64_t parse_time(std::string_view field, std::int64_t unit, std::size_t line,
                               const char* what) {
  Rational r;
  try {
    r = parse_rational(field);
  } catch (const Error&) {
    throw ParseError(line, std::string("unparseable ") + what + " '" + std::string(field) + "'");
  }
  return floor_int(r * unit);
}

}  // namespace detail

struct TraceParseResult {
  std::vector<RawVmRow> rows;
  std::vector<std::string> warnings;
};

/// Streams rows out of a delimited trace, calling `fn(RawVmRow&&)` in input
/// order. Returns the warnings collected along the way.
template <typename Fn>
std::vector<std::string> for_each_trace_row(std::istream& in, const SchemaConfig& schema,
                                            Fn&& fn) {
  std::vector<std::string> warnings;
  std::string line;
  std::size_t line_no = 0;
  std::size_t data_rows = 0;

  struct Resolved {
    std::size_t vm_id, deployment_id, created, deleted, cores, memory;
  } idx{};
  bool resolved = false;

  auto resolve = [&](const std::vector<std::string_view>* header) {
    auto pick = [&](const SchemaConfig::Column& c, const char* field) -> std::size_t {
      if (c.index) return *c.index;
      if (!header)
        throw Error(std::string("schema refers to column '") + c.name + "' for " + field +
                    " by name but the trace has no header");
      for (std::size_t i = 0; i < header->size(); ++i)
        if (detail::trim((*header)[i]) == c.name) return i;
      throw ParseError(line_no, std::string("missing column '") + c.name + "' for " + field);
    };
    idx = {pick(schema.vm_id, "vm_id"), pick(schema.deployment_id, "deployment_id"),
           pick(schema.created, "created"), pick(schema.deleted, "deleted"),
           pick(schema.cores, "cores"), pick(schema.memory, "memory")};
    resolved = true;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = detail::split(line, schema.delimiter);
    if (!resolved) {
      if (schema.has_header) {
        resolve(&fields);
        continue;
      }
      resolve(nullptr);
    }
    std::size_t needed = std::max({idx.vm_id, idx.deployment_id, idx.created, idx.deleted,
                                   idx.cores, idx.memory}) + 1;
    if (fields.size() < needed)
      throw ParseError(line_no, "expected at least " + std::to_string(needed) +
                                    " columns, found " + std::to_string(fields.size()));
    RawVmRow row;
    row.vm_id = std::string(detail::trim(fields[idx.vm_id]));
    row.deployment_id = std::string(detail::trim(fields[idx.deployment_id]));
    if (row.vm_id.empty()) throw ParseError(line_no, "empty vm id");
    row.created_s = detail::parse_time(detail::trim(fields[idx.created]),
                                       schema.time_unit_seconds, line_no, "created timestamp");
    auto deleted = detail::trim(fields[idx.deleted]);
    if (!deleted.empty())
      row.deleted_s =
          detail::parse_time(deleted, schema.time_unit_seconds, line_no, "deleted timestamp");
    auto size_field = [&](std::size_t i) {
      auto f = detail::trim(fields[i]);
      if (schema.open_buckets) {
        if (f.starts_with(">=")) f.remove_prefix(2);
        else if (f.starts_with('>')) f.remove_prefix(1);
      }
      return f;
    };
    row.cores = detail::parse_int<int>(size_field(idx.cores), line_no, "core count");
    try {
      row.memory_gb = parse_rational(size_field(idx.memory));
    } catch (const Error&) {
      throw ParseError(line_no, "unparseable memory '" +
                                    std::string(detail::trim(fields[idx.memory])) + "'");
    }
    ++data_rows;
    fn(std::move(row));
  }
  if (data_rows == 0) warnings.push_back("trace contains no VM rows");
  return warnings;
}

inline TraceParseResult parse_trace(std::istream& in, const SchemaConfig& schema) {
  TraceParseResult result;
  result.warnings =
      for_each_trace_row(in, schema, [&](RawVmRow&& row) { result.rows.push_back(std::move(row)); });
  return result;
}

inline TraceParseResult parse_trace(const std::string& path, const SchemaConfig& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace: " + path);
  return parse_trace(in, schema);
}

/// Writes rows in the native schema.
inline void write_raw_trace(std::ostream& out, std::span<const RawVmRow> rows) {
  out << "vm_id,deployment_id,created_s,deleted_s,cores,memory_gb\n";
  for (const auto& r : rows) {
    out << r.vm_id << ',' << r.deployment_id << ',' << r.created_s << ',';
    if (r.deleted_s) out << *r.deleted_s;
    out << ',' << r.cores << ',' << format_rational(r.memory_gb) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Preprocessing

/// Nearest five-minute boundary; exact midpoints round down.
inline Tick round_timestamp(std::int64_t seconds) {
  if (seconds < 0) throw Error("negative timestamp: " + std::to_string(seconds));
  std::int64_t q = seconds / kSecondsPerTick;
  std::int64_t r = seconds % kSecondsPerTick;
  return Tick{r * 2 > kSecondsPerTick ? q + 1 : q};
}

struct PreprocessResult {
  std::vector<VmRecord> records;
  PreprocessStats stats;
};

/// Rounds timestamps to ticks and drops instant-VMs (same create and delete
/// tick after rounding), producing the base workload. VMs without a delete
/// timestamp live until one tick past the last tick seen in the trace.
inline PreprocessResult preprocess(std::span<const RawVmRow> rows) {
  PreprocessResult out;
  auto& stats = out.stats;
  stats.raw_vm_count = rows.size();

  std::unordered_set<std::string_view> ids;
  std::vector<std::string> duplicates;
  std::unordered_set<std::string_view> raw_deployments;
  Tick last{0};
  for (const auto& r : rows) {
    if (!ids.insert(r.vm_id).second) duplicates.push_back(r.vm_id);
    raw_deployments.insert(r.deployment_id);
    if (r.cores < 1) throw Error("VM " + r.vm_id + " has non-positive core count");
    if (r.memory_gb <= 0) throw Error("VM " + r.vm_id + " has non-positive memory");
    last = std::max(last, round_timestamp(r.created_s));
    if (r.deleted_s) last = std::max(last, round_timestamp(*r.deleted_s));
  }
  if (!duplicates.empty()) {
    std::string msg = "duplicate vm ids:";
    for (const auto& d : duplicates) msg += " " + d;
    throw Error(msg);
  }
  stats.raw_deployment_count = raw_deployments.size();

  std::vector<std::string> reversed;
  std::unordered_set<std::string_view> kept_deployments;
  for (const auto& r : rows) {
    bool invalid = r.created_s % kSecondsPerTick != 0 ||
                   (r.deleted_s && *r.deleted_s % kSecondsPerTick != 0);
    if (invalid) ++stats.invalid_timestamp_count;
    Tick created = round_timestamp(r.created_s);
    Tick deleted = r.deleted_s ? round_timestamp(*r.deleted_s) : Tick{last.index + 1};
    if (deleted < created) {
      reversed.push_back(r.vm_id);
      continue;
    }
    if (deleted == created) {
      ++stats.instant_vm_count;
      continue;
    }
    kept_deployments.insert(r.deployment_id);
    out.records.push_back({r.vm_id, r.deployment_id, created, deleted, r.cores, r.memory_gb});
  }
  if (!reversed.empty()) {
    std::string msg = "VMs deleted before they were created:";
    for (const auto& id : reversed) msg += " " + id;
    throw Error(msg);
  }
  stats.final_vm_count = out.records.size();
  stats.final_deployment_count = kept_deployments.size();
  return out;
}

/// Converts records back to raw rows with tick-aligned timestamps.
inline std::vector<RawVmRow> records_to_rows(std::span<const VmRecord> records) {
  std::vector<RawVmRow> rows;
  rows.reserve(records.size());
  for (const auto& r : records)
    rows.push_back({r.vm_id, r.deployment_id, r.create_tick.index * kSecondsPerTick,
                    r.delete_tick.index * kSecondsPerTick, r.cores, r.memory_gb});
  return rows;
}

// ---------------------------------------------------------------------------
// Preprocessed trace CSV: vm_id,deployment_id,create_tick,delete_tick,cores,memory_gb

inline void write_records(std::ostream& out, std::span<const VmRecord> records) {
  out << "vm_id,deployment_id,create_tick,delete_tick,cores,memory_gb\n";
  for (const auto& r : records)
    out << r.vm_id << ',' << r.deployment_id << ',' << r.create_tick.index << ','
        << r.delete_tick.index << ',' << r.cores << ',' << format_rational(r.memory_gb) << '\n';
}

inline std::vector<VmRecord> read_records(std::istream& in) {
  std::vector<VmRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (detail::trim(line).rfind("vm_id,", 0) != 0)
        throw ParseError(1, "expected preprocessed trace header");
      continue;
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto f = detail::split(line, ',');
    if (f.size() != 6) throw ParseError(line_no, "expected 6 columns");
    VmRecord r;
    r.vm_id = std::string(detail::trim(f[0]));
    r.deployment_id = std::string(detail::trim(f[1]));
    r.create_tick = Tick{detail::parse_int<std::int64_t>(detail::trim(f[2]), line_no, "create tick")};
    r.delete_tick = Tick{detail::parse_int<std::int64_t>(detail::trim(f[3]), line_no, "delete tick")};
    r.cores = detail::parse_int<int>(detail::trim(f[4]), line_no, "core count");
    try {
      r.memory_gb = parse_rational(detail::trim(f[5]));
    } catch (const Error&) {
      throw ParseError(line_no, "unparseable memory");
    }
    if (r.create_tick.index < 0 || r.delete_tick <= r.create_tick)
      throw ParseError(line_no, "VM " + r.vm_id + " has an empty or negative lifetime");
    if (r.cores < 1 || r.memory_gb <= 0)
      throw ParseError(line_no, "VM " + r.vm_id + " has non-positive resources");
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace gridiron
