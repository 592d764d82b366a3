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
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridiron/error.hpp"
#include "gridiron/event_io.hpp"
#include "gridiron/rational.hpp"

namespace gridiron {

struct ServerSpec {
  std::string id;
  int cores = 0;
  Gigabytes memory_gb{0};
  std::vector<Mbps> uplinks;

  /// Aggregate server-to-ToR bandwidth over all uplinks.
  Mbps uplink_capacity() const {
    Mbps total{0};
    for (const auto& u : uplinks) total += u;
    return total;
  }
};

/// Servers with their compute, memory and uplinks. Only server uplinks are
/// charged for bandwidth; `topology` is carried along as free-form
/// documentation of the switch fabric.
struct DatacenterSpec {
  std::vector<ServerSpec> servers;
  nlohmann::json topology;

  void validate() const {
    if (servers.empty()) throw Error("datacenter has no servers");
    std::vector<std::string> ids;
    for (const auto& s : servers) {
      if (s.cores <= 0 || s.memory_gb <= 0)
        throw Error("server " + s.id + " needs positive cores and memory");
      if (s.uplinks.empty()) throw Error("server " + s.id + " has no uplink");
      for (const auto& u : s.uplinks)
        if (u <= 0) throw Error("server " + s.id + " has a non-positive uplink");
      ids.push_back(s.id);
    }
    std::sort(ids.begin(), ids.end());
    if (auto it = std::adjacent_find(ids.begin(), ids.end()); it != ids.end())
      throw Error("duplicate server id " + *it);
  }

  // Each entry is one server, or `count` identical servers named
  // <id_prefix><n> when "count" is present.
  static DatacenterSpec from_json(const nlohmann::json& j) {
    DatacenterSpec dc;
    for (const auto& entry : j.at("servers")) {
      ServerSpec proto;
      proto.cores = entry.at("cores").get<int>();
      proto.memory_gb = quantity_from_json(entry.at("memory_gb"));
      for (const auto& u : entry.at("uplinks_mbps")) proto.uplinks.push_back(quantity_from_json(u));
      if (entry.contains("count")) {
        auto count = entry.at("count").get<int>();
        auto prefix = entry.value("id_prefix", std::string("server"));
        auto first = entry.value("first_index", 0);
        for (int n = 0; n < count; ++n) {
          ServerSpec s = proto;
          s.id = prefix + std::to_string(first + n);
          dc.servers.push_back(std::move(s));
        }
      } else {
        proto.id = entry.at("id").get<std::string>();
        dc.servers.push_back(std::move(proto));
      }
    }
    if (j.contains("topology")) dc.topology = j.at("topology");
    dc.validate();
    return dc;
  }
};

inline DatacenterSpec load_datacenter(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open datacenter spec: " + path);
  try {
    return DatacenterSpec::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("datacenter spec " + path + ": " + e.what());
  }
}

/// C: the largest aggregate uplink capacity of any server.
inline Mbps fattest_uplink(const DatacenterSpec& dc) {
  if (dc.servers.empty()) throw Error("datacenter has no servers");
  Mbps best{0};
  for (const auto& s : dc.servers) best = std::max(best, s.uplink_capacity());
  return best;
}

/// Per-vlink bandwidth limits that avoid vlink-, overpeering- and
/// colocation-caused failures for VDCs of peak size P on uplinks of size C.
struct BandwidthBounds {
  Mbps vlink;       // B <= C
  Mbps overpeer;    // B <= C / (P - 1)
  Mbps colocation;  // B <= C / (P/2)^2
  Mbps effective;   // tightest of the three
};

inline BandwidthBounds bandwidth_bounds(const Mbps& fattest, int peak) {
  if (fattest <= 0) throw Error("uplink capacity must be positive");
  if (peak < 2)
    throw Error("peak VDC size must be at least 2; a VDC can never have more than one VM "
                "otherwise");
  BandwidthBounds b;
  b.vlink = fattest;
  b.overpeer = fattest / (peak - 1);
  // (P/2)^2 as an exact rational, so odd P keeps its fractional half.
  Rational half(peak, 2);
  b.colocation = fattest / (half * half);
  b.effective = std::min({b.vlink, b.overpeer, b.colocation});
  return b;
}

/// Whole-Mbps bandwidth per core: floor the bound, divide, floor again.
inline std::int64_t derive_bpc(const Mbps& effective_bound, int max_cores) {
  if (max_cores <= 0) throw Error("max_cores must be positive");
  if (effective_bound <= 0) throw Error("bandwidth bound must be positive");
  return floor_int(effective_bound) / max_cores;
}

struct ConstraintReport {
  Mbps fattest_uplink;
  int peak = 2;
  BandwidthBounds bounds;
  int max_cores = 1;
  std::int64_t bpc_max = 0;
};

inline ConstraintReport constraint_report(const DatacenterSpec& dc, int peak, int max_cores) {
  ConstraintReport r;
  r.fattest_uplink = fattest_uplink(dc);
  r.peak = peak;
  r.bounds = bandwidth_bounds(r.fattest_uplink, peak);
  r.max_cores = max_cores;
  r.bpc_max = derive_bpc(r.bounds.effective, max_cores);
  return r;
}

inline nlohmann::ordered_json to_json(const ConstraintReport& r) {
  return {{"fattest_uplink_mbps", quantity_json(r.fattest_uplink)},
          {"peak_cap", r.peak},
          {"vlink_bound_mbps", quantity_json(r.bounds.vlink)},
          {"overpeer_bound_mbps", quantity_json(r.bounds.overpeer)},
          {"colocation_bound_mbps", quantity_json(r.bounds.colocation)},
          {"effective_bound_mbps", quantity_json(r.bounds.effective)},
          {"max_cores", r.max_cores},
          {"bpc_max_mbps", r.bpc_max}};
}

inline std::string render_table(const ConstraintReport& r) {
  std::ostringstream out;
  auto row = [&](const std::string& label, const std::string& value) {
    out << label << std::string(label.size() < 30 ? 30 - label.size() : 1, ' ') << value << '\n';
  };
  row("fattest server uplink C", format_rational(r.fattest_uplink) + " Mbps");
  row("peak VDC size P", std::to_string(r.peak));
  row("vlink bound C", format_rational(r.bounds.vlink) + " Mbps");
  row("overpeering bound C/(P-1)", format_rational(r.bounds.overpeer) + " Mbps");
  row("colocation bound C/(P/2)^2", format_rational(r.bounds.colocation) + " Mbps");
  row("effective bound", format_rational(r.bounds.effective) + " Mbps");
  row("largest VM", std::to_string(r.max_cores) + " cores");
  row("bpc max", std::to_string(r.bpc_max) + " Mbps");
  return out.str();
}

struct AmdahlNumbers {
  double memory = 0;  // GB per GHz
  double io = 0;      // Gbps per GHz
};

/// Amdahl's balance ratios; 1 means balanced.
inline AmdahlNumbers amdahl_numbers(const Rational& cpu_ghz, const Rational& memory_gb,
                                    const Rational& net_gbps) {
  if (cpu_ghz <= 0) throw Error("CPU speed must be positive");
  return {to_double(memory_gb / cpu_ghz), to_double(net_gbps / cpu_ghz)};
}

/// VMs in a data-parallel training VDC: batch / mini-batch, rounded up.
inline int ml_vdc_size(int batch, int mini_batch) {
  if (mini_batch <= 0) throw Error("mini-batch size must be positive");
  if (batch <= 0) throw Error("batch size must be positive");
  return (batch + mini_batch - 1) / mini_batch;
}

}  // namespace gridiron
