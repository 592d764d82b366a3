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
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridiron/core_model.hpp"
#include "gridiron/error.hpp"
#include "gridiron/event_io.hpp"
#include "gridiron/ingest.hpp"
#include "gridiron/rational.hpp"

namespace gridiron {

struct WeightedCores {
  int cores = 1;
  double weight = 1;
};

/// Knobs for a synthetic base trace shaped like the Azure VM table: many
/// small deployments and a thin tail of large ones.
struct SynthConfig {
  std::uint64_t seed = 1;
  int deployment_count = 100;
  int horizon_ticks = 288;
  std::string vm_count_kind = "pareto";  // "pareto" or "geometric"
  double vm_count_alpha = 1.3;           // pareto: P(n >= k) = k^-alpha
  double mean_vms_per_deployment = 4;    // geometric: 1 + geometric with this mean
  int max_vms_per_deployment = 256;
  double mean_lifetime_ticks = 24;     // 1 + geometric
  int arrival_window_ticks = 12;       // VM creates spread after the deployment start
  std::vector<WeightedCores> cores_choices{{1, 4}, {2, 4}, {4, 2}, {8, 1}, {16, 0.5}};
  Gigabytes memory_per_core_gb{7, 4};  // 1.75 GB per core
  double instant_vm_fraction = 0;      // > 0 plants instant-VMs for negative tests

  int max_cores() const {
    if (cores_choices.empty()) throw Error("cores_choices is empty");
    int best = 0;
    for (const auto& c : cores_choices) best = std::max(best, c.cores);
    return best;
  }

  void validate() const {
    if (cores_choices.empty()) throw Error("cores_choices is empty");
    for (const auto& c : cores_choices)
      if (c.cores < 1 || !(c.weight > 0)) throw Error("cores_choices need cores >= 1 and weight > 0");
    if (horizon_ticks < 2) throw Error("horizon_ticks must be at least 2");
    if (deployment_count < 0) throw Error("deployment_count must be non-negative");
    if (vm_count_kind != "pareto" && vm_count_kind != "geometric")
      throw Error("vm_count kind must be pareto or geometric, got " + vm_count_kind);
    if (!(vm_count_alpha > 0)) throw Error("vm_count alpha must be positive");
    if (!(mean_vms_per_deployment >= 1)) throw Error("mean_vms_per_deployment must be >= 1");
    if (max_vms_per_deployment < 1) throw Error("max_vms_per_deployment must be >= 1");
    if (!(mean_lifetime_ticks >= 1)) throw Error("mean_lifetime_ticks must be >= 1");
    if (arrival_window_ticks < 0) throw Error("arrival_window_ticks must be non-negative");
    if (memory_per_core_gb <= 0) throw Error("memory_per_core_gb must be positive");
    if (instant_vm_fraction < 0 || instant_vm_fraction > 1)
      throw Error("instant_vm_fraction must be in [0, 1]");
  }

  static SynthConfig from_json(const nlohmann::json& j) {
    SynthConfig c;
    c.seed = j.value("seed", c.seed);
    c.deployment_count = j.value("deployment_count", c.deployment_count);
    c.horizon_ticks = j.value("horizon_ticks", c.horizon_ticks);
    if (j.contains("vm_count")) {
      c.vm_count_kind = j["vm_count"].value("kind", c.vm_count_kind);
      c.vm_count_alpha = j["vm_count"].value("alpha", c.vm_count_alpha);
      c.mean_vms_per_deployment = j["vm_count"].value("mean", c.mean_vms_per_deployment);
      c.max_vms_per_deployment = j["vm_count"].value("max", c.max_vms_per_deployment);
    }
    if (j.contains("lifetime_ticks"))
      c.mean_lifetime_ticks = j["lifetime_ticks"].value("mean", c.mean_lifetime_ticks);
    c.arrival_window_ticks = j.value("arrival_window_ticks", c.arrival_window_ticks);
    if (j.contains("cores_choices")) {
      c.cores_choices.clear();
      for (const auto& e : j["cores_choices"]) {
        if (e.is_number_integer())
          c.cores_choices.push_back({e.get<int>(), 1});
        else
          c.cores_choices.push_back({e.at("cores").get<int>(), e.value("weight", 1.0)});
      }
    }
    if (j.contains("memory_per_core_gb")) c.memory_per_core_gb = quantity_from_json(j["memory_per_core_gb"]);
    c.instant_vm_fraction = j.value("instant_vm_fraction", c.instant_vm_fraction);
    c.validate();
    return c;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json choices = nlohmann::ordered_json::array();
    for (const auto& w : cores_choices) choices.push_back({{"cores", w.cores}, {"weight", w.weight}});
    return {{"seed", seed},
            {"deployment_count", deployment_count},
            {"horizon_ticks", horizon_ticks},
            {"vm_count",
             {{"kind", vm_count_kind},
              {"alpha", vm_count_alpha},
              {"mean", mean_vms_per_deployment},
              {"max", max_vms_per_deployment}}},
            {"lifetime_ticks", {{"mean", mean_lifetime_ticks}}},
            {"arrival_window_ticks", arrival_window_ticks},
            {"cores_choices", choices},
            {"memory_per_core_gb", quantity_json(memory_per_core_gb)},
            {"instant_vm_fraction", instant_vm_fraction}};
  }
};

inline SynthConfig load_synth_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open synth config: " + path);
  try {
    return SynthConfig::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("synth config " + path + ": " + e.what());
  }
}

/// Deterministic for a given config on a given standard library.
inline std::vector<RawVmRow> generate_base(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::geometric_distribution<int> extra_vms(1.0 / config.mean_vms_per_deployment);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto vm_count = [&] {
    if (config.vm_count_kind == "geometric") return 1 + extra_vms(rng);
    // Discrete Pareto by inversion; 1 - u lies in (0, 1].
    double n = std::floor(std::pow(1.0 - unit(rng), -1.0 / config.vm_count_alpha));
    return n >= config.max_vms_per_deployment ? config.max_vms_per_deployment : static_cast<int>(n);
  };
  std::geometric_distribution<int> extra_life(1.0 / config.mean_lifetime_ticks);
  std::uniform_int_distribution<int> start(0, config.horizon_ticks - 2);
  std::uniform_int_distribution<int> offset(0, config.arrival_window_ticks);
  std::bernoulli_distribution instant(config.instant_vm_fraction);
  std::vector<double> weights;
  for (const auto& c : config.cores_choices) weights.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick_cores(weights.begin(), weights.end());

  const std::int64_t last_create = config.horizon_ticks - 2;
  const std::int64_t last_delete = config.horizon_ticks - 1;
  std::vector<RawVmRow> rows;
  for (int d = 0; d < config.deployment_count; ++d) {
    std::string dep = "dep" + std::to_string(d);
    int vms = std::min(vm_count(), config.max_vms_per_deployment);
    std::int64_t dep_start = start(rng);
    for (int k = 0; k < vms; ++k) {
      RawVmRow row;
      row.vm_id = dep + "-vm" + std::to_string(k);
      row.deployment_id = dep;
      row.cores = config.cores_choices[pick_cores(rng)].cores;
      row.memory_gb = config.memory_per_core_gb * row.cores;
      std::int64_t create = std::min<std::int64_t>(dep_start + offset(rng), last_create);
      std::int64_t life = 1 + extra_life(rng);
      std::int64_t del = std::min(create + life, last_delete);
      row.created_s = create * kSecondsPerTick;
      row.deleted_s = instant(rng) ? row.created_s + 60 : del * kSecondsPerTick;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace gridiron
