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
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "gridiron/core_model.hpp"
#include "gridiron/error.hpp"
#include "gridiron/rational.hpp"

namespace gridiron {

struct GridironConfig {
  std::optional<int> peak_cap;  // P; empty means uncapped
  Mbps bpc{1};                  // bandwidth per core of the weaker endpoint
  unsigned threads = 1;         // deployments are split across this many workers

  void validate() const {
    if (peak_cap && *peak_cap < 2)
      throw Error("peak cap must be at least 2, got " + std::to_string(*peak_cap));
    if (bpc <= 0) throw Error("bpc must be positive");
  }
};

/// Largest number of records alive in any single tick.
inline std::size_t peak_size(std::span<const VmRecord> vms) {
  // +1 at create, -1 at delete; deletes sort first within a tick.
  std::vector<std::pair<std::int64_t, int>> deltas;
  deltas.reserve(vms.size() * 2);
  for (const auto& v : vms) {
    deltas.emplace_back(v.create_tick.index, +1);
    deltas.emplace_back(v.delete_tick.index, -1);
  }
  std::sort(deltas.begin(), deltas.end());
  std::ptrdiff_t alive = 0, peak = 0;
  for (auto [tick, d] : deltas) {
    alive += d;
    peak = std::max(peak, alive);
  }
  return static_cast<std::size_t>(peak);
}

/// Weaker-VM rule: a vlink carries bpc times the smaller core count.
inline Mbps vlink_bandwidth(int cores_a, int cores_b, const Mbps& bpc) {
  if (cores_a < 1 || cores_b < 1) throw Error("core counts must be positive");
  if (bpc <= 0) throw Error("bpc must be positive");
  return bpc * std::min(cores_a, cores_b);
}

inline std::string split_vdc_id(const std::string& deployment, std::size_t split) {
  return deployment + "#" + std::to_string(split);
}

struct VdcInfo {
  std::string vdc_id;
  std::string deployment_id;
  std::size_t split_index = 0;
  std::size_t peak_size = 0;
  std::size_t vm_count = 0;

  friend bool operator==(const VdcInfo&, const VdcInfo&) = default;
};

/// Which VDC every VM belongs to, plus per-VDC bookkeeping in creation order.
struct VdcAssignment {
  std::unordered_map<std::string, std::string> vm_to_vdc;
  std::vector<VdcInfo> vdcs;

  const VdcInfo& info(const std::string& vdc_id) const {
    for (const auto& v : vdcs)
      if (v.vdc_id == vdc_id) return v;
    throw Error("unknown vdc " + vdc_id);
  }

  friend bool operator==(const VdcAssignment&, const VdcAssignment&) = default;
};

/// Splits one deployment into VDCs of peak size at most `cap`. VMs are taken
/// in (create tick, input position) order; the current VDC accepts creates
/// until its peak-so-far reaches the cap, after which the next VM opens a
/// fresh VDC. Each split tracks its own peak, so rolling recurses. Without a
/// cap the deployment becomes a single VDC.
inline VdcAssignment roll_overflow(std::span<const VmRecord> deployment,
                                   std::optional<int> cap) {
  if (cap && *cap < 2) throw Error("peak cap must be at least 2, got " + std::to_string(*cap));
  VdcAssignment out;
  if (deployment.empty()) return out;
  const std::string& dep = deployment.front().deployment_id;

  std::vector<std::size_t> order(deployment.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return deployment[x].create_tick < deployment[y].create_tick;
  });

  std::size_t split = 0;
  std::vector<Tick> alive;  // delete ticks of the current split's live VMs
  out.vdcs.push_back({split_vdc_id(dep, 0), dep, 0, 0, 0});
  for (std::size_t i : order) {
    const VmRecord& vm = deployment[i];
    if (vm.deployment_id != dep)
      throw Error("roll_overflow given VMs from several deployments: " + dep + ", " +
                  vm.deployment_id);
    std::erase_if(alive, [&](Tick d) { return d <= vm.create_tick; });
    VdcInfo* current = &out.vdcs.back();
    if (cap && current->peak_size >= static_cast<std::size_t>(*cap)) {
      ++split;
      alive.clear();
      out.vdcs.push_back({split_vdc_id(dep, split), dep, split, 0, 0});
      current = &out.vdcs.back();
    }
    alive.push_back(vm.delete_tick);
    current->peak_size = std::max(current->peak_size, alive.size());
    ++current->vm_count;
    out.vm_to_vdc.emplace(vm.vm_id, current->vdc_id);
  }
  return out;
}

/// Groups records by deployment (first-appearance order) and rolls each one.
/// Deployments are independent, so they are processed on `threads` workers;
/// the result is identical for any thread count.
inline VdcAssignment assign_vdcs(std::span<const VmRecord> records, std::optional<int> cap,
                                 unsigned threads = 1) {
  if (cap && *cap < 2) throw Error("peak cap must be at least 2, got " + std::to_string(*cap));
  std::unordered_map<std::string_view, std::size_t> dep_index;
  std::vector<std::vector<VmRecord>> deployments;
  for (const auto& r : records) {
    auto [it, fresh] = dep_index.try_emplace(r.deployment_id, deployments.size());
    if (fresh) deployments.emplace_back();
    deployments[it->second].push_back(r);
  }

  std::vector<VdcAssignment> parts(deployments.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(deployments.size())));
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t d = w; d < deployments.size(); d += threads)
          parts[d] = roll_overflow(deployments[d], cap);
      });
    }
  }

  VdcAssignment out;
  out.vm_to_vdc.reserve(records.size());
  for (auto& p : parts) {
    out.vm_to_vdc.merge(p.vm_to_vdc);
    for (auto& v : p.vdcs) out.vdcs.push_back(std::move(v));
  }
  if (out.vm_to_vdc.size() != records.size()) throw Error("duplicate vm ids in base workload");
  return out;
}

/// Emits the all-to-all event stream of `base` under `assignment`, one tick
/// at a time and in canonical order, by calling `sink(VdcEvent&&)`. Only one
/// tick's events are held in memory at once.
template <typename Sink>
void stream_workload(std::span<const VmRecord> base, const VdcAssignment& assignment,
                     const Mbps& bpc, Sink&& sink) {
  if (bpc <= 0) throw Error("bpc must be positive");
  std::unordered_map<std::string_view, std::size_t> vdc_index;
  for (std::size_t i = 0; i < assignment.vdcs.size(); ++i)
    vdc_index.emplace(assignment.vdcs[i].vdc_id, i);

  struct Action {
    std::int64_t tick;
    std::size_t vdc;
    bool is_create;
    std::size_t record;
  };
  std::vector<Action> actions;
  actions.reserve(base.size() * 2);
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto& r = base[i];
    if (r.delete_tick <= r.create_tick)
      throw Error("VM " + r.vm_id + " does not outlive its creation tick");
    auto it = assignment.vm_to_vdc.find(r.vm_id);
    if (it == assignment.vm_to_vdc.end()) throw Error("VM " + r.vm_id + " has no VDC");
    std::size_t v = vdc_index.at(it->second);
    actions.push_back({r.create_tick.index, v, true, i});
    actions.push_back({r.delete_tick.index, v, false, i});
  }
  std::sort(actions.begin(), actions.end(), [](const Action& x, const Action& y) {
    return std::tie(x.tick, x.vdc, x.is_create, x.record) <
           std::tie(y.tick, y.vdc, y.is_create, y.record);
  });

  // Alive members per VDC: vm id -> cores.
  std::vector<std::map<std::string, int>> alive(assignment.vdcs.size());
  std::vector<VdcEvent> batch;
  std::size_t i = 0;
  while (i < actions.size()) {
    const std::int64_t tick_index = actions[i].tick;
    const Tick tick{tick_index};
    batch.clear();
    while (i < actions.size() && actions[i].tick == tick_index) {
      const std::size_t v = actions[i].vdc;
      const std::string& vdc = assignment.vdcs[v].vdc_id;
      auto& members = alive[v];
      std::size_t j = i;
      std::vector<const VmRecord*> leaving, joining;
      for (; j < actions.size() && actions[j].tick == tick_index && actions[j].vdc == v; ++j)
        (actions[j].is_create ? joining : leaving).push_back(&base[actions[j].record]);

      for (const VmRecord* r : leaving) {
        for (const auto& [peer, cores] : members)
          if (peer != r->vm_id) batch.push_back(VdcEvent::vlink_delete(tick, vdc, r->vm_id, peer));
        batch.push_back(VdcEvent::vm_delete(tick, vdc, r->vm_id));
        members.erase(r->vm_id);
      }
      for (const VmRecord* r : joining) {
        for (const auto& [peer, cores] : members)
          batch.push_back(VdcEvent::vlink_create(tick, vdc, r->vm_id, peer,
                                                 vlink_bandwidth(r->cores, cores, bpc)));
        batch.push_back(VdcEvent::vm_create(tick, vdc, r->vm_id, r->cores, r->memory_gb));
        if (!members.emplace(r->vm_id, r->cores).second)
          throw Error("VM " + r->vm_id + " created twice");
      }
      i = j;
    }
    batch = sort_events(std::move(batch));
    for (auto& e : batch) sink(std::move(e));
  }
}

/// Full pipeline: rolling-overflow assignment followed by all-to-all
/// bandwidth augmentation.
inline Workload build_workload(std::span<const VmRecord> base, const GridironConfig& config,
                               VdcAssignment* assignment_out = nullptr) {
  config.validate();
  VdcAssignment assignment = assign_vdcs(base, config.peak_cap, config.threads);
  Workload w;
  stream_workload(base, assignment, config.bpc,
                  [&](VdcEvent&& e) { w.events.push_back(std::move(e)); });
  w.vdc_count = assignment.vdcs.size();
  w.vm_count = base.size();
  if (assignment_out) *assignment_out = std::move(assignment);
  return w;
}

/// VDC manifest CSV: vdc_id,deployment_id,peak_size,vm_count.
inline void write_vdc_manifest(std::ostream& out, const VdcAssignment& assignment) {
  out << "vdc_id,deployment_id,peak_size,vm_count\n";
  for (const auto& v : assignment.vdcs)
    out << v.vdc_id << ',' << v.deployment_id << ',' << v.peak_size << ',' << v.vm_count << '\n';
}

}  // namespace gridiron
