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
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gridiron/constraints.hpp"
#include "gridiron/core_model.hpp"
#include "gridiron/error.hpp"
#include "gridiron/rational.hpp"

namespace gridiron {

enum class FailureCause { compute, memory, network };

inline const char* to_string(FailureCause c) {
  switch (c) {
    case FailureCause::compute: return "compute";
    case FailureCause::memory: return "memory";
    case FailureCause::network: return "network";
  }
  return "?";
}

struct FailureRecord {
  Tick tick;
  std::string vdc;
  std::string vm;
  FailureCause cause = FailureCause::compute;
  std::string bottleneck;  // "uplink:<server>", "cores", "memory"

  friend bool operator==(const FailureRecord&, const FailureRecord&) = default;
};

/// Vlinks with k_here VMs of a VDC on one server and k_there on another.
inline std::int64_t crossing_vlinks(std::int64_t k_here, std::int64_t k_there) {
  if (k_here < 0 || k_there < 0) throw Error("VM counts must be non-negative");
  return k_here * k_there;
}

/// Residual resources and current VM/vlink placement. A vlink between
/// colocated VMs is free; otherwise it is charged in full to both endpoint
/// servers' uplinks.
class PlacementState {
 public:
  explicit PlacementState(const DatacenterSpec& dc) : dc_(dc) {
    dc_.validate();
    const std::size_t n = dc_.servers.size();
    used_cores_.assign(n, 0);
    used_memory_.assign(n, Gigabytes{0});
    uplink_load_.assign(n, Mbps{0});
    for (std::size_t i = 0; i < n; ++i) {
      index_.emplace(dc_.servers[i].id, i);
      capacity_.push_back(dc_.servers[i].uplink_capacity());
    }
  }

  const DatacenterSpec& datacenter() const { return dc_; }
  std::size_t server_count() const { return dc_.servers.size(); }

  std::size_t server_index(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error("unknown server " + id);
    return it->second;
  }

  int free_cores(std::size_t s) const { return dc_.servers.at(s).cores - used_cores_.at(s); }
  Gigabytes free_memory(std::size_t s) const { return dc_.servers.at(s).memory_gb - used_memory_.at(s); }
  int used_cores(std::size_t s) const { return used_cores_.at(s); }
  Gigabytes used_memory(std::size_t s) const { return used_memory_.at(s); }
  Mbps uplink_capacity(std::size_t s) const { return capacity_.at(s); }

  /// Bandwidth of alive vlinks with exactly one endpoint on the server.
  Mbps uplink_load(std::size_t s) const { return uplink_load_.at(s); }
  Mbps uplink_load(const std::string& server_id) const { return uplink_load_[server_index(server_id)]; }

  std::optional<std::size_t> host_of(const std::string& vm) const {
    auto it = vms_.find(vm);
    if (it == vms_.end()) return std::nullopt;
    return it->second.server;
  }

  /// Number of the VDC's VMs currently on the server.
  int vdc_vms_on(const std::string& vdc, std::size_t s) const {
    auto it = vdc_counts_.find(vdc);
    if (it == vdc_counts_.end()) return 0;
    return it->second.at(s);
  }

  struct Check {
    bool compute = false;
    bool memory = false;
    bool network = false;
    std::string bottleneck;

    bool ok() const { return compute && memory && network; }
  };

  /// Whether `vm` fits on server `s` together with `links` to already placed
  /// peers, without changing anything.
  Check check(const VmCreate& vm, std::span<const Vlink> links, std::size_t s) const {
    Check c;
    c.compute = free_cores(s) >= vm.cores;
    c.memory = free_memory(s) >= vm.memory_gb;
    if (!c.compute) c.bottleneck = "cores:" + dc_.servers[s].id;
    else if (!c.memory) c.bottleneck = "memory:" + dc_.servers[s].id;
    if (!c.compute || !c.memory) return c;
    std::map<std::size_t, Mbps> delta;
    for (const auto& l : links) {
      const std::string& peer = l.a == vm.vm ? l.b : l.a;
      auto peer_host = host_of(peer);
      if (!peer_host) throw Error("vlink peer " + peer + " is not placed");
      if (*peer_host == s) continue;
      delta[s] += l.bandwidth;
      delta[*peer_host] += l.bandwidth;
    }
    c.network = true;
    for (const auto& [server, extra] : delta) {
      if (uplink_load_[server] + extra > capacity_[server]) {
        c.network = false;
        c.bottleneck = "uplink:" + dc_.servers[server].id;
        break;
      }
    }
    return c;
  }

  /// Whether a vlink between two placed VMs fits.
  Check check_link(const Vlink& l) const {
    Check c;
    c.compute = c.memory = c.network = true;
    auto ha = host_of(l.a), hb = host_of(l.b);
    if (!ha || !hb) throw Error("vlink " + l.a + "-" + l.b + " between unplaced VMs");
    if (*ha == *hb) return c;
    for (std::size_t s : {std::min(*ha, *hb), std::max(*ha, *hb)}) {
      if (uplink_load_[s] + l.bandwidth > capacity_[s]) {
        c.network = false;
        c.bottleneck = "uplink:" + dc_.servers[s].id;
        break;
      }
    }
    return c;
  }

  void place(const std::string& vdc, const VmCreate& vm, std::size_t s) {
    if (vms_.contains(vm.vm)) throw Error("VM " + vm.vm + " already placed");
    if (free_cores(s) < vm.cores || free_memory(s) < vm.memory_gb)
      throw Error("placing " + vm.vm + " overcommits server " + dc_.servers.at(s).id);
    used_cores_[s] += vm.cores;
    used_memory_[s] += vm.memory_gb;
    vms_.emplace(vm.vm, Placed{vdc, s, vm.cores, vm.memory_gb});
    auto& counts = vdc_counts_[vdc];
    if (counts.empty()) counts.assign(server_count(), 0);
    ++counts[s];
  }

  void add_link(const Vlink& l) {
    auto key = std::make_pair(l.a, l.b);
    if (links_.contains(key)) throw Error("vlink " + l.a + "-" + l.b + " already allocated");
    auto ha = host_of(l.a), hb = host_of(l.b);
    if (!ha || !hb) throw Error("vlink " + l.a + "-" + l.b + " between unplaced VMs");
    if (*ha != *hb) {
      if (uplink_load_[*ha] + l.bandwidth > capacity_[*ha] ||
          uplink_load_[*hb] + l.bandwidth > capacity_[*hb])
        throw Error("vlink " + l.a + "-" + l.b + " overcommits an uplink");
      uplink_load_[*ha] += l.bandwidth;
      uplink_load_[*hb] += l.bandwidth;
    }
    links_.emplace(key, l.bandwidth);
    adjacency_[l.a].insert(l.b);
    adjacency_[l.b].insert(l.a);
  }

  bool has_link(const std::string& a, const std::string& b) const {
    return links_.contains(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
  }

  void remove_link(const std::string& a, const std::string& b) {
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = links_.find(key);
    if (it == links_.end()) throw Error("vlink " + a + "-" + b + " is not allocated");
    auto ha = *host_of(a), hb = *host_of(b);
    if (ha != hb) {
      uplink_load_[ha] -= it->second;
      uplink_load_[hb] -= it->second;
    }
    links_.erase(it);
    adjacency_[a].erase(b);
    adjacency_[b].erase(a);
  }

  /// Releases the VM and any vlinks still attached to it.
  void remove_vm(const std::string& vm) {
    auto it = vms_.find(vm);
    if (it == vms_.end()) throw Error("VM " + vm + " is not placed");
    if (auto adj = adjacency_.find(vm); adj != adjacency_.end()) {
      for (const auto& peer : std::vector<std::string>(adj->second.begin(), adj->second.end()))
        remove_link(vm, peer);
      adjacency_.erase(vm);
    }
    const Placed& p = it->second;
    used_cores_[p.server] -= p.cores;
    used_memory_[p.server] -= p.memory_gb;
    --vdc_counts_[p.vdc][p.server];
    vms_.erase(it);
  }

 private:
  struct Placed {
    std::string vdc;
    std::size_t server;
    int cores;
    Gigabytes memory_gb;
  };

  DatacenterSpec dc_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<int> used_cores_;
  std::vector<Gigabytes> used_memory_;
  std::vector<Mbps> uplink_load_;
  std::vector<Mbps> capacity_;
  std::unordered_map<std::string, Placed> vms_;
  std::map<std::pair<std::string, std::string>, Mbps> links_;
  std::unordered_map<std::string, std::set<std::string>> adjacency_;
  std::unordered_map<std::string, std::vector<int>> vdc_counts_;
};

// ---------------------------------------------------------------------------
// Placement policies

/// Orders the candidate servers for a VM. The simulator takes the first
/// candidate that satisfies compute, memory and all creation-tick vlinks.
using PlacementPolicy =
    std::function<std::vector<std::size_t>(const PlacementState&, const std::string& vdc,
                                           const VmCreate&)>;

/// Servers in index order.
inline PlacementPolicy first_fit_by_index() {
  return [](const PlacementState& st, const std::string&, const VmCreate&) {
    std::vector<std::size_t> order(st.server_count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    return order;
  };
}

/// Servers holding the fewest VMs of the same VDC first, then by index.
inline PlacementPolicy first_fit_spread() {
  return [](const PlacementState& st, const std::string& vdc, const VmCreate&) {
    std::vector<std::size_t> order(st.server_count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return st.vdc_vms_on(vdc, x) < st.vdc_vms_on(vdc, y);
    });
    return order;
  };
}

/// A fixed VM-to-server map; every VM has exactly one candidate.
inline PlacementPolicy pinned(std::unordered_map<std::string, std::size_t> hosts) {
  return [hosts = std::move(hosts)](const PlacementState&, const std::string&,
                                    const VmCreate& vm) {
    auto it = hosts.find(vm.vm);
    if (it == hosts.end()) throw Error("no pinned server for VM " + vm.vm);
    return std::vector<std::size_t>{it->second};
  };
}

inline PlacementPolicy policy_by_name(const std::string& name) {
  if (name == "first-fit" || name == "first-fit-by-server-index") return first_fit_by_index();
  if (name == "first-fit-spread" || name == "spread") return first_fit_spread();
  throw Error("unknown placement policy '" + name +
              "' (expected first-fit-by-server-index or first-fit-spread)");
}

// ---------------------------------------------------------------------------
// Replay

struct UtilizationSample {
  Tick tick;
  std::string server;
  int cores_used = 0;
  Gigabytes memory_used{0};
  Mbps uplink_used{0};
  Mbps uplink_capacity{0};
};

struct ReplayResult {
  std::vector<FailureRecord> failures;
  std::map<std::string, int> colocation;  // vdc -> D, over all ticks and servers
  std::vector<UtilizationSample> utilization;

  std::size_t count(FailureCause cause) const {
    return static_cast<std::size_t>(std::count_if(
        failures.begin(), failures.end(), [&](const FailureRecord& f) { return f.cause == cause; }));
  }
  std::size_t network_failures() const { return count(FailureCause::network); }
};

/// Sequential replay of a canonical event stream onto a datacenter. Feed
/// events in order; each tick is applied once the next tick begins or on
/// finish(). Within a tick, releases happen before allocations. A VM is
/// placed together with every creation-tick vlink to an already placed peer,
/// atomically; if no candidate server can host both, the VM fails and its
/// later events are ignored.
class Simulator {
 public:
  Simulator(const DatacenterSpec& dc, PlacementPolicy policy, bool record_utilization = true)
      : state_(dc), policy_(std::move(policy)), record_utilization_(record_utilization) {}

  const PlacementState& state() const { return state_; }

  void feed(VdcEvent e) {
    if (!pending_.empty() && compare_events(pending_.back(), e) >= 0)
      throw Error("event out of canonical order: " + detail::describe(e));
    if (!pending_.empty() && pending_.back().tick != e.tick) flush();
    pending_.push_back(std::move(e));
  }

  ReplayResult finish() {
    flush();
    return std::move(result_);
  }

 private:
  void flush() {
    if (pending_.empty()) return;
    const Tick tick = pending_.front().tick;

    std::vector<const VdcEvent*> creates;
    std::vector<const Vlink*> new_links;
    std::vector<const std::string*> link_vdcs;
    for (const auto& e : pending_) {
      std::visit(
          [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, VlinkDelete>) {
              if (failed_links_.erase({p.a, p.b}) > 0) return;
              require_known(p.a);
              require_known(p.b);
              if (state_.has_link(p.a, p.b)) state_.remove_link(p.a, p.b);
              else if (!failed_.contains(p.a) && !failed_.contains(p.b))
                throw Error("delete of unknown vlink " + p.a + "-" + p.b);
            } else if constexpr (std::is_same_v<T, VmDelete>) {
              require_known(p.vm);
              if (state_.host_of(p.vm)) state_.remove_vm(p.vm);
              else failed_.erase(p.vm);
              retired_.insert(p.vm);
            } else if constexpr (std::is_same_v<T, VmCreate>) {
              if (known_.contains(p.vm)) throw Error("VM " + p.vm + " created twice");
              creates.push_back(&e);
            } else {
              new_links.push_back(&p.link);
              link_vdcs.push_back(&e.vdc);
            }
          },
          e.payload);
    }

    // vlinks of this tick, indexed by endpoint; consumed as they are placed.
    std::unordered_map<std::string, std::vector<std::size_t>> by_vm;
    std::vector<bool> consumed(new_links.size(), false);
    for (std::size_t i = 0; i < new_links.size(); ++i) {
      by_vm[new_links[i]->a].push_back(i);
      by_vm[new_links[i]->b].push_back(i);
    }

    for (const VdcEvent* e : creates) {
      const auto& vm = std::get<VmCreate>(e->payload);
      known_.insert(vm.vm);
      std::vector<Vlink> links;
      std::vector<std::size_t> link_ids;
      for (std::size_t i : by_vm[vm.vm]) {
        const Vlink& l = *new_links[i];
        const std::string& peer = l.a == vm.vm ? l.b : l.a;
        if (state_.host_of(peer)) {
          links.push_back(l);
          link_ids.push_back(i);
        } else if (failed_.contains(peer)) {
          consumed[i] = true;
          failed_links_.insert({l.a, l.b});
        }
      }
      place_vm(tick, e->vdc, vm, links, link_ids, consumed);
    }

    for (std::size_t i = 0; i < new_links.size(); ++i) {
      if (consumed[i]) continue;
      const Vlink& l = *new_links[i];
      require_known(l.a);
      require_known(l.b);
      if (failed_.contains(l.a) || failed_.contains(l.b)) {
        failed_links_.insert({l.a, l.b});
        continue;
      }
      if (!state_.host_of(l.a) || !state_.host_of(l.b))
        throw Error("vlink " + l.a + "-" + l.b + " references a deleted VM");
      auto c = state_.check_link(l);
      if (c.network) {
        state_.add_link(l);
      } else {
        failed_links_.insert({l.a, l.b});
        result_.failures.push_back({tick, *link_vdcs[i], l.a + "-" + l.b, FailureCause::network,
                                    c.bottleneck});
      }
    }

    if (record_utilization_) {
      for (std::size_t s = 0; s < state_.server_count(); ++s)
        result_.utilization.push_back({tick, state_.datacenter().servers[s].id,
                                       state_.used_cores(s), state_.used_memory(s),
                                       state_.uplink_load(s), state_.uplink_capacity(s)});
    }
    pending_.clear();
  }

  void place_vm(Tick tick, const std::string& vdc, const VmCreate& vm,
                const std::vector<Vlink>& links, const std::vector<std::size_t>& link_ids,
                std::vector<bool>& consumed) {
    bool any_compute = false, any_memory = false;
    std::string network_bottleneck;
    for (std::size_t s : policy_(state_, vdc, vm)) {
      if (s >= state_.server_count()) throw Error("placement policy returned an unknown server");
      auto c = state_.check(vm, links, s);
      any_compute |= c.compute;
      any_memory |= c.compute && c.memory;
      if (c.ok()) {
        state_.place(vdc, vm, s);
        for (const auto& l : links) state_.add_link(l);
        for (std::size_t i : link_ids) consumed[i] = true;
        int& d = result_.colocation[vdc];
        d = std::max(d, state_.vdc_vms_on(vdc, s));
        return;
      }
      if (c.compute && c.memory && network_bottleneck.empty()) network_bottleneck = c.bottleneck;
    }
    FailureCause cause = any_memory    ? FailureCause::network
                         : any_compute ? FailureCause::memory
                                       : FailureCause::compute;
    std::string bottleneck = cause == FailureCause::network  ? network_bottleneck
                             : cause == FailureCause::memory ? "memory"
                                                             : "cores";
    failed_.insert(vm.vm);
    for (std::size_t i : link_ids) consumed[i] = true;
    for (const auto& l : links) failed_links_.insert({l.a, l.b});
    result_.failures.push_back({tick, vdc, vm.vm, cause, bottleneck});
  }

  void require_known(const std::string& vm) const {
    if (!known_.contains(vm)) throw Error("workload references unknown VM " + vm);
    if (retired_.contains(vm)) throw Error("workload references deleted VM " + vm);
  }

  PlacementState state_;
  PlacementPolicy policy_;
  bool record_utilization_;
  std::vector<VdcEvent> pending_;
  ReplayResult result_;
  std::unordered_set<std::string> known_;
  std::unordered_set<std::string> retired_;
  std::unordered_set<std::string> failed_;
  std::set<std::pair<std::string, std::string>> failed_links_;
};

inline ReplayResult replay(const Workload& workload, const DatacenterSpec& dc,
                           PlacementPolicy policy, bool record_utilization = true) {
  Simulator sim(dc, std::move(policy), record_utilization);
  for (const auto& e : workload.events) sim.feed(e);
  return sim.finish();
}

/// Failure report CSV: tick,vdc,vm,cause,bottleneck.
inline void write_failures(std::ostream& out, std::span<const FailureRecord> failures) {
  out << "tick,vdc,vm,cause,bottleneck\n";
  for (const auto& f : failures)
    out << f.tick.index << ',' << f.vdc << ',' << f.vm << ',' << to_string(f.cause) << ','
        << f.bottleneck << '\n';
}

/// Utilization CSV, one row per server per tick that had events.
inline void write_utilization(std::ostream& out, std::span<const UtilizationSample> samples) {
  out << "tick,server,cores_used,memory_used_gb,uplink_used_mbps,uplink_capacity_mbps\n";
  for (const auto& u : samples)
    out << u.tick.index << ',' << u.server << ',' << u.cores_used << ','
        << format_rational(u.memory_used) << ',' << format_rational(u.uplink_used) << ','
        << format_rational(u.uplink_capacity) << '\n';
}

}  // namespace gridiron
