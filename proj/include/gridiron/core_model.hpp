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
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "gridiron/error.hpp"
#include "gridiron/rational.hpp"

namespace gridiron {

/// Seconds of trace time covered by one tick.
inline constexpr std::int64_t kSecondsPerTick = 300;

/// Ticks in a 30-day trace at five-minute granularity.
inline constexpr std::int64_t kTraceTicks = 8640;

struct Tick {
  std::int64_t index = 0;

  friend constexpr auto operator<=>(Tick, Tick) = default;
};

struct VmRecord {
  std::string vm_id;
  std::string deployment_id;
  Tick create_tick;
  Tick delete_tick;  // exclusive: alive on [create_tick, delete_tick)
  int cores = 1;
  Gigabytes memory_gb{1};

  friend bool operator==(const VmRecord&, const VmRecord&) = default;
};

/// Undirected VM pair. Endpoints are stored in lexical order.
struct Vlink {
  std::string a;
  std::string b;
  Mbps bandwidth{0};

  static Vlink make(std::string x, std::string y, Mbps bandwidth) {
    if (x == y) throw Error("vlink endpoints must differ: " + x);
    if (y < x) std::swap(x, y);
    return Vlink{std::move(x), std::move(y), bandwidth};
  }

  friend bool operator==(const Vlink&, const Vlink&) = default;
};

struct VmCreate {
  std::string vm;
  int cores = 1;
  Gigabytes memory_gb{1};
  friend bool operator==(const VmCreate&, const VmCreate&) = default;
};

struct VmDelete {
  std::string vm;
  friend bool operator==(const VmDelete&, const VmDelete&) = default;
};

struct VlinkCreate {
  Vlink link;
  friend bool operator==(const VlinkCreate&, const VlinkCreate&) = default;
};

struct VlinkDelete {
  std::string a;  // a < b
  std::string b;
  friend bool operator==(const VlinkDelete&, const VlinkDelete&) = default;
};

// Alternative order is the within-tick order: vlink deletes, VM deletes,
// VM creates, vlink creates. Resources are released before they are
// consumed and a vlink never outlives or predates its endpoints.
using EventPayload = std::variant<VlinkDelete, VmDelete, VmCreate, VlinkCreate>;

enum class EventKind { vlink_delete = 0, vm_delete = 1, vm_create = 2, vlink_create = 3 };

struct VdcEvent {
  Tick tick;
  std::string vdc;
  EventPayload payload;

  EventKind kind() const { return static_cast<EventKind>(payload.index()); }
  bool is_delete() const {
    return kind() == EventKind::vlink_delete || kind() == EventKind::vm_delete;
  }

  static VdcEvent vm_create(Tick t, std::string vdc, std::string vm, int cores,
                            Gigabytes memory_gb) {
    return {t, std::move(vdc), VmCreate{std::move(vm), cores, memory_gb}};
  }
  static VdcEvent vm_delete(Tick t, std::string vdc, std::string vm) {
    return {t, std::move(vdc), VmDelete{std::move(vm)}};
  }
  static VdcEvent vlink_create(Tick t, std::string vdc, std::string x, std::string y,
                               Mbps bandwidth) {
    return {t, std::move(vdc),
            VlinkCreate{Vlink::make(std::move(x), std::move(y), bandwidth)}};
  }
  static VdcEvent vlink_delete(Tick t, std::string vdc, std::string x, std::string y) {
    if (x == y) throw Error("vlink endpoints must differ: " + x);
    if (y < x) std::swap(x, y);
    return {t, std::move(vdc), VlinkDelete{std::move(x), std::move(y)}};
  }

  friend bool operator==(const VdcEvent&, const VdcEvent&) = default;
};

namespace detail {

// (primary id, secondary id) of the event's payload.
inline std::pair<const std::string*, const std::string*> payload_ids(const VdcEvent& e) {
  static const std::string kEmpty;
  return std::visit(
      [](const auto& p) -> std::pair<const std::string*, const std::string*> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, VmCreate> || std::is_same_v<T, VmDelete>)
          return {&p.vm, &kEmpty};
        else if constexpr (std::is_same_v<T, VlinkCreate>)
          return {&p.link.a, &p.link.b};
        else
          return {&p.a, &p.b};
      },
      e.payload);
}

inline std::string describe(const VdcEvent& e) {
  static constexpr const char* kNames[] = {"vlink_delete", "vm_delete", "vm_create",
                                           "vlink_create"};
  auto [first, second] = payload_ids(e);
  std::string id = *first;
  if (!second->empty()) id += "-" + *second;
  return std::string(kNames[e.payload.index()]) + "(" + id + ")@t" +
         std::to_string(e.tick.index) + " in " + e.vdc;
}

}  // namespace detail

/// Three-way comparison by the canonical event-stream key:
/// (tick, kind class, vdc id, payload id).
inline std::strong_ordering compare_events(const VdcEvent& x, const VdcEvent& y) {
  if (auto c = x.tick <=> y.tick; c != 0) return c;
  if (auto c = x.payload.index() <=> y.payload.index(); c != 0) return c;
  if (auto c = x.vdc <=> y.vdc; c != 0) return c;
  auto [x1, x2] = detail::payload_ids(x);
  auto [y1, y2] = detail::payload_ids(y);
  if (auto c = *x1 <=> *y1; c != 0) return c;
  return *x2 <=> *y2;
}

/// Sorts events into canonical order. Two events sharing a key (an exact
/// duplicate, or a conflicting redefinition of the same object) are an error.
inline std::vector<VdcEvent> sort_events(std::vector<VdcEvent> events) {
  std::sort(events.begin(), events.end(), [](const VdcEvent& x, const VdcEvent& y) {
    return compare_events(x, y) < 0;
  });
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (compare_events(events[i - 1], events[i]) == 0)
      throw Error("duplicate event: " + detail::describe(events[i]));
  }
  return events;
}

/// Index of the first event that breaks canonical order, or size() if sorted.
inline std::size_t first_unsorted(std::span<const VdcEvent> events) {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (compare_events(events[i - 1], events[i]) >= 0) return i;
  return events.size();
}

struct Workload {
  std::vector<VdcEvent> events;
  std::size_t vdc_count = 0;
  std::size_t vm_count = 0;
};

/// Sorts `events` and counts the VDCs and VMs they create.
inline Workload make_workload(std::vector<VdcEvent> events) {
  Workload w;
  w.events = sort_events(std::move(events));
  std::unordered_set<std::string> vdcs;
  for (const auto& e : w.events) {
    if (e.kind() == EventKind::vm_create) {
      vdcs.insert(e.vdc);
      ++w.vm_count;
    }
  }
  w.vdc_count = vdcs.size();
  return w;
}

/// Replays a workload and lists every structural violation found: ordering,
/// lifecycle (delete without create, reused ids, dangling vlinks) and, when
/// `require_all_to_all` is set, the k(k-1)/2 closure of each VDC after
/// every tick. An empty result means the workload is well-formed.
inline std::vector<std::string> verify_workload(const Workload& workload,
                                                bool require_all_to_all = true) {
  std::vector<std::string> problems;
  const auto& events = workload.events;
  if (std::size_t i = first_unsorted(events); i != events.size())
    problems.push_back("out of order: " + detail::describe(events[i]));

  struct VdcState {
    std::set<std::string> vms;
    std::set<std::pair<std::string, std::string>> links;
  };
  std::unordered_map<std::string, VdcState> vdcs;
  std::unordered_set<std::string> ever_created;
  std::unordered_map<std::string, std::size_t> link_degree;  // alive vlinks per VM
  std::set<std::string> touched;

  auto close_tick = [&](Tick t) {
    if (require_all_to_all) {
      for (const auto& id : touched) {
        const auto& st = vdcs[id];
        std::size_t k = st.vms.size();
        if (st.links.size() != (k == 0 ? 0 : k * (k - 1) / 2))
          problems.push_back("vdc " + id + " at t" + std::to_string(t.index) + " has " +
                             std::to_string(k) + " VMs but " +
                             std::to_string(st.links.size()) + " vlinks");
      }
    }
    touched.clear();
  };

  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (i > 0 && events[i - 1].tick != e.tick) close_tick(events[i - 1].tick);
    touched.insert(e.vdc);
    auto& st = vdcs[e.vdc];
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, VmCreate>) {
            if (!ever_created.insert(p.vm).second)
              problems.push_back("vm id reused: " + detail::describe(e));
            else
              st.vms.insert(p.vm);
            if (p.cores < 1 || p.memory_gb <= 0)
              problems.push_back("non-positive resources: " + detail::describe(e));
          } else if constexpr (std::is_same_v<T, VmDelete>) {
            if (st.vms.erase(p.vm) == 0)
              problems.push_back("delete of VM not alive in vdc: " + detail::describe(e));
            if (link_degree[p.vm] != 0)
              problems.push_back("VM deleted with live vlinks: " + detail::describe(e));
          } else if constexpr (std::is_same_v<T, VlinkCreate>) {
            if (!st.vms.contains(p.link.a) || !st.vms.contains(p.link.b))
              problems.push_back("vlink endpoint not alive: " + detail::describe(e));
            else if (!st.links.emplace(p.link.a, p.link.b).second)
              problems.push_back("vlink already alive: " + detail::describe(e));
            else {
              ++link_degree[p.link.a];
              ++link_degree[p.link.b];
            }
            if (p.link.bandwidth <= 0)
              problems.push_back("non-positive bandwidth: " + detail::describe(e));
          } else {
            if (st.links.erase({p.a, p.b}) == 0)
              problems.push_back("delete of vlink not alive: " + detail::describe(e));
            else {
              --link_degree[p.a];
              --link_degree[p.b];
            }
          }
        },
        e.payload);
  }
  if (!events.empty()) close_tick(events.back().tick);
  return problems;
}

}  // namespace gridiron
