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

// Hand-built scenarios shared by the unit and acceptance suites.

#pragma once

#include <string>
#include <vector>

#include "gridiron/constraints.hpp"
#include "gridiron/core_model.hpp"
#include "gridiron/rational.hpp"

namespace gridiron::testing {

inline VmRecord vm(std::string id, std::string dep, std::int64_t create, std::int64_t del,
                   int cores, Gigabytes mem = Gigabytes{0}) {
  if (mem == Gigabytes(0)) mem = Gigabytes(2 * cores);
  return {std::move(id), std::move(dep), Tick{create}, Tick{del}, cores, mem};
}

// VDC mutation example: v0 [5,42) 2 cores, v1 [5,..) 4, v2 [20,..) 4,
// v3 [42,..) 2. The open-ended VMs end at tick 100.
inline std::vector<VmRecord> mutation_records() {
  return {vm("v0", "mutation", 5, 42, 2), vm("v1", "mutation", 5, 100, 4),
          vm("v2", "mutation", 20, 100, 4), vm("v3", "mutation", 42, 100, 2)};
}

inline ServerSpec server(std::string id, int cores, Gigabytes mem, std::vector<Mbps> uplinks) {
  return {std::move(id), cores, mem, std::move(uplinks)};
}

// n VMs of one all-to-all VDC; VM i arrives at tick i with vlinks of `bw`
// to every earlier VM.
inline Workload all_to_all_vdc(const std::string& vdc, int n, int cores, Gigabytes mem, Mbps bw) {
  std::vector<VdcEvent> events;
  for (int i = 0; i < n; ++i) {
    std::string id = "v" + std::to_string(i);
    events.push_back(VdcEvent::vm_create(Tick{i}, vdc, id, cores, mem));
    for (int j = 0; j < i; ++j)
      events.push_back(VdcEvent::vlink_create(Tick{i}, vdc, "v" + std::to_string(j), id, bw));
  }
  return make_workload(std::move(events));
}

// Two servers that each fit five 4-core VMs behind a 40 Gbps uplink.
inline DatacenterSpec colocation_datacenter() {
  DatacenterSpec dc;
  dc.servers = {server("server0", 20, Gigabytes(160), {Mbps(40000)}),
                server("server1", 20, Gigabytes(160), {Mbps(40000)})};
  return dc;
}

inline constexpr std::int64_t kColocationVlinkMbps = 4400;  // B = 4.4 Gbps

inline Workload packed_workload() {
  return all_to_all_vdc("packed", 10, 4, Gigabytes(8), Mbps(kColocationVlinkMbps));
}

inline Workload balanced_workload() {
  return all_to_all_vdc("balanced", 6, 4, Gigabytes(8), Mbps(kColocationVlinkMbps));
}

// Overpeering: S1 is filled by v1 and its uplink (3 units) carries v1's
// three vlinks after tick 0. Only S2 and S3 have cores for v5 at tick 1,
// and v1-v5 cannot cross S1's uplink. S4 is too small for any VM.
inline DatacenterSpec overpeer_datacenter() {
  DatacenterSpec dc;
  dc.servers = {server("S1", 4, Gigabytes(16), {Mbps(3)}),
                server("S2", 6, Gigabytes(16), {Mbps(6)}),
                server("S3", 6, Gigabytes(16), {Mbps(6)}),
                server("S4", 1, Gigabytes(16), {Mbps(6)})};
  return dc;
}

inline Workload overpeer_workload() {
  const Tick n{0}, next{1};
  const std::string vdc = "overpeer";
  std::vector<VdcEvent> ev = {
      VdcEvent::vm_create(n, vdc, "v1", 4, Gigabytes(4)),
      VdcEvent::vm_create(n, vdc, "v2", 2, Gigabytes(2)),
      VdcEvent::vm_create(n, vdc, "v3", 2, Gigabytes(2)),
      VdcEvent::vm_create(n, vdc, "v4", 4, Gigabytes(4)),
      VdcEvent::vm_create(next, vdc, "v5", 2, Gigabytes(2)),
      VdcEvent::vlink_create(next, vdc, "v1", "v5", Mbps(1)),
  };
  for (const char* a : {"v1", "v2", "v3", "v4"})
    for (const char* b : {"v1", "v2", "v3", "v4"})
      if (std::string(a) < b) ev.push_back(VdcEvent::vlink_create(n, vdc, a, b, Mbps(1)));
  return make_workload(std::move(ev));
}

// Four servers whose uplinks each carry at most three unit vlinks.
inline DatacenterSpec unit_uplink_datacenter() {
  DatacenterSpec dc;
  for (const char* id : {"S1", "S2", "S3", "S4"})
    dc.servers.push_back(server(id, 8, Gigabytes(32), {Mbps(3)}));
  return dc;
}

}  // namespace gridiron::testing
