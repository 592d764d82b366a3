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

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "gridiron/gridiron.hpp"
#include "gridiron/metrics.hpp"

namespace gridiron {
namespace {

using testing::mutation_records;
using testing::vm;

// Alive count at every tick, maximized. Independent of the sweep line.
std::size_t peak_oracle(const std::vector<VmRecord>& vms) {
  std::size_t best = 0;
  std::int64_t end = 0;
  for (const auto& v : vms) end = std::max(end, v.delete_tick.index);
  for (std::int64_t t = 0; t <= end; ++t) {
    std::size_t alive = 0;
    for (const auto& v : vms)
      if (v.create_tick.index <= t && t < v.delete_tick.index) ++alive;
    best = std::max(best, alive);
  }
  return best;
}

std::vector<VmRecord> random_deployment(std::mt19937_64& rng, const std::string& dep, int max_vms) {
  std::vector<VmRecord> out;
  int n = std::uniform_int_distribution<int>(1, max_vms)(rng);
  for (int i = 0; i < n; ++i) {
    std::int64_t c = std::uniform_int_distribution<std::int64_t>(0, 40)(rng);
    std::int64_t len = std::uniform_int_distribution<std::int64_t>(1, 30)(rng);
    int cores = 1 << std::uniform_int_distribution<int>(0, 4)(rng);
    out.push_back(vm(dep + "-" + std::to_string(i), dep, c, c + len, cores));
  }
  return out;
}

TEST(PeakSize, Examples) {
  EXPECT_EQ(peak_size(mutation_records()), 3u);
  EXPECT_EQ(peak_size(std::vector{vm("a", "d", 0, 5, 1)}), 1u);
  EXPECT_EQ(peak_size(std::vector{vm("a", "d", 0, 5, 1), vm("b", "d", 5, 9, 1)}), 1u);
  EXPECT_EQ(peak_size(std::vector<VmRecord>{}), 0u);
}

TEST(PeakSize, MatchesTickScanOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    auto d = random_deployment(rng, "d", 25);
    ASSERT_EQ(peak_size(d), peak_oracle(d));
  }
}

TEST(RollOverflow, SevenConcurrentVmsCapThree) {
  std::vector<VmRecord> d;
  for (int i = 0; i < 7; ++i) d.push_back(vm("v" + std::to_string(i), "dep", 0, 10, 1));
  auto a = roll_overflow(d, 3);
  ASSERT_EQ(a.vdcs.size(), 3u);
  EXPECT_EQ(a.vdcs[0].peak_size, 3u);
  EXPECT_EQ(a.vdcs[1].peak_size, 3u);
  EXPECT_EQ(a.vdcs[2].peak_size, 1u);
  EXPECT_EQ(a.vdcs[2].vdc_id, "dep#2");
  EXPECT_EQ(a.vm_to_vdc.at("v6"), "dep#2");
  EXPECT_EQ(a.vm_to_vdc.at("v2"), "dep#0");
}

TEST(RollOverflow, BelowCapPassesThrough) {
  std::vector<VmRecord> d = {vm("a", "dep", 0, 5, 1), vm("b", "dep", 1, 6, 1), vm("c", "dep", 6, 9, 1)};
  auto a = roll_overflow(d, 30);
  ASSERT_EQ(a.vdcs.size(), 1u);
  EXPECT_EQ(a.vdcs[0].peak_size, 2u);
  EXPECT_EQ(a.vdcs[0].vm_count, 3u);
}

TEST(RollOverflow, ClosedVdcStaysClosedAfterShrinking) {
  // a and b reach the cap; after both leave, c still rolls to a new VDC.
  std::vector<VmRecord> d = {vm("a", "dep", 0, 2, 1), vm("b", "dep", 0, 2, 1), vm("c", "dep", 5, 9, 1)};
  auto a = roll_overflow(d, 2);
  ASSERT_EQ(a.vdcs.size(), 2u);
  EXPECT_EQ(a.vm_to_vdc.at("c"), "dep#1");
}

TEST(RollOverflow, RejectsCapBelowTwo) {
  EXPECT_THROW(roll_overflow(mutation_records(), 1), Error);
  EXPECT_THROW(assign_vdcs(mutation_records(), 0), Error);
}

TEST(VlinkBandwidth, WeakerVmRule) {
  EXPECT_EQ(vlink_bandwidth(2, 4, Mbps(1)), Mbps(2));
  EXPECT_EQ(vlink_bandwidth(2, 4, Mbps(5)), Mbps(10));
  EXPECT_EQ(vlink_bandwidth(4, 4, Mbps(1)), Mbps(4));
  EXPECT_EQ(vlink_bandwidth(4, 2, Mbps(5)), vlink_bandwidth(2, 4, Mbps(5)));
  EXPECT_THROW(vlink_bandwidth(0, 4, Mbps(1)), Error);
  EXPECT_THROW(vlink_bandwidth(1, 4, Mbps(0)), Error);
}

// Alive vlinks (a-b -> bw) after replaying every event with tick <= t.
std::map<std::string, Mbps> alive_links_at(const Workload& w, std::int64_t t) {
  std::map<std::string, Mbps> alive;
  for (const auto& e : w.events) {
    if (e.tick.index > t) break;
    if (auto* c = std::get_if<VlinkCreate>(&e.payload)) alive[c->link.a + "-" + c->link.b] = c->link.bandwidth;
    if (auto* d = std::get_if<VlinkDelete>(&e.payload)) alive.erase(d->a + "-" + d->b);
  }
  return alive;
}

TEST(BuildWorkload, MutationVlinkSets) {
  VdcAssignment assignment;
  auto w = build_workload(mutation_records(), {std::nullopt, Mbps(1)}, &assignment);
  std::map<std::string, Mbps> at21 = {{"v0-v1", Mbps(2)}, {"v0-v2", Mbps(2)}, {"v1-v2", Mbps(4)}};
  // v3 has 2 cores, so both of its vlinks carry min(4, 2) = 2.
  std::map<std::string, Mbps> at43 = {{"v1-v2", Mbps(4)}, {"v1-v3", Mbps(2)}, {"v2-v3", Mbps(2)}};
  EXPECT_EQ(alive_links_at(w, 21), at21);
  EXPECT_EQ(alive_links_at(w, 43), at43);
  ASSERT_EQ(assignment.vdcs.size(), 1u);
  EXPECT_EQ(assignment.vdcs[0].vdc_id, "mutation#0");
  EXPECT_EQ(assignment.vdcs[0].peak_size, 3u);
  EXPECT_TRUE(verify_workload(w).empty());
}

TEST(BuildWorkload, SingleVmHasNoVlinks) {
  auto w = build_workload(std::vector{vm("solo", "d", 0, 4, 8)}, {std::nullopt, Mbps(1)});
  ASSERT_EQ(w.events.size(), 2u);
  EXPECT_EQ(w.events[0].kind(), EventKind::vm_create);
  EXPECT_EQ(w.events[1].kind(), EventKind::vm_delete);
}

TEST(BuildWorkload, FourConcurrentVmsGiveSixVlinks) {
  std::vector<VmRecord> d;
  for (int i = 0; i < 4; ++i) d.push_back(vm("v" + std::to_string(i), "d", 0, 3, 2));
  auto w = build_workload(d, {std::nullopt, Mbps(1)});
  // Brute-force pair enumeration.
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& x : d)
    for (const auto& y : d)
      if (x.vm_id < y.vm_id) pairs.emplace(x.vm_id, y.vm_id);
  std::set<std::pair<std::string, std::string>> created;
  for (const auto& e : w.events)
    if (auto* c = std::get_if<VlinkCreate>(&e.payload)) created.emplace(c->link.a, c->link.b);
  EXPECT_EQ(created, pairs);
  EXPECT_EQ(created.size(), 6u);
}

TEST(BuildWorkload, SplitsAreIndependentVdcs) {
  std::vector<VmRecord> d;
  for (int i = 0; i < 5; ++i) d.push_back(vm("v" + std::to_string(i), "d", 0, 3, 1));
  auto w = build_workload(d, {2, Mbps(1)});
  EXPECT_EQ(w.vdc_count, 3u);
  for (const auto& e : w.events)
    if (auto* c = std::get_if<VlinkCreate>(&e.payload)) {
      EXPECT_TRUE((c->link.a == "v0" && c->link.b == "v1") || (c->link.a == "v2" && c->link.b == "v3"))
          << c->link.a << "-" << c->link.b;
    }
  EXPECT_TRUE(verify_workload(w).empty());
}

TEST(BuildWorkload, RandomizedProperties) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<VmRecord> base;
    int deployments = std::uniform_int_distribution<int>(1, 12)(rng);
    for (int k = 0; k < deployments; ++k) {
      auto d = random_deployment(rng, "dep" + std::to_string(k), 20);
      base.insert(base.end(), d.begin(), d.end());
    }
    int cap = std::uniform_int_distribution<int>(2, 8)(rng);
    VdcAssignment a1, a2;
    auto w1 = build_workload(base, {cap, Mbps(3)}, &a1);
    auto w2 = build_workload(base, {cap, Mbps(6), 4}, &a2);

    EXPECT_EQ(a1, a2) << "split must not depend on bpc or thread count";
    EXPECT_TRUE(verify_workload(w1).empty());

    // Cap enforcement, checked on the emitted stream.
    for (const auto& [vdc, p] : vdc_peaks(w1)) EXPECT_LE(p, static_cast<std::size_t>(cap)) << vdc;
    // VM conservation per deployment.
    std::map<std::string, std::size_t> per_dep_in, per_dep_out;
    for (const auto& r : base) ++per_dep_in[r.deployment_id];
    for (const auto& v : a1.vdcs) per_dep_out[v.deployment_id] += v.vm_count;
    EXPECT_EQ(per_dep_in, per_dep_out);
    // Bandwidth linearity, event by event.
    ASSERT_EQ(w1.events.size(), w2.events.size());
    for (std::size_t i = 0; i < w1.events.size(); ++i) {
      if (auto* c = std::get_if<VlinkCreate>(&w1.events[i].payload)) {
        EXPECT_EQ(std::get<VlinkCreate>(w2.events[i].payload).link.bandwidth, c->link.bandwidth * 2);
      }
    }
  }
}

TEST(VdcManifest, Csv) {
  std::vector<VmRecord> d;
  for (int i = 0; i < 3; ++i) d.push_back(vm("v" + std::to_string(i), "dep", 0, 3, 1));
  std::ostringstream out;
  write_vdc_manifest(out, roll_overflow(d, 2));
  EXPECT_EQ(out.str(), "vdc_id,deployment_id,peak_size,vm_count\ndep#0,dep,2,2\ndep#1,dep,1,1\n");
}

}  // namespace
}  // namespace gridiron
