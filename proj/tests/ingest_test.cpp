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

#include <random>
#include <sstream>

#include "gridiron/ingest.hpp"

namespace gridiron {
namespace {

// Nearest multiple of 300 by exhaustive comparison; ties go to the lower one.
std::int64_t nearest_tick_oracle(std::int64_t t) {
  std::int64_t best = 0;
  for (std::int64_t k = 0; k * 300 <= t + 300; ++k) {
    auto dist = [&](std::int64_t kk) { return std::abs(kk * 300 - t); };
    if (dist(k) < dist(best)) best = k;
  }
  return best;
}

TEST(RoundTimestamp, Examples) {
  EXPECT_EQ(round_timestamp(600), Tick{2});
  EXPECT_EQ(round_timestamp(601), Tick{2});
  EXPECT_EQ(round_timestamp(750), Tick{2});
  EXPECT_EQ(round_timestamp(751), Tick{3});
  EXPECT_EQ(round_timestamp(0), Tick{0});
  EXPECT_THROW(round_timestamp(-1), Error);
}

TEST(RoundTimestamp, MatchesNearestMultipleOracle) {
  for (std::int64_t t = 0; t <= 3000; ++t)
    ASSERT_EQ(round_timestamp(t).index, nearest_tick_oracle(t)) << "t=" << t;
}

RawVmRow row(std::string id, std::string dep, std::int64_t c, std::optional<std::int64_t> d,
             int cores = 2) {
  return {std::move(id), std::move(dep), c, d, cores, Gigabytes(4)};
}

TEST(Preprocess, DropsInstantVm) {
  auto r = preprocess(std::vector{row("a", "d", 3000, 3100), row("b", "d", 0, 600)});
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].vm_id, "b");
  EXPECT_EQ(r.stats.instant_vm_count, 1u);
  EXPECT_EQ(r.stats.invalid_timestamp_count, 1u);  // 3100 is off-boundary
}

TEST(Preprocess, TwoRowStats) {
  auto r = preprocess(std::vector{row("a", "d", 0, 600), row("b", "d", 300, 900)});
  PreprocessStats expected{2, 1, 0, 0, 2, 1};
  EXPECT_EQ(r.stats, expected);
  EXPECT_EQ(r.records[1].create_tick, Tick{1});
  EXPECT_EQ(r.records[1].delete_tick, Tick{3});
}

TEST(Preprocess, EmptiedDeploymentsDisappear) {
  auto r = preprocess(std::vector{row("a", "gone", 300, 310), row("b", "kept", 0, 600)});
  EXPECT_EQ(r.stats.raw_deployment_count, 2u);
  EXPECT_EQ(r.stats.final_deployment_count, 1u);
}

TEST(Preprocess, OpenEndedVmLivesPastLastTick) {
  auto r = preprocess(std::vector{row("a", "d", 0, std::nullopt), row("b", "d", 300, 1500)});
  EXPECT_EQ(r.records[0].delete_tick, Tick{6});
}

TEST(Preprocess, Errors) {
  EXPECT_THROW(preprocess(std::vector{row("a", "d", 0, 600), row("a", "e", 0, 900)}), Error);
  try {
    preprocess(std::vector{row("late", "d", 900, 300), row("ok", "d", 0, 300)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("late"), std::string::npos);
  }
  EXPECT_THROW(preprocess(std::vector{row("z", "d", 0, 600, 0)}), Error);
}

TEST(Preprocess, IdempotentAndConservesCounts) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RawVmRow> rows;
    int n = std::uniform_int_distribution<int>(0, 60)(rng);
    for (int i = 0; i < n; ++i) {
      std::int64_t c = std::uniform_int_distribution<std::int64_t>(0, 20000)(rng);
      std::int64_t len = std::uniform_int_distribution<std::int64_t>(0, 5000)(rng);
      rows.push_back(row("vm" + std::to_string(i), "d" + std::to_string(i % 7), c, c + len,
                         1 + i % 4));
    }
    auto first = preprocess(rows);
    EXPECT_EQ(first.stats.raw_vm_count, first.stats.final_vm_count + first.stats.instant_vm_count);
    EXPECT_LE(first.stats.final_deployment_count, first.stats.raw_deployment_count);
    for (const auto& r : first.records) EXPECT_GT(r.delete_tick, r.create_tick);
    auto again = preprocess(records_to_rows(first.records));
    EXPECT_EQ(again.records, first.records);
    EXPECT_EQ(again.stats.instant_vm_count, 0u);
    EXPECT_EQ(again.stats.invalid_timestamp_count, 0u);
  }
}

TEST(ParseTrace, NativeCsv) {
  std::stringstream in(
      "vm_id,deployment_id,created_s,deleted_s,cores,memory_gb\n"
      "a,d1,0,600,2,3.5\n"
      "b,d1,300,,4,7\n"
      "c,d2,900,1800,1,0.75\n");
  auto r = parse_trace(in, SchemaConfig::native());
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_EQ(r.rows[0].memory_gb, Rational(7, 2));
  EXPECT_FALSE(r.rows[1].deleted_s.has_value());
  EXPECT_EQ(r.rows[2].deployment_id, "d2");
}

TEST(ParseTrace, NonNumericCoresNamesTheLine) {
  std::stringstream in(
      "vm_id,deployment_id,created_s,deleted_s,cores,memory_gb\n"
      "a,d1,0,600,many,3.5\n");
  try {
    parse_trace(in, SchemaConfig::native());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseTrace, EmptyFileWarns) {
  std::stringstream in("");
  auto r = parse_trace(in, SchemaConfig::native());
  EXPECT_TRUE(r.rows.empty());
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(ParseTrace, MissingColumn) {
  std::stringstream in("vm_id,deployment_id,created_s\na,d,0\n");
  EXPECT_THROW(parse_trace(in, SchemaConfig::native()), ParseError);
  std::stringstream short_row("a,b\n");
  EXPECT_THROW(parse_trace(short_row, SchemaConfig::azure_2017()), ParseError);
}

TEST(ParseTrace, AzureLayoutAndCustomSchema) {
  std::stringstream azure("vm1,sub,dep,0,900,10.5,3.2,8.1,Delay-insensitive,2,4\n");
  auto r = parse_trace(azure, SchemaConfig::azure_2017());
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].deployment_id, "dep");
  EXPECT_EQ(r.rows[0].cores, 2);
  EXPECT_EQ(*r.rows[0].deleted_s, 900);
  std::stringstream bucketed("vm2,sub,dep,0,900,1,1,1,Unknown,>24,>=64\n");
  auto rb = parse_trace(bucketed, SchemaConfig::azure_2017());
  EXPECT_EQ(rb.rows[0].cores, 24);
  EXPECT_EQ(rb.rows[0].memory_gb, Gigabytes(64));
  std::stringstream strict("vm_id,deployment_id,created_s,deleted_s,cores,memory_gb\nv,d,0,300,>24,4\n");
  EXPECT_THROW(parse_trace(strict, SchemaConfig::native()), ParseError);

  auto schema = SchemaConfig::from_json(nlohmann::json::parse(R"({
    "delimiter": ";", "header": true, "time_unit_seconds": 60,
    "columns": {"vm_id": "id", "deployment_id": "grp", "created": "start",
                "deleted": "end", "cores": "cpu", "memory": "ram"}})"));
  std::stringstream in("ram;cpu;end;start;grp;id\n2;1;10;5;g;x\n");
  auto r2 = parse_trace(in, schema);
  ASSERT_EQ(r2.rows.size(), 1u);
  EXPECT_EQ(r2.rows[0].created_s, 300);
  EXPECT_EQ(*r2.rows[0].deleted_s, 600);
  EXPECT_EQ(r2.rows[0].vm_id, "x");
}

TEST(RecordsCsv, RoundTrip) {
  std::vector<VmRecord> recs = {{"a", "d", Tick{1}, Tick{4}, 2, Rational(7, 2)},
                                {"b", "d", Tick{0}, Tick{9}, 16, Gigabytes(56)}};
  std::stringstream ss;
  write_records(ss, recs);
  EXPECT_EQ(read_records(ss), recs);
}

}  // namespace
}  // namespace gridiron
