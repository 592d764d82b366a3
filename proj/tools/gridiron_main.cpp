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

// gridiron: preprocess, synth, generate, validate, analyze.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridiron/constraints.hpp"
#include "gridiron/event_io.hpp"
#include "gridiron/gridiron.hpp"
#include "gridiron/ingest.hpp"
#include "gridiron/manifest.hpp"
#include "gridiron/metrics.hpp"
#include "gridiron/simulator.hpp"
#include "gridiron/synth.hpp"

namespace fs = std::filesystem;
using namespace gridiron;

namespace {

constexpr int kExitError = 1;
constexpr int kExitNetworkFailures = 2;

unsigned thread_budget() {
  if (const char* env = std::getenv("GRIDIRON_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid GRIDIRON_THREADS='" << env << "'\n";
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::ofstream open_out(const std::string& path) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return in;
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string trace, schema, out, stats;
};

int cmd_preprocess(const PreprocessArgs& a) {
  SchemaConfig schema = a.schema.empty() ? SchemaConfig::native() : load_schema(a.schema);
  auto in = open_in(a.trace);
  auto parsed = parse_trace(in, schema);
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << '\n';
  auto result = preprocess(parsed.rows);

  auto out = open_out(a.out);
  write_records(out, result.records);
  std::string stats_path = a.stats.empty() ? a.out + ".stats.json" : a.stats;
  open_out(stats_path) << to_json(result.stats).dump(2) << '\n';

  RunManifest m{"preprocess", {{"schema", schema.to_json()}}, {a.trace}, {a.out, stats_path}};
  if (!a.schema.empty()) m.inputs.push_back(a.schema);
  m.write(manifest_path(a.out));
  std::cout << to_json(result.stats).dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string config, out;
};

int cmd_synth(const SynthArgs& a) {
  SynthConfig config = load_synth_config(a.config);
  auto rows = generate_base(config);
  auto out = open_out(a.out);
  write_raw_trace(out, rows);
  RunManifest m{"synth", config.to_json(), {a.config}, {a.out}};
  m.write(manifest_path(a.out));
  std::cout << "wrote " << rows.size() << " VMs in " << config.deployment_count
            << " deployments to " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string trace, out, dc, vdc_manifest, report;
  std::optional<int> cap;
  std::optional<std::string> bpc;
  std::optional<int> max_cores;
  bool force = false;
};

int cmd_generate(const GenerateArgs& a) {
  if (!a.bpc && a.dc.empty()) throw Error("give --bpc, --dc, or both");
  if (a.cap && *a.cap < 2) throw Error("--cap must be at least 2 (P >= 2)");
  auto in = open_in(a.trace);
  auto base = read_records(in);

  GridironConfig config;
  config.peak_cap = a.cap;
  config.threads = thread_budget();
  VdcAssignment assignment = assign_vdcs(base, config.peak_cap, config.threads);

  nlohmann::ordered_json resolved;
  resolved["cap"] = a.cap ? nlohmann::ordered_json(*a.cap) : nlohmann::ordered_json("uncapped");
  std::optional<ConstraintReport> report;
  if (!a.dc.empty()) {
    DatacenterSpec dc = load_datacenter(a.dc);
    std::size_t peak = 2;
    for (const auto& v : assignment.vdcs) peak = std::max(peak, v.peak_size);
    int p = a.cap ? *a.cap : static_cast<int>(peak);
    int max_cores = 1;
    for (const auto& r : base) max_cores = std::max(max_cores, r.cores);
    if (a.max_cores) max_cores = *a.max_cores;
    report = constraint_report(dc, p, max_cores);
    std::cerr << render_table(*report);
    std::string report_path = a.report.empty() ? a.out + ".constraints.json" : a.report;
    open_out(report_path) << to_json(*report).dump(2) << '\n';
    resolved["constraints"] = to_json(*report);
    if (report->bpc_max < 1)
      throw Error("no whole-Mbps bpc satisfies the datacenter bound (bpc_max = 0)");
  }
  config.bpc = a.bpc ? parse_rational(*a.bpc) : Mbps(report->bpc_max);
  if (report && config.bpc > Mbps(report->bpc_max) && !a.force)
    throw Error("bpc " + format_rational(config.bpc) + " Mbps exceeds bpc_max " +
                std::to_string(report->bpc_max) +
                " Mbps for this datacenter; pass --force to generate anyway");
  config.validate();
  resolved["bpc_mbps"] = quantity_json(config.bpc);
  resolved["force"] = a.force;

  auto out = open_out(a.out);
  std::size_t events = 0;
  stream_workload(base, assignment, config.bpc, [&](VdcEvent&& e) {
    write_event(out, e);
    ++events;
  });
  std::string vdc_path = a.vdc_manifest.empty() ? a.out + ".vdcs.csv" : a.vdc_manifest;
  auto vdc_out = open_out(vdc_path);
  write_vdc_manifest(vdc_out, assignment);

  RunManifest m{"generate", resolved, {a.trace}, {a.out, vdc_path}};
  if (!a.dc.empty()) {
    m.inputs.push_back(a.dc);
    m.outputs.push_back(a.report.empty() ? a.out + ".constraints.json" : a.report);
  }
  m.write(manifest_path(a.out));
  std::cout << "wrote " << events << " events for " << assignment.vdcs.size() << " VDCs ("
            << base.size() << " VMs) at bpc " << format_rational(config.bpc) << " Mbps\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
  std::string workload, dc, policy = "first-fit-by-server-index", out, utilization;
};

int cmd_validate(const ValidateArgs& a) {
  DatacenterSpec dc = load_datacenter(a.dc);
  Simulator sim(dc, policy_by_name(a.policy), !a.utilization.empty());
  auto in = open_in(a.workload);
  for_each_event(in, [&](VdcEvent e, std::size_t) { sim.feed(std::move(e)); });
  ReplayResult result = sim.finish();

  std::vector<std::string> outputs;
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    write_failures(out, result.failures);
    outputs.push_back(a.out);
  } else {
    write_failures(std::cout, result.failures);
  }
  if (!a.utilization.empty()) {
    auto out = open_out(a.utilization);
    write_utilization(out, result.utilization);
    outputs.push_back(a.utilization);
  }
  if (!a.out.empty()) {
    RunManifest m{"validate", {{"policy", a.policy}}, {a.workload, a.dc}, outputs};
    m.write(manifest_path(a.out));
  }
  int max_d = 0;
  for (const auto& [vdc, d] : result.colocation) max_d = std::max(max_d, d);
  std::cerr << "failures: compute " << result.count(FailureCause::compute) << ", memory "
            << result.count(FailureCause::memory) << ", network " << result.network_failures()
            << "; max colocation degree " << max_d << '\n';
  return result.network_failures() == 0 ? 0 : kExitNetworkFailures;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string workload, out_dir;
  std::optional<int> cap;
  std::optional<std::int64_t> horizon;
};

nlohmann::ordered_json series_summary(const std::vector<double>& v) {
  nlohmann::ordered_json j;
  if (v.empty()) return j;
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  j["min"] = *lo;
  j["max"] = *hi;
  auto band = variance_band(v);
  j["variance_band_pct"] = band ? nlohmann::ordered_json(*band) : nlohmann::ordered_json("undefined");
  return j;
}

int cmd_analyze(const AnalyzeArgs& a) {
  FootprintAccumulator footprint_acc;
  PeakTracker peaks;
  std::size_t events = 0, vms = 0;
  auto in = open_in(a.workload);
  for_each_event(in, [&](VdcEvent e, std::size_t) {
    footprint_acc.feed(e);
    peaks.feed(e);
    ++events;
    if (e.kind() == EventKind::vm_create) ++vms;
  });
  FootprintSeries series = footprint_acc.finish(a.horizon);
  PeakSizeDistribution dist = peak_distribution(peaks.peaks());

  fs::create_directories(a.out_dir);
  const std::string footprint_path = (fs::path(a.out_dir) / "footprint.csv").string();
  const std::string summary_path = (fs::path(a.out_dir) / "summary.json").string();
  const std::string hist_path = (fs::path(a.out_dir) / "peak_sizes.dat").string();
  {
    auto out = open_out(footprint_path);
    write_footprint(out, series);
  }
  {
    auto out = open_out(hist_path);
    write_histogram_dat(out, dist);
  }
  nlohmann::ordered_json summary;
  summary["events"] = events;
  summary["vm_count"] = vms;
  summary["horizon_ticks"] = series.size();
  summary["peak_distribution"] = to_json(dist);
  if (a.cap) summary["fraction_below_cap"] = dist.fraction_below(static_cast<std::size_t>(*a.cap));
  summary["cores"] = series_summary(as_doubles(series.cores));
  summary["memory_gb"] = series_summary(as_doubles(series.memory_gb));
  summary["bandwidth_mbps"] = series_summary(as_doubles(series.bandwidth_mbps));
  open_out(summary_path) << summary.dump(2) << '\n';

  nlohmann::ordered_json cfg;
  if (a.cap) cfg["cap"] = *a.cap;
  if (a.horizon) cfg["horizon"] = *a.horizon;
  RunManifest m{"analyze", cfg, {a.workload}, {footprint_path, summary_path, hist_path}};
  m.write((fs::path(a.out_dir) / "manifest.json").string());
  std::cout << summary.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Augment VM traces into VDC workloads with inter-VM bandwidth demands"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "Round timestamps to ticks and drop instant-VMs");
  p->add_option("trace", pre.trace, "Raw VM trace (CSV)")->required();
  p->add_option("--schema", pre.schema, "Schema config (JSON); default: native header CSV");
  p->add_option("-o,--out", pre.out, "Preprocessed trace CSV")->required();
  p->add_option("--stats", pre.stats, "Stats JSON (default <out>.stats.json)");

  SynthArgs syn;
  auto* s = app.add_subcommand("synth", "Generate a synthetic base trace");
  s->add_option("config", syn.config, "Synth config (JSON)")->required();
  s->add_option("-o,--out", syn.out, "Trace CSV")->required();

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Build the all-to-all VDC event stream");
  g->add_option("trace", gen.trace, "Preprocessed trace CSV")->required();
  g->add_option("--cap", gen.cap, "Peak VDC size cap P (>= 2)");
  g->add_option("--bpc", gen.bpc, "Bandwidth per core, Mbps");
  g->add_option("--dc", gen.dc, "Datacenter spec (JSON); derives bpc_max");
  g->add_option("--max-cores", gen.max_cores, "Override the largest VM core count");
  g->add_flag("--force", gen.force, "Allow bpc above the datacenter bound");
  g->add_option("-o,--out", gen.out, "Workload JSONL")->required();
  g->add_option("--vdc-manifest", gen.vdc_manifest, "VDC manifest CSV (default <out>.vdcs.csv)");
  g->add_option("--report", gen.report, "Constraint report JSON (default <out>.constraints.json)");

  ValidateArgs val;
  auto* v = app.add_subcommand("validate", "Replay a workload on a datacenter");
  v->add_option("workload", val.workload, "Workload JSONL")->required();
  v->add_option("--dc", val.dc, "Datacenter spec (JSON)")->required();
  v->add_option("--policy", val.policy, "first-fit-by-server-index | first-fit-spread");
  v->add_option("-o,--out", val.out, "Failure report CSV (default: stdout)");
  v->add_option("--utilization", val.utilization, "Per-tick server utilization CSV");

  AnalyzeArgs ana;
  auto* an = app.add_subcommand("analyze", "Footprints and peak-size distribution");
  an->add_option("workload", ana.workload, "Workload JSONL")->required();
  an->add_option("-o,--out-dir", ana.out_dir, "Output directory")->required();
  an->add_option("--cap", ana.cap, "Report the fraction of VDCs peaking below this size");
  an->add_option("--horizon", ana.horizon, "Series length in ticks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*p) return cmd_preprocess(pre);
    if (*s) return cmd_synth(syn);
    if (*g) return cmd_generate(gen);
    if (*v) return cmd_validate(val);
    if (*an) return cmd_analyze(ana);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
