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
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gridiron/core_model.hpp"
#include "gridiron/error.hpp"
#include "gridiron/event_io.hpp"
#include "gridiron/rational.hpp"

namespace gridiron {

/// Per-tick totals over alive VMs and vlinks, sampled after all of a tick's
/// events have applied. Index i is tick i.
struct FootprintSeries {
  std::vector<std::int64_t> cores;
  std::vector<Gigabytes> memory_gb;
  std::vector<Mbps> bandwidth_mbps;

  std::size_t size() const { return cores.size(); }
};

/// Streaming footprint sweep over a canonical event stream.
class FootprintAccumulator {
 public:
  void feed(const VdcEvent& e) {
    if (last_ && compare_events(*last_, e) >= 0)
      throw Error("footprint needs a sorted workload; out of order at " + detail::describe(e));
    if (last_ && last_->tick != e.tick) sample(last_->tick);
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, VmCreate>) {
            vms_[p.vm] = {p.cores, p.memory_gb};
            cores_ += p.cores;
            memory_ += p.memory_gb;
          } else if constexpr (std::is_same_v<T, VmDelete>) {
            auto it = vms_.find(p.vm);
            if (it == vms_.end()) throw Error("delete of unknown VM " + p.vm);
            cores_ -= it->second.first;
            memory_ -= it->second.second;
            vms_.erase(it);
          } else if constexpr (std::is_same_v<T, VlinkCreate>) {
            links_[{p.link.a, p.link.b}] = p.link.bandwidth;
            bandwidth_ += p.link.bandwidth;
          } else {
            auto it = links_.find({p.a, p.b});
            if (it == links_.end()) throw Error("delete of unknown vlink " + p.a + "-" + p.b);
            bandwidth_ -= it->second;
            links_.erase(it);
          }
        },
        e.payload);
    last_ = e;
  }

  /// Dense series over [0, horizon). Without a horizon the series ends one
  /// tick after the last event.
  FootprintSeries finish(std::optional<std::int64_t> horizon = std::nullopt) {
    if (last_) sample(last_->tick);
    std::int64_t n = horizon ? *horizon : (samples_.empty() ? 0 : samples_.back().tick + 1);
    FootprintSeries s;
    s.cores.assign(n, 0);
    s.memory_gb.assign(n, Gigabytes{0});
    s.bandwidth_mbps.assign(n, Mbps{0});
    std::size_t k = 0;
    Sample current{};
    for (std::int64_t t = 0; t < n; ++t) {
      while (k < samples_.size() && samples_[k].tick <= t) current = samples_[k++];
      s.cores[t] = current.cores;
      s.memory_gb[t] = current.memory;
      s.bandwidth_mbps[t] = current.bandwidth;
    }
    return s;
  }

 private:
  struct Sample {
    std::int64_t tick = 0;
    std::int64_t cores = 0;
    Gigabytes memory{0};
    Mbps bandwidth{0};
  };

  void sample(Tick t) { samples_.push_back({t.index, cores_, memory_, bandwidth_}); }

  std::optional<VdcEvent> last_;
  std::unordered_map<std::string, std::pair<int, Gigabytes>> vms_;
  std::map<std::pair<std::string, std::string>, Mbps> links_;
  std::int64_t cores_ = 0;
  Gigabytes memory_{0};
  Mbps bandwidth_{0};
  std::vector<Sample> samples_;
};

inline FootprintSeries footprint(const Workload& w,
                                 std::optional<std::int64_t> horizon = std::nullopt) {
  FootprintAccumulator acc;
  for (const auto& e : w.events) acc.feed(e);
  return acc.finish(horizon);
}

/// Footprint of a base workload straight from its records (no bandwidth).
/// Default horizon: one tick past the last deletion.
inline FootprintSeries footprint(std::span<const VmRecord> records,
                                 std::optional<std::int64_t> horizon = std::nullopt) {
  std::int64_t n = 0;
  for (const auto& r : records) n = std::max(n, r.delete_tick.index + 1);
  if (horizon) n = *horizon;
  std::vector<std::int64_t> dcores(n + 1, 0);
  std::vector<Gigabytes> dmem(n + 1, Gigabytes{0});
  for (const auto& r : records) {
    std::int64_t a = std::min(r.create_tick.index, n), b = std::min(r.delete_tick.index, n);
    dcores[a] += r.cores;
    dcores[b] -= r.cores;
    dmem[a] += r.memory_gb;
    dmem[b] -= r.memory_gb;
  }
  FootprintSeries s;
  s.cores.resize(n);
  s.memory_gb.resize(n);
  s.bandwidth_mbps.assign(n, Mbps{0});
  std::int64_t c = 0;
  Gigabytes m{0};
  for (std::int64_t t = 0; t < n; ++t) {
    c += dcores[t];
    m += dmem[t];
    s.cores[t] = c;
    s.memory_gb[t] = m;
  }
  return s;
}

/// (max - min) / max as a percentage; empty optional when the series is all
/// zero and the ratio is undefined.
inline std::optional<double> variance_band(std::span<const double> series) {
  if (series.empty()) throw Error("variance band of an empty series");
  auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  if (*hi == 0) return std::nullopt;
  return (*hi - *lo) / *hi * 100.0;
}

template <typename T>
std::vector<double> as_doubles(const std::vector<T>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if constexpr (std::is_same_v<T, Rational>) out.push_back(to_double(x));
    else out.push_back(static_cast<double>(x));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Peak sizes

/// Streaming per-VDC peak alive-VM count. Deletes precede creates within a
/// tick, so the running maximum equals the maximum over tick ends.
class PeakTracker {
 public:
  void feed(const VdcEvent& e) {
    if (e.kind() == EventKind::vm_create) {
      auto& a = ++alive_[e.vdc];
      auto& p = peak_[e.vdc];
      p = std::max(p, a);
    } else if (e.kind() == EventKind::vm_delete) {
      auto& a = alive_[e.vdc];
      if (a == 0) throw Error("VM delete in empty vdc " + e.vdc);
      --a;
    }
  }

  const std::map<std::string, std::size_t>& peaks() const { return peak_; }

 private:
  std::map<std::string, std::size_t> alive_, peak_;
};

inline std::map<std::string, std::size_t> vdc_peaks(const Workload& w) {
  PeakTracker t;
  for (const auto& e : w.events) t.feed(e);
  return t.peaks();
}

struct PeakSizeDistribution {
  std::map<std::size_t, std::size_t> histogram;  // peak size -> VDC count
  std::size_t vdc_count = 0;
  std::size_t p50 = 0, p90 = 0, p99 = 0, max = 0;

  /// Smallest value v with at least pct% of VDCs at or below v.
  std::size_t percentile(double pct) const {
    if (vdc_count == 0) return 0;
    auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(vdc_count)));
    rank = std::clamp<std::size_t>(rank, 1, vdc_count);
    std::size_t seen = 0;
    for (auto [size, count] : histogram) {
      seen += count;
      if (seen >= rank) return size;
    }
    return max;
  }

  double fraction_below(std::size_t cap) const {
    if (vdc_count == 0) return 0;
    std::size_t below = 0;
    for (auto [size, count] : histogram)
      if (size < cap) below += count;
    return static_cast<double>(below) / static_cast<double>(vdc_count);
  }
};

/// Histogram and nearest-rank percentiles of per-VDC peak sizes.
template <typename Range>
PeakSizeDistribution peak_distribution(const Range& peaks) {
  PeakSizeDistribution d;
  for (std::size_t p : peaks) {
    ++d.histogram[p];
    ++d.vdc_count;
  }
  if (d.vdc_count == 0) return d;
  d.max = d.histogram.rbegin()->first;
  d.p50 = d.percentile(50);
  d.p90 = d.percentile(90);
  d.p99 = d.percentile(99);
  return d;
}

inline PeakSizeDistribution peak_distribution(const std::map<std::string, std::size_t>& peaks) {
  std::vector<std::size_t> sizes;
  for (const auto& [vdc, p] : peaks) sizes.push_back(p);
  return peak_distribution(sizes);
}

inline PeakSizeDistribution peak_distribution(const Workload& w) {
  return peak_distribution(vdc_peaks(w));
}

inline nlohmann::ordered_json to_json(const PeakSizeDistribution& d) {
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (auto [size, count] : d.histogram) hist[std::to_string(size)] = count;
  return {{"vdc_count", d.vdc_count}, {"p50", d.p50}, {"p90", d.p90},
          {"p99", d.p99},             {"max", d.max},  {"histogram", hist}};
}

/// Footprint CSV: tick,cores,memory_gb,bandwidth_mbps.
inline void write_footprint(std::ostream& out, const FootprintSeries& s) {
  out << "tick,cores,memory_gb,bandwidth_mbps\n";
  for (std::size_t t = 0; t < s.size(); ++t)
    out << t << ',' << s.cores[t] << ',' << format_rational(s.memory_gb[t]) << ','
        << format_rational(s.bandwidth_mbps[t]) << '\n';
}

/// gnuplot-friendly "peak_size vdc_count" lines.
inline void write_histogram_dat(std::ostream& out, const PeakSizeDistribution& d) {
  out << "# peak_size vdc_count\n";
  for (auto [size, count] : d.histogram) out << size << ' ' << count << '\n';
}

}  // namespace gridiron
