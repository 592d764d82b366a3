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

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "gridiron/core_model.hpp"
#include "gridiron/error.hpp"
#include "gridiron/rational.hpp"

// Event streams are JSON Lines, one VdcEvent per line:
//   {"tick":5,"vdc":"d#0","op":"vm_create","vm":"v0","cores":2,"mem_gb":4}
//   {"tick":5,"vdc":"d#0","op":"vlink_create","link":{"a":"v0","b":"v1"},"bw_mbps":2}
// Quantities are written with at most three decimals.

namespace gridiron {

/// JSON number for a quantity rounded to three decimals; integral values
/// are written without a fractional part.
inline nlohmann::ordered_json quantity_json(const Rational& r) {
  Rational rounded = round_thousandths(r);
  if (rounded.denominator() == 1) return rounded.numerator();
  return to_double(rounded);
}

inline Rational quantity_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number()) return from_thousandths(j.get<double>());
  if (j.is_string()) return parse_rational(j.get<std::string>());
  throw Error("expected a number, got " + j.dump());
}

inline nlohmann::ordered_json event_to_json(const VdcEvent& e) {
  nlohmann::ordered_json j;
  j["tick"] = e.tick.index;
  j["vdc"] = e.vdc;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, VmCreate>) {
          j["op"] = "vm_create";
          j["vm"] = p.vm;
          j["cores"] = p.cores;
          j["mem_gb"] = quantity_json(p.memory_gb);
        } else if constexpr (std::is_same_v<T, VmDelete>) {
          j["op"] = "vm_delete";
          j["vm"] = p.vm;
        } else if constexpr (std::is_same_v<T, VlinkCreate>) {
          j["op"] = "vlink_create";
          j["link"] = {{"a", p.link.a}, {"b", p.link.b}};
          j["bw_mbps"] = quantity_json(p.link.bandwidth);
        } else {
          j["op"] = "vlink_delete";
          j["link"] = {{"a", p.a}, {"b", p.b}};
        }
      },
      e.payload);
  return j;
}

inline void write_event(std::ostream& out, const VdcEvent& e) {
  out << event_to_json(e).dump() << '\n';
}

inline void write_events(std::ostream& out, std::span<const VdcEvent> events) {
  for (const auto& e : events) write_event(out, e);
}

inline VdcEvent event_from_json(const nlohmann::json& j) {
  auto tick_value = j.at("tick").get<std::int64_t>();
  if (tick_value < 0) throw Error("negative tick");
  Tick tick{tick_value};
  std::string vdc = j.at("vdc").get<std::string>();
  std::string op = j.at("op").get<std::string>();
  if (op == "vm_create") {
    int cores = j.at("cores").get<int>();
    Gigabytes mem = quantity_from_json(j.at("mem_gb"));
    if (cores < 1 || mem <= 0) throw Error("vm_create needs positive cores and mem_gb");
    return VdcEvent::vm_create(tick, vdc, j.at("vm").get<std::string>(), cores, mem);
  }
  if (op == "vm_delete") return VdcEvent::vm_delete(tick, vdc, j.at("vm").get<std::string>());
  const auto& link = j.at("link");
  std::string a = link.at("a").get<std::string>();
  std::string b = link.at("b").get<std::string>();
  if (op == "vlink_create") {
    Mbps bw = quantity_from_json(j.at("bw_mbps"));
    if (bw <= 0) throw Error("vlink_create needs positive bw_mbps");
    return VdcEvent::vlink_create(tick, vdc, a, b, bw);
  }
  if (op == "vlink_delete") return VdcEvent::vlink_delete(tick, vdc, a, b);
  throw Error("unknown op '" + op + "'");
}

/// Streams events from JSONL, calling `fn` for each in file order.
/// Blank lines are skipped; malformed lines raise ParseError.
template <typename Fn>
void for_each_event(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    VdcEvent e;
    try {
      e = event_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(line_no, ex.what());
    } catch (const ParseError&) {
      throw;
    } catch (const Error& ex) {
      throw ParseError(line_no, ex.what());
    }
    fn(std::move(e), line_no);
  }
}

/// Reads a JSONL event stream that must already be in canonical order.
inline Workload read_workload(std::istream& in) {
  Workload w;
  std::unordered_set<std::string> vdcs;
  for_each_event(in, [&](VdcEvent e, std::size_t line_no) {
    if (!w.events.empty() && compare_events(w.events.back(), e) >= 0)
      throw ParseError(line_no, "event out of canonical order: " + detail::describe(e));
    if (e.kind() == EventKind::vm_create) {
      vdcs.insert(e.vdc);
      ++w.vm_count;
    }
    w.events.push_back(std::move(e));
  });
  w.vdc_count = vdcs.size();
  return w;
}

}  // namespace gridiron
