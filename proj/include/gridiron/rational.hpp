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

#include <boost/rational.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "gridiron/error.hpp"

namespace gridiron {

/// Exact rational quantity. Bandwidth bounds such as C/(P/2)^2 are rarely
/// integral, so every bandwidth and memory amount is carried exactly and
/// only rounded when serialized.
using Rational = boost::rational<std::int64_t>;

/// Megabits per second.
using Mbps = Rational;

/// Gigabytes of memory.
using Gigabytes = Rational;

inline double to_double(const Rational& r) {
  return boost::rational_cast<double>(r);
}

/// Largest integer not greater than `r`.
inline std::int64_t floor_int(const Rational& r) {
  std::int64_t q = r.numerator() / r.denominator();
  if (r.numerator() % r.denominator() != 0 && r.numerator() < 0) --q;
  return q;
}

/// Parses a plain decimal ("177.78", "-3", "40000", ".5") or a fraction
/// ("40000/9") into an exact rational.
inline Rational parse_rational(std::string_view text) {
  auto fail = [&]() -> Error {
    return Error("not a decimal number: '" + std::string(text) + "'");
  };
  if (text.empty()) throw fail();
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parse_rational(text.substr(0, slash));
    Rational den = parse_rational(text.substr(slash + 1));
    if (den == Rational(0)) throw fail();
    return num / den;
  }
  bool negative = false;
  std::size_t pos = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    pos = 1;
  }
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;
  bool seen_point = false;
  bool seen_digit = false;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (c == '.') {
      if (seen_point) throw fail();
      seen_point = true;
      continue;
    }
    if (c < '0' || c > '9') throw fail();
    seen_digit = true;
    if (numerator > (INT64_MAX - 9) / 10 || denominator > INT64_MAX / 10)
      throw Error("decimal number out of range: '" + std::string(text) + "'");
    numerator = numerator * 10 + (c - '0');
    if (seen_point) denominator *= 10;
  }
  if (!seen_digit) throw fail();
  return Rational(negative ? -numerator : numerator, denominator);
}

/// Rounds to the nearest multiple of 1/1000, halves away from zero.
inline Rational round_thousandths(const Rational& r) {
  Rational scaled = r * 1000;
  Rational shifted = scaled >= 0 ? scaled + Rational(1, 2) : scaled - Rational(1, 2);
  std::int64_t whole = shifted.numerator() / shifted.denominator();
  return Rational(whole, 1000);
}

/// Converts a double read from a text format back to an exact value,
/// assuming it was written with at most three decimals.
inline Rational from_thousandths(double value) {
  return Rational(static_cast<std::int64_t>(std::llround(value * 1000.0)), 1000);
}

/// Fixed three-decimal rendering with trailing zeros trimmed ("177.778", "2").
inline std::string format_rational(const Rational& r) {
  Rational rounded = round_thousandths(r);
  std::int64_t milli = (rounded * 1000).numerator();
  bool negative = milli < 0;
  std::uint64_t magnitude = negative ? static_cast<std::uint64_t>(-milli)
                                     : static_cast<std::uint64_t>(milli);
  std::string out = std::to_string(magnitude / 1000);
  std::uint64_t frac = magnitude % 1000;
  if (frac != 0) {
    std::string digits = std::to_string(frac);
    digits.insert(0, 3 - digits.size(), '0');
    while (digits.back() == '0') digits.pop_back();
    out += "." + digits;
  }
  return negative ? "-" + out : out;
}

}  // namespace gridiron
