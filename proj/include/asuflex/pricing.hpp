/*
 * Copyright 2026 The asuflex Authors. All rights reserved.
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

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "asuflex/error.hpp"
#include "asuflex/plant.hpp"

namespace asuflex {

inline constexpr int kMinProfileHours = 24 + kForecastHours;

/// Hourly electricity prices in $/MWh, piecewise constant within each hour.
struct PriceProfile {
  std::vector<double> prices;
  int start_hour = 0;

  int horizon_hours() const { return static_cast<int>(prices.size()); }

  void validate() const {
    if (horizon_hours() < kMinProfileHours) {
      throw Error(ErrorCode::ShortProfile, "price profile has " + std::to_string(prices.size()) +
                                               " hours, need at least " + std::to_string(kMinProfileHours));
    }
    for (double p : prices) {
      if (!std::isfinite(p)) throw Error(ErrorCode::ParseError, "price profile contains a non-finite price");
    }
  }

  /// Price in effect at simulation time t (seconds from the profile start).
  double price_at(double t_sim) const {
    const auto hour = static_cast<long>(std::floor(t_sim / 3600.0));
    if (hour < 0 || hour >= horizon_hours()) throw Error(ErrorCode::OutOfRange, "price_at: time outside profile");
    return prices[static_cast<std::size_t>(hour)];
  }

  bool operator==(const PriceProfile&) const = default;
};

namespace detail {

inline double parse_double(const std::string& field, int line_no) {
  // from_chars for double is available in libstdc++ >= 11
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": cannot parse '" + field + "'");
  }
  return v;
}

}  // namespace detail

/// Parse a `hour,price_usd_per_mwh` CSV. Hours must run 0,1,2,... without gaps.
inline PriceProfile parse_profile(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty price file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "hour,price_usd_per_mwh") throw Error(ErrorCode::ParseError, "unexpected header '" + line + "'");

  PriceProfile profile;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected two fields");
    }
    const double hour = detail::parse_double(line.substr(0, comma), line_no);
    const double price = detail::parse_double(line.substr(comma + 1), line_no);
    if (hour != std::floor(hour)) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": non-integer hour");
    if (!std::isfinite(price)) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": non-finite price");
    if (static_cast<long>(hour) != static_cast<long>(profile.prices.size())) {
      throw Error(ErrorCode::GapError, "line " + std::to_string(line_no) + ": expected hour " +
                                           std::to_string(profile.prices.size()) + ", got " +
                                           std::to_string(static_cast<long>(hour)));
    }
    profile.prices.push_back(price);
  }
  profile.validate();
  return profile;
}

inline PriceProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open price file " + path);
  return parse_profile(in);
}

/// Prices are written with 17 significant digits so that load(save(p)) == p.
inline void write_profile(std::ostream& out, const PriceProfile& profile) {
  out << "hour,price_usd_per_mwh\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t h = 0; h < profile.prices.size(); ++h) out << h << ',' << profile.prices[h] << '\n';
}

inline void save_profile(const std::string& path, const PriceProfile& profile) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write price file " + path);
  write_profile(out, profile);
}

/// Two-peak daily shape (morning peak at 08:00, evening peak at 18:00,
/// Gaussian bumps of 2 h standard deviation) repeated with a 24 h period.
/// Evening peak has unit height, morning peak 0.6.
inline double daily_peak_shape(double hour) {
  auto bump = [](double h, double centre, double height) {
    const double d = h - centre;
    return height * std::exp(-d * d / (2.0 * 2.0 * 2.0));
  };
  double s = 0.0;
  for (double day : {-24.0, 0.0, 24.0, 48.0}) {
    s += bump(hour, 8.0 + day, 0.6) + bump(hour, 18.0 + day, 1.0);
  }
  return s;
}

/// 36-hour synthetic profile: base + peak_amp * shape(h) + U(-noise_frac, noise_frac) * base.
inline PriceProfile synth_profile(std::uint64_t seed, double base, double peak_amp, double noise_frac = 0.05) {
  if (!(base > 0.0) || !(peak_amp >= 0.0) || !(noise_frac >= 0.0) || noise_frac > 0.05) {
    throw Error(ErrorCode::InvalidArgument, "synth_profile: need base > 0, peak_amp >= 0, 0 <= noise_frac <= 0.05");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PriceProfile profile;
  profile.prices.resize(kMinProfileHours);
  for (int h = 0; h < kMinProfileHours; ++h) {
    const double noise = noise_frac > 0.0 ? noise_frac * base * u(rng) : 0.0;
    profile.prices[static_cast<std::size_t>(h)] = base + peak_amp * daily_peak_shape(h) + noise;
  }
  return profile;
}

/// Perfect 12-hour forecast starting at the hour containing t_sim.
inline std::array<double, kForecastHours> forecast(const PriceProfile& profile, double t_sim) {
  if (t_sim < 0.0 || t_sim > 24.0 * 3600.0) throw Error(ErrorCode::OutOfRange, "forecast: t_sim outside [0, 24 h]");
  const auto first = static_cast<long>(std::floor(t_sim / 3600.0));
  if (first + kForecastHours > profile.horizon_hours()) {
    throw Error(ErrorCode::OutOfRange, "forecast: window exceeds profile length");
  }
  std::array<double, kForecastHours> out{};
  for (int i = 0; i < kForecastHours; ++i) out[static_cast<std::size_t>(i)] = profile.prices[static_cast<std::size_t>(first + i)];
  return out;
}

}  // namespace asuflex
