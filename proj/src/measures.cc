//
// Copyright 2026 The Fairmask Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "fairmask/measures.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>

#include "fairmask/error.h"

namespace fairmask {
namespace {

struct Registry {
  std::shared_mutex mutex;
  std::map<std::string, CustomMeasure, std::less<>> measures;
};

Registry& registry() {
  static Registry instance;
  return instance;
}

void require_defined(const PositiveRates& rates) {
  for (std::size_t g = 0; g < rates.k(); ++g) {
    if (!rates.rates[g]) {
      throw Error(ErrorCode::kUndefinedRate,
                  "group " + std::to_string(g + 1) + " has no rows");
    }
  }
}

CustomMeasure lookup(std::string_view name) {
  auto& reg = registry();
  std::shared_lock lock(reg.mutex);
  const auto it = reg.measures.find(name);
  if (it == reg.measures.end()) {
    throw Error(ErrorCode::kUnknownName,
                "unknown measure '" + std::string(name) + "'");
  }
  return it->second;
}

}  // namespace

bool PositiveRates::all_defined() const {
  return std::all_of(rates.begin(), rates.end(),
                     [](const auto& r) { return r.has_value(); });
}

PositiveRates positive_rates(const GroupStats& stats) {
  PositiveRates out;
  out.rates.resize(stats.size());
  out.counts.resize(stats.size());
  for (std::size_t g = 0; g < stats.size(); ++g) {
    out.counts[g] = stats[g].count;
    if (stats[g].count > 0) {
      out.rates[g] = static_cast<double>(stats[g].positives) /
                     static_cast<double>(stats[g].count);
    }
  }
  return out;
}

PositiveRates positive_rates(const DatasetView& view) {
  return positive_rates(group_stats(view));
}

double sdp_sum(const PositiveRates& rates) {
  require_defined(rates);
  double total = 0.0;
  for (std::size_t i = 0; i < rates.k(); ++i) {
    for (std::size_t j = i + 1; j < rates.k(); ++j) {
      total += std::abs(*rates.rates[i] - *rates.rates[j]);
    }
  }
  return total;
}

double sdp_avg(const PositiveRates& rates) {
  const double k = static_cast<double>(rates.k());
  if (rates.k() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "sdp_avg needs k >= 2");
  }
  return 2.0 / (k * (k - 1.0)) * sdp_sum(rates);
}

double sdp_max(const PositiveRates& rates) {
  require_defined(rates);
  if (rates.k() == 0) return 0.0;
  const auto [lo, hi] = std::minmax_element(
      rates.rates.begin(), rates.rates.end(),
      [](const auto& a, const auto& b) { return *a < *b; });
  return **hi - **lo;
}

void register_measure(const std::string& name, CustomMeasure measure) {
  if (name == "sdp_sum" || name == "sdp_avg" || name == "sdp_max") {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot override builtin measure '" + name + "'");
  }
  if (!measure.score) {
    throw Error(ErrorCode::kInvalidArgument, "measure has no score function");
  }
  auto& reg = registry();
  std::unique_lock lock(reg.mutex);
  reg.measures[name] = std::move(measure);
}

bool is_registered_measure(std::string_view name) {
  auto& reg = registry();
  std::shared_lock lock(reg.mutex);
  return reg.measures.find(name) != reg.measures.end();
}

MeasureKind MeasureKind::custom(std::string name) {
  return MeasureKind(std::move(name));
}

std::string MeasureKind::name() const {
  if (!is_builtin()) return std::get<std::string>(kind_);
  switch (builtin()) {
    case BuiltinMeasure::kSdpSum:
      return "sdp_sum";
    case BuiltinMeasure::kSdpAvg:
      return "sdp_avg";
    case BuiltinMeasure::kSdpMax:
      return "sdp_max";
  }
  return "unknown";
}

MeasureKind parse_measure(std::string_view name) {
  if (name == "sdp_sum") return BuiltinMeasure::kSdpSum;
  if (name == "sdp_avg") return BuiltinMeasure::kSdpAvg;
  if (name == "sdp_max") return BuiltinMeasure::kSdpMax;
  if (is_registered_measure(name)) {
    return MeasureKind::custom(std::string(name));
  }
  throw Error(ErrorCode::kUnknownName,
              "unknown measure '" + std::string(name) +
                  "' (expected sdp_sum, sdp_avg, sdp_max or a registered "
                  "name)");
}

double evaluate(BuiltinMeasure measure, const PositiveRates& rates) {
  switch (measure) {
    case BuiltinMeasure::kSdpSum:
      return sdp_sum(rates);
    case BuiltinMeasure::kSdpAvg:
      return sdp_avg(rates);
    case BuiltinMeasure::kSdpMax:
      return sdp_max(rates);
  }
  throw Error(ErrorCode::kUnknownName, "unknown builtin measure");
}

double evaluate(const MeasureKind& measure, const DatasetView& view) {
  if (measure.is_builtin()) {
    return evaluate(measure.builtin(), positive_rates(view));
  }
  return lookup(measure.name()).score(view);
}

double penalty_value(const MeasureKind& measure, std::size_t k) {
  if (!measure.is_builtin()) return lookup(measure.name()).penalty;
  if (measure.builtin() == BuiltinMeasure::kSdpSum) {
    const double kk = static_cast<double>(k);
    return kk * (kk - 1.0) / 2.0 + 1.0;
  }
  return 2.0;
}

}  // namespace fairmask
