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

#ifndef FAIRMASK_MEASURES_H_
#define FAIRMASK_MEASURES_H_

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fairmask/dataset.h"

namespace fairmask {

// Empirical P(y = 1 | z = g) per group; groups with no rows carry no rate.
struct PositiveRates {
  std::vector<std::optional<double>> rates;
  std::vector<std::int64_t> counts;

  std::size_t k() const { return rates.size(); }
  bool all_defined() const;
};

PositiveRates positive_rates(const GroupStats& stats);
PositiveRates positive_rates(const DatasetView& view);

// Sum over all k(k-1)/2 group pairs of |rate_i - rate_j|. Throws
// kUndefinedRate when a group is empty.
double sdp_sum(const PositiveRates& rates);
// sdp_sum divided by the number of pairs; lies in [0, 1].
double sdp_avg(const PositiveRates& rates);
// Largest pairwise disparity, i.e. max(rates) - min(rates).
double sdp_max(const PositiveRates& rates);

enum class BuiltinMeasure { kSdpSum, kSdpAvg, kSdpMax };

// A user-supplied measure receives the whole view, so anything computable
// from the rows can be optimized. `penalty` must exceed every score the
// measure can return on a view with all groups present.
struct CustomMeasure {
  std::function<double(const DatasetView&)> score;
  double penalty = 2.0;
};

void register_measure(const std::string& name, CustomMeasure measure);
bool is_registered_measure(std::string_view name);

class MeasureKind {
 public:
  MeasureKind(BuiltinMeasure builtin) : kind_(builtin) {}  // NOLINT
  static MeasureKind custom(std::string name);

  bool is_builtin() const {
    return std::holds_alternative<BuiltinMeasure>(kind_);
  }
  BuiltinMeasure builtin() const { return std::get<BuiltinMeasure>(kind_); }
  std::string name() const;

  friend bool operator==(const MeasureKind&, const MeasureKind&) = default;

 private:
  explicit MeasureKind(std::string custom) : kind_(std::move(custom)) {}
  std::variant<BuiltinMeasure, std::string> kind_;
};

// "sdp_sum" | "sdp_avg" | "sdp_max" or a registered custom name.
MeasureKind parse_measure(std::string_view name);

double evaluate(BuiltinMeasure measure, const PositiveRates& rates);
double evaluate(const MeasureKind& measure, const DatasetView& view);

// Score a measure's degenerate candidates receive; strictly above any
// attainable score on k groups.
double penalty_value(const MeasureKind& measure, std::size_t k);

}  // namespace fairmask

#endif  // FAIRMASK_MEASURES_H_
