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

#include "fairmask/objective.h"

#include <algorithm>
#include <cstring>
#include <limits>
#include <unordered_set>

#include "fairmask/error.h"

namespace fairmask {
namespace {

// Exact byte image of an encoded row, used for set difference.
std::string row_key(const EncodedDataset& data, std::size_t i,
                    const std::vector<std::string>& names) {
  const auto row = data.row(i);
  std::string key(row.size() * sizeof(double), '\0');
  std::memcpy(key.data(), row.data(), key.size());
  key.push_back(static_cast<char>(data.labels()[i]));
  key.append(names[data.groups()[i] - 1]);
  return key;
}

double max_attainable(const MeasureKind& measure, std::size_t k) {
  if (!measure.is_builtin()) return -std::numeric_limits<double>::infinity();
  if (measure.builtin() == BuiltinMeasure::kSdpSum) {
    return static_cast<double>(k) * (static_cast<double>(k) - 1.0) / 2.0;
  }
  return 1.0;
}

}  // namespace

PoolMode parse_pool_mode(std::string_view name) {
  if (name == "remove") return PoolMode::kRemove;
  if (name == "synthetic") return PoolMode::kSyntheticOnly;
  if (name == "merge") return PoolMode::kMerge;
  if (name == "privacy") return PoolMode::kPrivacyDiff;
  if (name == "add") return PoolMode::kAdd;
  throw Error(ErrorCode::kUnknownName,
              "unknown mode '" + std::string(name) +
                  "' (expected remove, synthetic, merge, privacy or add)");
}

std::string_view pool_mode_name(PoolMode mode) {
  switch (mode) {
    case PoolMode::kRemove:
      return "remove";
    case PoolMode::kSyntheticOnly:
      return "synthetic";
    case PoolMode::kMerge:
      return "merge";
    case PoolMode::kPrivacyDiff:
      return "privacy";
    case PoolMode::kAdd:
      return "add";
  }
  return "unknown";
}

bool requires_synthetic(PoolMode mode) { return mode != PoolMode::kRemove; }

Provenance ObjectiveSpec::pool_provenance(std::size_t i) const {
  return pool_rows_[i] < first_source_size_ ? sources_.front().provenance
                                            : sources_.back().provenance;
}

GroupStats ObjectiveSpec::stats(const Mask& mask) const {
  if (mask.size() != pool_size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "mask has " + std::to_string(mask.size()) +
                    " entries, pool has " + std::to_string(pool_size()));
  }
  GroupStats stats = fixed_stats_;
  const auto bits = mask.bits();
  const std::size_t n = bits.size();
  const std::size_t cells = 2 * stats.size();
  // Four tallies break the store-to-load chain on repeated cells.
  thread_local std::vector<std::uint32_t> tally;
  tally.assign(4 * cells, 0);
  std::uint32_t* t0 = tally.data();
  std::uint32_t* t1 = t0 + cells;
  std::uint32_t* t2 = t1 + cells;
  std::uint32_t* t3 = t2 + cells;
  const std::uint16_t* cell = pool_cells_.data();
  const std::uint8_t* b = bits.data();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    t0[cell[i]] += b[i];
    t1[cell[i + 1]] += b[i + 1];
    t2[cell[i + 2]] += b[i + 2];
    t3[cell[i + 3]] += b[i + 3];
  }
  for (; i < n; ++i) t0[cell[i]] += b[i];
  for (std::size_t g = 0; g < stats.size(); ++g) {
    const std::int64_t neg = std::int64_t{t0[2 * g]} + t1[2 * g] +
                             t2[2 * g] + t3[2 * g];
    const std::int64_t pos = std::int64_t{t0[2 * g + 1]} + t1[2 * g + 1] +
                             t2[2 * g + 1] + t3[2 * g + 1];
    stats[g].count += neg + pos;
    stats[g].positives += pos;
  }
  return stats;
}

bool ObjectiveSpec::is_degenerate(const GroupStats& stats,
                                  std::size_t selected) const {
  if (selected + fixed_rows_.size() == 0) return true;
  if (min_fraction_ > 0.0 &&
      static_cast<double>(selected) <
          min_fraction_ * static_cast<double>(pool_size())) {
    return true;
  }
  for (std::size_t g = 0; g < stats.size(); ++g) {
    if (active_[g] && stats[g].count == 0) return true;
  }
  return false;
}

ObjectiveSpec build_pool(PoolMode mode, MeasureKind measure,
                         std::shared_ptr<const EncodedDataset> real,
                         std::shared_ptr<const EncodedDataset> synthetic,
                         PenaltyPolicy penalty) {
  if (!real) throw Error(ErrorCode::kInvalidArgument, "real dataset missing");
  if (requires_synthetic(mode) && !synthetic) {
    throw Error(ErrorCode::kMissingSynthetic,
                "mode '" + std::string(pool_mode_name(mode)) +
                    "' needs a synthetic dataset");
  }
  if (penalty.min_selection_fraction < 0.0 ||
      penalty.min_selection_fraction > 1.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "minimum selection fraction must lie in [0, 1]");
  }

  ObjectiveSpec spec(mode, std::move(measure));
  spec.min_fraction_ = penalty.min_selection_fraction;

  if (synthetic) {
    if (!(synthetic->schema() == real->schema())) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "synthetic data does not match the real feature schema");
    }
    std::vector<std::string> names = real->group_names();
    for (const auto& name : synthetic->group_names()) {
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        names.push_back(name);
      }
    }
    if (names != real->group_names()) {
      real = std::make_shared<const EncodedDataset>(
          real->with_group_dictionary(names));
    }
    if (names != synthetic->group_names()) {
      synthetic = std::make_shared<const EncodedDataset>(
          synthetic->with_group_dictionary(names));
    }
  }
  spec.real_ = real;
  spec.synthetic_ = mode == PoolMode::kRemove ? nullptr : synthetic;
  if (real->k() > kMaxGroups) {
    throw Error(ErrorCode::kInvalidArgument,
                "at most " + std::to_string(kMaxGroups) +
                    " protected groups are supported");
  }

  auto add_pool_row = [&spec](const EncodedDataset& data, std::size_t row,
                              std::size_t offset) {
    spec.pool_rows_.push_back(row + offset);
    spec.pool_groups_.push_back(data.groups()[row] - 1);
    spec.pool_labels_.push_back(data.labels()[row]);
    spec.pool_cells_.push_back(
        static_cast<std::uint16_t>(2 * (data.groups()[row] - 1) +
                                   data.labels()[row]));
  };

  switch (mode) {
    case PoolMode::kRemove:
      spec.sources_ = {{real, Provenance::kReal}};
      for (std::size_t i = 0; i < real->n(); ++i) add_pool_row(*real, i, 0);
      break;
    case PoolMode::kSyntheticOnly:
      spec.sources_ = {{synthetic, Provenance::kSynthetic}};
      for (std::size_t i = 0; i < synthetic->n(); ++i) {
        add_pool_row(*synthetic, i, 0);
      }
      break;
    case PoolMode::kMerge:
      spec.sources_ = {{real, Provenance::kReal},
                       {synthetic, Provenance::kSynthetic}};
      for (std::size_t i = 0; i < real->n(); ++i) add_pool_row(*real, i, 0);
      for (std::size_t i = 0; i < synthetic->n(); ++i) {
        add_pool_row(*synthetic, i, real->n());
      }
      break;
    case PoolMode::kPrivacyDiff: {
      spec.sources_ = {{synthetic, Provenance::kSynthetic}};
      std::unordered_set<std::string> seen;
      for (std::size_t i = 0; i < real->n(); ++i) {
        seen.insert(row_key(*real, i, real->group_names()));
      }
      for (std::size_t i = 0; i < synthetic->n(); ++i) {
        if (!seen.contains(row_key(*synthetic, i, synthetic->group_names()))) {
          add_pool_row(*synthetic, i, 0);
        }
      }
      break;
    }
    case PoolMode::kAdd:
      spec.sources_ = {{real, Provenance::kReal},
                       {synthetic, Provenance::kSynthetic}};
      for (std::size_t i = 0; i < real->n(); ++i) spec.fixed_rows_.push_back(i);
      for (std::size_t i = 0; i < synthetic->n(); ++i) {
        add_pool_row(*synthetic, i, real->n());
      }
      break;
  }
  spec.first_source_size_ = spec.sources_.front().data->n();

  const std::size_t k = spec.k();
  spec.fixed_stats_.assign(k, GroupCounts{});
  for (std::size_t row : spec.fixed_rows_) {
    auto& g = spec.fixed_stats_[real->groups()[row] - 1];
    ++g.count;
    g.positives += real->labels()[row];
  }
  spec.active_.assign(k, false);
  for (std::size_t g = 0; g < k; ++g) {
    spec.active_[g] = spec.fixed_stats_[g].count > 0;
  }
  for (auto g : spec.pool_groups_) spec.active_[g] = true;

  spec.penalty_ = penalty.value.value_or(penalty_value(spec.measure_, k));
  if (spec.penalty_ <= max_attainable(spec.measure_, k)) {
    throw Error(ErrorCode::kInvalidArgument,
                "penalty must exceed every attainable score of " +
                    spec.measure_.name());
  }
  return spec;
}

DatasetView materialize(const ObjectiveSpec& spec, const Mask& mask) {
  if (mask.size() != spec.pool_size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "mask has " + std::to_string(mask.size()) +
                    " entries, pool has " +
                    std::to_string(spec.pool_size()));
  }
  std::vector<std::size_t> selected(spec.fixed_rows().begin(),
                                    spec.fixed_rows().end());
  selected.reserve(selected.size() + mask.popcount());
  const auto rows = spec.pool_rows();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (mask[i]) selected.push_back(rows[i]);
  }
  return DatasetView(spec.sources(), std::move(selected));
}

double fitness_from_stats(const ObjectiveSpec& spec, const GroupStats& stats,
                          std::size_t selected) {
  if (spec.is_degenerate(stats, selected)) return spec.penalty();
  if (!spec.measure().is_builtin()) {
    throw Error(ErrorCode::kInvalidArgument,
                "custom measures need the materialized view");
  }
  PositiveRates rates;
  const auto& active = spec.active_groups();
  for (std::size_t g = 0; g < stats.size(); ++g) {
    if (!active[g]) continue;
    rates.counts.push_back(stats[g].count);
    rates.rates.push_back(static_cast<double>(stats[g].positives) /
                          static_cast<double>(stats[g].count));
  }
  return evaluate(spec.measure().builtin(), rates);
}

double fitness(const ObjectiveSpec& spec, const Mask& mask) {
  const GroupStats stats = spec.stats(mask);
  std::int64_t selected = 0;
  for (std::size_t g = 0; g < stats.size(); ++g) {
    selected += stats[g].count - spec.fixed_stats()[g].count;
  }
  if (spec.measure().is_builtin() ||
      spec.is_degenerate(stats, static_cast<std::size_t>(selected))) {
    return fitness_from_stats(spec, stats,
                              static_cast<std::size_t>(selected));
  }
  return evaluate(spec.measure(), materialize(spec, mask));
}

void apply_flip(const ObjectiveSpec& spec, GroupStats& stats,
                std::size_t flip, bool now_selected) {
  auto& g = stats[spec.pool_groups()[flip]];
  const std::int64_t delta = now_selected ? 1 : -1;
  g.count += delta;
  g.positives += delta * spec.pool_labels()[flip];
}

GroupStats incremental_stats(const ObjectiveSpec& spec, GroupStats stats,
                             const Mask& mask, std::size_t flip) {
  if (flip >= spec.pool_size() || mask.size() != spec.pool_size()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "flip index " + std::to_string(flip) + " outside pool of " +
                    std::to_string(spec.pool_size()));
  }
  if (stats.size() != spec.k()) {
    throw Error(ErrorCode::kInvalidArgument, "stats have wrong group count");
  }
  apply_flip(spec, stats, flip, !mask[flip]);
  return stats;
}

Problem make_problem(const ObjectiveSpec& spec) {
  return Problem{spec.pool_size(),
                 [&spec](const Mask& mask) { return fitness(spec, mask); }};
}

}  // namespace fairmask
