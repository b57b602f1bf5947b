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

#ifndef FAIRMASK_OBJECTIVE_H_
#define FAIRMASK_OBJECTIVE_H_

#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fairmask/dataset.h"
#include "fairmask/mask.h"
#include "fairmask/measures.h"

namespace fairmask {

// Which rows form the selectable pool S.
//   kRemove        S = D
//   kSyntheticOnly S = G
//   kMerge         S = D followed by G (duplicates kept)
//   kPrivacyDiff   S = G without rows exactly equal to a row of D
//   kAdd           S = G, and every row of D is always included
enum class PoolMode { kRemove, kSyntheticOnly, kMerge, kPrivacyDiff, kAdd };

// "remove" | "synthetic" | "merge" | "privacy" | "add"
PoolMode parse_pool_mode(std::string_view name);
std::string_view pool_mode_name(PoolMode mode);
bool requires_synthetic(PoolMode mode);

struct PenaltyPolicy {
  // Overrides the measure's default penalty; must exceed every attainable
  // score.
  std::optional<double> value;
  // Masks selecting fewer than this fraction of the pool are penalized.
  double min_selection_fraction = 0.0;
};

// Largest group dictionary build_pool accepts.
inline constexpr std::size_t kMaxGroups = 32768;

class ObjectiveSpec {
 public:
  PoolMode mode() const { return mode_; }
  const MeasureKind& measure() const { return measure_; }
  double penalty() const { return penalty_; }
  double min_selection_fraction() const { return min_fraction_; }

  std::size_t pool_size() const { return pool_rows_.size(); }
  // Size of the shared group dictionary of D and G.
  std::size_t k() const { return sources_.front().data->k(); }
  const std::vector<std::string>& group_names() const {
    return sources_.front().data->group_names();
  }

  const std::vector<ViewSource>& sources() const { return sources_; }
  // Concatenated-source row index of each pool entry, ascending.
  std::span<const std::size_t> pool_rows() const { return pool_rows_; }
  // Zero-based group index and label of each pool entry.
  std::span<const std::int32_t> pool_groups() const { return pool_groups_; }
  std::span<const std::uint8_t> pool_labels() const { return pool_labels_; }
  Provenance pool_provenance(std::size_t i) const;
  // Rows always included (all of D in kAdd mode, otherwise none).
  std::span<const std::size_t> fixed_rows() const { return fixed_rows_; }
  const GroupStats& fixed_stats() const { return fixed_stats_; }
  // Groups with at least one row in the pool or fixed part. Only these must
  // be non-empty in a candidate.
  const std::vector<bool>& active_groups() const { return active_; }

  std::shared_ptr<const EncodedDataset> real() const { return real_; }
  std::shared_ptr<const EncodedDataset> synthetic() const {
    return synthetic_;
  }

  // Group statistics of the candidate subset (fixed rows included).
  GroupStats stats(const Mask& mask) const;
  // True when the candidate must receive the penalty.
  bool is_degenerate(const GroupStats& stats, std::size_t selected) const;

 private:
  friend ObjectiveSpec build_pool(PoolMode, MeasureKind,
                                  std::shared_ptr<const EncodedDataset>,
                                  std::shared_ptr<const EncodedDataset>,
                                  PenaltyPolicy);
  ObjectiveSpec(PoolMode mode, MeasureKind measure)
      : mode_(mode), measure_(std::move(measure)) {}

  PoolMode mode_;
  MeasureKind measure_;
  double penalty_ = 0.0;
  double min_fraction_ = 0.0;
  std::shared_ptr<const EncodedDataset> real_;
  std::shared_ptr<const EncodedDataset> synthetic_;
  std::vector<ViewSource> sources_;
  std::vector<std::size_t> pool_rows_;
  std::vector<std::int32_t> pool_groups_;
  std::vector<std::uint8_t> pool_labels_;
  // 2 * group + label per pool row.
  std::vector<std::uint16_t> pool_cells_;
  std::size_t first_source_size_ = 0;
  std::vector<std::size_t> fixed_rows_;
  GroupStats fixed_stats_;
  std::vector<bool> active_;
};

// Builds the pool for `mode`. The synthetic set must share the real set's
// feature schema; its group names are merged into one dictionary (real
// names first). Throws kMissingSynthetic / kSchemaMismatch.
ObjectiveSpec build_pool(PoolMode mode, MeasureKind measure,
                         std::shared_ptr<const EncodedDataset> real,
                         std::shared_ptr<const EncodedDataset> synthetic =
                             nullptr,
                         PenaltyPolicy penalty = {});

// Selected pool rows (plus the fixed rows in kAdd mode) as a view.
DatasetView materialize(const ObjectiveSpec& spec, const Mask& mask);

// Measure of the selected subset, or the penalty for empty selections and
// candidates that leave an active group without rows. Pure; safe to call
// concurrently.
double fitness(const ObjectiveSpec& spec, const Mask& mask);

// Measure of an already computed candidate statistic.
double fitness_from_stats(const ObjectiveSpec& spec, const GroupStats& stats,
                          std::size_t selected);

// Statistics after toggling bit `flip` of `mask` (mask itself unchanged).
GroupStats incremental_stats(const ObjectiveSpec& spec, GroupStats stats,
                             const Mask& mask, std::size_t flip);
// In-place variant for hot loops; `now_selected` is the bit's new value.
void apply_flip(const ObjectiveSpec& spec, GroupStats& stats,
                std::size_t flip, bool now_selected);

// Wraps `spec` as a solver Problem; `spec` must outlive the result.
Problem make_problem(const ObjectiveSpec& spec);

}  // namespace fairmask

#endif  // FAIRMASK_OBJECTIVE_H_
