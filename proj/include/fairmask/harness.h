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

#ifndef FAIRMASK_HARNESS_H_
#define FAIRMASK_HARNESS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairmask/dataset.h"
#include "fairmask/heuristics.h"
#include "fairmask/mask.h"
#include "fairmask/measures.h"
#include "fairmask/objective.h"

namespace fairmask {

// Seeded stand-in for a real benchmark table: k groups with prescribed
// positive rates, two numeric features and one three-valued categorical.
struct BiasedDatasetConfig {
  std::size_t n = 2000;
  std::vector<double> group_rates = {0.7, 0.5, 0.4, 0.2};
  // Relative group sizes; equal when empty.
  std::vector<double> group_weights;
  std::uint64_t seed = 0;
};

EncodedDataset make_biased_dataset(const BiasedDatasetConfig& config);

struct DatasetSpec {
  std::string name;
  // Exactly one of `path` and `biased` is set.
  std::optional<std::string> path;
  ColumnRoles roles;
  EncodingOptions encoding;
  std::optional<BiasedDatasetConfig> biased;
  // External synthetic CSV; otherwise a Gaussian copula sample of size n is
  // drawn per trial.
  std::optional<std::string> synthetic_path;
};

struct SolverSpec {
  std::string name;
  SolverConfig config;
};

struct GridSpec {
  std::vector<std::size_t> pop_sizes;
  std::vector<std::size_t> generations;
  SolverConfig base;
};

struct ExperimentPlan {
  std::vector<DatasetSpec> datasets;
  std::vector<PoolMode> modes;
  std::vector<MeasureKind> measures;
  std::vector<SolverSpec> solvers;
  std::size_t repeats = 15;
  std::uint64_t seed_base = 0;
  // Fitness workers inside each solver (0 = FAIRMASK_THREADS / auto).
  std::size_t threads = 0;
  // Cells executed concurrently; trials inside a cell always run in order.
  std::size_t cell_workers = 1;
  PenaltyPolicy penalty;
  std::optional<GridSpec> grid;

  void validate() const;
};

// Parses the JSON plan format; missing keys are named in the error.
ExperimentPlan parse_plan(std::string_view json_text,
                          const std::string& base_dir = ".");
ExperimentPlan load_plan(const std::string& path);

struct TrialRecord {
  std::string dataset;
  std::string mode;
  std::string measure;
  std::string solver;
  std::size_t pop_size = 0;
  std::size_t generations = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double score = 0.0;
  // Measure of the real data alone and of the whole pool (all-ones mask).
  double real_score = 0.0;
  double pool_baseline_score = 0.0;
  double runtime_seconds = 0.0;
  std::size_t evaluations = 0;
  std::size_t generations_run = 0;
  bool terminated_early = false;
  std::size_t selected = 0;
  std::size_t output_rows = 0;
  // Smallest group size among active groups of the returned subset.
  std::int64_t min_group_count = 0;
  std::string best_mask;
  std::optional<std::string> error;

  // Everything except the wall-clock runtime, as one JSON line.
  std::string deterministic_json() const;
  std::string to_json() const;
};

struct CellSummary {
  std::string dataset;
  std::string mode;
  std::string measure;
  std::string solver;
  std::size_t pop_size = 0;
  std::size_t generations = 0;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double mean_score = 0.0;
  double std_score = 0.0;
  double mean_runtime = 0.0;
  double std_runtime = 0.0;
  double mean_evaluations = 0.0;
};

struct ResultTable {
  std::vector<TrialRecord> records;
  std::vector<CellSummary> cells;
};

// Mean and sample standard deviation (n - 1); the deviation of a single
// value is 0.
std::pair<double, double> mean_std(const std::vector<double>& values);

// Groups records into cells in first-appearance order.
std::vector<CellSummary> aggregate(const std::vector<TrialRecord>& records);

// Runs datasets x modes x measures x solvers, `repeats` trials each with
// seeds seed_base + trial. Failures are recorded per trial.
ResultTable run_plan(const ExperimentPlan& plan);

// One cell per (pop_size, generations) grid point of plan.grid, over all
// datasets x modes x measures.
ResultTable grid_search(const ExperimentPlan& plan);

// results_raw.jsonl and results_table.csv (or grid_table.csv).
void write_results(const ResultTable& table, const std::string& out_dir,
                   bool grid);
std::string format_table_csv(const std::vector<CellSummary>& cells,
                             bool grid);

struct BruteForceResult {
  Mask mask;
  double score = 0.0;
  std::size_t evaluations = 0;
};

inline constexpr std::size_t kBruteForceMaxPool = 24;

// Exhaustive minimum over all 2^n masks in Gray-code order with O(1) stat
// updates. Returns the lexicographically smallest optimal mask. Throws
// kPoolTooLarge above kBruteForceMaxPool.
BruteForceResult brute_force(const ObjectiveSpec& spec);

}  // namespace fairmask

#endif  // FAIRMASK_HARNESS_H_
