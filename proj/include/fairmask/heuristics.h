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

#ifndef FAIRMASK_HEURISTICS_H_
#define FAIRMASK_HEURISTICS_H_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "fairmask/mask.h"

namespace fairmask {

using Rng = std::mt19937_64;

enum class SolverKind { kOriginal, kRandom, kGenetic };
enum class SelectionKind { kElitist, kTournament, kRouletteWheel };

// "original" | "random" | "ga"
SolverKind parse_solver_kind(std::string_view name);
std::string_view solver_kind_name(SolverKind kind);
// "elitist" | "tournament" | "roulette"
SelectionKind parse_selection_kind(std::string_view name);
std::string_view selection_kind_name(SelectionKind kind);

struct SolverConfig {
  SolverKind kind = SolverKind::kGenetic;
  std::size_t pop_size = 100;
  std::size_t generations = 500;
  double mutation_rate = 0.05;
  SelectionKind selection = SelectionKind::kElitist;
  std::size_t tournament_size = 2;
  // Generations without a strictly better incumbent before stopping.
  std::size_t patience = 50;
  std::uint64_t seed = 0;
  // Random search only; defaults to pop_size * generations.
  std::optional<std::size_t> evaluation_budget;
  // Put the all-ones mask into the initial population so the result is never
  // worse than keeping every pool row.
  bool seed_all_ones = true;
  // Fitness workers; 0 defers to resolve_thread_count().
  std::size_t threads = 0;

  // Throws kInvalidArgument naming the offending field.
  void validate() const;
};

struct SolverReport {
  Mask best_mask;
  double best_score = 0.0;
  // Best-so-far score after the initial population and after every
  // generation (Random: after every batch of pop_size draws).
  std::vector<double> trace;
  std::size_t evaluations = 0;
  double wall_time_seconds = 0.0;
  bool terminated_early = false;
  std::uint64_t seed = 0;
  std::size_t generations_run = 0;
};

// Keeps every pool row.
SolverReport solve_original(const Problem& problem);
// Best of `evaluation_budget` masks with independent fair-coin bits.
SolverReport solve_random(const Problem& problem, const SolverConfig& config);
SolverReport solve_genetic(const Problem& problem, const SolverConfig& config);
// Dispatches on config.kind.
SolverReport solve(const Problem& problem, const SolverConfig& config);

using ParentPairs = std::vector<std::pair<std::size_t, std::size_t>>;

// Draws ceil(scores.size() / 2) parent pairs (lower score is better).
//   kElitist        uniform over the best ceil(N/2) individuals
//   kTournament     best of `tournament_size` distinct uniform draws
//   kRouletteWheel  proportional to max_score - score + 1e-9
// With all scores equal, roulette weights are equal and the draw is uniform.
ParentPairs select_parents(std::span<const double> scores,
                           SelectionKind selection,
                           std::size_t tournament_size, Rng& rng);

// Picks `count` members of the next generation from the scores of parents
// and children together. The best index (lowest, ties to the lower index)
// always comes first; the rest follow the selection rule:
//   kElitist        the next best, i.e. truncation to the top `count`
//   kTournament     best of `tournament_size` distinct draws
//   kRouletteWheel  proportional to max_score - score + 1e-9, with replacement
std::vector<std::size_t> select_survivors(std::span<const double> scores,
                                          SelectionKind selection,
                                          std::size_t count,
                                          std::size_t tournament_size,
                                          Rng& rng);

// Each position of child_a comes from parent_a or parent_b with probability
// 1/2; child_b takes the other parent's bit.
std::pair<Mask, Mask> uniform_crossover(const Mask& parent_a,
                                        const Mask& parent_b, Rng& rng);

// Number of bits bitflip_mutation toggles: floor(rate * size).
std::size_t mutation_flip_count(double rate, std::size_t size);

// Toggles exactly mutation_flip_count(rate, size) distinct positions.
Mask bitflip_mutation(Mask mask, double rate, Rng& rng);

Mask random_mask(std::size_t size, Rng& rng);

// Scores every mask, concurrently when worthwhile. Results are in input
// order and do not depend on the worker count.
std::vector<double> evaluate_batch(const Problem& problem,
                                   std::span<const Mask> masks,
                                   std::size_t threads);

}  // namespace fairmask

#endif  // FAIRMASK_HEURISTICS_H_
