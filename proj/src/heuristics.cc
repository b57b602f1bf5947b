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

#include "fairmask/heuristics.h"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "fairmask/error.h"
#include "fairmask/parallel.h"

namespace fairmask {
namespace {

constexpr double kRouletteEpsilon = 1e-9;
// Below this many bit visits per batch, threads cost more than they save.
constexpr std::size_t kParallelThreshold = 1 << 15;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t argmin(std::span<const double> scores) {
  return static_cast<std::size_t>(
      std::min_element(scores.begin(), scores.end()) - scores.begin());
}

std::size_t uniform_index(std::size_t n, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Best of `size` distinct uniformly drawn candidates; ties go to the lower
// index. A tournament over the whole population returns the global best.
std::size_t tournament_pick(std::span<const double> scores, std::size_t size,
                            Rng& rng) {
  const std::size_t n = scores.size();
  if (size >= n) return argmin(scores);
  // Floyd's sampling; tournaments are small, so a linear scan suffices.
  std::vector<std::size_t> drawn;
  drawn.reserve(size);
  std::size_t best = n;
  for (std::size_t j = n - size; j < n; ++j) {
    std::size_t c = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    if (std::find(drawn.begin(), drawn.end(), c) != drawn.end()) c = j;
    drawn.push_back(c);
    if (best == n || scores[c] < scores[best] ||
        (scores[c] == scores[best] && c < best)) {
      best = c;
    }
  }
  return best;
}

}  // namespace

SolverKind parse_solver_kind(std::string_view name) {
  if (name == "original") return SolverKind::kOriginal;
  if (name == "random") return SolverKind::kRandom;
  if (name == "ga") return SolverKind::kGenetic;
  throw Error(ErrorCode::kUnknownName,
              "unknown solver '" + std::string(name) +
                  "' (expected original, random or ga)");
}

std::string_view solver_kind_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::kOriginal:
      return "original";
    case SolverKind::kRandom:
      return "random";
    case SolverKind::kGenetic:
      return "ga";
  }
  return "unknown";
}

SelectionKind parse_selection_kind(std::string_view name) {
  if (name == "elitist") return SelectionKind::kElitist;
  if (name == "tournament") return SelectionKind::kTournament;
  if (name == "roulette") return SelectionKind::kRouletteWheel;
  throw Error(ErrorCode::kUnknownName,
              "unknown selection '" + std::string(name) +
                  "' (expected elitist, tournament or roulette)");
}

std::string_view selection_kind_name(SelectionKind kind) {
  switch (kind) {
    case SelectionKind::kElitist:
      return "elitist";
    case SelectionKind::kTournament:
      return "tournament";
    case SelectionKind::kRouletteWheel:
      return "roulette";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, what);
  };
  if (pop_size == 0) fail("pop_size must be positive");
  if (generations == 0) fail("generations must be positive");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
    fail("mutation_rate must lie in [0, 1]");
  }
  if (tournament_size == 0) fail("tournament_size must be positive");
  if (kind == SolverKind::kGenetic) {
    if (pop_size < 2) fail("pop_size must be at least 2 for the GA");
    if (patience == 0) fail("patience must be at least 1");
  }
  if (evaluation_budget && *evaluation_budget == 0) {
    fail("evaluation_budget must be at least 1");
  }
}

std::vector<double> evaluate_batch(const Problem& problem,
                                   std::span<const Mask> masks,
                                   std::size_t threads) {
  std::vector<double> scores(masks.size());
  const std::size_t workers =
      problem.size * masks.size() < kParallelThreshold
          ? 1
          : resolve_thread_count(threads);
  parallel_for(masks.size(), workers,
               [&](std::size_t i) { scores[i] = problem.fitness(masks[i]); });
  return scores;
}

Mask random_mask(std::size_t size, Rng& rng) {
  Mask mask(size);
  auto bits = mask.mutable_bits();
  std::size_t i = 0;
  while (i < size) {
    std::uint64_t word = rng();
    for (int b = 0; b < 64 && i < size; ++b, ++i) {
      bits[i] = static_cast<std::uint8_t>(word & 1u);
      word >>= 1;
    }
  }
  return mask;
}

ParentPairs select_parents(std::span<const double> scores,
                           SelectionKind selection,
                           std::size_t tournament_size, Rng& rng) {
  const std::size_t n = scores.size();
  if (n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty population");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite score");
    }
  }
  const std::size_t pairs = (n + 1) / 2;
  ParentPairs out;
  out.reserve(pairs);

  switch (selection) {
    case SelectionKind::kElitist: {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return scores[a] < scores[b];
                       });
      const std::size_t top = (n + 1) / 2;
      for (std::size_t p = 0; p < pairs; ++p) {
        const std::size_t a = order[uniform_index(top, rng)];
        const std::size_t b = order[uniform_index(top, rng)];
        out.emplace_back(a, b);
      }
      break;
    }
    case SelectionKind::kTournament: {
      for (std::size_t p = 0; p < pairs; ++p) {
        const std::size_t a = tournament_pick(scores, tournament_size, rng);
        const std::size_t b = tournament_pick(scores, tournament_size, rng);
        out.emplace_back(a, b);
      }
      break;
    }
    case SelectionKind::kRouletteWheel: {
      const double worst = *std::max_element(scores.begin(), scores.end());
      std::vector<double> weights(n);
      for (std::size_t i = 0; i < n; ++i) {
        weights[i] = worst - scores[i] + kRouletteEpsilon;
      }
      std::discrete_distribution<std::size_t> wheel(weights.begin(),
                                                    weights.end());
      for (std::size_t p = 0; p < pairs; ++p) {
        const std::size_t a = wheel(rng);
        const std::size_t b = wheel(rng);
        out.emplace_back(a, b);
      }
      break;
    }
  }
  return out;
}

std::vector<std::size_t> select_survivors(std::span<const double> scores,
                                          SelectionKind selection,
                                          std::size_t count,
                                          std::size_t tournament_size,
                                          Rng& rng) {
  const std::size_t n = scores.size();
  if (n == 0 || count == 0) {
    throw Error(ErrorCode::kInvalidArgument, "nothing to select");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite score");
    }
  }
  std::vector<std::size_t> out;
  out.reserve(count);
  switch (selection) {
    case SelectionKind::kElitist: {
      if (count > n) {
        throw Error(ErrorCode::kInvalidArgument,
                    "truncation needs count <= candidates");
      }
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return scores[a] < scores[b];
                       });
      out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
      return out;
    }
    case SelectionKind::kTournament: {
      out.push_back(argmin(scores));
      while (out.size() < count) {
        out.push_back(tournament_pick(scores, tournament_size, rng));
      }
      return out;
    }
    case SelectionKind::kRouletteWheel: {
      out.push_back(argmin(scores));
      const double worst = *std::max_element(scores.begin(), scores.end());
      std::vector<double> weights(n);
      for (std::size_t i = 0; i < n; ++i) {
        weights[i] = worst - scores[i] + kRouletteEpsilon;
      }
      std::discrete_distribution<std::size_t> wheel(weights.begin(),
                                                    weights.end());
      while (out.size() < count) out.push_back(wheel(rng));
      return out;
    }
  }
  return out;
}

std::pair<Mask, Mask> uniform_crossover(const Mask& parent_a,
                                        const Mask& parent_b, Rng& rng) {
  if (parent_a.size() != parent_b.size()) {
    throw Error(ErrorCode::kLengthMismatch, "parents differ in length");
  }
  const std::size_t n = parent_a.size();
  Mask child_a = parent_a;
  Mask child_b = parent_b;
  std::uint8_t* a = child_a.mutable_bits().data();
  std::uint8_t* b = child_b.mutable_bits().data();
  // Coin bit c of each draw decides position c of the next 64; positions
  // whose coin is set swap parents.
  static const auto spread = [] {
    std::array<std::uint64_t, 256> table{};
    for (std::size_t v = 0; v < 256; ++v) {
      for (int j = 0; j < 8; ++j) {
        if (v >> j & 1u) table[v] |= std::uint64_t{1} << (8 * j);
      }
    }
    return table;
  }();
  std::size_t i = 0;
  while (i < n) {
    std::uint64_t coins = rng();
    const std::size_t end = std::min(n, i + 64);
    for (; i + 8 <= end; i += 8, coins >>= 8) {
      std::uint64_t wa, wb;
      std::memcpy(&wa, a + i, 8);
      std::memcpy(&wb, b + i, 8);
      const std::uint64_t diff = (wa ^ wb) & spread[coins & 0xFF];
      wa ^= diff;
      wb ^= diff;
      std::memcpy(a + i, &wa, 8);
      std::memcpy(b + i, &wb, 8);
    }
    for (; i < end; ++i, coins >>= 1) {
      const auto diff =
          static_cast<std::uint8_t>((a[i] ^ b[i]) & (coins & 1u));
      a[i] ^= diff;
      b[i] ^= diff;
    }
  }
  return {std::move(child_a), std::move(child_b)};
}

std::size_t mutation_flip_count(double rate, std::size_t size) {
  // The small slack keeps products like 0.29 * 100 from flooring to 28.
  const double product = rate * static_cast<double>(size);
  return std::min(size, static_cast<std::size_t>(std::floor(product + 1e-9)));
}

Mask bitflip_mutation(Mask mask, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mutation rate outside [0, 1]");
  }
  const std::size_t n = mask.size();
  const std::size_t flips = mutation_flip_count(rate, n);
  if (flips == 0) return mask;
  // Floyd's sampling: `flips` distinct positions, uniformly. The scratch
  // marks are cleared again before returning.
  thread_local std::vector<std::uint8_t> seen;
  thread_local std::vector<std::size_t> order;
  if (seen.size() < n) seen.resize(n, 0);
  order.clear();
  for (std::size_t j = n - flips; j < n; ++j) {
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    if (seen[pick]) pick = j;
    seen[pick] = 1;
    order.push_back(pick);
  }
  for (std::size_t pos : order) {
    mask.flip(pos);
    seen[pos] = 0;
  }
  return mask;
}

SolverReport solve_original(const Problem& problem) {
  const auto start = Clock::now();
  SolverReport report;
  report.best_mask = Mask::ones(problem.size);
  report.best_score = problem.fitness(report.best_mask);
  report.trace = {report.best_score};
  report.evaluations = 1;
  report.wall_time_seconds = seconds_since(start);
  return report;
}

SolverReport solve_random(const Problem& problem, const SolverConfig& config) {
  config.validate();
  const auto start = Clock::now();
  const std::size_t budget =
      config.evaluation_budget.value_or(config.pop_size * config.generations);
  Rng rng(config.seed);
  SolverReport report;
  report.seed = config.seed;
  report.best_score = std::numeric_limits<double>::infinity();

  std::vector<Mask> batch;
  std::size_t drawn = 0;
  while (drawn < budget) {
    const std::size_t size = std::min(config.pop_size, budget - drawn);
    batch.clear();
    for (std::size_t i = 0; i < size; ++i) {
      batch.push_back(random_mask(problem.size, rng));
    }
    const auto scores = evaluate_batch(problem, batch, config.threads);
    const std::size_t best = argmin(scores);
    if (scores[best] < report.best_score) {
      report.best_score = scores[best];
      report.best_mask = batch[best];
    }
    drawn += size;
    report.trace.push_back(report.best_score);
    ++report.generations_run;
  }
  report.evaluations = drawn;
  report.wall_time_seconds = seconds_since(start);
  return report;
}

SolverReport solve_genetic(const Problem& problem, const SolverConfig& config) {
  config.validate();
  const auto start = Clock::now();
  const std::size_t pop = config.pop_size;
  Rng rng(config.seed);
  SolverReport report;
  report.seed = config.seed;

  std::vector<Mask> population;
  population.reserve(pop);
  for (std::size_t i = 0; i < pop; ++i) {
    population.push_back(random_mask(problem.size, rng));
  }
  if (config.seed_all_ones) population.front() = Mask::ones(problem.size);
  std::vector<double> scores =
      evaluate_batch(problem, population, config.threads);
  report.evaluations = pop;

  std::size_t best = argmin(scores);
  report.best_mask = population[best];
  report.best_score = scores[best];
  report.trace.push_back(report.best_score);

  std::size_t stale = 0;
  std::vector<Mask> children;
  children.reserve(pop + 1);
  for (std::size_t gen = 0; gen < config.generations; ++gen) {
    const ParentPairs parents = select_parents(
        scores, config.selection, config.tournament_size, rng);
    children.clear();
    for (const auto& [a, b] : parents) {
      auto [child_a, child_b] =
          uniform_crossover(population[a], population[b], rng);
      children.push_back(
          bitflip_mutation(std::move(child_a), config.mutation_rate, rng));
      children.push_back(
          bitflip_mutation(std::move(child_b), config.mutation_rate, rng));
    }
    children.resize(pop);
    std::vector<double> child_scores =
        evaluate_batch(problem, children, config.threads);
    report.evaluations += pop;

    // Survivors are chosen from parents and children together.
    std::vector<double> pooled(scores);
    pooled.insert(pooled.end(), child_scores.begin(), child_scores.end());
    const std::vector<std::size_t> keep = select_survivors(
        pooled, config.selection, pop, config.tournament_size, rng);
    std::vector<Mask> next;
    std::vector<double> next_scores;
    next.reserve(pop);
    next_scores.reserve(pop);
    // A mask is moved on its last use and copied before that.
    std::vector<std::uint32_t> uses(2 * pop, 0);
    for (std::size_t i : keep) ++uses[i];
    for (std::size_t i : keep) {
      Mask& source = i < pop ? population[i] : children[i - pop];
      next.push_back(--uses[i] == 0 ? std::move(source) : source);
      next_scores.push_back(pooled[i]);
    }
    population.swap(next);
    scores.swap(next_scores);
    ++report.generations_run;

    best = argmin(scores);
    if (scores[best] < report.best_score) {
      report.best_score = scores[best];
      report.best_mask = population[best];
      stale = 0;
    } else {
      ++stale;
    }
    report.trace.push_back(report.best_score);
    if (stale >= config.patience) {
      report.terminated_early = gen + 1 < config.generations;
      break;
    }
  }
  report.wall_time_seconds = seconds_since(start);
  return report;
}

SolverReport solve(const Problem& problem, const SolverConfig& config) {
  switch (config.kind) {
    case SolverKind::kOriginal: {
      SolverReport report = solve_original(problem);
      report.seed = config.seed;
      return report;
    }
    case SolverKind::kRandom:
      return solve_random(problem, config);
    case SolverKind::kGenetic:
      return solve_genetic(problem, config);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown solver kind");
}

}  // namespace fairmask
