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

#include <algorithm>
#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "fairmask/error.h"
#include "fairmask/harness.h"
#include "fairmask/heuristics.h"
#include "fairmask/objective.h"
#include "test_support.h"

namespace fairmask {
namespace {

SolverConfig ga_config(std::uint64_t seed) {
  SolverConfig c;
  c.seed = seed;
  return c;
}

TEST(SolverConfig, Validation) {
  EXPECT_NO_THROW(SolverConfig{}.validate());
  SolverConfig c;
  c.pop_size = 1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.patience = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.mutation_rate = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.kind = SolverKind::kRandom;
  c.evaluation_budget = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(SolverNames, RoundTrip) {
  for (auto k : {SolverKind::kOriginal, SolverKind::kRandom, SolverKind::kGenetic}) {
    EXPECT_EQ(parse_solver_kind(solver_kind_name(k)), k);
  }
  for (auto s : {SelectionKind::kElitist, SelectionKind::kTournament,
                 SelectionKind::kRouletteWheel}) {
    EXPECT_EQ(parse_selection_kind(selection_kind_name(s)), s);
  }
  EXPECT_THROW(parse_solver_kind("annealing"), Error);
  EXPECT_THROW(parse_selection_kind("rank"), Error);
}

TEST(SelectParents, PairCount) {
  Rng rng(1);
  const std::vector<double> scores(7, 1.0);
  EXPECT_EQ(select_parents(scores, SelectionKind::kElitist, 2, rng).size(), 4u);
  EXPECT_EQ(select_parents(std::vector<double>(10, 0.0),
                           SelectionKind::kTournament, 2, rng)
                .size(),
            5u);
}

TEST(SelectParents, ElitistPopulationOfTwoUsesBetterHalf) {
  Rng rng(2);
  const std::vector<double> scores = {0.9, 0.1};
  for (int t = 0; t < 100; ++t) {
    for (auto [a, b] : select_parents(scores, SelectionKind::kElitist, 2, rng)) {
      EXPECT_EQ(a, 1u);
      EXPECT_EQ(b, 1u);
    }
  }
}

TEST(SelectParents, ElitistDrawsOnlyFromTopHalf) {
  Rng rng(3);
  const std::vector<double> scores = {5, 1, 4, 2, 3, 0, 6};  // top 4: 5,1,3,4
  std::map<std::size_t, int> seen;
  for (int t = 0; t < 500; ++t) {
    for (auto [a, b] : select_parents(scores, SelectionKind::kElitist, 2, rng)) {
      ++seen[a];
      ++seen[b];
    }
  }
  for (auto [i, c] : seen) EXPECT_LE(scores[i], 3.0) << i;
  EXPECT_EQ(seen.size(), 4u);
}

TEST(SelectParents, FullTournamentPicksGlobalBest) {
  Rng rng(4);
  const std::vector<double> scores = {0.5, 0.3, 0.7, 0.3, 0.9};
  for (int t = 0; t < 200; ++t) {
    for (auto [a, b] :
         select_parents(scores, SelectionKind::kTournament, scores.size(), rng)) {
      EXPECT_EQ(a, 1u);
      EXPECT_EQ(b, 1u);
    }
  }
}

TEST(SelectParents, BinaryTournamentFrequencies) {
  // Distinct pairs from n = 4: item of rank r wins (n - r - 1) / C(4, 2)... of
  // its 3 pairs it wins those against worse items.
  Rng rng(5);
  const std::vector<double> scores = {0.4, 0.1, 0.3, 0.2};
  std::vector<double> count(4, 0);
  double total = 0;
  for (int t = 0; t < 25000; ++t) {
    for (auto [a, b] : select_parents(scores, SelectionKind::kTournament, 2, rng)) {
      count[a] += 1;
      count[b] += 1;
      total += 2;
    }
  }
  const std::vector<double> want = {0.0, 3.0 / 6, 1.0 / 6, 2.0 / 6};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(count[i] / total, want[i], 0.01);
}

TEST(SelectParents, RouletteMatchesProportionalWeights) {
  Rng rng(6);
  const std::vector<double> scores = {0.2, 0.5, 0.9, 0.35, 0.6};
  const double worst = 0.9;
  std::vector<double> weight(scores.size());
  double wsum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    weight[i] = worst - scores[i] + 1e-9;
    wsum += weight[i];
  }
  std::vector<double> count(scores.size(), 0);
  double draws = 0;
  while (draws < 1e5) {
    for (auto [a, b] :
         select_parents(scores, SelectionKind::kRouletteWheel, 2, rng)) {
      count[a] += 1;
      count[b] += 1;
      draws += 2;
    }
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = weight[i] / wsum;
    if (p < 1e-6) {
      EXPECT_LT(count[i] / draws, 1e-4);
    } else {
      EXPECT_NEAR(count[i] / draws, p, 0.02 * p) << i;
    }
  }
}

TEST(SelectParents, RouletteWithEqualScoresIsUniform) {
  Rng rng(7);
  const std::vector<double> scores(4, 0.5);
  std::vector<double> count(4, 0);
  double draws = 0;
  for (int t = 0; t < 20000; ++t) {
    for (auto [a, b] :
         select_parents(scores, SelectionKind::kRouletteWheel, 2, rng)) {
      count[a] += 1;
      count[b] += 1;
      draws += 2;
    }
  }
  for (double c : count) EXPECT_NEAR(c / draws, 0.25, 0.01);
}

TEST(SelectParents, RejectsEmptyOrNonFinite) {
  Rng rng(8);
  EXPECT_THROW(select_parents(std::vector<double>{}, SelectionKind::kElitist, 2, rng),
               Error);
  EXPECT_THROW(select_parents(std::vector<double>{1.0, NAN},
                              SelectionKind::kTournament, 2, rng),
               Error);
}

TEST(SelectSurvivors, BestAlwaysKept) {
  Rng rng(9);
  const std::vector<double> scores = {0.6, 0.2, 0.9, 0.2, 0.4, 0.8};
  const auto elite = select_survivors(scores, SelectionKind::kElitist, 3, 2, rng);
  EXPECT_EQ(elite, (std::vector<std::size_t>{1, 3, 4}));
  for (auto kind : {SelectionKind::kTournament, SelectionKind::kRouletteWheel}) {
    for (int t = 0; t < 50; ++t) {
      const auto keep = select_survivors(scores, kind, 3, 2, rng);
      ASSERT_EQ(keep.size(), 3u);
      EXPECT_EQ(keep.front(), 1u);
    }
  }
  EXPECT_THROW(select_survivors(scores, SelectionKind::kElitist, 7, 2, rng), Error);
}

TEST(UniformCrossover, IdenticalParentsGiveIdenticalChildren) {
  Rng rng(10);
  const auto [a, b] = uniform_crossover(Mask::ones(37), Mask::ones(37), rng);
  EXPECT_EQ(a, Mask::ones(37));
  EXPECT_EQ(b, Mask::ones(37));
}

TEST(UniformCrossover, ComplementaryChildren) {
  Rng rng(11);
  Mask pa(90), pb(90);
  for (std::size_t i = 0; i < 90; ++i) {
    pa.set(i, i % 3 == 0);
    pb.set(i, i % 2 == 0);
  }
  for (int t = 0; t < 50; ++t) {
    const auto [a, b] = uniform_crossover(pa, pb, rng);
    for (std::size_t i = 0; i < 90; ++i) {
      EXPECT_EQ(a[i] || b[i], pa[i] || pb[i]);
      EXPECT_EQ(a[i] && b[i], pa[i] && pb[i]);
    }
  }
}

TEST(UniformCrossover, FairCoinPerPosition) {
  Rng rng(12);
  const std::size_t n = 70;
  std::vector<int> ones(n, 0);
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const auto [a, b] = uniform_crossover(Mask::ones(n), Mask::zeros(n), rng);
    for (std::size_t i = 0; i < n; ++i) ones[i] += a[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double f = static_cast<double>(ones[i]) / trials;
    EXPECT_GE(f, 0.47) << i;
    EXPECT_LE(f, 0.53) << i;
  }
}

TEST(UniformCrossover, LengthMismatch) {
  Rng rng(13);
  try {
    uniform_crossover(Mask(3), Mask(4), rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
}

TEST(BitflipMutation, FlipCounts) {
  Rng rng(14);
  EXPECT_EQ(bitflip_mutation(Mask::ones(50), 0.0, rng), Mask::ones(50));
  EXPECT_EQ(hamming_distance(bitflip_mutation(Mask::ones(100), 0.05, rng),
                             Mask::ones(100)),
            5u);
  EXPECT_EQ(mutation_flip_count(0.05, 19), 0u);
  EXPECT_EQ(bitflip_mutation(Mask::zeros(19), 0.05, rng), Mask::zeros(19));
  EXPECT_EQ(mutation_flip_count(0.29, 100), 29u);
  EXPECT_EQ(mutation_flip_count(1.0, 10), 10u);
  EXPECT_THROW(bitflip_mutation(Mask(5), -0.1, rng), Error);
}

TEST(BitflipMutation, HammingContractAndUniformPositions) {
  Rng rng(15);
  const std::size_t n = 40;
  std::vector<int> hits(n, 0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    const Mask m = random_mask(n, rng);
    const Mask out = bitflip_mutation(m, 0.1, rng);
    ASSERT_EQ(hamming_distance(m, out), 4u);
    for (std::size_t i = 0; i < n; ++i) hits[i] += m[i] != out[i];
  }
  for (int h : hits) EXPECT_NEAR(h / static_cast<double>(trials), 0.1, 0.01);
}

TEST(RandomMask, Deterministic) {
  Rng a(16), b(16);
  EXPECT_EQ(random_mask(130, a), random_mask(130, b));
}

TEST(EvaluateBatch, OrderAndThreadIndependence) {
  const auto d = testing::random_dataset(400, 3, 1);
  const auto spec = build_pool(PoolMode::kRemove, BuiltinMeasure::kSdpSum, d);
  const Problem p = make_problem(spec);
  Rng rng(17);
  std::vector<Mask> masks;
  for (int i = 0; i < 200; ++i) masks.push_back(random_mask(400, rng));
  const auto one = evaluate_batch(p, masks, 1);
  const auto four = evaluate_batch(p, masks, 4);
  EXPECT_EQ(one, four);
  for (std::size_t i = 0; i < masks.size(); ++i) EXPECT_EQ(one[i], p.fitness(masks[i]));
}

TEST(SolveOriginal, KeepsEveryRow) {
  const auto d = testing::random_dataset(60, 3, 2);
  const auto spec = build_pool(PoolMode::kRemove, BuiltinMeasure::kSdpSum, d);
  const auto r = solve_original(make_problem(spec));
  EXPECT_EQ(r.best_mask, Mask::ones(60));
  EXPECT_EQ(r.evaluations, 1u);
  EXPECT_EQ(r.best_score, evaluate(BuiltinMeasure::kSdpSum, DatasetView(d)));

  const auto g = testing::random_dataset(20, 3, 3);
  const auto add = build_pool(PoolMode::kAdd, BuiltinMeasure::kSdpSum, d, g);
  const auto ra = solve_original(make_problem(add));
  EXPECT_EQ(materialize(add, ra.best_mask).size(), 80u);
}

TEST(SolveRandom, BudgetAndMinimum) {
  const auto d = testing::random_dataset(30, 3, 4);
  const auto spec = build_pool(PoolMode::kRemove, BuiltinMeasure::kSdpSum, d);
  const Problem p = make_problem(spec);
  SolverConfig c;
  c.kind = SolverKind::kRandom;
  c.evaluation_budget = 1;
  c.seed = 9;
  const auto one = solve_random(p, c);
  EXPECT_EQ(one.evaluations, 1u);
  EXPECT_EQ(one.best_mask, solve_random(p, c).best_mask);
  Rng rng(9);
  EXPECT_EQ(one.best_mask, random_mask(30, rng));

  c.evaluation_budget = 250;
  c.pop_size = 40;
  const auto r = solve_random(p, c);
  EXPECT_EQ(r.evaluations, 250u);
  EXPECT_EQ(r.trace.size(), 7u);
  EXPECT_TRUE(std::is_sorted(r.trace.rbegin(), r.trace.rend()));
  // Replaying the same stream: the reported best is the minimum of all draws.
  Rng replay(9);
  double best = INFINITY;
  for (int i = 0; i < 250; ++i) best = std::min(best, p.fitness(random_mask(30, replay)));
  EXPECT_EQ(r.best_score, best);
  EXPECT_EQ(p.fitness(r.best_mask), r.best_score);

  SolverConfig parity;
  parity.kind = SolverKind::kRandom;
  parity.pop_size = 10;
  parity.generations = 7;
  EXPECT_EQ(solve_random(p, parity).evaluations, 70u);
}

TEST(SolveRandom, GapToOptimumShrinksWithBudget) {
  std::vector<double> mean_gap;
  for (std::size_t budget : {4u, 64u, 1024u}) {
    double gap = 0;
    for (std::uint64_t pool = 0; pool < 10; ++pool) {
      const auto d = testing::random_dataset(12, 3, 100 + pool);
      const auto spec = build_pool(PoolMode::kRemove, BuiltinMeasure::kSdpSum, d);
      const double opt = brute_force(spec).score;
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SolverConfig c;
        c.kind = SolverKind::kRandom;
        c.evaluation_budget = budget;
        c.seed = seed;
        gap += solve_random(make_problem(spec), c).best_score - opt;
      }
    }
    mean_gap.push_back(gap / 50);
  }
  EXPECT_GT(mean_gap[0], mean_gap[1]);
  EXPECT_GT(mean_gap[1], mean_gap[2]);
  EXPECT_GE(mean_gap[2], 0.0);
}

TEST(SolveGenetic, MatchesExhaustiveOptimumOnSmallPools) {
  int hits = 0;
  for (std::uint64_t pool = 0; pool < 20; ++pool) {
    const auto d = testing::random_dataset(16, 3, 500 + pool);
    const auto spec = build_pool(PoolMode::kRemove, BuiltinMeasure::kSdpMax, d);
    const auto exact = brute_force(spec);
    const auto r = solve_genetic(make_problem(spec), ga_config(pool));
    EXPECT_GE(r.best_score, exact.score - 1e-12);
    hits += std::abs(r.best_score - exact.score) <= 1e-9;
  }
  EXPECT_GE(hits, 19);
}

TEST(SolveGenetic, ReportInvariants) {
  const auto d = testing::random_dataset(300, 4, 6);
  const auto spec = build_pool(PoolMode::kRemove, BuiltinMeasure::kSdpSum, d);
  const Problem p = make_problem(spec);
  for (auto sel : {SelectionKind::kElitist, SelectionKind::kTournament,
                   SelectionKind::kRouletteWheel}) {
    SolverConfig c;
    c.pop_size = 30;
    c.generations = 60;
    c.patience = 10;
    c.selection = sel;
    c.seed = 3;
    const auto r = solve_genetic(p, c);
    EXPECT_EQ(p.fitness(r.best_mask), r.best_score);
    EXPECT_TRUE(std::is_sorted(r.trace.rbegin(), r.trace.rend()));
    EXPECT_EQ(r.trace.size(), r.generations_run + 1);
    EXPECT_EQ(r.evaluations, c.pop_size * (1 + r.generations_run));
    EXPECT_LE(r.best_score, p.fitness(Mask::ones(300)));
    EXPECT_EQ(r.trace.back(), r.best_score);
    if (r.terminated_early) {
      EXPECT_LT(r.generations_run, c.generations);
      // The last `patience` generations brought no strict improvement.
      const auto n = r.trace.size();
      EXPECT_EQ(r.trace[n - 1], r.trace[n - 1 - c.patience]);
    }
  }
}

TEST(SolveGenetic, DeterministicAcrossRunsAndThreads) {
  const auto d = testing::random_dataset(800, 4, 7);
  const auto spec = build_pool(PoolMode::kRemove, BuiltinMeasure::kSdpSum, d);
  const Problem p = make_problem(spec);
  SolverConfig c;
  c.pop_size = 50;
  c.generations = 40;
  c.seed = 12;
  c.threads = 1;
  const auto a = solve_genetic(p, c);
  c.threads = 3;
  const auto b = solve_genetic(p, c);
  EXPECT_EQ(a.best_mask, b.best_mask);
  EXPECT_EQ(a.best_score, b.best_score);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(SolveGenetic, SeededNeverWorseThanAllOnes) {
  const auto d = testing::random_dataset(200, 3, 8);
  const auto spec = build_pool(PoolMode::kRemove, BuiltinMeasure::kSdpSum, d);
  const Problem p = make_problem(spec);
  SolverConfig c;
  c.pop_size = 4;
  c.generations = 1;
  c.mutation_rate = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    c.seed = seed;
    c.seed_all_ones = true;
    EXPECT_LE(solve_genetic(p, c).best_score, p.fitness(Mask::ones(200)));
  }
}

TEST(Solve, Dispatches) {
  const auto d = testing::random_dataset(20, 2, 9);
  const auto spec = build_pool(PoolMode::kRemove, BuiltinMeasure::kSdpSum, d);
  SolverConfig c;
  c.kind = SolverKind::kOriginal;
  c.seed = 77;
  const auto r = solve(make_problem(spec), c);
  EXPECT_EQ(r.best_mask, Mask::ones(20));
  EXPECT_EQ(r.seed, 77u);
}

}  // namespace
}  // namespace fairmask
