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

#include "fairmask/harness.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

#include "fairmask/csv.h"
#include "fairmask/error.h"
#include "fairmask/parallel.h"
#include "fairmask/synth.h"

namespace fairmask {
namespace {

using nlohmann::json;

// A dataset loaded once per plan, with its copula fitted lazily.
struct LoadedDataset {
  const DatasetSpec* spec = nullptr;
  std::shared_ptr<const EncodedDataset> real;
  std::shared_ptr<const EncodedDataset> external_synthetic;
  std::shared_ptr<const CopulaModel> copula;
  std::optional<std::string> error;
  // Set when only the synthetic side failed; real-only modes still run.
  std::optional<std::string> synthetic_error;
};

struct CellJob {
  const LoadedDataset* dataset;
  PoolMode mode;
  MeasureKind measure;
  std::string solver_name;
  SolverConfig config;
  bool grid = false;
};

LoadedDataset load_dataset(const DatasetSpec& spec, bool needs_synthetic) {
  LoadedDataset out;
  out.spec = &spec;
  try {
    if (spec.biased) {
      out.real = std::make_shared<const EncodedDataset>(
          make_biased_dataset(*spec.biased));
    } else {
      out.real = std::make_shared<const EncodedDataset>(
          load_csv(*spec.path, spec.roles, spec.encoding));
    }
  } catch (const std::exception& e) {
    out.error = e.what();
    return out;
  }
  if (!needs_synthetic) return out;
  try {
    if (spec.synthetic_path) {
      out.external_synthetic = std::make_shared<const EncodedDataset>(
          load_csv_like(*spec.synthetic_path, *out.real, spec.encoding));
    } else {
      out.copula = std::make_shared<const CopulaModel>(fit_copula(*out.real));
    }
  } catch (const std::exception& e) {
    out.synthetic_error = e.what();
  }
  return out;
}

TrialRecord run_trial(const CellJob& job, std::size_t trial,
                      const ExperimentPlan& plan) {
  TrialRecord record;
  record.dataset = job.dataset->spec->name;
  record.mode = std::string(pool_mode_name(job.mode));
  record.measure = job.measure.name();
  record.solver = job.solver_name;
  record.trial = trial;
  record.seed = plan.seed_base + trial;
  if (job.grid) {
    record.pop_size = job.config.pop_size;
    record.generations = job.config.generations;
  }
  try {
    if (job.dataset->error) {
      throw Error(ErrorCode::kIoFailure, *job.dataset->error);
    }
    const auto& real = job.dataset->real;
    std::shared_ptr<const EncodedDataset> synthetic;
    if (requires_synthetic(job.mode)) {
      if (job.dataset->synthetic_error) {
        throw Error(ErrorCode::kMissingSynthetic,
                    *job.dataset->synthetic_error);
      }
      synthetic = job.dataset->external_synthetic;
      if (!synthetic) {
        synthetic = std::make_shared<const EncodedDataset>(sample_copula(
            *job.dataset->copula, real->n(), record.seed, plan.threads));
      }
    }
    const ObjectiveSpec spec =
        build_pool(job.mode, job.measure, real, synthetic, plan.penalty);
    SolverConfig config = job.config;
    config.seed = record.seed;
    config.threads = plan.threads;
    const SolverReport report = solve(make_problem(spec), config);

    record.score = report.best_score;
    record.real_score = evaluate(job.measure, DatasetView(real));
    record.pool_baseline_score =
        fitness(spec, Mask::ones(spec.pool_size()));
    record.runtime_seconds = report.wall_time_seconds;
    record.evaluations = report.evaluations;
    record.generations_run = report.generations_run;
    record.terminated_early = report.terminated_early;
    record.selected = report.best_mask.popcount();
    record.output_rows = record.selected + spec.fixed_rows().size();
    const GroupStats stats = spec.stats(report.best_mask);
    record.min_group_count = std::numeric_limits<std::int64_t>::max();
    for (std::size_t g = 0; g < stats.size(); ++g) {
      if (spec.active_groups()[g]) {
        record.min_group_count =
            std::min(record.min_group_count, stats[g].count);
      }
    }
    record.best_mask = report.best_mask.to_string();
  } catch (const std::exception& e) {
    record.error = e.what();
  }
  return record;
}

ResultTable run_jobs(const std::vector<CellJob>& jobs,
                     const ExperimentPlan& plan) {
  std::vector<std::vector<TrialRecord>> per_cell(jobs.size());
  parallel_for(jobs.size(), std::max<std::size_t>(1, plan.cell_workers),
               [&](std::size_t c) {
                 for (std::size_t t = 0; t < plan.repeats; ++t) {
                   per_cell[c].push_back(run_trial(jobs[c], t, plan));
                 }
               });
  ResultTable table;
  for (auto& cell : per_cell) {
    for (auto& r : cell) table.records.push_back(std::move(r));
  }
  table.cells = aggregate(table.records);
  return table;
}

std::vector<LoadedDataset> load_all(const ExperimentPlan& plan) {
  const bool needs_synthetic =
      std::any_of(plan.modes.begin(), plan.modes.end(), requires_synthetic);
  std::vector<LoadedDataset> loaded;
  for (const auto& d : plan.datasets) {
    loaded.push_back(load_dataset(d, needs_synthetic));
  }
  return loaded;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

SolverConfig parse_solver_config(const json& j) {
  SolverConfig c;
  c.kind = parse_solver_kind(get_or<std::string>(j, "solver", "ga"));
  c.selection =
      parse_selection_kind(get_or<std::string>(j, "selection", "elitist"));
  c.pop_size = get_or<std::size_t>(j, "pop", c.pop_size);
  c.generations = get_or<std::size_t>(j, "gens", c.generations);
  c.mutation_rate = get_or<double>(j, "mutation", c.mutation_rate);
  c.tournament_size = get_or<std::size_t>(j, "tournament_size",
                                          c.tournament_size);
  c.patience = get_or<std::size_t>(j, "patience", c.patience);
  c.seed_all_ones = get_or<bool>(j, "seed_all_ones", c.seed_all_ones);
  if (j.contains("budget")) c.evaluation_budget = j.at("budget").get<std::size_t>();
  c.validate();
  return c;
}

std::string resolve_path(const std::string& base_dir, const std::string& p) {
  const std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (std::filesystem::path(base_dir) / path).string();
}

}  // namespace

EncodedDataset make_biased_dataset(const BiasedDatasetConfig& config) {
  const std::size_t k = config.group_rates.size();
  if (k < 2) {
    throw Error(ErrorCode::kSingleGroup, "biased dataset needs k >= 2");
  }
  std::vector<double> weights = config.group_weights;
  if (weights.empty()) weights.assign(k, 1.0);
  if (weights.size() != k) {
    throw Error(ErrorCode::kInvalidArgument,
                "group_weights and group_rates differ in length");
  }
  // Largest-remainder apportionment of n rows to groups.
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> sizes(k);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < k; ++g) {
    const double exact = static_cast<double>(config.n) * weights[g] / total;
    sizes[g] = static_cast<std::size_t>(std::floor(exact));
    assigned += sizes[g];
    remainders.emplace_back(-(exact - std::floor(exact)), g);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t r = 0; assigned < config.n; ++r, ++assigned) {
    ++sizes[remainders[r % k].second];
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::int32_t> groups;
  for (std::size_t g = 0; g < k; ++g) {
    groups.insert(groups.end(), sizes[g], static_cast<std::int32_t>(g + 1));
  }
  std::shuffle(groups.begin(), groups.end(), rng);

  Schema schema;
  schema.features = {
      {"income", FeatureColumn::Kind::kNumeric, {}, 0, 1},
      {"age", FeatureColumn::Kind::kNumeric, {}, 1, 1},
      {"sector", FeatureColumn::Kind::kCategorical, {"a", "b", "c"}, 2, 3},
  };
  schema.label_column = "y";
  schema.protected_column = "group";
  schema.positive_label = "1";
  schema.negative_label = "0";
  schema.column_order = {"income", "age", "sector", "y", "group"};

  std::vector<std::string> names;
  for (std::size_t g = 0; g < k; ++g) names.push_back("g" + std::to_string(g + 1));

  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit;
  const std::size_t n = groups.size();
  std::vector<double> features(n * 5, 0.0);
  std::vector<std::uint8_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = static_cast<std::size_t>(groups[i] - 1);
    labels[i] = unit(rng) < config.group_rates[g] ? 1 : 0;
    double* row = features.data() + i * 5;
    // Round so the column has ties, like real tabular data.
    row[0] = std::round(100.0 * (2.0 + labels[i] + 0.25 * static_cast<double>(g) +
                                 gauss(rng))) / 100.0;
    row[1] = std::round(40.0 + 10.0 * gauss(rng));
    const double u = unit(rng);
    const std::size_t cat = u < (labels[i] ? 0.5 : 0.2)   ? 0
                            : u < (labels[i] ? 0.8 : 0.6) ? 1
                                                          : 2;
    row[2 + cat] = 1.0;
  }
  return EncodedDataset(std::move(schema), std::move(features),
                        std::move(labels), std::move(groups),
                        std::move(names));
}

void ExperimentPlan::validate() const {
  if (datasets.empty()) throw Error(ErrorCode::kInvalidArgument, "no datasets");
  if (modes.empty()) throw Error(ErrorCode::kInvalidArgument, "no modes");
  if (measures.empty()) throw Error(ErrorCode::kInvalidArgument, "no measures");
  if (solvers.empty() && !grid) {
    throw Error(ErrorCode::kInvalidArgument, "no solvers");
  }
  if (repeats == 0) {
    throw Error(ErrorCode::kInvalidArgument, "repeats must be at least 1");
  }
  for (const auto& d : datasets) {
    if (d.path.has_value() == d.biased.has_value()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "dataset '" + d.name + "' needs exactly one of input/biased");
    }
  }
  for (const auto& s : solvers) s.config.validate();
  if (grid) {
    if (grid->pop_sizes.empty() || grid->generations.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "grid needs pop_sizes and generations");
    }
  }
}

ExperimentPlan parse_plan(std::string_view json_text,
                          const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("plan is not valid JSON: ") +
                                       e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParse, "plan must be an object");

  std::vector<std::string> missing;
  for (const char* key : {"datasets", "modes", "measures"}) {
    if (!j.contains(key)) missing.emplace_back(key);
  }
  if (!j.contains("solvers") && !j.contains("grid")) {
    missing.emplace_back("solvers");
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::kInvalidArgument,
                "plan is missing required key(s): " + list);
  }

  ExperimentPlan plan;
  try {
    for (const auto& d : j.at("datasets")) {
      DatasetSpec spec;
      spec.name = d.at("name").get<std::string>();
      if (d.contains("biased")) {
        const auto& b = d.at("biased");
        BiasedDatasetConfig cfg;
        cfg.n = get_or<std::size_t>(b, "n", cfg.n);
        cfg.group_rates =
            get_or<std::vector<double>>(b, "rates", cfg.group_rates);
        cfg.group_weights =
            get_or<std::vector<double>>(b, "weights", cfg.group_weights);
        cfg.seed = get_or<std::uint64_t>(b, "seed", cfg.seed);
        spec.biased = cfg;
      } else {
        spec.path = resolve_path(base_dir, d.at("input").get<std::string>());
        spec.roles.label_column = d.at("label").get<std::string>();
        spec.roles.protected_column = d.at("protected").get<std::string>();
        if (d.contains("positive")) {
          spec.roles.positive_label_value = d.at("positive").get<std::string>();
        }
        if (d.contains("features")) {
          spec.roles.feature_columns =
              d.at("features").get<std::vector<std::string>>();
        } else {
          spec.roles.feature_columns = infer_feature_columns(
              read_csv_header(*spec.path), spec.roles.label_column,
              spec.roles.protected_column);
        }
        spec.encoding.categorical_columns =
            get_or<std::vector<std::string>>(d, "categorical", {});
      }
      if (d.contains("synthetic")) {
        spec.synthetic_path =
            resolve_path(base_dir, d.at("synthetic").get<std::string>());
      }
      plan.datasets.push_back(std::move(spec));
    }
    for (const auto& m : j.at("modes")) {
      plan.modes.push_back(parse_pool_mode(m.get<std::string>()));
    }
    for (const auto& m : j.at("measures")) {
      plan.measures.push_back(parse_measure(m.get<std::string>()));
    }
    if (j.contains("solvers")) {
      for (const auto& s : j.at("solvers")) {
        SolverSpec spec;
        spec.config = parse_solver_config(s);
        spec.name = get_or<std::string>(
            s, "name",
            spec.config.kind == SolverKind::kGenetic
                ? std::string(selection_kind_name(spec.config.selection))
                : std::string(solver_kind_name(spec.config.kind)));
        plan.solvers.push_back(std::move(spec));
      }
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      GridSpec grid;
      grid.pop_sizes = g.at("pop_sizes").get<std::vector<std::size_t>>();
      grid.generations = g.at("generations").get<std::vector<std::size_t>>();
      grid.base = parse_solver_config(g.value("solver", json::object()));
      plan.grid = grid;
    }
    plan.repeats = get_or<std::size_t>(j, "repeats", plan.repeats);
    plan.seed_base = get_or<std::uint64_t>(j, "seed_base", plan.seed_base);
    plan.threads = get_or<std::size_t>(j, "threads", plan.threads);
    plan.cell_workers =
        get_or<std::size_t>(j, "cell_workers", plan.cell_workers);
    plan.penalty.min_selection_fraction =
        get_or<double>(j, "min_selection_fraction", 0.0);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("malformed plan: ") + e.what());
  }
  plan.validate();
  return plan;
}

ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open plan " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_plan(buffer.str(),
                    std::filesystem::path(path).parent_path().string().empty()
                        ? "."
                        : std::filesystem::path(path).parent_path().string());
}

std::string TrialRecord::deterministic_json() const {
  json j = json::parse(to_json());
  j.erase("runtime_seconds");
  return j.dump();
}

std::string TrialRecord::to_json() const {
  json j;
  j["dataset"] = dataset;
  j["mode"] = mode;
  j["measure"] = measure;
  j["solver"] = solver;
  if (pop_size) {
    j["pop_size"] = pop_size;
    j["generations"] = generations;
  }
  j["trial"] = trial;
  j["seed"] = seed;
  if (error) {
    j["error"] = *error;
    return j.dump();
  }
  j["score"] = score;
  j["real_score"] = real_score;
  j["pool_baseline_score"] = pool_baseline_score;
  j["runtime_seconds"] = runtime_seconds;
  j["evaluations"] = evaluations;
  j["generations_run"] = generations_run;
  j["terminated_early"] = terminated_early;
  j["selected"] = selected;
  j["output_rows"] = output_rows;
  j["min_group_count"] = min_group_count;
  j["best_mask"] = best_mask;
  return j.dump();
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  // Running mean: a constant series keeps its exact value and zero spread.
  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    mean += (values[i] - mean) / static_cast<double>(i + 1);
  }
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::vector<CellSummary> aggregate(const std::vector<TrialRecord>& records) {
  using Key = std::tuple<std::string, std::string, std::string, std::string,
                         std::size_t, std::size_t>;
  std::vector<Key> order;
  std::map<Key, std::vector<const TrialRecord*>> groups;
  for (const auto& r : records) {
    Key key{r.dataset, r.mode, r.measure, r.solver, r.pop_size, r.generations};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<CellSummary> cells;
  for (const auto& key : order) {
    CellSummary cell;
    std::tie(cell.dataset, cell.mode, cell.measure, cell.solver,
             cell.pop_size, cell.generations) = key;
    std::vector<double> scores, runtimes, evals;
    for (const TrialRecord* r : groups[key]) {
      ++cell.trials;
      if (r->error) {
        ++cell.failures;
        continue;
      }
      scores.push_back(r->score);
      runtimes.push_back(r->runtime_seconds);
      evals.push_back(static_cast<double>(r->evaluations));
    }
    std::tie(cell.mean_score, cell.std_score) = mean_std(scores);
    std::tie(cell.mean_runtime, cell.std_runtime) = mean_std(runtimes);
    cell.mean_evaluations = mean_std(evals).first;
    cells.push_back(std::move(cell));
  }
  return cells;
}

ResultTable run_plan(const ExperimentPlan& plan) {
  plan.validate();
  const std::vector<LoadedDataset> loaded = load_all(plan);
  std::vector<CellJob> jobs;
  for (const auto& d : loaded) {
    for (PoolMode mode : plan.modes) {
      for (const auto& measure : plan.measures) {
        for (const auto& s : plan.solvers) {
          jobs.push_back({&d, mode, measure, s.name, s.config, false});
        }
      }
    }
  }
  return run_jobs(jobs, plan);
}

ResultTable grid_search(const ExperimentPlan& plan) {
  plan.validate();
  if (!plan.grid) {
    throw Error(ErrorCode::kInvalidArgument, "plan has no grid section");
  }
  if (plan.grid->base.kind != SolverKind::kGenetic) {
    throw Error(ErrorCode::kInvalidArgument, "grid search needs the GA");
  }
  const std::vector<LoadedDataset> loaded = load_all(plan);
  std::vector<CellJob> jobs;
  const std::string name(selection_kind_name(plan.grid->base.selection));
  for (const auto& d : loaded) {
    for (PoolMode mode : plan.modes) {
      for (const auto& measure : plan.measures) {
        for (std::size_t pop : plan.grid->pop_sizes) {
          for (std::size_t gens : plan.grid->generations) {
            SolverConfig config = plan.grid->base;
            config.pop_size = pop;
            config.generations = gens;
            config.validate();
            jobs.push_back({&d, mode, measure, name, config, true});
          }
        }
      }
    }
  }
  return run_jobs(jobs, plan);
}

std::string format_table_csv(const std::vector<CellSummary>& cells,
                             bool grid) {
  std::ostringstream out;
  std::vector<std::string> header = {"dataset", "mode", "measure", "solver"};
  if (grid) {
    header.push_back("pop_size");
    header.push_back("generations");
  }
  for (const char* h : {"trials", "failures", "mean_score", "std_score",
                        "mean_runtime", "std_runtime", "mean_evaluations"}) {
    header.emplace_back(h);
  }
  csv::write_record(out, header);
  for (const auto& c : cells) {
    std::vector<std::string> row = {c.dataset, c.mode, c.measure, c.solver};
    if (grid) {
      row.push_back(std::to_string(c.pop_size));
      row.push_back(std::to_string(c.generations));
    }
    row.push_back(std::to_string(c.trials));
    row.push_back(std::to_string(c.failures));
    for (double v : {c.mean_score, c.std_score, c.mean_runtime, c.std_runtime,
                     c.mean_evaluations}) {
      row.push_back(format_number(v));
    }
    csv::write_record(out, row);
  }
  return out.str();
}

void write_results(const ResultTable& table, const std::string& out_dir,
                   bool grid) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoFailure,
                "cannot create " + out_dir + ": " + ec.message());
  }
  const auto dir = std::filesystem::path(out_dir);
  {
    std::ofstream raw(dir / "results_raw.jsonl", std::ios::trunc);
    if (!raw) throw Error(ErrorCode::kIoFailure, "cannot write raw records");
    for (const auto& r : table.records) raw << r.to_json() << '\n';
  }
  std::ofstream agg(dir / (grid ? "grid_table.csv" : "results_table.csv"),
                    std::ios::trunc);
  if (!agg) throw Error(ErrorCode::kIoFailure, "cannot write table");
  agg << format_table_csv(table.cells, grid);
}

BruteForceResult brute_force(const ObjectiveSpec& spec) {
  const std::size_t n = spec.pool_size();
  if (n > kBruteForceMaxPool) {
    throw Error(ErrorCode::kPoolTooLarge,
                "pool of " + std::to_string(n) + " exceeds the exhaustive cap " +
                    std::to_string(kBruteForceMaxPool));
  }
  const bool builtin = spec.measure().is_builtin();
  Mask mask = Mask::zeros(n);
  GroupStats stats = spec.fixed_stats();
  std::size_t selected = 0;
  auto score_now = [&] {
    return builtin ? fitness_from_stats(spec, stats, selected)
                   : fitness(spec, mask);
  };

  BruteForceResult best{mask, score_now(), 1};
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t i = 1; i < total; ++i) {
    // Gray code: step i toggles the lowest set bit position of i.
    const auto bit = static_cast<std::size_t>(std::countr_zero(i));
    mask.flip(bit);
    const bool now = mask[bit];
    apply_flip(spec, stats, bit, now);
    selected += now ? 1 : std::size_t(-1);
    const double s = score_now();
    ++best.evaluations;
    if (s < best.score - 1e-12) {
      best.score = s;
      best.mask = mask;
    } else if (s <= best.score + 1e-12) {
      best.score = std::min(best.score, s);
      if (mask < best.mask) best.mask = mask;
    }
  }
  return best;
}

}  // namespace fairmask
