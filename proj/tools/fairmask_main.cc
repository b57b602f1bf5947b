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

// Command-line driver: measure, generate, optimize and benchmark.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fairmask/dataset.h"
#include "fairmask/error.h"
#include "fairmask/harness.h"
#include "fairmask/heuristics.h"
#include "fairmask/measures.h"
#include "fairmask/objective.h"
#include "fairmask/synth.h"

namespace {

using nlohmann::json;
using namespace fairmask;

constexpr int kExitUsage = 2;
constexpr int kExitInternal = 3;

// Failure after the configuration was accepted.
struct InternalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::optional<std::string> config;
  std::optional<std::string> input;
  std::optional<std::string> label;
  std::optional<std::string> protected_column;
  std::optional<std::string> positive;
  std::optional<std::vector<std::string>> features;
  std::optional<std::vector<std::string>> categorical;
  std::optional<std::size_t> rows;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<std::string> external;
  std::optional<std::string> mode;
  std::optional<std::string> measure;
  std::optional<std::string> solver;
  std::optional<std::string> selection;
  std::optional<std::size_t> pop;
  std::optional<std::size_t> gens;
  std::optional<double> mutation;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> tournament_size;
  std::optional<std::size_t> budget;
  std::optional<std::string> synthetic;
  std::optional<std::string> report;
  std::optional<std::string> provenance;
  std::optional<double> min_fraction;
  std::optional<std::size_t> threads;
  bool no_seed_ones = false;
  std::optional<std::string> plan;
  std::optional<std::string> out;
};

// Fills every flag left unset from the JSON config file; flags win.
void merge_config(Options& o) {
  if (!o.config) return;
  std::ifstream in(*o.config);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open config " + *o.config);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, "config is not valid JSON: " +
                                       std::string(e.what()));
  }
  if (!j.is_object()) throw Error(ErrorCode::kParse, "config must be an object");
  static const std::vector<std::string> kKnown = {
      "input", "label", "protected", "positive", "features", "categorical",
      "rows", "seed", "output", "external", "mode", "measure", "solver",
      "selection", "pop", "gens", "mutation", "patience", "tournament_size",
      "budget", "synthetic", "report", "provenance", "min_fraction",
      "threads", "seed_all_ones"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "unknown config key '" + key + "'");
    }
  }
  auto fill = [&](auto& slot, const char* key) {
    if (slot || !j.contains(key)) return;
    try {
      slot = j.at(key).get<typename std::decay_t<decltype(slot)>::value_type>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("config key '") + key + "' has the wrong type");
    }
  };
  fill(o.input, "input");
  fill(o.label, "label");
  fill(o.protected_column, "protected");
  fill(o.positive, "positive");
  fill(o.features, "features");
  fill(o.categorical, "categorical");
  fill(o.rows, "rows");
  fill(o.seed, "seed");
  fill(o.output, "output");
  fill(o.external, "external");
  fill(o.mode, "mode");
  fill(o.measure, "measure");
  fill(o.solver, "solver");
  fill(o.selection, "selection");
  fill(o.pop, "pop");
  fill(o.gens, "gens");
  fill(o.mutation, "mutation");
  fill(o.patience, "patience");
  fill(o.tournament_size, "tournament_size");
  fill(o.budget, "budget");
  fill(o.synthetic, "synthetic");
  fill(o.report, "report");
  fill(o.provenance, "provenance");
  fill(o.min_fraction, "min_fraction");
  fill(o.threads, "threads");
  if (!o.no_seed_ones && j.contains("seed_all_ones") &&
      j.at("seed_all_ones").is_boolean()) {
    o.no_seed_ones = !j.at("seed_all_ones").get<bool>();
  }
}

template <typename T>
const T& require(const std::optional<T>& value, const char* key) {
  if (!value) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("missing required setting '") + key + "'");
  }
  return *value;
}

EncodingOptions encoding_of(const Options& o) {
  EncodingOptions enc;
  if (o.categorical) enc.categorical_columns = *o.categorical;
  return enc;
}

EncodedDataset load_input(const Options& o) {
  const std::string& path = require(o.input, "input");
  ColumnRoles roles;
  roles.label_column = require(o.label, "label");
  roles.protected_column = require(o.protected_column, "protected");
  roles.positive_label_value = o.positive;
  roles.feature_columns =
      o.features ? *o.features
                 : infer_feature_columns(read_csv_header(path),
                                         roles.label_column,
                                         roles.protected_column);
  return load_csv(path, roles, encoding_of(o));
}

// All three measures over the groups that have rows; null when fewer than
// two groups are populated.
json score_block(const GroupStats& stats) {
  GroupStats present;
  for (const auto& g : stats) {
    if (g.count > 0) present.push_back(g);
  }
  json j;
  if (present.size() < 2) {
    j["sdp_sum"] = j["sdp_avg"] = j["sdp_max"] = nullptr;
    return j;
  }
  const PositiveRates rates = positive_rates(present);
  j["sdp_sum"] = sdp_sum(rates);
  j["sdp_avg"] = sdp_avg(rates);
  j["sdp_max"] = sdp_max(rates);
  return j;
}

json group_block(const GroupStats& stats,
                 const std::vector<std::string>& names) {
  json groups = json::array();
  for (std::size_t g = 0; g < stats.size(); ++g) {
    json entry{{"name", names[g]},
               {"count", stats[g].count},
               {"positives", stats[g].positives}};
    entry["rate"] = stats[g].count > 0
                        ? json(static_cast<double>(stats[g].positives) /
                               static_cast<double>(stats[g].count))
                        : json(nullptr);
    groups.push_back(entry);
  }
  return groups;
}

int cmd_measure(const Options& o) {
  auto data = std::make_shared<const EncodedDataset>(load_input(o));
  const DatasetView view(data);
  const GroupStats stats = group_stats(view);
  json out = score_block(stats);
  out["k"] = data->k();
  out["n"] = data->n();
  out["groups"] = group_block(stats, data->group_names());
  std::cout << out.dump(2) << '\n';
  return 0;
}

json fidelity_block(const EncodedDataset& real, const EncodedDataset& synth) {
  json cols = json::array();
  double worst = 0.0;
  for (const auto& c : column_fidelity(real, synth)) {
    cols.push_back({{"column", c.column}, {"ks", c.ks}});
    worst = std::max(worst, c.ks);
  }
  json missing = missing_groups(synth);
  return {{"rows", synth.n()},
          {"max_ks", worst},
          {"columns", cols},
          {"missing_groups", missing}};
}

int cmd_generate(const Options& o) {
  const EncodedDataset real = load_input(o);
  const std::string& output = require(o.output, "output");
  if (o.external) {
    // Validation only: the external file must encode under the input schema.
    const EncodedDataset synth = load_csv_like(*o.external, real, encoding_of(o));
    std::error_code ec;
    if (std::filesystem::absolute(*o.external) !=
        std::filesystem::absolute(output)) {
      std::filesystem::copy_file(
          *o.external, output,
          std::filesystem::copy_options::overwrite_existing, ec);
    }
    if (ec) {
      throw Error(ErrorCode::kIoFailure, "cannot copy to " + output + ": " +
                                             ec.message());
    }
    std::cout << fidelity_block(real, synth).dump(2) << '\n';
    return 0;
  }
  const std::size_t m = o.rows.value_or(real.n());
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "rows must be positive");
  const CopulaModel model = fit_copula(real);
  auto synth = std::make_shared<const EncodedDataset>(
      sample_copula(model, m, o.seed.value_or(0), o.threads.value_or(0)));
  for (const auto& g : missing_groups(*synth)) {
    std::cerr << "warning: group '" << g << "' absent from synthetic sample\n";
  }
  write_csv(DatasetView(synth), output);
  std::cout << fidelity_block(real, *synth).dump(2) << '\n';
  return 0;
}

SolverConfig solver_config_of(const Options& o) {
  SolverConfig c;
  if (o.solver) c.kind = parse_solver_kind(*o.solver);
  if (o.selection) c.selection = parse_selection_kind(*o.selection);
  if (o.pop) c.pop_size = *o.pop;
  if (o.gens) c.generations = *o.gens;
  if (o.mutation) c.mutation_rate = *o.mutation;
  if (o.patience) c.patience = *o.patience;
  if (o.tournament_size) c.tournament_size = *o.tournament_size;
  c.evaluation_budget = o.budget;
  c.seed = o.seed.value_or(0);
  c.threads = o.threads.value_or(0);
  c.seed_all_ones = !o.no_seed_ones;
  c.validate();
  return c;
}

json config_echo(const Options& o, const SolverConfig& c, PoolMode mode,
                 const MeasureKind& measure) {
  json j;
  j["input"] = *o.input;
  j["label"] = *o.label;
  j["protected"] = *o.protected_column;
  if (o.positive) j["positive"] = *o.positive;
  if (o.features) j["features"] = *o.features;
  if (o.categorical) j["categorical"] = *o.categorical;
  j["mode"] = pool_mode_name(mode);
  j["measure"] = measure.name();
  j["solver"] = solver_kind_name(c.kind);
  j["selection"] = selection_kind_name(c.selection);
  j["pop"] = c.pop_size;
  j["gens"] = c.generations;
  j["mutation"] = c.mutation_rate;
  j["patience"] = c.patience;
  j["tournament_size"] = c.tournament_size;
  if (c.evaluation_budget) j["budget"] = *c.evaluation_budget;
  j["seed"] = c.seed;
  j["seed_all_ones"] = c.seed_all_ones;
  j["min_fraction"] = o.min_fraction.value_or(0.0);
  if (o.synthetic) j["synthetic"] = *o.synthetic;
  if (o.rows) j["rows"] = *o.rows;
  if (o.output) j["output"] = *o.output;
  if (o.provenance) j["provenance"] = *o.provenance;
  return j;
}

int cmd_optimize(const Options& o) {
  auto real = std::make_shared<const EncodedDataset>(load_input(o));
  const PoolMode mode = parse_pool_mode(o.mode.value_or("remove"));
  const MeasureKind measure = parse_measure(o.measure.value_or("sdp_sum"));
  const SolverConfig config = solver_config_of(o);
  const std::string& output = require(o.output, "output");

  std::shared_ptr<const EncodedDataset> synthetic;
  if (requires_synthetic(mode)) {
    if (o.synthetic) {
      synthetic = std::make_shared<const EncodedDataset>(
          load_csv_like(*o.synthetic, *real, encoding_of(o)));
    } else {
      // No file given: draw |G| = rows (default |D|) from a fitted copula.
      const CopulaModel model = fit_copula(*real);
      synthetic = std::make_shared<const EncodedDataset>(sample_copula(
          model, o.rows.value_or(real->n()), config.seed, config.threads));
    }
  }
  PenaltyPolicy penalty;
  penalty.min_selection_fraction = o.min_fraction.value_or(0.0);
  const ObjectiveSpec spec = build_pool(mode, measure, real, synthetic, penalty);

  std::optional<SolverReport> solved;
  try {
    solved = solve(make_problem(spec), config);
  } catch (const std::exception& e) {
    throw InternalFailure(e.what());
  }
  const SolverReport& result = *solved;
  const DatasetView fair = materialize(spec, result.best_mask);
  const double baseline = fitness(spec, Mask::ones(spec.pool_size()));
  if (result.best_score > baseline) {
    std::cerr << "warning: result scores " << result.best_score
              << ", worse than the full pool (" << baseline
              << "); all-ones seeding was disabled\n";
  }

  WriteOptions write;
  write.provenance_column = o.provenance;
  write_csv(fair, output, write);

  json report;
  report["config"] = config_echo(o, config, mode, measure);
  report["k"] = spec.k();
  report["groups"] = spec.group_names();
  report["before"] = score_block(group_stats(DatasetView(real)));
  report["pool_baseline"] = score_block(spec.stats(Mask::ones(spec.pool_size())));
  report["after"] = score_block(group_stats(fair));
  report["objective"] = {{"measure", measure.name()},
                         {"best_score", result.best_score},
                         {"pool_baseline_score", baseline}};
  report["pool_size"] = spec.pool_size();
  report["fixed_rows"] = spec.fixed_rows().size();
  report["popcount"] = result.best_mask.popcount();
  report["output_rows"] = fair.size();
  report["evaluations"] = result.evaluations;
  report["generations_run"] = result.generations_run;
  report["terminated_early"] = result.terminated_early;
  report["runtime_seconds"] = result.wall_time_seconds;
  report["seed"] = result.seed;
  const std::string text = report.dump(2);
  if (o.report) {
    std::ofstream out(*o.report, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + *o.report);
    out << text << '\n';
  } else {
    std::cout << text << '\n';
  }
  return 0;
}

int cmd_benchmark(const Options& o) {
  const ExperimentPlan plan = load_plan(require(o.plan, "plan"));
  const std::string out_dir = o.out.value_or("results");
  const bool grid = plan.grid.has_value();
  ResultTable table;
  try {
    table = grid ? grid_search(plan) : run_plan(plan);
  } catch (const std::exception& e) {
    throw InternalFailure(e.what());
  }
  write_results(table, out_dir, grid);
  std::cout << format_table_csv(table.cells, grid);
  std::size_t failures = 0;
  for (const auto& c : table.cells) failures += c.failures;
  if (failures > 0) {
    std::cerr << failures << " trial(s) failed; see results_raw.jsonl\n";
    return kExitInternal;
  }
  return 0;
}

void add_roles(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON file with default settings");
  cmd->add_option("--input", o.input, "Input CSV");
  cmd->add_option("--label", o.label, "Label column");
  cmd->add_option("--protected", o.protected_column, "Protected column");
  cmd->add_option("--positive", o.positive, "Label value counted as positive");
  cmd->add_option("--features", o.features, "Feature columns (default: rest)")
      ->delimiter(',');
  cmd->add_option("--categorical", o.categorical,
                  "Columns forced to categorical")
      ->delimiter(',');
  cmd->add_option("--threads", o.threads, "Worker threads (0 = auto)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness pre-processing by subset selection"};
  app.require_subcommand(1);
  Options o;

  auto* measure = app.add_subcommand("measure", "Report group rates and SDP scores");
  add_roles(measure, o);

  auto* generate = app.add_subcommand("generate", "Sample synthetic rows");
  add_roles(generate, o);
  generate->add_option("--rows", o.rows, "Rows to sample (default: input rows)");
  generate->add_option("--seed", o.seed, "Random seed");
  generate->add_option("--output", o.output, "Synthetic CSV to write");
  generate->add_option("--external", o.external,
                       "Validate and pass through an existing synthetic CSV");

  auto* optimize = app.add_subcommand("optimize", "Select a fairer subset");
  add_roles(optimize, o);
  optimize->add_option("--mode", o.mode, "remove|synthetic|merge|privacy|add");
  optimize->add_option("--measure", o.measure, "sdp_sum|sdp_avg|sdp_max");
  optimize->add_option("--solver", o.solver, "original|random|ga");
  optimize->add_option("--selection", o.selection,
                       "elitist|tournament|roulette");
  optimize->add_option("--pop", o.pop, "Population size");
  optimize->add_option("--gens", o.gens, "Generations");
  optimize->add_option("--mutation", o.mutation, "Mutation rate");
  optimize->add_option("--patience", o.patience,
                       "Generations without improvement before stopping");
  optimize->add_option("--tournament-size", o.tournament_size,
                       "Tournament size");
  optimize->add_option("--budget", o.budget, "Random search evaluations");
  optimize->add_option("--seed", o.seed, "Random seed");
  optimize->add_option("--synthetic", o.synthetic, "Synthetic CSV");
  optimize->add_option("--rows", o.rows,
                       "Synthetic rows to sample when --synthetic is absent");
  optimize->add_option("--output", o.output, "Fair CSV to write");
  optimize->add_option("--report", o.report, "Report JSON (default: stdout)");
  optimize->add_option("--provenance", o.provenance,
                       "Append a real/synthetic column with this name");
  optimize->add_option("--min-fraction", o.min_fraction,
                       "Minimum selected fraction of the pool");
  optimize->add_flag("--no-seed-ones", o.no_seed_ones,
                     "Do not seed the GA with the all-ones mask");

  auto* benchmark = app.add_subcommand("benchmark", "Run an experiment plan");
  benchmark->add_option("--plan", o.plan, "Plan JSON file")->required();
  benchmark->add_option("--out", o.out, "Output directory")->default_val("results");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (o.threads) {
      // Keeps solver and sampler worker counts consistent.
      setenv("FAIRMASK_THREADS", std::to_string(*o.threads).c_str(), 1);
    }
    merge_config(o);
    if (measure->parsed()) return cmd_measure(o);
    if (generate->parsed()) return cmd_generate(o);
    if (optimize->parsed()) return cmd_optimize(o);
    return cmd_benchmark(o);
  } catch (const InternalFailure& e) {
    std::cerr << "fairmask: internal failure: " << e.what() << '\n';
    return kExitInternal;
  } catch (const Error& e) {
    std::cerr << "fairmask: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "fairmask: internal failure: " << e.what() << '\n';
    return kExitInternal;
  }
}
