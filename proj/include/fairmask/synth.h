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

#ifndef FAIRMASK_SYNTH_H_
#define FAIRMASK_SYNTH_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fairmask/dataset.h"

namespace fairmask {

// Copula of the features and the label within one protected group. Column
// j < d is encoded feature j and column d is the label.
struct CopulaStratum {
  std::int32_t group = 0;
  // Share of the group in the fitted table.
  double weight = 0.0;
  std::vector<std::vector<double>> column_quantiles;
  Eigen::MatrixXd factor;
  std::vector<bool> degenerate;
  std::vector<double> ones_fraction;
};

// Gaussian copula over the encoded table. Column j < d is encoded feature j,
// column d is the label and column d + 1 the protected group code. Samples
// draw the group from its empirical share, then the remaining columns from
// that group's stratum.
struct CopulaModel {
  Schema schema;
  std::vector<std::string> group_names;
  std::size_t n = 0;
  // Sorted observed values per column (the empirical CDF support).
  std::vector<std::vector<double>> column_quantiles;
  // Correlation of normal scores after PSD repair; unit diagonal.
  Eigen::MatrixXd correlation;
  // Symmetric square root of `correlation`.
  Eigen::MatrixXd factor;
  double min_eigenvalue_before_repair = 0.0;
  std::vector<bool> discrete;
  // Constant columns; they are excluded from the correlation and copied.
  std::vector<bool> degenerate;
  // (offset, width) of every one-hot block.
  std::vector<std::pair<std::size_t, std::size_t>> one_hot_blocks;
  // Fraction of ones in each column (used for one-hot blocks).
  std::vector<double> ones_fraction;
  // Groups with at least one row, in code order.
  std::vector<CopulaStratum> strata;

  std::size_t columns() const { return column_quantiles.size(); }
};

// Needs n >= 2.
CopulaModel fit_copula(const EncodedDataset& real);

// m rows drawn from the copula. Deterministic in (model, m, seed) whatever
// the worker count.
EncodedDataset sample_copula(const CopulaModel& model, std::size_t m,
                             std::uint64_t seed, std::size_t threads = 0);

// Names of groups of the dictionary that have no row in `data`.
std::vector<std::string> missing_groups(const EncodedDataset& data);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

struct ColumnFidelity {
  std::string column;
  double ks = 0.0;
};

// KS per encoded column (features, then label and group code) between the
// real and synthetic tables.
std::vector<ColumnFidelity> column_fidelity(const EncodedDataset& real,
                                            const EncodedDataset& synthetic);

// Produces a synthetic set compatible with `real`.
class SyntheticGenerator {
 public:
  virtual ~SyntheticGenerator() = default;
  virtual EncodedDataset generate(const EncodedDataset& real, std::size_t m,
                                  std::uint64_t seed) const = 0;
};

class GaussianCopulaGenerator : public SyntheticGenerator {
 public:
  explicit GaussianCopulaGenerator(std::size_t threads = 0)
      : threads_(threads) {}
  // Writes a warning to stderr when a group is absent from the sample.
  EncodedDataset generate(const EncodedDataset& real, std::size_t m,
                          std::uint64_t seed) const override;

 private:
  std::size_t threads_;
};

// Loads an externally produced synthetic CSV; `m` and `seed` are ignored.
class CsvFileGenerator : public SyntheticGenerator {
 public:
  explicit CsvFileGenerator(std::string path, EncodingOptions options = {})
      : path_(std::move(path)), options_(std::move(options)) {}
  EncodedDataset generate(const EncodedDataset& real, std::size_t m,
                          std::uint64_t seed) const override;

 private:
  std::string path_;
  EncodingOptions options_;
};

}  // namespace fairmask

#endif  // FAIRMASK_SYNTH_H_
