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

#include "fairmask/synth.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "fairmask/error.h"
#include "fairmask/parallel.h"

namespace fairmask {
namespace {

constexpr std::size_t kSampleBlock = 4096;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  static const boost::math::normal standard;
  return boost::math::quantile(standard, p);
}

// Derives an independent stream seed for each sample block.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Phi^-1((rank - 0.5) / n) with average ranks for ties.
std::vector<double> normal_scores(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> scores(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Ranks i+1..j+1 share their average.
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    const double score =
        normal_quantile((rank - 0.5) / static_cast<double>(n));
    for (std::size_t t = i; t <= j; ++t) scores[order[t]] = score;
    i = j + 1;
  }
  return scores;
}

double nearest_rank(const std::vector<double>& sorted, double u) {
  const double n = static_cast<double>(sorted.size());
  auto idx = static_cast<std::ptrdiff_t>(std::ceil(u * n)) - 1;
  idx = std::clamp<std::ptrdiff_t>(idx, 0,
                                   static_cast<std::ptrdiff_t>(sorted.size()) -
                                       1);
  return sorted[static_cast<std::size_t>(idx)];
}

double column_value(const EncodedDataset& data, std::size_t i, std::size_t j) {
  const std::size_t d = data.d();
  if (j < d) return data.feature(i, j);
  if (j == d) return data.labels()[i];
  return data.groups()[i];
}

// Marginals and normal-score correlation of the columns of `values`.
struct ColumnFit {
  std::vector<std::vector<double>> quantiles;
  std::vector<bool> degenerate;
  std::vector<double> ones_fraction;
  Eigen::MatrixXd correlation;
  Eigen::MatrixXd factor;
  double min_eigenvalue = 1.0;
};

ColumnFit fit_columns(const Eigen::MatrixXd& values) {
  const auto n = static_cast<std::size_t>(values.rows());
  const auto cols = static_cast<std::size_t>(values.cols());
  ColumnFit fit;
  fit.quantiles.resize(cols);
  fit.degenerate.assign(cols, false);
  fit.ones_fraction.assign(cols, 0.0);

  Eigen::MatrixXd scores(n, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    std::vector<double> column(n);
    for (std::size_t i = 0; i < n; ++i) column[i] = values(i, j);
    fit.ones_fraction[j] =
        static_cast<double>(std::count(column.begin(), column.end(), 1.0)) /
        static_cast<double>(n);
    const std::vector<double> ns = normal_scores(column);
    std::sort(column.begin(), column.end());
    fit.degenerate[j] = column.front() == column.back();
    fit.quantiles[j] = std::move(column);
    for (std::size_t i = 0; i < n; ++i) scores(i, j) = ns[i];
  }

  // Pearson correlation of normal scores; constant columns stay independent.
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(cols, cols);
  if (n >= 2) {
    Eigen::MatrixXd centered = scores.rowwise() - scores.colwise().mean();
    Eigen::MatrixXd cov =
        (centered.transpose() * centered) / static_cast<double>(n - 1);
    for (std::size_t a = 0; a < cols; ++a) {
      if (fit.degenerate[a]) continue;
      for (std::size_t b = a + 1; b < cols; ++b) {
        if (fit.degenerate[b]) continue;
        const double r = cov(a, b) / std::sqrt(cov(a, a) * cov(b, b));
        corr(a, b) = corr(b, a) = r;
      }
    }
  }

  // Nearest PSD correlation: clip negative eigenvalues, renormalize diagonal.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
  fit.min_eigenvalue = eig.eigenvalues().minCoeff();
  Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd repaired =
      eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  Eigen::VectorXd scale = repaired.diagonal().cwiseSqrt().cwiseInverse();
  repaired = scale.asDiagonal() * repaired * scale.asDiagonal();
  repaired = 0.5 * (repaired + repaired.transpose());
  repaired.diagonal().setOnes();
  fit.correlation = repaired;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig2(repaired);
  const Eigen::VectorXd root = eig2.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  fit.factor =
      eig2.eigenvectors() * root.asDiagonal() * eig2.eigenvectors().transpose();
  return fit;
}

}  // namespace

CopulaModel fit_copula(const EncodedDataset& real) {
  const std::size_t n = real.n();
  if (n < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "copula fitting needs at least two rows");
  }
  const std::size_t d = real.d();
  const std::size_t cols = d + 2;

  CopulaModel model;
  model.schema = real.schema();
  model.group_names = real.group_names();
  model.n = n;
  model.discrete.assign(cols, false);
  for (const auto& f : real.schema().features) {
    if (f.kind == FeatureColumn::Kind::kCategorical) {
      model.one_hot_blocks.emplace_back(f.offset, f.width);
      for (std::size_t c = 0; c < f.width; ++c) {
        model.discrete[f.offset + c] = true;
      }
    }
  }
  model.discrete[d] = true;
  model.discrete[d + 1] = true;

  Eigen::MatrixXd values(n, cols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < cols; ++j) values(i, j) = column_value(real, i, j);
  }
  ColumnFit global = fit_columns(values);
  model.column_quantiles = std::move(global.quantiles);
  model.degenerate = std::move(global.degenerate);
  model.ones_fraction = std::move(global.ones_fraction);
  model.correlation = std::move(global.correlation);
  model.factor = std::move(global.factor);
  model.min_eigenvalue_before_repair = global.min_eigenvalue;

  std::vector<std::vector<Eigen::Index>> members(real.k());
  for (std::size_t i = 0; i < n; ++i) {
    members[real.groups()[i] - 1].push_back(static_cast<Eigen::Index>(i));
  }
  for (std::size_t g = 0; g < real.k(); ++g) {
    if (members[g].empty()) continue;
    const Eigen::MatrixXd sub =
        values(members[g], Eigen::seqN(0, static_cast<Eigen::Index>(d + 1)));
    ColumnFit fit = fit_columns(sub);
    CopulaStratum stratum;
    stratum.group = static_cast<std::int32_t>(g + 1);
    stratum.weight =
        static_cast<double>(members[g].size()) / static_cast<double>(n);
    stratum.column_quantiles = std::move(fit.quantiles);
    stratum.factor = std::move(fit.factor);
    stratum.degenerate = std::move(fit.degenerate);
    stratum.ones_fraction = std::move(fit.ones_fraction);
    model.strata.push_back(std::move(stratum));
  }
  return model;
}

EncodedDataset sample_copula(const CopulaModel& model, std::size_t m,
                             std::uint64_t seed, std::size_t threads) {
  if (m == 0) {
    throw Error(ErrorCode::kInvalidArgument, "sample size must be positive");
  }
  if (model.strata.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "copula model has no groups");
  }
  const std::size_t d = model.columns() - 2;
  std::vector<double> features(m * d, 0.0);
  std::vector<std::uint8_t> labels(m);
  std::vector<std::int32_t> groups(m);

  std::vector<bool> in_block(d + 1, false);
  for (const auto& [offset, width] : model.one_hot_blocks) {
    for (std::size_t c = 0; c < width; ++c) in_block[offset + c] = true;
  }
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& s : model.strata) cumulative.push_back(total += s.weight);

  const std::size_t blocks = (m + kSampleBlock - 1) / kSampleBlock;
  parallel_for(blocks, resolve_thread_count(threads), [&](std::size_t b) {
    const std::size_t begin = b * kSampleBlock;
    const std::size_t rows = std::min(kSampleBlock, m - begin);
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(b)));
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit(0.0, total);
    Eigen::VectorXd eps(d + 1);
    std::vector<double> u(d + 1);
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t row = begin + i;
      const auto pick = static_cast<std::size_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), unit(rng)) -
          cumulative.begin());
      const CopulaStratum& s =
          model.strata[std::min(pick, model.strata.size() - 1)];
      for (std::size_t j = 0; j <= d; ++j) eps(j) = gauss(rng);
      const Eigen::VectorXd z = s.factor * eps;
      for (std::size_t j = 0; j <= d; ++j) u[j] = normal_cdf(z(j));

      auto value = [&](std::size_t j) {
        return s.degenerate[j] ? s.column_quantiles[j].front()
                               : nearest_rank(s.column_quantiles[j], u[j]);
      };
      double* out = features.data() + row * d;
      for (std::size_t j = 0; j < d; ++j) {
        if (!in_block[j]) out[j] = value(j);
      }
      // One-hot block: the category with the largest key u^(1/p) wins, which
      // picks category j with probability p_j when the u's are independent.
      for (const auto& [offset, width] : model.one_hot_blocks) {
        std::size_t winner = offset;
        double best = -1.0;
        for (std::size_t c = offset; c < offset + width; ++c) {
          const double p = s.ones_fraction[c];
          const double key = p > 0.0 ? std::pow(u[c], 1.0 / p) : 0.0;
          if (key > best) {
            best = key;
            winner = c;
          }
        }
        out[winner] = 1.0;
      }
      labels[row] = static_cast<std::uint8_t>(value(d));
      groups[row] = s.group;
    }
  });
  return EncodedDataset(model.schema, std::move(features), std::move(labels),
                        std::move(groups), model.group_names);
}

std::vector<std::string> missing_groups(const EncodedDataset& data) {
  std::vector<bool> seen(data.k(), false);
  for (auto g : data.groups()) seen[g - 1] = true;
  std::vector<std::string> missing;
  for (std::size_t g = 0; g < data.k(); ++g) {
    if (!seen[g]) missing.push_back(data.group_names()[g]);
  }
  return missing;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "KS needs two non-empty samples");
  }
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double best = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / nx -
                                   static_cast<double>(j) / ny));
  }
  return best;
}

std::vector<ColumnFidelity> column_fidelity(const EncodedDataset& real,
                                            const EncodedDataset& synthetic) {
  if (!(real.schema() == synthetic.schema())) {
    throw Error(ErrorCode::kSchemaMismatch, "schemas differ");
  }
  const std::size_t d = real.d();
  std::vector<std::string> names(d + 2);
  for (const auto& f : real.schema().features) {
    if (f.kind == FeatureColumn::Kind::kNumeric) {
      names[f.offset] = f.name;
    } else {
      for (std::size_t c = 0; c < f.width; ++c) {
        names[f.offset + c] = f.name + "=" + f.categories[c];
      }
    }
  }
  names[d] = real.schema().label_column;
  names[d + 1] = real.schema().protected_column;

  // Group codes are compared by name so dictionaries may differ in order.
  auto column = [&](const EncodedDataset& data, std::size_t j) {
    std::vector<double> values(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (j == d + 1) {
        const auto& name = data.group_names()[data.groups()[i] - 1];
        const auto& ref = real.group_names();
        values[i] = static_cast<double>(
            std::find(ref.begin(), ref.end(), name) - ref.begin());
      } else {
        values[i] = column_value(data, i, j);
      }
    }
    return values;
  };

  std::vector<ColumnFidelity> out;
  for (std::size_t j = 0; j < d + 2; ++j) {
    out.push_back({names[j], ks_statistic(column(real, j),
                                          column(synthetic, j))});
  }
  return out;
}

EncodedDataset GaussianCopulaGenerator::generate(const EncodedDataset& real,
                                                 std::size_t m,
                                                 std::uint64_t seed) const {
  EncodedDataset out = sample_copula(fit_copula(real), m, seed, threads_);
  for (const auto& name : missing_groups(out)) {
    std::cerr << "warning: group '" << name
              << "' is absent from the synthetic sample\n";
  }
  return out;
}

EncodedDataset CsvFileGenerator::generate(const EncodedDataset& real,
                                          std::size_t /*m*/,
                                          std::uint64_t /*seed*/) const {
  return load_csv_like(path_, real, options_);
}

}  // namespace fairmask
