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

#ifndef FAIRMASK_DATASET_H_
#define FAIRMASK_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fairmask {

// Which raw columns play which role. The protected attribute is never part of
// the feature columns.
struct ColumnRoles {
  std::string label_column;
  std::string protected_column;
  std::vector<std::string> feature_columns;
  // Raw label value mapped to y = 1. When unset, the label column must
  // already be {0,1} and "1" is positive.
  std::optional<std::string> positive_label_value;

  // Throws kInvalidArgument when the invariants do not hold.
  void validate() const;
};

struct EncodingOptions {
  // Cells equal to one of these (after trimming) mark the row as missing.
  std::vector<std::string> missing_tokens = {"", "?", "NA"};
  // Feature columns forced to one-hot even if every value parses as a number.
  std::vector<std::string> categorical_columns;
  bool trim_cells = true;
  char delimiter = ',';
};

struct FeatureColumn {
  enum class Kind { kNumeric, kCategorical };

  std::string name;
  Kind kind = Kind::kNumeric;
  // One-hot categories in first-appearance order; empty for numeric columns.
  std::vector<std::string> categories;
  // First encoded column and number of encoded columns (1 for numeric).
  std::size_t offset = 0;
  std::size_t width = 1;

  friend bool operator==(const FeatureColumn&, const FeatureColumn&) = default;
};

// Everything needed to encode a raw CSV consistently and to decode encoded
// rows back to raw values.
struct Schema {
  std::vector<FeatureColumn> features;
  std::string label_column;
  std::string protected_column;
  std::string positive_label;
  std::string negative_label;
  // Raw column names in file order (features, label and protected only).
  std::vector<std::string> column_order;

  std::size_t encoded_width() const;
  friend bool operator==(const Schema&, const Schema&) = default;
};

// Immutable (x, y, z) table. Group codes are 1..k; group_names[g - 1] is the
// raw protected value of code g.
class EncodedDataset {
 public:
  // Validates every invariant; throws kInvalidArgument / kSingleGroup.
  EncodedDataset(Schema schema, std::vector<double> features,
                 std::vector<std::uint8_t> labels,
                 std::vector<std::int32_t> groups,
                 std::vector<std::string> group_names);

  std::size_t n() const { return labels_.size(); }
  std::size_t d() const { return schema_.encoded_width(); }
  std::size_t k() const { return group_names_.size(); }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * d(), d()};
  }
  double feature(std::size_t i, std::size_t j) const {
    return features_[i * d() + j];
  }
  std::span<const double> features() const { return features_; }
  std::span<const std::uint8_t> labels() const { return labels_; }
  std::span<const std::int32_t> groups() const { return groups_; }
  const std::vector<std::string>& group_names() const { return group_names_; }
  const Schema& schema() const { return schema_; }

  // Returns a copy whose group codes refer to `names`, which must contain
  // every current group name (extra names are allowed).
  EncodedDataset with_group_dictionary(
      const std::vector<std::string>& names) const;

  friend bool operator==(const EncodedDataset&, const EncodedDataset&) =
      default;

 private:
  Schema schema_;
  std::vector<double> features_;
  std::vector<std::uint8_t> labels_;
  std::vector<std::int32_t> groups_;
  std::vector<std::string> group_names_;
};

enum class Provenance : std::uint8_t { kReal, kSynthetic };

struct ViewSource {
  std::shared_ptr<const EncodedDataset> data;
  Provenance provenance = Provenance::kReal;
};

// A subset of the rows of one or two datasets sharing schema and group
// dictionary. Row indices address the concatenation of the sources: index
// i < sources[0].n() is row i of the first source, the rest continue into
// the second. Indices are unique and sorted.
class DatasetView {
 public:
  // Full view over one dataset.
  explicit DatasetView(std::shared_ptr<const EncodedDataset> data,
                       Provenance provenance = Provenance::kReal);
  DatasetView(std::vector<ViewSource> sources,
              std::vector<std::size_t> selected);

  std::size_t size() const { return selected_.size(); }
  bool empty() const { return selected_.empty(); }
  std::size_t k() const { return sources_.front().data->k(); }
  const Schema& schema() const { return sources_.front().data->schema(); }
  const std::vector<std::string>& group_names() const {
    return sources_.front().data->group_names();
  }
  const std::vector<ViewSource>& sources() const { return sources_; }
  const std::vector<std::size_t>& selected() const { return selected_; }

  struct RowRef {
    const EncodedDataset* data;
    std::size_t row;
    Provenance provenance;
  };
  // The i-th selected row.
  RowRef at(std::size_t i) const;
  std::uint8_t label(std::size_t i) const;
  std::int32_t group(std::size_t i) const;
  std::span<const double> features(std::size_t i) const;

  // Copies the selected rows into a standalone dataset.
  EncodedDataset materialize() const;

 private:
  std::vector<ViewSource> sources_;
  std::vector<std::size_t> selected_;
};

struct GroupCounts {
  std::int64_t count = 0;
  std::int64_t positives = 0;

  friend bool operator==(const GroupCounts&, const GroupCounts&) = default;
};

// Per-group sufficient statistics; entry g - 1 holds group code g.
using GroupStats = std::vector<GroupCounts>;

GroupStats group_stats(const DatasetView& view);

// Reads only the header row.
std::vector<std::string> read_csv_header(const std::string& path,
                                         char delimiter = ',');

// Every header column except the label and protected ones, in file order.
std::vector<std::string> infer_feature_columns(
    const std::vector<std::string>& header, const std::string& label_column,
    const std::string& protected_column);

EncodedDataset load_csv(const std::string& path, const ColumnRoles& roles,
                        const EncodingOptions& options = {});

// Encodes `path` with the schema and group dictionary of `reference`, e.g.
// an externally generated synthetic file. Unknown categories or
// non-numeric values in numeric columns raise kSchemaMismatch. Protected
// values unseen in the reference are appended to its dictionary.
EncodedDataset load_csv_like(const std::string& path,
                             const EncodedDataset& reference,
                             const EncodingOptions& options = {});

struct WriteOptions {
  // When set, an extra column with "real"/"synthetic" per row is appended.
  std::optional<std::string> provenance_column;
  char delimiter = ',';
};

// Writes rows with original column names and decoded values. Throws
// kIoFailure.
void write_csv(const DatasetView& view, const std::string& path,
               const WriteOptions& options = {});

// Shortest text that parses back to the same double.
std::string format_number(double value);

}  // namespace fairmask

#endif  // FAIRMASK_DATASET_H_
