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

#include "fairmask/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "fairmask/csv.h"
#include "fairmask/error.h"

namespace fairmask {
namespace {

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::size_t column_index(const std::vector<std::string>& header,
                         const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw Error(ErrorCode::kMissingColumn, "column '" + name + "' not found");
  }
  return static_cast<std::size_t>(it - header.begin());
}

// Trimmed cells of the role columns for rows without missing values.
struct CleanTable {
  std::vector<std::string> header;
  std::vector<std::size_t> feature_idx;
  std::size_t label_idx = 0;
  std::size_t protected_idx = 0;
  std::vector<std::vector<std::string>> rows;
};

CleanTable read_clean(const std::string& path, const std::string& label,
                      const std::string& protected_attr,
                      const std::vector<std::string>& features,
                      const EncodingOptions& options) {
  csv::Table table = csv::read_file(path, options.delimiter);
  CleanTable clean;
  clean.label_idx = column_index(table.header, label);
  clean.protected_idx = column_index(table.header, protected_attr);
  for (const auto& name : features) {
    clean.feature_idx.push_back(column_index(table.header, name));
  }
  std::vector<std::size_t> used = clean.feature_idx;
  used.push_back(clean.label_idx);
  used.push_back(clean.protected_idx);

  const std::set<std::string, std::less<>> missing(
      options.missing_tokens.begin(), options.missing_tokens.end());
  for (auto& row : table.rows) {
    bool keep = true;
    for (std::size_t c : used) {
      std::string_view cell = row[c];
      if (options.trim_cells) cell = csv::trim(cell);
      if (missing.contains(cell)) {
        keep = false;
        break;
      }
      row[c] = std::string(cell);
    }
    if (keep) clean.rows.push_back(std::move(row));
  }
  clean.header = std::move(table.header);
  return clean;
}

std::vector<std::string> file_order(const CleanTable& clean) {
  std::vector<std::size_t> idx = clean.feature_idx;
  idx.push_back(clean.label_idx);
  idx.push_back(clean.protected_idx);
  std::sort(idx.begin(), idx.end());
  std::vector<std::string> names;
  for (std::size_t i : idx) names.push_back(clean.header[i]);
  return names;
}

// Fills features/groups given a finished schema. `group_names` may grow.
EncodedDataset encode_rows(const CleanTable& clean, Schema schema,
                           std::vector<std::string> group_names,
                           bool strict_schema) {
  const std::size_t n = clean.rows.size();
  const std::size_t d = schema.encoded_width();
  std::vector<double> features(n * d, 0.0);
  std::vector<std::uint8_t> labels(n);
  std::vector<std::int32_t> groups(n);

  std::vector<std::unordered_map<std::string, std::size_t>> category_index(
      schema.features.size());
  for (std::size_t f = 0; f < schema.features.size(); ++f) {
    const auto& cats = schema.features[f].categories;
    for (std::size_t c = 0; c < cats.size(); ++c) {
      category_index[f].emplace(cats[c], c);
    }
  }
  std::unordered_map<std::string, std::int32_t> group_code;
  for (std::size_t g = 0; g < group_names.size(); ++g) {
    group_code.emplace(group_names[g], static_cast<std::int32_t>(g + 1));
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = clean.rows[i];
    double* out = features.data() + i * d;
    for (std::size_t f = 0; f < schema.features.size(); ++f) {
      const FeatureColumn& col = schema.features[f];
      const std::string& cell = row[clean.feature_idx[f]];
      if (col.kind == FeatureColumn::Kind::kNumeric) {
        const auto value = parse_number(cell);
        if (!value) {
          throw Error(ErrorCode::kSchemaMismatch,
                      "non-numeric value '" + cell + "' in numeric column '" +
                          col.name + "'");
        }
        out[col.offset] = *value;
      } else {
        const auto it = category_index[f].find(cell);
        if (it == category_index[f].end()) {
          throw Error(ErrorCode::kSchemaMismatch,
                      "unknown category '" + cell + "' in column '" +
                          col.name + "'");
        }
        out[col.offset + it->second] = 1.0;
      }
    }
    const std::string& label = row[clean.label_idx];
    if (strict_schema && label != schema.positive_label &&
        label != schema.negative_label) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "unexpected label value '" + label + "'");
    }
    labels[i] = label == schema.positive_label ? 1 : 0;

    const std::string& group = row[clean.protected_idx];
    auto [it, inserted] = group_code.emplace(
        group, static_cast<std::int32_t>(group_names.size() + 1));
    if (inserted) group_names.push_back(group);
    groups[i] = it->second;
  }
  return EncodedDataset(std::move(schema), std::move(features),
                        std::move(labels), std::move(groups),
                        std::move(group_names));
}

}  // namespace

void ColumnRoles::validate() const {
  if (label_column.empty() || protected_column.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "label and protected columns must be named");
  }
  if (label_column == protected_column) {
    throw Error(ErrorCode::kInvalidArgument,
                "label and protected column must differ");
  }
  if (feature_columns.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no feature columns");
  }
  std::set<std::string> seen;
  for (const auto& f : feature_columns) {
    if (f == label_column || f == protected_column) {
      throw Error(ErrorCode::kInvalidArgument,
                  "column '" + f + "' cannot be both a feature and a role");
    }
    if (!seen.insert(f).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate feature column '" + f + "'");
    }
  }
}

std::size_t Schema::encoded_width() const {
  std::size_t width = 0;
  for (const auto& f : features) width += f.width;
  return width;
}

EncodedDataset::EncodedDataset(Schema schema, std::vector<double> features,
                               std::vector<std::uint8_t> labels,
                               std::vector<std::int32_t> groups,
                               std::vector<std::string> group_names)
    : schema_(std::move(schema)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      groups_(std::move(groups)),
      group_names_(std::move(group_names)) {
  if (group_names_.size() < 2) {
    throw Error(ErrorCode::kSingleGroup,
                "at least two protected groups are required, found " +
                    std::to_string(group_names_.size()));
  }
  if (groups_.size() != labels_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "labels/groups length mismatch");
  }
  if (features_.size() != labels_.size() * d()) {
    throw Error(ErrorCode::kInvalidArgument, "feature matrix shape mismatch");
  }
  const auto k = static_cast<std::int32_t>(group_names_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] > 1) {
      throw Error(ErrorCode::kInvalidArgument, "label outside {0,1}");
    }
    if (groups_[i] < 1 || groups_[i] > k) {
      throw Error(ErrorCode::kInvalidArgument, "group code outside 1..k");
    }
  }
  for (double v : features_) {
    if (std::isnan(v)) {
      throw Error(ErrorCode::kInvalidArgument, "missing feature value");
    }
  }
}

EncodedDataset EncodedDataset::with_group_dictionary(
    const std::vector<std::string>& names) const {
  std::unordered_map<std::string, std::int32_t> code;
  for (std::size_t g = 0; g < names.size(); ++g) {
    code.emplace(names[g], static_cast<std::int32_t>(g + 1));
  }
  std::vector<std::int32_t> remap(group_names_.size());
  for (std::size_t g = 0; g < group_names_.size(); ++g) {
    const auto it = code.find(group_names_[g]);
    if (it == code.end()) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "group '" + group_names_[g] + "' missing from dictionary");
    }
    remap[g] = it->second;
  }
  std::vector<std::int32_t> groups(groups_.size());
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    groups[i] = remap[groups_[i] - 1];
  }
  return EncodedDataset(schema_, features_, labels_, std::move(groups), names);
}

DatasetView::DatasetView(std::shared_ptr<const EncodedDataset> data,
                         Provenance provenance) {
  if (!data) throw Error(ErrorCode::kInvalidArgument, "null dataset");
  selected_.resize(data->n());
  for (std::size_t i = 0; i < selected_.size(); ++i) selected_[i] = i;
  sources_.push_back({std::move(data), provenance});
}

DatasetView::DatasetView(std::vector<ViewSource> sources,
                         std::vector<std::size_t> selected)
    : sources_(std::move(sources)), selected_(std::move(selected)) {
  if (sources_.empty() || sources_.size() > 2) {
    throw Error(ErrorCode::kInvalidArgument, "a view needs one or two sources");
  }
  for (const auto& s : sources_) {
    if (!s.data) throw Error(ErrorCode::kInvalidArgument, "null dataset");
  }
  if (sources_.size() == 2) {
    const auto& a = *sources_[0].data;
    const auto& b = *sources_[1].data;
    if (!(a.schema() == b.schema()) || a.group_names() != b.group_names()) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "view sources differ in schema or group dictionary");
    }
  }
  std::size_t total = 0;
  for (const auto& s : sources_) total += s.data->n();
  for (std::size_t i = 0; i < selected_.size(); ++i) {
    if (selected_[i] >= total) {
      throw Error(ErrorCode::kIndexOutOfRange, "view index out of range");
    }
    if (i && selected_[i] <= selected_[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "view indices must be unique and sorted");
    }
  }
}

DatasetView::RowRef DatasetView::at(std::size_t i) const {
  std::size_t idx = selected_[i];
  const auto& first = sources_.front();
  if (idx < first.data->n()) {
    return {first.data.get(), idx, first.provenance};
  }
  const auto& second = sources_.back();
  return {second.data.get(), idx - first.data->n(), second.provenance};
}

std::uint8_t DatasetView::label(std::size_t i) const {
  const RowRef r = at(i);
  return r.data->labels()[r.row];
}

std::int32_t DatasetView::group(std::size_t i) const {
  const RowRef r = at(i);
  return r.data->groups()[r.row];
}

std::span<const double> DatasetView::features(std::size_t i) const {
  const RowRef r = at(i);
  return r.data->row(r.row);
}

EncodedDataset DatasetView::materialize() const {
  const std::size_t d = schema().encoded_width();
  std::vector<double> features;
  features.reserve(size() * d);
  std::vector<std::uint8_t> labels(size());
  std::vector<std::int32_t> groups(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const RowRef r = at(i);
    const auto row = r.data->row(r.row);
    features.insert(features.end(), row.begin(), row.end());
    labels[i] = r.data->labels()[r.row];
    groups[i] = r.data->groups()[r.row];
  }
  return EncodedDataset(schema(), std::move(features), std::move(labels),
                        std::move(groups), group_names());
}

GroupStats group_stats(const DatasetView& view) {
  GroupStats stats(view.k());
  for (std::size_t i = 0; i < view.size(); ++i) {
    const DatasetView::RowRef r = view.at(i);
    auto& g = stats[r.data->groups()[r.row] - 1];
    ++g.count;
    g.positives += r.data->labels()[r.row];
  }
  return stats;
}

std::vector<std::string> read_csv_header(const std::string& path,
                                         char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::istringstream first(line + "\n");
  return csv::parse(first, delimiter).header;
}

std::vector<std::string> infer_feature_columns(
    const std::vector<std::string>& header, const std::string& label_column,
    const std::string& protected_column) {
  std::vector<std::string> features;
  for (const auto& name : header) {
    if (name != label_column && name != protected_column) {
      features.push_back(name);
    }
  }
  return features;
}

EncodedDataset load_csv(const std::string& path, const ColumnRoles& roles,
                        const EncodingOptions& options) {
  roles.validate();
  CleanTable clean =
      read_clean(path, roles.label_column, roles.protected_column,
                 roles.feature_columns, options);
  if (clean.rows.empty()) {
    throw Error(ErrorCode::kEmptyAfterCleaning,
                "no rows left after dropping missing values in " + path);
  }

  Schema schema;
  schema.label_column = roles.label_column;
  schema.protected_column = roles.protected_column;
  schema.column_order = file_order(clean);

  const std::set<std::string> forced(options.categorical_columns.begin(),
                                     options.categorical_columns.end());
  std::size_t offset = 0;
  for (std::size_t f = 0; f < roles.feature_columns.size(); ++f) {
    FeatureColumn col;
    col.name = roles.feature_columns[f];
    col.offset = offset;
    const std::size_t c = clean.feature_idx[f];
    bool numeric = !forced.contains(col.name);
    if (numeric) {
      for (const auto& row : clean.rows) {
        if (!parse_number(row[c])) {
          numeric = false;
          break;
        }
      }
    }
    if (numeric) {
      col.kind = FeatureColumn::Kind::kNumeric;
      col.width = 1;
    } else {
      col.kind = FeatureColumn::Kind::kCategorical;
      std::set<std::string, std::less<>> seen;
      for (const auto& row : clean.rows) {
        if (seen.insert(row[c]).second) col.categories.push_back(row[c]);
      }
      col.width = col.categories.size();
    }
    offset += col.width;
    schema.features.push_back(std::move(col));
  }

  // Label mapping.
  std::vector<std::string> distinct;
  for (const auto& row : clean.rows) {
    const std::string& v = row[clean.label_idx];
    if (std::find(distinct.begin(), distinct.end(), v) == distinct.end()) {
      distinct.push_back(v);
    }
  }
  if (roles.positive_label_value) {
    schema.positive_label = *roles.positive_label_value;
  } else {
    const bool zero_one = std::all_of(
        distinct.begin(), distinct.end(),
        [](const std::string& v) { return v == "0" || v == "1"; });
    if (!zero_one) {
      throw Error(ErrorCode::kNonBinaryLabel,
                  "label column '" + roles.label_column + "' has " +
                      std::to_string(distinct.size()) +
                      " distinct values that are not {0,1}; a positive "
                      "label value is required");
    }
    schema.positive_label = "1";
  }
  schema.negative_label = "0";
  for (const auto& v : distinct) {
    if (v != schema.positive_label) {
      schema.negative_label = v;
      break;
    }
  }
  if (schema.negative_label == schema.positive_label) {
    schema.negative_label = "not " + schema.positive_label;
  }

  return encode_rows(clean, std::move(schema), {}, false);
}

EncodedDataset load_csv_like(const std::string& path,
                             const EncodedDataset& reference,
                             const EncodingOptions& options) {
  const Schema& schema = reference.schema();
  std::vector<std::string> features;
  for (const auto& f : schema.features) features.push_back(f.name);
  CleanTable clean = read_clean(path, schema.label_column,
                                schema.protected_column, features, options);
  if (clean.rows.empty()) {
    throw Error(ErrorCode::kEmptyAfterCleaning,
                "no rows left after dropping missing values in " + path);
  }
  return encode_rows(clean, schema, reference.group_names(), true);
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_csv(const DatasetView& view, const std::string& path,
               const WriteOptions& options) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path);

  const Schema& schema = view.schema();
  std::map<std::string, std::size_t> feature_of;
  for (std::size_t f = 0; f < schema.features.size(); ++f) {
    feature_of.emplace(schema.features[f].name, f);
  }
  std::vector<std::string> header = schema.column_order;
  if (options.provenance_column) header.push_back(*options.provenance_column);
  csv::write_record(out, header, options.delimiter);

  std::vector<std::string> fields(header.size());
  for (std::size_t i = 0; i < view.size(); ++i) {
    const auto r = view.at(i);
    const auto row = r.data->row(r.row);
    for (std::size_t c = 0; c < schema.column_order.size(); ++c) {
      const std::string& name = schema.column_order[c];
      if (name == schema.label_column) {
        fields[c] = r.data->labels()[r.row] ? schema.positive_label
                                            : schema.negative_label;
      } else if (name == schema.protected_column) {
        fields[c] = view.group_names()[r.data->groups()[r.row] - 1];
      } else {
        const FeatureColumn& col = schema.features[feature_of.at(name)];
        if (col.kind == FeatureColumn::Kind::kNumeric) {
          fields[c] = format_number(row[col.offset]);
        } else {
          const auto block = row.subspan(col.offset, col.width);
          const auto hot = std::max_element(block.begin(), block.end());
          fields[c] = col.categories[hot - block.begin()];
        }
      }
    }
    if (options.provenance_column) {
      fields.back() =
          r.provenance == Provenance::kReal ? "real" : "synthetic";
    }
    csv::write_record(out, fields, options.delimiter);
  }
  out.flush();
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + path);
}

}  // namespace fairmask
