#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fingan {

using Json = nlohmann::json;

enum class ColumnKind { Numeric, Categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  std::vector<std::string> categories;  // Categorical only

  bool operator==(const ColumnSpec&) const = default;
};

// Feature columns plus a binary label. The label is not one of `columns`;
// rows carry it separately as 0 (negative_label) or 1 (positive_label).
struct Schema {
  std::vector<ColumnSpec> columns;
  std::string label;
  std::string positive_label;
  std::string negative_label;

  bool operator==(const Schema&) const = default;

  void validate() const;
  std::size_t index_of(std::string_view name) const;  // throws MissingColumn
  std::size_t numeric_count() const;
  std::size_t categorical_count() const;

  static Schema from_json(const Json& j);
  static Schema load(const std::string& path);
  Json to_json() const;
};

// Row-major n x d cells. Numeric cells hold the value, categorical cells hold
// the level index as an exact small integer.
class Table {
 public:
  Table() = default;
  Table(Schema schema, std::vector<double> cells, std::vector<int> labels);

  const Schema& schema() const { return schema_; }
  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return schema_.columns.size(); }
  bool empty() const { return labels_.empty(); }

  double at(std::size_t r, std::size_t c) const { return cells_[r * cols() + c]; }
  std::size_t category(std::size_t r, std::size_t c) const {
    return static_cast<std::size_t>(at(r, c));
  }
  std::span<const double> row(std::size_t r) const {
    return {cells_.data() + r * cols(), cols()};
  }
  int label(std::size_t r) const { return labels_[r]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<double>& cells() const { return cells_; }

  std::size_t count_label(int label) const;
  std::vector<std::size_t> indices_with_label(int label) const;

  Table select(std::span<const std::size_t> indices) const;
  Table with_label(int label) const { return select(indices_with_label(label)); }

  // Rows of `b` appended to `a`; schemas must match.
  static Table concat(const Table& a, const Table& b);

 private:
  Schema schema_;
  std::vector<double> cells_;
  std::vector<int> labels_;
};

Table load_csv(const std::string& path, const Schema& schema);
Table parse_csv_table(std::string_view text, const Schema& schema);
void save_csv(const Table& table, const std::string& path);
std::string format_csv(const Table& table);

struct NumericScale {
  std::size_t column = 0;
  double mean = 0.0;
  double stddev = 1.0;
  bool constant = false;  // stddev was zero; values pass through unscaled
};

struct PreprocessParams {
  Schema schema;
  std::vector<NumericScale> numeric;
  std::vector<std::string> constant_columns;

  Json to_json() const;
  static PreprocessParams from_json(const Json& j);
};

enum class Direction { Forward, Inverse };

PreprocessParams fit_preprocess(const Table& table);
Table apply_preprocess(const Table& table, const PreprocessParams& params,
                       Direction direction);

struct Split {
  Table train;
  Table test;
};

struct FoldIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

struct Fold {
  Table train;
  Table validation;
};

// Per-class train sizes use largest-remainder allocation of
// n - ceil((1 - train_fraction) * n) training rows.
std::vector<std::size_t> stratified_train_counts(
    std::span<const std::size_t> class_counts, double train_fraction);

Split stratified_holdout(const Table& table, double train_fraction,
                         std::uint64_t seed);

std::vector<FoldIndices> stratified_kfold_indices(std::span<const int> labels,
                                                  std::size_t k,
                                                  std::uint64_t seed);

std::vector<Fold> stratified_kfold(const Table& table, std::size_t k,
                                   std::uint64_t seed);

// Test instrumentation: every fitting entry point (preprocess, GANs, OCSVM,
// classifiers) reports the table it is about to learn from.
namespace instrumentation {
using FitObserver = std::function<void(std::string_view stage, const Table&)>;
void set_fit_observer(FitObserver observer);
void notify_fit(std::string_view stage, const Table& table);
}  // namespace instrumentation

}  // namespace fingan
