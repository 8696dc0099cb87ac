#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "fingan/data_model.hpp"
#include "fingan/random.hpp"

namespace fingan::test {

inline ColumnSpec numeric(std::string name) { return {std::move(name), ColumnKind::Numeric, {}}; }

inline ColumnSpec categorical(std::string name, std::vector<std::string> levels) {
  return {std::move(name), ColumnKind::Categorical, std::move(levels)};
}

inline Schema make_schema(std::vector<ColumnSpec> cols) {
  Schema s;
  s.columns = std::move(cols);
  s.label = "target";
  s.positive_label = "yes";
  s.negative_label = "no";
  return s;
}

// Random mixed table: numerics ~ N(0, 3) + column offset, categoricals uniform.
inline Table random_table(const Schema& schema, std::size_t n, double positive_rate,
                          std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> cells;
  std::vector<int> labels;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const auto& col = schema.columns[c];
      if (col.kind == ColumnKind::Numeric)
        cells.push_back(rng.normal(static_cast<double>(c), 3.0));
      else
        cells.push_back(static_cast<double>(rng.uniform_index(col.categories.size())));
    }
    labels.push_back(rng.uniform() < positive_rate ? 1 : 0);
  }
  return Table(schema, std::move(cells), std::move(labels));
}

// Table with `pos` positive and `neg` negative rows, one numeric column
// holding the row number so rows are distinguishable.
inline Table counted_table(std::size_t pos, std::size_t neg) {
  Schema s = make_schema({numeric("id")});
  std::vector<double> cells;
  std::vector<int> labels;
  for (std::size_t i = 0; i < pos + neg; ++i) {
    cells.push_back(static_cast<double>(i));
    labels.push_back(i < pos ? 1 : 0);
  }
  return Table(s, std::move(cells), std::move(labels));
}

// Sorted (row cells, label) multiset, for conservation checks.
inline std::vector<std::pair<std::vector<double>, int>> row_multiset(const Table& t) {
  std::vector<std::pair<std::vector<double>, int>> out;
  for (std::size_t r = 0; r < t.rows(); ++r)
    out.emplace_back(std::vector<double>(t.row(r).begin(), t.row(r).end()), t.label(r));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fingan::test
