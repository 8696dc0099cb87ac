#include "fingan/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "csv.hpp"
#include "fingan/error.hpp"
#include "fingan/log.hpp"
#include "fingan/random.hpp"

namespace fingan {

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::string kind_name(ColumnKind k) {
  return k == ColumnKind::Numeric ? "numeric" : "categorical";
}

}  // namespace

// ---------------------------------------------------------------- Schema

void Schema::validate() const {
  if (label.empty()) fail(ErrorCode::InvalidArgument, "schema: label name is empty");
  if (positive_label.empty() || negative_label.empty())
    fail(ErrorCode::InvalidArgument, "schema: label needs a positive and a negative level");
  if (positive_label == negative_label)
    fail(ErrorCode::InvalidArgument, "schema: label must have exactly 2 distinct levels");
  std::set<std::string> names{label};
  for (const auto& col : columns) {
    if (col.name.empty()) fail(ErrorCode::InvalidArgument, "schema: empty column name");
    if (!names.insert(col.name).second)
      fail(ErrorCode::InvalidArgument, "schema: duplicate column name '" + col.name + "'");
    if (col.kind == ColumnKind::Numeric) {
      if (!col.categories.empty())
        fail(ErrorCode::InvalidArgument,
             "schema: numeric column '" + col.name + "' has a category list");
      continue;
    }
    if (col.categories.empty())
      fail(ErrorCode::InvalidArgument,
           "schema: categorical column '" + col.name + "' has no levels");
    std::set<std::string> levels;
    for (const auto& level : col.categories) {
      if (level.empty())
        fail(ErrorCode::InvalidArgument, "schema: empty level in '" + col.name + "'");
      if (!levels.insert(level).second)
        fail(ErrorCode::InvalidArgument,
             "schema: duplicate level '" + level + "' in '" + col.name + "'");
    }
  }
}

std::size_t Schema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  fail(ErrorCode::MissingColumn, "no column named '" + std::string(name) + "'");
}

std::size_t Schema::numeric_count() const {
  return static_cast<std::size_t>(std::count_if(columns.begin(), columns.end(), [](auto& c) {
    return c.kind == ColumnKind::Numeric;
  }));
}

std::size_t Schema::categorical_count() const { return columns.size() - numeric_count(); }

Schema Schema::from_json(const Json& j) {
  Schema s;
  try {
    s.label = j.at("label").get<std::string>();
    s.positive_label = j.at("positive_label").get<std::string>();
    s.negative_label = j.at("negative_label").get<std::string>();
    for (const auto& jc : j.at("columns")) {
      ColumnSpec c;
      c.name = jc.at("name").get<std::string>();
      const auto kind = jc.at("kind").get<std::string>();
      if (kind == "numeric") {
        c.kind = ColumnKind::Numeric;
      } else if (kind == "categorical") {
        c.kind = ColumnKind::Categorical;
        c.categories = jc.at("categories").get<std::vector<std::string>>();
      } else {
        fail(ErrorCode::InvalidArgument, "schema: unknown column kind '" + kind + "'");
      }
      s.columns.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, std::string("schema: ") + e.what());
  }
  s.validate();
  return s;
}

Schema Schema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open schema file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, "schema '" + path + "': " + e.what());
  }
  return from_json(j);
}

Json Schema::to_json() const {
  Json cols = Json::array();
  for (const auto& c : columns) {
    Json jc = {{"name", c.name}, {"kind", kind_name(c.kind)}};
    if (c.kind == ColumnKind::Categorical) jc["categories"] = c.categories;
    cols.push_back(std::move(jc));
  }
  return {{"columns", cols},
          {"label", label},
          {"positive_label", positive_label},
          {"negative_label", negative_label}};
}

// ---------------------------------------------------------------- Table

Table::Table(Schema schema, std::vector<double> cells, std::vector<int> labels)
    : schema_(std::move(schema)), cells_(std::move(cells)), labels_(std::move(labels)) {
  const std::size_t d = schema_.columns.size();
  if (cells_.size() != labels_.size() * d)
    fail(ErrorCode::ShapeMismatch, "table: cell count " + std::to_string(cells_.size()) +
                                       " != rows * cols (" + std::to_string(labels_.size()) +
                                       " * " + std::to_string(d) + ")");
  for (std::size_t r = 0; r < labels_.size(); ++r) {
    if (labels_[r] != 0 && labels_[r] != 1)
      fail(ErrorCode::InvalidArgument, "table: label must be 0 or 1 at row " + std::to_string(r));
    for (std::size_t c = 0; c < d; ++c) {
      const double v = cells_[r * d + c];
      if (!std::isfinite(v))
        fail(ErrorCode::NonFiniteInput, "table: non-finite cell at row " + std::to_string(r) +
                                            ", column '" + schema_.columns[c].name + "'");
      const auto& col = schema_.columns[c];
      if (col.kind == ColumnKind::Categorical) {
        if (v < 0 || v != std::floor(v) || v >= static_cast<double>(col.categories.size()))
          fail(ErrorCode::UnknownCategory, "table: invalid level index at row " +
                                               std::to_string(r) + ", column '" + col.name + "'");
      }
    }
  }
}

std::size_t Table::count_label(int label) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

std::vector<std::size_t> Table::indices_with_label(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < labels_.size(); ++r)
    if (labels_[r] == label) out.push_back(r);
  return out;
}

Table Table::select(std::span<const std::size_t> indices) const {
  const std::size_t d = cols();
  std::vector<double> cells;
  cells.reserve(indices.size() * d);
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= rows()) fail(ErrorCode::InvalidArgument, "table: row index out of range");
    auto r = row(idx);
    cells.insert(cells.end(), r.begin(), r.end());
    labels.push_back(labels_[idx]);
  }
  Table out;
  out.schema_ = schema_;
  out.cells_ = std::move(cells);
  out.labels_ = std::move(labels);
  return out;
}

Table Table::concat(const Table& a, const Table& b) {
  if (!(a.schema_ == b.schema_))
    fail(ErrorCode::SchemaMismatch, "table: cannot concatenate tables with different schemas");
  Table out = a;
  out.cells_.insert(out.cells_.end(), b.cells_.begin(), b.cells_.end());
  out.labels_.insert(out.labels_.end(), b.labels_.begin(), b.labels_.end());
  return out;
}

// ---------------------------------------------------------------- CSV

Table parse_csv_table(std::string_view text, const Schema& schema) {
  schema.validate();
  const auto records = csv::parse(text);
  if (records.empty()) fail(ErrorCode::EmptyFile, "csv: no header row");
  const auto& header = records.front();

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position.emplace(std::string(trim(header[i])), i);
  auto locate = [&](const std::string& name) {
    auto it = position.find(name);
    if (it == position.end())
      fail(ErrorCode::MissingColumn, "csv: header lacks column '" + name + "'");
    return it->second;
  };
  const std::size_t d = schema.columns.size();
  std::vector<std::size_t> source(d);
  for (std::size_t c = 0; c < d; ++c) source[c] = locate(schema.columns[c].name);
  const std::size_t label_source = locate(schema.label);

  std::vector<std::unordered_map<std::string_view, std::size_t>> level_index(d);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t k = 0; k < schema.columns[c].categories.size(); ++k)
      level_index[c].emplace(schema.columns[c].categories[k], k);

  const std::size_t n = records.size() - 1;
  if (n == 0) fail(ErrorCode::EmptyFile, "csv: header present but no data rows");
  std::vector<double> cells(n * d);
  std::vector<int> labels(n);

  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = records[r + 1];
    const std::string where_row = "row " + std::to_string(r + 1);
    if (rec.size() != header.size())
      fail(ErrorCode::Io, "csv: " + where_row + " has " + std::to_string(rec.size()) +
                              " fields, header has " + std::to_string(header.size()));
    for (std::size_t c = 0; c < d; ++c) {
      const auto& col = schema.columns[c];
      const std::string& raw = rec[source[c]];
      if (col.kind == ColumnKind::Numeric) {
        auto s = trim(raw);
        double v = 0.0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() ||
            !std::isfinite(v))
          fail(ErrorCode::UnparseableNumeric, "csv: unparseable numeric '" + raw + "' at " +
                                                  where_row + ", column '" + col.name + "'");
        cells[r * d + c] = v;
      } else {
        auto it = level_index[c].find(raw);
        if (it == level_index[c].end())
          fail(ErrorCode::UnknownCategory, "csv: unknown category '" + raw + "' at " +
                                               where_row + ", column '" + col.name + "'");
        cells[r * d + c] = static_cast<double>(it->second);
      }
    }
    const std::string& lab = rec[label_source];
    if (lab == schema.positive_label) labels[r] = 1;
    else if (lab == schema.negative_label) labels[r] = 0;
    else
      fail(ErrorCode::UnknownCategory, "csv: unknown label '" + lab + "' at " + where_row +
                                           ", column '" + schema.label + "'");
  }
  return Table(schema, std::move(cells), std::move(labels));
}

Table load_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open csv file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.empty()) fail(ErrorCode::EmptyFile, "csv: '" + path + "' is empty");
  return parse_csv_table(text, schema);
}

std::string format_csv(const Table& table) {
  const auto& schema = table.schema();
  std::string out;
  for (const auto& col : schema.columns) {
    out += csv::quote(col.name);
    out += ',';
  }
  out += csv::quote(schema.label);
  out += '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      const auto& col = schema.columns[c];
      if (col.kind == ColumnKind::Numeric) out += format_number(table.at(r, c));
      else out += csv::quote(col.categories[table.category(r, c)]);
      out += ',';
    }
    out += csv::quote(table.label(r) == 1 ? schema.positive_label : schema.negative_label);
    out += '\n';
  }
  return out;
}

void save_csv(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write csv file '" + path + "'");
  out << format_csv(table);
  if (!out) fail(ErrorCode::Io, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------- preprocessing

PreprocessParams fit_preprocess(const Table& table) {
  instrumentation::notify_fit("preprocess", table);
  if (table.empty()) fail(ErrorCode::InvalidArgument, "fit_preprocess: table is empty");
  PreprocessParams params;
  params.schema = table.schema();
  const double n = static_cast<double>(table.rows());
  for (std::size_t c = 0; c < table.cols(); ++c) {
    const auto& col = table.schema().columns[c];
    if (col.kind != ColumnKind::Numeric) continue;
    double sum = 0.0;
    for (std::size_t r = 0; r < table.rows(); ++r) sum += table.at(r, c);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      const double dev = table.at(r, c) - mean;
      ss += dev * dev;
    }
    NumericScale scale{c, mean, std::sqrt(ss / n), false};
    if (!(scale.stddev > 0.0)) {
      scale.constant = true;
      scale.stddev = 1.0;
      params.constant_columns.push_back(col.name);
      log_warning("ConstantColumn: '" + col.name + "' has zero variance; passed through unscaled");
    }
    params.numeric.push_back(scale);
  }
  return params;
}

Table apply_preprocess(const Table& table, const PreprocessParams& params, Direction direction) {
  if (!(table.schema() == params.schema))
    fail(ErrorCode::SchemaMismatch, "apply_preprocess: table schema differs from fitted schema");
  std::vector<double> cells = table.cells();
  const std::size_t d = table.cols();
  for (const auto& s : params.numeric) {
    if (s.constant) continue;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      double& v = cells[r * d + s.column];
      v = direction == Direction::Forward ? (v - s.mean) / s.stddev : v * s.stddev + s.mean;
    }
  }
  return Table(table.schema(), std::move(cells), table.labels());
}

Json PreprocessParams::to_json() const {
  Json cols = Json::array();
  for (const auto& s : numeric)
    cols.push_back({{"column", schema.columns[s.column].name},
                    {"mean", s.mean},
                    {"stddev", s.stddev},
                    {"constant", s.constant}});
  return {{"schema", schema.to_json()},
          {"numeric", cols},
          {"constant_columns", constant_columns}};
}

PreprocessParams PreprocessParams::from_json(const Json& j) {
  PreprocessParams p;
  try {
    p.schema = Schema::from_json(j.at("schema"));
    for (const auto& jc : j.at("numeric")) {
      NumericScale s;
      s.column = p.schema.index_of(jc.at("column").get<std::string>());
      s.mean = jc.at("mean").get<double>();
      s.stddev = jc.at("stddev").get<double>();
      s.constant = jc.at("constant").get<bool>();
      p.numeric.push_back(s);
    }
    p.constant_columns = j.at("constant_columns").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, std::string("preprocess params: ") + e.what());
  }
  return p;
}

// ---------------------------------------------------------------- splitting

std::vector<std::size_t> stratified_train_counts(std::span<const std::size_t> class_counts,
                                                 double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
  const std::size_t n = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
  const double raw_test = (1.0 - train_fraction) * static_cast<double>(n);
  const double nearest = std::round(raw_test);
  const auto n_test = static_cast<std::size_t>(
      std::abs(raw_test - nearest) < 1e-9 ? nearest : std::ceil(raw_test));
  const std::size_t n_train = n - n_test;

  std::vector<std::size_t> counts(class_counts.size());
  std::vector<double> remainder(class_counts.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    const double quota = static_cast<double>(class_counts[c]) * static_cast<double>(n_train) /
                         static_cast<double>(n);
    counts[c] = static_cast<std::size_t>(std::floor(quota));
    remainder[c] = quota - std::floor(quota);
    assigned += counts[c];
  }
  std::vector<std::size_t> order(class_counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return class_counts[a] < class_counts[b];
  });
  for (std::size_t i = 0; assigned < n_train; ++i, ++assigned) ++counts[order[i % order.size()]];
  return counts;
}

Split stratified_holdout(const Table& table, double train_fraction, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class = {table.indices_with_label(0),
                                                    table.indices_with_label(1)};
  for (int c = 0; c < 2; ++c)
    if (by_class[c].size() < 2)
      fail(ErrorCode::DegenerateClass, "stratified_holdout: class " + std::to_string(c) +
                                           " has fewer than 2 rows");
  const std::size_t counts_in[2] = {by_class[0].size(), by_class[1].size()};
  const auto train_counts = stratified_train_counts(counts_in, train_fraction);

  std::vector<std::size_t> train, test;
  for (int c = 0; c < 2; ++c) {
    if (train_counts[c] == 0 || train_counts[c] == counts_in[c])
      fail(ErrorCode::DegenerateClass, "stratified_holdout: class " + std::to_string(c) +
                                           " would be empty in one split");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    auto idx = by_class[c];
    rng.shuffle(idx);
    train.insert(train.end(), idx.begin(), idx.begin() + static_cast<long>(train_counts[c]));
    test.insert(test.end(), idx.begin() + static_cast<long>(train_counts[c]), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {table.select(train), table.select(test)};
}

std::vector<FoldIndices> stratified_kfold_indices(std::span<const int> labels, std::size_t k,
                                                  std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::InvalidArgument, "stratified_kfold: k must be >= 2");
  std::vector<std::size_t> fold_of(labels.size());
  std::size_t offset = 0;
  // Positives first so that their spill-over lands on the lowest folds.
  for (int c : {1, 0}) {
    std::vector<std::size_t> idx;
    for (std::size_t r = 0; r < labels.size(); ++r)
      if (labels[r] == c) idx.push_back(r);
    if (idx.size() < k)
      fail(ErrorCode::TooFewSamples, "stratified_kfold: class " + std::to_string(c) + " has " +
                                         std::to_string(idx.size()) + " rows, need >= k=" +
                                         std::to_string(k));
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(idx);
    for (std::size_t p = 0; p < idx.size(); ++p) fold_of[idx[p]] = (offset + p) % k;
    offset = (offset + idx.size()) % k;
  }
  std::vector<FoldIndices> folds(k);
  for (std::size_t r = 0; r < labels.size(); ++r)
    for (std::size_t f = 0; f < k; ++f)
      (fold_of[r] == f ? folds[f].validation : folds[f].train).push_back(r);
  return folds;
}

std::vector<Fold> stratified_kfold(const Table& table, std::size_t k, std::uint64_t seed) {
  std::vector<Fold> out;
  for (const auto& f : stratified_kfold_indices(table.labels(), k, seed))
    out.push_back({table.select(f.train), table.select(f.validation)});
  return out;
}

// ---------------------------------------------------------------- instrumentation

namespace instrumentation {
namespace {
std::mutex observer_mutex;
FitObserver observer;
}  // namespace

void set_fit_observer(FitObserver o) {
  std::lock_guard lock(observer_mutex);
  observer = std::move(o);
}

void notify_fit(std::string_view stage, const Table& table) {
  FitObserver copy;
  {
    std::lock_guard lock(observer_mutex);
    copy = observer;
  }
  if (copy) copy(stage, table);
}
}  // namespace instrumentation

}  // namespace fingan
