#include "fingan/fixtures.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "fingan/error.hpp"
#include "fingan/random.hpp"

namespace fingan::fixtures {

namespace {

Schema schema_of(std::vector<ColumnSpec> columns) {
  Schema s{std::move(columns), "target", "yes", "no"};
  s.validate();
  return s;
}

Table shuffled(const Table& t, Rng& rng) {
  std::vector<std::size_t> order(t.rows());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  return t.select(order);
}

}  // namespace

Table bimodal(std::size_t rows, std::uint64_t seed, double sigma) {
  Rng rng(seed);
  std::vector<double> cells(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double center = i % 2 == 0 ? kBimodalLow : kBimodalHigh;
    cells[i] = std::clamp(rng.normal(center, sigma), 0.0, 1.0);
  }
  return Table(schema_of({{"x", ColumnKind::Numeric, {}}}), std::move(cells), std::vector<int>(rows, 1));
}

std::vector<double> separated_mixture(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i < n / 2 ? rng.normal(0.0, 0.1) : rng.normal(10.0, 0.1);
  return v;
}

Table rare_category(std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t rare = std::max<std::size_t>(1, rows / 20);
  std::vector<double> cells;
  cells.reserve(rows * 2);
  for (std::size_t i = 0; i < rows; ++i) {
    const bool is_rare = i < rare;
    cells.push_back(is_rare ? 1.0 : 0.0);
    cells.push_back(is_rare ? rng.normal(50.0, 5.0) : rng.normal(10.0, 2.0));
  }
  Table t(schema_of({{"channel", ColumnKind::Categorical, {"common", "rare"}}, {"amount", ColumnKind::Numeric, {}}}),
          std::move(cells), std::vector<int>(rows, 1));
  return shuffled(t, rng);
}

Table blobs(std::size_t negatives, std::size_t positives, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<double> neg_segments{0.5, 0.3, 0.2};
  const std::vector<double> pos_segments{0.2, 0.6, 0.2};
  std::vector<double> cells;
  std::vector<int> labels;
  for (std::size_t i = 0; i < negatives + positives; ++i) {
    const bool pos = i >= negatives;
    const double shift = pos ? 1.5 : 0.0;
    cells.push_back(rng.normal(shift, 1.0));
    cells.push_back(rng.normal(shift, 1.0));
    cells.push_back(static_cast<double>(rng.categorical(pos ? pos_segments : neg_segments)));
    labels.push_back(pos ? 1 : 0);
  }
  Table t(schema_of({{"f1", ColumnKind::Numeric, {}},
                     {"f2", ColumnKind::Numeric, {}},
                     {"segment", ColumnKind::Categorical, {"a", "b", "c"}}}),
          std::move(cells), std::move(labels));
  return shuffled(t, rng);
}

std::vector<std::string> write_all(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create directory '" + dir + "': " + ec.message());

  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const Table& t) {
    const std::string base = (std::filesystem::path(dir) / name).string();
    save_csv(t, base + ".csv");
    std::ofstream out(base + ".schema.json");
    if (!out) fail(ErrorCode::Io, "cannot write '" + base + ".schema.json'");
    out << t.schema().to_json().dump(2) << '\n';
    written.push_back(base + ".csv");
    written.push_back(base + ".schema.json");
  };
  emit("bimodal", bimodal());
  emit("rare_category", rare_category());
  emit("blobs", blobs());

  const auto mix = separated_mixture();
  Table m(schema_of({{"x", ColumnKind::Numeric, {}}}), mix, std::vector<int>(mix.size(), 1));
  emit("mixture", m);
  return written;
}

}  // namespace fingan::fixtures
