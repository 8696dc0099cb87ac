#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fingan/error.hpp"
#include "fingan/ocsvm.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fingan;
using namespace fingan::test;

namespace {

nn::Matrix gaussian_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  nn::Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal(0.0, 1.0);
  return x;
}

nn::Matrix gram(const nn::Matrix& x, KernelKind kind, double gamma, double coef0) {
  nn::Matrix k(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j)
      k(i, j) = kernel_value(kind, gamma, coef0, x.row(i).transpose(), x.row(j).transpose());
  return k;
}

Table majority_table(std::size_t n, std::uint64_t seed) {
  Schema s = make_schema({numeric("x"), numeric("y"), categorical("kind", {"a", "b", "c"})});
  auto t = random_table(s, n, 0.0, seed);
  return t;
}

}  // namespace

TEST_CASE("kernel values") {
  nn::Vector a(2), b(2);
  a << 1.0, 2.0;
  b << 0.5, -1.0;
  CHECK(kernel_value(KernelKind::Linear, 1.0, 0.0, a, b) == doctest::Approx(-1.5));
  CHECK(kernel_value(KernelKind::Rbf, 0.5, 0.0, a, b) == doctest::Approx(std::exp(-0.5 * 9.25)));
  CHECK(kernel_value(KernelKind::Sigmoid, 0.5, 0.25, a, b) == doctest::Approx(std::tanh(-0.75 + 0.25)));
  KernelSpec k;
  CHECK(k.resolved_gamma(4) == 0.25);
  k.gamma = -1.0;
  CHECK_THROWS_AS(k.validate(), Error);
  CHECK(KernelSpec::from_json(KernelSpec{}.to_json()).to_json() == KernelSpec{}.to_json());
}

TEST_CASE("dual feasibility: box exact and sum within 1e-6") {
  for (auto kind : {KernelKind::Sigmoid, KernelKind::Rbf, KernelKind::Linear}) {
    for (double nu : {0.05, 0.3, 0.5, 0.9}) {
      const auto x = gaussian_points(60, 3, 4);
      const auto sol = solve_ocsvm(x, nu, kind, 1.0 / 3.0, 0.0, 1);
      CHECK(sol.upper_bound == doctest::Approx(1.0 / (nu * 60.0)));
      for (double a : sol.alpha) {
        CHECK(a >= 0.0);
        CHECK(a <= sol.upper_bound);
      }
      CHECK(std::abs(std::accumulate(sol.alpha.begin(), sol.alpha.end(), 0.0) - 1.0) <= 1e-6);
      CHECK_FALSE(sol.support().empty());
    }
  }
}

TEST_CASE("nu = 1 forces alpha = 1/n and full support") {
  const auto x = gaussian_points(17, 2, 2);
  const auto sol = solve_ocsvm(x, 1.0, KernelKind::Sigmoid, 0.5, 0.0, 1);
  for (double a : sol.alpha) CHECK(a == 1.0 / 17.0);
  CHECK(sol.support().size() == 17);

  Schema s = make_schema({numeric("x"), numeric("y"), categorical("kind", {"a", "b", "c"})});
  const auto t = random_table(s, 60, 0.25, 3);
  const Table kept = undersample_majority(t, 1.0, KernelSpec{}, 1);
  CHECK(row_multiset(kept) == row_multiset(t.with_label(0)));
}

TEST_CASE("objective matches a projected-gradient oracle on small instances") {
  for (std::size_t n : {5u, 8u, 12u}) {
    for (double nu : {0.2, 0.5, 0.8}) {
      for (auto kind : {KernelKind::Rbf, KernelKind::Linear}) {
        const auto x = gaussian_points(n, 2, n * 10 + static_cast<std::size_t>(nu * 10));
        const double gamma = 0.5;
        const auto sol = solve_ocsvm(x, nu, kind, gamma, 0.0, 1, {1e-10, 100000, false, 64});
        const auto k = gram(x, kind, gamma, 0.0);
        const nn::Vector a = Eigen::Map<const nn::Vector>(sol.alpha.data(), static_cast<Eigen::Index>(n));
        const double mine = 0.5 * a.dot(k * a);
        CHECK(mine == doctest::Approx(sol.objective).epsilon(1e-9));
        CHECK(std::abs(mine - oracle::ocsvm_dual_objective(k, 1.0 / (nu * static_cast<double>(n)))) <= 1e-4);
      }
    }
  }
}

TEST_CASE("far outlier is a support vector") {
  auto x = gaussian_points(21, 2, 11);
  x(20, 0) = 100.0;
  x(20, 1) = 100.0;
  const auto sol = solve_ocsvm(x, 0.1, KernelKind::Rbf, 0.5, 0.0, 1);
  const auto sv = sol.support();
  CHECK(std::find(sv.begin(), sv.end(), std::size_t{20}) != sv.end());
}

TEST_CASE("KKT conditions hold at the solution") {
  for (auto kind : {KernelKind::Rbf, KernelKind::Linear}) {
    const auto t = majority_table(120, 8);
    KernelSpec spec;
    spec.kind = kind;
    const auto model = fit_ocsvm(t, 0.3, spec, 2);
    const auto f = decision_function(model, t);
    const double ub = 1.0 / (0.3 * 120.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double a = model.alpha[i];
      if (a <= kSupportTolerance) CHECK(f[i] >= -1e-3);
      else if (a >= ub - kSupportTolerance) CHECK(f[i] <= 1e-3);
      else CHECK(std::abs(f[i]) <= 1e-3);
    }
  }
}

TEST_CASE("dual objective never increases across updates") {
  for (auto kind : {KernelKind::Sigmoid, KernelKind::Rbf}) {
    OcsvmOptions opts;
    opts.record_objective = true;
    const auto sol = solve_ocsvm(gaussian_points(80, 3, 6), 0.4, kind, 1.0 / 3.0, 0.0, 1, opts);
    REQUIRE(sol.objective_trace.size() >= 2);
    for (std::size_t i = 1; i < sol.objective_trace.size(); ++i)
      CHECK(sol.objective_trace[i] <= sol.objective_trace[i - 1] + 1e-12);
  }
}

TEST_CASE("nu-property: about half of a Gaussian cloud scores negative at nu = 0.5") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Schema s = make_schema({numeric("x"), numeric("y")});
    const auto t = random_table(s, 200, 0.0, seed);
    KernelSpec spec;
    spec.kind = KernelKind::Rbf;
    const auto model = fit_ocsvm(t, 0.5, spec, seed);
    const auto f = decision_function(model, t);
    const auto negative = std::count_if(f.begin(), f.end(), [](double v) { return v < 0.0; });
    const double frac = static_cast<double>(negative) / 200.0;
    CHECK(frac >= 0.4);
    CHECK(frac <= 0.6);
  }
}

TEST_CASE("scoring is pure and duplicates score identically") {
  const auto t = majority_table(50, 12);
  const auto model = fit_ocsvm(t, 0.5, KernelSpec{}, 1);
  const auto f = decision_function(model, t);
  Table dup(t.schema(), {t.row(7).begin(), t.row(7).end()}, {0});
  CHECK(decision_function(model, dup)[0] == f[7]);
  for (double v : f) CHECK(std::isfinite(v));
  CHECK(decision_function(OcsvmModel::from_json(model.to_json()), t) == f);
}

TEST_CASE("undersampling returns verbatim majority rows in order") {
  Schema s = make_schema({numeric("x"), numeric("y"), categorical("kind", {"a", "b", "c"})});
  const auto train = random_table(s, 150, 0.2, 5);
  OcsvmModel model;
  const Table kept = undersample_majority(train, 0.5, KernelSpec{}, 3, &model);
  const auto majority = train.with_label(0);
  CHECK(kept.count_label(1) == 0);
  CHECK(kept.rows() == model.support_indices.size());
  CHECK(kept.rows() + 1 >= static_cast<std::size_t>(std::ceil(0.5 * static_cast<double>(majority.rows()))));
  CHECK(std::is_sorted(model.support_indices.begin(), model.support_indices.end()));
  for (std::size_t i = 0; i < kept.rows(); ++i) {
    const auto src = majority.row(model.support_indices[i]);
    const auto got = kept.row(i);
    CHECK(std::equal(src.begin(), src.end(), got.begin(), got.end()));
  }
}

TEST_CASE("fitting is deterministic per seed") {
  const auto t = majority_table(80, 4);
  const auto a = fit_ocsvm(t, 0.5, KernelSpec{}, 9);
  const auto b = fit_ocsvm(t, 0.5, KernelSpec{}, 9);
  CHECK(a.alpha == b.alpha);
  CHECK(a.rho == b.rho);
}

TEST_CASE("preconditions") {
  const auto x = gaussian_points(10, 2, 1);
  CHECK_THROWS_AS(solve_ocsvm(x, 0.0, KernelKind::Rbf, 1.0, 0.0, 1), Error);
  CHECK_THROWS_AS(solve_ocsvm(x, 1.5, KernelKind::Rbf, 1.0, 0.0, 1), Error);
  CHECK_THROWS_AS(solve_ocsvm(gaussian_points(1, 2, 1), 0.5, KernelKind::Rbf, 1.0, 0.0, 1), Error);
  Schema s = make_schema({numeric("x")});
  const auto only_pos = random_table(s, 10, 1.0, 1);
  CHECK_THROWS_AS(undersample_majority(only_pos, 0.5, KernelSpec{}, 1), Error);
}

TEST_CASE("iteration cap sets the stall flag and keeps feasibility") {
  OcsvmOptions opts;
  opts.max_iterations = 3;
  const auto sol = solve_ocsvm(gaussian_points(100, 3, 2), 0.2, KernelKind::Rbf, 0.3, 0.0, 1, opts);
  CHECK(sol.stalled);
  CHECK(std::abs(std::accumulate(sol.alpha.begin(), sol.alpha.end(), 0.0) - 1.0) <= 1e-6);
  for (double a : sol.alpha) CHECK((a >= 0.0 && a <= sol.upper_bound));
}
