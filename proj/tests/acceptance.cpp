// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
//
//   acceptance [--only <substring>] [--jobs N]
//              [--loan-csv F --loan-schema F] [--churn-csv F --churn-schema F]
//              [--insurance-csv F --insurance-schema F]
//
// Dataset paths may also come from FINGAN_LOAN_CSV, FINGAN_LOAN_SCHEMA and the
// matching CHURN / INSURANCE variables. Without them those criteria print SKIP.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "CLI11.hpp"
#include "fingan/classifiers.hpp"
#include "fingan/ctgan.hpp"
#include "fingan/error.hpp"
#include "fingan/evaluation.hpp"
#include "fingan/fixtures.hpp"
#include "fingan/gan.hpp"
#include "fingan/nn.hpp"
#include "fingan/ocsvm.hpp"
#include "fingan/pipeline.hpp"
#include "oracles.hpp"

using namespace fingan;
namespace fs = std::filesystem;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict = Verdict::Fail;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(detail)}; }
Outcome skip(std::string why) { return {Verdict::Skip, std::move(why)}; }

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os.precision(2);
  os << std::scientific << v;
  return os.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

nn::Matrix gaussian_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  nn::Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

Table random_mixed(std::size_t n, std::uint64_t seed) {
  Schema s;
  s.columns = {{"a", ColumnKind::Numeric, {}},
               {"seg", ColumnKind::Categorical, {"p", "q", "r", "s"}},
               {"b", ColumnKind::Numeric, {}},
               {"c", ColumnKind::Numeric, {}}};
  s.label = "target";
  s.positive_label = "yes";
  s.negative_label = "no";
  Rng rng(seed);
  std::vector<double> cells;
  std::vector<int> labels;
  for (std::size_t r = 0; r < n; ++r) {
    const double a = rng.normal(0, 2), seg = static_cast<double>(rng.uniform_index(4)), b = rng.normal(1, 3),
                 c = rng.normal(-1, 1);
    cells.insert(cells.end(), {a, seg, b, c});
    labels.push_back(a - 0.5 * b + (seg >= 2 ? 2.0 : 0.0) + rng.normal() > 1.0 ? 1 : 0);
  }
  return Table(s, std::move(cells), std::move(labels));
}

struct ScratchDir {
  fs::path path;
  ScratchDir() {
    path = fs::temp_directory_path() / ("fingan-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
    fixtures::write_all(path.string());
  }
  ~ScratchDir() { fs::remove_all(path); }
};

// ---------------------------------------------------------------- nn

// Zero-initialised biases put a fully dead ReLU layer's successors exactly on
// the kink, where no derivative exists. Nudge them off it.
nn::NetworkState off_kink(nn::NetworkState s, std::uint64_t seed) {
  Rng rng(seed ^ 0x5eedULL);
  for (auto& b : s.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.normal(0.0, 0.1);
  return s;
}

Outcome gradient_checks() {
  const nn::Activation hidden[] = {nn::Activation::relu(), nn::Activation::leaky_relu(0.2), nn::Activation::sigmoid(),
                                   nn::Activation::tanh(), nn::Activation::identity()};
  const nn::Activation outputs[] = {nn::Activation::sigmoid(), nn::Activation::softmax(), nn::Activation::tanh(),
                                    nn::Activation::identity()};
  Rng topo(2024);
  std::size_t nets = 0, params = 0, failures = 0;
  double worst = 0.0;
  for (int t = 0; t < 3; ++t) {
    const std::size_t input = 2 + topo.uniform_index(5);
    const std::size_t depth = 1 + topo.uniform_index(3);
    std::vector<std::size_t> widths;
    for (std::size_t l = 0; l < depth; ++l) widths.push_back(2 + topo.uniform_index(7));
    const std::size_t out = 2 + topo.uniform_index(3);
    for (const auto& h : hidden) {
      for (const auto& o : outputs) {
        nn::NetworkSpec spec{input, {}};
        for (auto w : widths) spec.layers.push_back({w, h, {}});
        spec.layers.push_back({out, o, {}});
        const auto seed = static_cast<std::uint64_t>(100 + nets);
        const auto res = oracle::finite_difference_check(off_kink(nn::init_network(spec, seed), seed),
                                                         gaussian_matrix(6, input, seed + 1), seed + 2);
        ++nets;
        params += res.checked;
        failures += res.failures;
        worst = std::max(worst, res.worst_relative);
      }
    }
    // Segmented head, as used by the generator: softmax block then sigmoid block.
    nn::NetworkSpec spec{input, {}};
    for (auto w : widths) spec.layers.push_back({w, nn::Activation::relu(), {}});
    spec.layers.push_back({5, {}, {{3, nn::Activation::softmax()}, {2, nn::Activation::sigmoid()}}});
    const auto res = oracle::finite_difference_check(off_kink(nn::init_network(spec, 900 + static_cast<std::uint64_t>(t)), 5),
                                                     gaussian_matrix(6, input, 77), 78);
    ++nets;
    params += res.checked;
    failures += res.failures;
    worst = std::max(worst, res.worst_relative);
  }
  return pass_if(failures == 0 && worst <= 1e-4, std::to_string(nets) + " networks, " + std::to_string(params) +
                                                      " parameters, worst relative error where |diff| > 1e-6: " + sci(worst) +
                                                      " (limit 1e-4)");
}

// ---------------------------------------------------------------- GAN toy

constexpr std::size_t kToyRows = 64;
constexpr std::size_t kToyEpochs = 3000;
constexpr std::size_t kToyBatch = 16;
constexpr std::size_t kToySamples = 2000;

struct ToyStats {
  double mean_error = 0, second_error = 0, min_occupancy = 0;
};

ToyStats toy_stats(const Table& real, const GeneratorModel& model) {
  const Table s = sample_model(model, kToySamples, 99);
  double m1 = 0, m2 = 0, r1 = 0, r2 = 0;
  std::size_t low = 0;
  const double mid = 0.5 * (fixtures::kBimodalLow + fixtures::kBimodalHigh);
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const double x = s.at(i, 0);
    m1 += x;
    m2 += x * x;
    low += x < mid;
  }
  for (std::size_t i = 0; i < real.rows(); ++i) {
    r1 += real.at(i, 0);
    r2 += real.at(i, 0) * real.at(i, 0);
  }
  const double n = static_cast<double>(s.rows()), nr = static_cast<double>(real.rows());
  const double low_share = static_cast<double>(low) / n;
  return {std::abs(m1 / n - r1 / nr), std::abs(m2 / n - r2 / nr), std::min(low_share, 1.0 - low_share)};
}

struct VanillaRun {
  GeneratorModel final_model;
  nn::NetworkState discriminator;
};

// Trained once, shared by the vanilla toy criterion and the loss invariants.
std::vector<VanillaRun>& vanilla_runs() {
  static std::vector<VanillaRun> runs = [] {
    std::vector<VanillaRun> out;
    const Table real = fixtures::bimodal(kToyRows);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      GanConfig c;
      c.mode = GanMode::Vanilla;
      c.epochs = kToyEpochs;
      c.batch_size = kToyBatch;
      c.seed = seed;
      VanillaRun run;
      run.final_model = train_gan(real, c, {}, &run.discriminator);
      out.push_back(std::move(run));
    }
    return out;
  }();
  return runs;
}

Outcome toy_verdict(const std::vector<ToyStats>& stats) {
  std::vector<double> e1, e2, occ;
  std::string per_seed;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    e1.push_back(stats[i].mean_error);
    e2.push_back(stats[i].second_error);
    occ.push_back(stats[i].min_occupancy);
    per_seed += (i ? "; " : "") + std::string("seed ") + std::to_string(i) + ": " + fmt(stats[i].mean_error) + "/" +
                fmt(stats[i].second_error) + "/" + fmt(stats[i].min_occupancy);
  }
  const double m1 = median(e1), m2 = median(e2), mo = median(occ);
  return pass_if(m1 <= 0.1 && m2 <= 0.1 && mo >= 0.2,
                 "median |d mean| " + fmt(m1) + ", |d 2nd moment| " + fmt(m2) + " (limit 0.1), smaller mode share " +
                     fmt(mo) + " (min 0.2) [" + per_seed + "]");
}

Outcome toy_vanilla() {
  const Table real = fixtures::bimodal(kToyRows);
  std::vector<ToyStats> stats;
  for (const auto& run : vanilla_runs()) stats.push_back(toy_stats(real, run.final_model));
  return toy_verdict(stats);
}

Outcome toy_wgan() {
  const Table real = fixtures::bimodal(kToyRows);
  std::vector<ToyStats> stats;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    GanConfig c;
    c.mode = GanMode::Wgan;
    c.epochs = kToyEpochs;
    c.batch_size = kToyBatch;
    c.seed = seed;
    stats.push_back(toy_stats(real, train_gan(real, c)));
  }
  return toy_verdict(stats);
}

Outcome toy_ctgan() {
  const Table real = fixtures::bimodal(kToyRows);
  std::vector<ToyStats> stats;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    CtganConfig c;
    c.epochs = kToyEpochs;
    c.batch_size = kToyBatch;
    c.seed = seed;
    stats.push_back(toy_stats(real, train_ctgan(real, c)));
  }
  return toy_verdict(stats);
}

Outcome discriminator_loss_bounded() {
  double lo = 1e300, hi = -1e300;
  for (const auto& run : vanilla_runs()) {
    const auto& d = run.final_model.history.discriminator_loss;
    for (std::size_t e = d.size() / 10; e < d.size(); ++e) {
      lo = std::min(lo, d[e]);
      hi = std::max(hi, d[e]);
    }
  }
  return pass_if(lo > 0.0 && hi < 5.0, "discriminator BCE after 10% of epochs in [" + fmt(lo) + ", " + fmt(hi) +
                                           "] over 3 seeds (bound (0, 5))");
}

// Non-saturating objective -mean log D(G(z)) on a fixed latent batch.
double generator_objective(const nn::NetworkState& g, const nn::NetworkState& d, std::size_t latent_dim) {
  const nn::Matrix z = gaussian_matrix(4096, latent_dim, 31337);
  const nn::Matrix fake = nn::forward(g, z).output();
  const nn::Matrix p = nn::forward(d, fake).output();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) sum -= std::log(std::max(p(i, 0), 1e-300));
  return sum / static_cast<double>(p.rows());
}

Outcome generator_objective_decreases() {
  const Table real = fixtures::bimodal(kToyRows);
  std::vector<double> drops;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto& run = vanilla_runs()[seed];
    GanConfig c;
    c.mode = GanMode::Vanilla;
    c.epochs = 1;
    c.batch_size = kToyBatch;
    c.seed = seed;
    const auto first = train_gan(real, c);
    const double before = generator_objective(first.generator, run.discriminator, first.latent_dim);
    const double after = generator_objective(run.final_model.generator, run.discriminator, first.latent_dim);
    drops.push_back(before - after);
    detail += (seed ? "; " : "") + std::string("seed ") + std::to_string(seed) + ": " + fmt(before) + " -> " + fmt(after);
  }
  return pass_if(median(drops) > 0.0,
                 "-mean log D(G(z)) under the final discriminator, epoch 1 vs final [" + detail + "]");
}

// ---------------------------------------------------------------- CTGAN normalizer

Outcome ctgan_two_modes() {
  const auto values = fixtures::separated_mixture();
  const auto norm = fit_mode_normalizer(values, 10, 1);
  const bool ok = norm.modes() == 2 && std::abs(norm.means[0]) <= 0.1 && std::abs(norm.means[1] - 10.0) <= 0.1;
  std::string means;
  for (double m : norm.means) means += (means.empty() ? "" : ", ") + fmt(m);
  return pass_if(ok, std::to_string(norm.modes()) + " modes at {" + means + "} (expected 2 within 0.1 of 0 and 10)");
}

Outcome ctgan_round_trip() {
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng data(seed);
    std::vector<double> v(500);
    for (auto& x : v) x = data.uniform() < 0.4 ? data.normal(-5, 1) : data.normal(3, 2.5);
    const auto norm = fit_mode_normalizer(v, 10, seed);
    Rng rng(seed + 50);
    for (double x : v) {
      const auto e = encode_continuous(x, norm, rng);
      if (std::abs(x - norm.means[e.mode]) > 4.0 * norm.stds[e.mode]) continue;
      worst = std::max(worst, std::abs(decode_continuous(e.alpha, e.onehot, norm) - x));
      ++checked;
    }
  }
  return pass_if(worst <= 1e-6, std::to_string(checked) + " values, worst |decode(encode(v)) - v| " + sci(worst) +
                                     " (limit 1e-6)");
}

Outcome ctgan_log_frequency() {
  const double expected = std::log(2.0) / (std::log(2.0) + std::log(1000.0));
  Rng rng(4242);
  std::size_t rare = 0;
  const std::size_t draws = 100000;
  for (std::size_t i = 0; i < draws; ++i) rare += sample_condvec({{999.0, 1.0}}, rng).category == 1;
  const double got = static_cast<double>(rare) / static_cast<double>(draws);
  return pass_if(std::abs(got - expected) <= 0.01,
                 "rare level drawn " + fmt(got, 4) + " of 100k vs " + fmt(expected, 4) + " (tolerance 0.01)");
}

// ---------------------------------------------------------------- OCSVM

Outcome ocsvm_feasibility() {
  double worst_sum = 0.0;
  std::size_t box_violations = 0, fits = 0;
  for (auto kind : {KernelKind::Sigmoid, KernelKind::Rbf, KernelKind::Linear}) {
    for (double nu : {0.05, 0.2, 0.5, 0.8, 1.0}) {
      const auto x = gaussian_matrix(80, 3, 5 + fits);
      const auto sol = solve_ocsvm(x, nu, kind, 1.0 / 3.0, 0.0, fits);
      ++fits;
      for (double a : sol.alpha) box_violations += a < 0.0 || a > sol.upper_bound;
      worst_sum = std::max(worst_sum, std::abs(std::accumulate(sol.alpha.begin(), sol.alpha.end(), 0.0) - 1.0));
    }
  }
  return pass_if(box_violations == 0 && worst_sum <= 1e-6,
                 std::to_string(fits) + " fits, " + std::to_string(box_violations) + " box violations, worst |sum - 1| " +
                     sci(worst_sum) + " (limit 1e-6)");
}

Outcome ocsvm_brute_force() {
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::size_t n : {4u, 6u, 9u, 12u}) {
    for (double nu : {0.15, 0.4, 0.7}) {
      for (auto kind : {KernelKind::Rbf, KernelKind::Linear}) {
        const auto x = gaussian_matrix(n, 2, n * 31 + cases);
        const auto sol = solve_ocsvm(x, nu, kind, 0.5, 0.0, 1, {1e-10, 100000, false, 16});
        nn::Matrix k(x.rows(), x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i)
          for (Eigen::Index j = 0; j < x.rows(); ++j)
            k(i, j) = kernel_value(kind, 0.5, 0.0, x.row(i).transpose(), x.row(j).transpose());
        const nn::Vector a = Eigen::Map<const nn::Vector>(sol.alpha.data(), static_cast<Eigen::Index>(n));
        const double mine = 0.5 * a.dot(k * a);
        const double ub = 1.0 / (nu * static_cast<double>(n));
        worst = std::max(worst, std::abs(mine - oracle::ocsvm_dual_objective(k, ub)));
        ++cases;
      }
    }
  }
  return pass_if(worst <= 1e-4, std::to_string(cases) + " instances with n <= 12, worst objective gap " + sci(worst) +
                                     " (limit 1e-4)");
}

Outcome ocsvm_full_support() {
  const auto x = gaussian_matrix(40, 3, 9);
  std::size_t bad = 0;
  for (auto kind : {KernelKind::Sigmoid, KernelKind::Rbf, KernelKind::Linear}) {
    const auto sol = solve_ocsvm(x, 1.0, kind, 1.0 / 3.0, 0.0, 1);
    bad += sol.support().size() != 40;
    for (double a : sol.alpha) bad += a != 1.0 / 40.0;
  }
  const Table blobs = fixtures::blobs();
  const Table kept = undersample_majority(blobs, 1.0, KernelSpec{}, 1);
  const bool all_rows = kept.cells() == blobs.with_label(0).cells();
  return pass_if(bad == 0 && all_rows, "nu = 1: alpha = 1/n for all kernels (" + std::to_string(bad) +
                                           " deviations); undersampling kept " + std::to_string(kept.rows()) + " of " +
                                           std::to_string(blobs.count_label(0)) + " majority rows");
}

Outcome ocsvm_outlier() {
  std::size_t hits = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto x = gaussian_matrix(21, 2, seed);
    x(20, 0) = 100.0;
    x(20, 1) = 100.0;
    const auto sv = solve_ocsvm(x, 0.1, KernelKind::Rbf, 0.5, 0.0, seed).support();
    hits += std::find(sv.begin(), sv.end(), std::size_t{20}) != sv.end();
  }
  return pass_if(hits == 3, "outlier at (100, 100) is a support vector in " + std::to_string(hits) + "/3 draws");
}

// ---------------------------------------------------------------- classifiers

Outcome tree_gini_oracle() {
  TreeParams p;
  p.max_depth = 1;
  p.min_samples_leaf = 1;
  p.min_samples_split = 2;
  p.max_features = MaxFeatures::All;
  std::size_t agree = 0, cases = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    nn::Matrix x = gaussian_matrix(12, 3, seed);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = std::round(x.data()[i] * 4.0) / 4.0;
    Rng rng(seed + 5000);
    std::vector<int> y(12);
    std::size_t pos = 0;
    for (auto& v : y) pos += static_cast<std::size_t>(v = rng.uniform() < 0.5);
    const auto best = oracle::best_gini_split(x, y, 1);
    if (best.feature < 0 || best.impurity >= gini(pos, 12) - 1e-12) continue;
    const auto tree = fit_tree(x, y, p, seed);
    ++cases;
    agree += tree.nodes.size() == 3 && tree.nodes[0].feature == best.feature &&
             std::abs(tree.nodes[0].threshold - best.threshold) <= 1e-12;
  }
  return pass_if(agree == cases && cases > 0,
                 std::to_string(agree) + "/" + std::to_string(cases) + " root splits equal the exhaustive-Gini choice");
}

std::pair<nn::Matrix, std::vector<int>> noisy_linear(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  nn::Matrix x(static_cast<Eigen::Index>(n), 2);
  std::vector<int> y(n);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    y[static_cast<std::size_t>(i)] = 1.5 * x(i, 0) - x(i, 1) + 0.3 + rng.normal() > 0 ? 1 : 0;
  }
  return {x, y};
}

Outcome logistic_oracle() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto [x, y] = noisy_linear(20, seed);
    LogisticParams p;
    p.epochs = 200000;
    p.tolerance = 1e-9;
    const auto m = fit_logistic(x, y, p);
    const auto o = oracle::logistic_newton(x, y, p.l2);
    worst = std::max({worst, std::abs(m.weights(0) - o(0)), std::abs(m.weights(1) - o(1)), std::abs(m.bias - o(2))});
  }
  return pass_if(worst <= 1e-3, "5 fixtures of 20 rows x 2 features, worst coefficient gap to Newton " + sci(worst) +
                                     " (limit 1e-3)");
}

Outcome svm_oracle() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto [x, y] = noisy_linear(20, seed);
    SvmParams p;
    p.epochs = 2000;
    const auto m = fit_svm_linear(x, y, p);
    const auto v = oracle::svm_dual(x, y, p.c);
    const double best = svm_objective(x, y, v.head(2), v(2), p.c);
    worst = std::max(worst, svm_objective(x, y, m.weights, m.bias, p.c) / best - 1.0);
  }
  return pass_if(worst <= 0.01, "5 fixtures of 20 rows, worst objective excess over the dual oracle " +
                                     fmt(100.0 * worst, 4) + "% (limit 1%)");
}

Outcome forest_equals_tree() {
  std::size_t equal = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Table train = random_mixed(300, seed);
    const Table probe = random_mixed(500, seed + 100);
    ForestParams p;
    p.n_estimators = 1;
    p.bootstrap = false;
    p.seed = seed;
    const auto forest = fit_forest(train, p);
    const auto tree = fit_tree(train, p.tree, forest_tree_seed(seed, 0));
    equal += predict_proba(forest, probe) == predict_proba(tree, probe) &&
             predict_labels(forest, probe) == predict_labels(tree, probe);
  }
  return pass_if(equal == 5, std::to_string(equal) + "/5 single-tree forests predict identically to the tree");
}

// ---------------------------------------------------------------- evaluation

Outcome metric_identities() {
  Rng rng(1);
  std::size_t checked = 0, broken = 0;
  for (int i = 0; i < 20000; ++i) {
    const ConfusionCounts c{rng.uniform_index(100), rng.uniform_index(100), rng.uniform_index(100),
                            rng.uniform_index(100)};
    if (c.tp + c.fn == 0 || c.tn + c.fp == 0) continue;
    const auto m = metrics(c);
    ++checked;
    broken += m.auc != (m.sensitivity + m.specificity) / 2.0 ||
              m.accuracy != static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  }
  const auto ex = metrics({8, 9, 1, 2});
  const bool example = std::abs(ex.sensitivity - 0.8) < 1e-15 && std::abs(ex.specificity - 0.9) < 1e-15 &&
                       std::abs(ex.accuracy - 0.85) < 1e-15 && std::abs(ex.auc - 0.85) < 1e-15;
  return pass_if(broken == 0 && example, std::to_string(checked) + " confusions, " + std::to_string(broken) +
                                             " identity violations; TP=8 FN=2 TN=9 FP=1 -> " + fmt(ex.sensitivity, 2) +
                                             "/" + fmt(ex.specificity, 2) + "/" + fmt(ex.accuracy, 2) + "/" +
                                             fmt(ex.auc, 2));
}

Outcome rule_fidelity() {
  std::size_t rows = 0, mismatches = 0, partition_errors = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Table train = random_mixed(400, seed);
    TreeParams p;
    p.max_depth = 2 + seed % 6;
    p.min_samples_leaf = 3;
    p.min_samples_split = 6;
    const auto tree = fit_tree(train, p, seed);
    const auto rules = extract_rules(tree);
    for (const Table* t : {&train}) {
      const Table probe = random_mixed(600, seed + 1000);
      for (const Table* data : {t, &probe}) {
        const auto x = tree.encoder.transform(*data);
        const auto labels = predict_labels(tree, *data);
        std::vector<double> row(static_cast<std::size_t>(x.cols()));
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(r, c);
          ++rows;
          mismatches += apply_rules(rules, row.data()) != labels[static_cast<std::size_t>(r)];
          partition_errors += std::count_if(rules.begin(), rules.end(),
                                            [&](const Rule& rule) { return rule.matches(row.data()); }) != 1;
        }
      }
    }
  }
  return pass_if(mismatches == 0 && partition_errors == 0,
                 std::to_string(rows) + " rows over 10 random trees: fidelity " +
                     fmt(100.0 * static_cast<double>(rows - mismatches) / static_cast<double>(rows), 2) + "%, " +
                     std::to_string(partition_errors) + " rows matched by other than exactly one rule");
}

Outcome t_test_oracle() {
  Rng rng(7);
  double worst = 0.0;
  bool symmetric = true;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(10), b(10);
    for (auto& v : a) v = rng.uniform(0.5, 0.95);
    for (auto& v : b) v = rng.uniform(0.4, 0.9);
    const double t = t_test_auc(a, b).t;
    worst = std::max(worst, std::abs(t - oracle::pooled_t(a, b)));
    symmetric &= t_test_auc(b, a).t == -t;
  }
  return pass_if(worst <= 1e-10 && symmetric,
                 "1000 random pairs, worst |t - formula| " + sci(worst) + " (limit 1e-10), symmetry " +
                     (symmetric ? "holds" : "broken"));
}

Outcome cv_purity() {
  // Unique row ids in column "a"; any fit that sees a validation id leaks.
  Table base = random_mixed(300, 77);
  std::vector<double> cells = base.cells();
  for (std::size_t r = 0; r < base.rows(); ++r) cells[r * base.cols()] = static_cast<double>(r) + 0.5;
  const Table t(base.schema(), cells, base.labels());
  const std::size_t k = 5;
  const auto idx = stratified_kfold_indices(t.labels(), k, 3);
  std::vector<std::vector<bool>> seen(k, std::vector<bool>(t.rows(), false));
  std::size_t current = 0;
  instrumentation::set_fit_observer([&](std::string_view, const Table& fitted) {
    for (std::size_t r = 0; r < fitted.rows(); ++r) {
      const double id = fitted.at(r, 0) - 0.5;
      if (id >= 0 && id < static_cast<double>(t.rows()) && id == std::floor(id)) seen[current][static_cast<std::size_t>(id)] = true;
    }
  });
  BalancerConfig cfg;
  cfg.kind = Balancer::Gan;
  cfg.ocsvm = true;
  cfg.gan.epochs = 5;
  cfg.gan.batch_size = 16;
  ClassifierSpec spec;
  spec.kind = ClassifierKind::Forest;
  spec.forest.n_estimators = 10;
  bool same_folds = true;
  cross_validate(t, k, 3, [&](const Table& train, const Table& val, std::size_t fold) {
    current = fold;
    same_folds &= train.cells() == t.select(idx[fold].train).cells();
    const auto balanced = balance(train, cfg, fold);
    return predict_labels(fit_classifier(spec, balanced.balanced, fold), val);
  });
  instrumentation::set_fit_observer({});
  std::size_t leaks = 0, train_seen = 0;
  for (std::size_t f = 0; f < k; ++f) {
    for (auto r : idx[f].validation) leaks += seen[f][r];
    for (auto r : idx[f].train) train_seen += seen[f][r];
  }
  return pass_if(leaks == 0 && same_folds && train_seen > 0,
                 std::to_string(k) + " folds with GAN+OCSVM balancing and a forest: " + std::to_string(leaks) +
                     " validation rows reached a fit (" + std::to_string(train_seen) + " training sightings)");
}

// ---------------------------------------------------------------- pipeline

Outcome audit_reconciliation() {
  const Table train = random_mixed(240, 5);
  std::size_t configs = 0, bad = 0;
  for (auto kind : {Balancer::None, Balancer::Gan, Balancer::Wgan, Balancer::Ctgan}) {
    for (bool ocsvm : {false, true}) {
      for (auto target : {OversampleTarget::parity(), OversampleTarget::exactly(123)}) {
        BalancerConfig c;
        c.kind = kind;
        c.ocsvm = ocsvm;
        c.target = target;
        c.gan.epochs = 2;
        c.gan.batch_size = 16;
        c.ctgan.epochs = 2;
        c.ctgan.batch_size = 16;
        const auto r = balance(train, c, configs);
        ++configs;
        const auto& a = r.audit;
        bad += !a.reconciles() || a.balanced_rows != r.balanced.rows() ||
               r.balanced.count_label(0) != a.majority_kept ||
               r.balanced.count_label(1) != a.minority_original + a.synthetic;
      }
    }
  }
  // Published churn arithmetic: 11049 + 802 + 1500 synthetic = 13351 rows.
  std::vector<double> cells;
  std::vector<int> labels;
  for (std::size_t i = 0; i < 11049 + 802; ++i) {
    cells.push_back(static_cast<double>(i % 97));
    labels.push_back(i < 802 ? 1 : 0);
  }
  Schema s;
  s.columns = {{"x", ColumnKind::Numeric, {}}};
  s.label = "target";
  s.positive_label = "yes";
  s.negative_label = "no";
  BalancerConfig churn;
  churn.kind = Balancer::Gan;
  churn.target = OversampleTarget::exactly(1500);
  churn.gan.epochs = 1;
  const auto r = balance(Table(s, cells, labels), churn, 1);
  const bool churn_ok = r.audit.reconciles() && r.balanced.rows() == 13351;
  return pass_if(bad == 0 && churn_ok, std::to_string(configs) + " balancer shapes, " + std::to_string(bad) +
                                           " unreconciled; churn-sized run gives " +
                                           std::to_string(r.balanced.rows()) + " rows (expected 13351)");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome report_determinism(const ScratchDir& dir) {
  ExperimentConfig c;
  c.csv = (dir.path / "blobs.csv").string();
  c.schema = (dir.path / "blobs.schema.json").string();
  c.output_dir = (dir.path / "determinism").string();
  c.split.mode = SplitMode::Kfold;
  c.balancer.kind = Balancer::Ctgan;
  c.balancer.ocsvm = true;
  c.balancer.ctgan.epochs = 20;
  ClassifierSpec dt, rf;
  dt.name = "DT";
  dt.kind = ClassifierKind::Tree;
  rf.name = "RF";
  rf.kind = ClassifierKind::Forest;
  rf.forest.n_estimators = 20;
  c.classifiers = {dt, rf};
  run_experiment(c);
  const auto first = slurp(dir.path / "determinism" / "report.json");
  const auto first_rules = slurp(dir.path / "determinism" / "rules.txt");
  run_experiment(c);
  const bool same = first == slurp(dir.path / "determinism" / "report.json");
  c.jobs = 4;
  run_experiment(c);
  const bool same_parallel = first == slurp(dir.path / "determinism" / "report.json");
  const bool same_rules = first_rules == slurp(dir.path / "determinism" / "rules.txt");
  return pass_if(!first.empty() && same && same_parallel && same_rules,
                 "CTGAN+OCSVM 10-fold run repeated, then with 4 workers: report.json " +
                     std::string(same && same_parallel ? "byte-identical" : "differs") + " (" +
                     std::to_string(first.size()) + " bytes), rules.txt " + (same_rules ? "identical" : "differs"));
}

Outcome uplift(const ScratchDir& dir) {
  const Table data = load_csv((dir.path / "blobs.csv").string(), Schema::load((dir.path / "blobs.schema.json").string()));
  std::vector<double> gains;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    ExperimentConfig c;
    c.csv = (dir.path / "blobs.csv").string();
    c.schema = (dir.path / "blobs.schema.json").string();
    c.split.mode = SplitMode::Holdout;
    c.seeds = Seeds::from_master(seed);
    ClassifierSpec rf;
    rf.name = "RF";
    rf.kind = ClassifierKind::Forest;
    c.classifiers = {rf};
    c.balancer.kind = Balancer::None;
    const double none = evaluate_experiment(c, data).classifiers[0].holdout->auc;
    c.balancer.kind = Balancer::Gan;
    const double gan = evaluate_experiment(c, data).classifiers[0].holdout->auc;
    gains.push_back(gan - none);
    detail += (seed == 1 ? "" : "; ") + std::string("seed ") + std::to_string(seed) + ": " + fmt(none) + " -> " + fmt(gan);
  }
  const double m = median(gains);
  return pass_if(m >= 0.05, "median auc gain " + fmt(m) + " (min 0.05) for gan+forest vs none+forest [" + detail + "]");
}

// ---------------------------------------------------------------- datasets

struct DatasetPaths {
  std::string csv, schema;
  bool present() const { return !csv.empty() && !schema.empty(); }
};

struct DatasetRun {
  double auc = 0.0;
  double seconds = 0.0;
  std::size_t rules = 0;
};

DatasetRun run_dataset(const DatasetPaths& paths, ClassifierKind kind, bool ocsvm, std::size_t jobs,
                       const fs::path& out) {
  ExperimentConfig c;
  c.csv = paths.csv;
  c.schema = paths.schema;
  c.output_dir = out.string();
  c.split.mode = SplitMode::Kfold;
  c.split.kfold_on_train = false;
  c.balancer.kind = Balancer::Ctgan;
  c.balancer.ocsvm = ocsvm;
  ClassifierSpec spec;
  spec.name = to_string(kind);
  spec.kind = kind;
  c.classifiers = {spec};
  c.jobs = jobs;
  const auto start = std::chrono::steady_clock::now();
  const auto report = run_experiment(c);
  DatasetRun r;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.auc = report.classifiers[0].cv->mean.auc;
  r.rules = report.classifiers[0].rules.size();
  return r;
}

struct Criterion {
  std::string id;
  std::string name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FinGAN acceptance criteria"};
  std::string only;
  std::size_t jobs = 1;
  DatasetPaths loan, churn, insurance;
  auto env = [](const char* name) {
    const char* v = std::getenv(name);
    return std::string(v ? v : "");
  };
  loan = {env("FINGAN_LOAN_CSV"), env("FINGAN_LOAN_SCHEMA")};
  churn = {env("FINGAN_CHURN_CSV"), env("FINGAN_CHURN_SCHEMA")};
  insurance = {env("FINGAN_INSURANCE_CSV"), env("FINGAN_INSURANCE_SCHEMA")};
  app.add_option("--only", only, "Run only criteria whose id or name contains this text");
  app.add_option("--jobs", jobs, "Fold workers for the dataset runs");
  app.add_option("--loan-csv", loan.csv, "Bank-marketing style loan default CSV");
  app.add_option("--loan-schema", loan.schema, "Schema for --loan-csv");
  app.add_option("--churn-csv", churn.csv, "Churn CSV");
  app.add_option("--churn-schema", churn.schema, "Schema for --churn-csv");
  app.add_option("--insurance-csv", insurance.csv, "Insurance fraud CSV");
  app.add_option("--insurance-schema", insurance.schema, "Schema for --insurance-csv");
  CLI11_PARSE(app, argc, argv);

  ScratchDir scratch;

  // Fig. 2 (no OCSVM) and Fig. 3 (with OCSVM) runs, shared by two criteria each.
  struct DatasetCase {
    std::string key;
    DatasetPaths paths;
    ClassifierKind kind;
    double min_auc;
    std::optional<DatasetRun> fig2, fig3;
  };
  std::vector<DatasetCase> datasets{{"loan", loan, ClassifierKind::Forest, 0.80, {}, {}},
                                    {"churn", churn, ClassifierKind::Tree, 0.82, {}, {}},
                                    {"insurance", insurance, ClassifierKind::Forest, 0.71, {}, {}}};
  auto fig2 = [&](DatasetCase& d) -> const DatasetRun& {
    if (!d.fig2) d.fig2 = run_dataset(d.paths, d.kind, false, jobs, scratch.path / (d.key + "-fig2"));
    return *d.fig2;
  };
  auto fig3 = [&](DatasetCase& d) -> const DatasetRun& {
    if (!d.fig3) d.fig3 = run_dataset(d.paths, d.kind, true, jobs, scratch.path / (d.key + "-fig3"));
    return *d.fig3;
  };
  const std::string missing = "dataset files not supplied";

  std::vector<Criterion> criteria{
      {"1.1", "nn gradient checks", gradient_checks},
      {"1.2a", "GAN toy fixture, vanilla", toy_vanilla},
      {"1.2b", "GAN toy fixture, WGAN", toy_wgan},
      {"1.2c", "GAN toy fixture, CTGAN", toy_ctgan},
      {"1.2d", "GAN discriminator loss bounded", discriminator_loss_bounded},
      {"1.2e", "GAN generator objective decreases", generator_objective_decreases},
      {"1.3a", "CTGAN normalizer two-mode recovery", ctgan_two_modes},
      {"1.3b", "CTGAN encode/decode round trip", ctgan_round_trip},
      {"1.3c", "CTGAN log-frequency sampling", ctgan_log_frequency},
      {"1.4a", "OCSVM dual feasibility", ocsvm_feasibility},
      {"1.4b", "OCSVM brute-force objective", ocsvm_brute_force},
      {"1.4c", "OCSVM nu = 1 full support", ocsvm_full_support},
      {"1.4d", "OCSVM outlier is a support vector", ocsvm_outlier},
      {"1.5a", "tree split vs exhaustive Gini", tree_gini_oracle},
      {"1.5b", "logistic vs Newton oracle", logistic_oracle},
      {"1.5c", "linear SVM vs dual oracle", svm_oracle},
      {"1.5d", "forest(1, no bootstrap) equals tree", forest_equals_tree},
      {"1.6a", "metric identities", metric_identities},
      {"1.6b", "rule fidelity and partition", rule_fidelity},
      {"1.6c", "t-test formula oracle", t_test_oracle},
      {"1.6d", "CV purity sentinel", cv_purity},
      {"1.7a", "balance audit reconciliation", audit_reconciliation},
      {"1.7b", "byte-identical reports", [&] { return report_determinism(scratch); }},
      {"1.7c", "toy end-to-end uplift", [&] { return uplift(scratch); }},
      {"2.1", "loan default: CTGAN + forest 10-fold auc",
       [&]() -> Outcome {
         auto& d = datasets[0];
         if (!d.paths.present()) return skip(missing);
         const auto& r = fig2(d);
         return pass_if(r.auc >= 0.80 && r.seconds <= 7200.0,
                        "auc " + fmt(r.auc) + " (min 0.80, published 0.849), " + fmt(r.seconds, 0) +
                            " s (limit 7200)");
       }},
      {"2.2", "churn: CTGAN + tree auc and rule count",
       [&]() -> Outcome {
         auto& d = datasets[1];
         if (!d.paths.present()) return skip(missing);
         const auto& r = fig2(d);
         return pass_if(r.auc >= 0.82 && r.rules <= 15, "auc " + fmt(r.auc) + " (min 0.82, published 0.872), " +
                                                            std::to_string(r.rules) + " rules (max 15, published 9)");
       }},
      {"2.3", "insurance fraud: CTGAN + forest auc",
       [&]() -> Outcome {
         auto& d = datasets[2];
         if (!d.paths.present()) return skip(missing);
         const auto& r = fig2(d);
         return pass_if(r.auc >= 0.71, "auc " + fmt(r.auc) + " (min 0.71, published 0.762)");
       }},
  };
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    criteria.push_back({"2." + std::to_string(4 + i), datasets[i].key + ": GAN+OCSVM within 0.03 of GAN alone",
                        [&, i]() -> Outcome {
                          auto& d = datasets[i];
                          if (!d.paths.present()) return skip(missing);
                          const double a = fig2(d).auc, b = fig3(d).auc;
                          return pass_if(a - b <= 0.03, "auc without OCSVM " + fmt(a) + ", with OCSVM " + fmt(b) +
                                                            " (max drop 0.03)");
                        }});
  }

  std::size_t passed = 0, failed = 0, skipped = 0;
  const auto all_start = std::chrono::steady_clock::now();
  for (const auto& c : criteria) {
    if (!only.empty() && c.id.find(only) == std::string::npos && c.name.find(only) == std::string::npos) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Verdict::Fail, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
    (o.verdict == Verdict::Pass ? passed : o.verdict == Verdict::Fail ? failed : skipped)++;
    std::printf("%s  %-5s %-45s %s [%.1fs]\n", tag, c.id.c_str(), c.name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - all_start).count();
  std::printf("acceptance: %zu passed, %zu failed, %zu skipped in %.1fs\n", passed, failed, skipped, total);
  return failed == 0 ? 0 : 1;
}
