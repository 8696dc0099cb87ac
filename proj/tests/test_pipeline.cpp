#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "fingan/error.hpp"
#include "fingan/fixtures.hpp"
#include "fingan/pipeline.hpp"
#include "helpers.hpp"

using namespace fingan;
using namespace fingan::test;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("fingan-pipeline-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Table mixed_imbalanced(std::size_t n, std::uint64_t seed) {
  Schema s = make_schema({numeric("a"), categorical("seg", {"p", "q", "r"}), numeric("b")});
  return random_table(s, n, 0.12, seed);
}

BalancerConfig quick_balancer(Balancer kind, bool ocsvm) {
  BalancerConfig c;
  c.kind = kind;
  c.ocsvm = ocsvm;
  c.gan.epochs = 3;
  c.gan.batch_size = 16;
  c.ctgan.epochs = 3;
  c.ctgan.batch_size = 16;
  return c;
}

ExperimentConfig blobs_config(const fs::path& dir) {
  fixtures::write_all(dir.string());
  ExperimentConfig c;
  c.csv = (dir / "blobs.csv").string();
  c.schema = (dir / "blobs.schema.json").string();
  c.output_dir = (dir / "out").string();
  c.balancer = quick_balancer(Balancer::Gan, true);
  ClassifierSpec tree;
  tree.name = "DT";
  tree.kind = ClassifierKind::Tree;
  ClassifierSpec forest;
  forest.name = "RF";
  forest.kind = ClassifierKind::Forest;
  forest.forest.n_estimators = 5;
  ClassifierSpec lr;
  lr.name = "LR";
  lr.kind = ClassifierKind::Logistic;
  c.classifiers = {tree, forest, lr};
  return c;
}

struct SeedEnvGuard {
  SeedEnvGuard() { ::unsetenv("FINGAN_SEED"); }
  ~SeedEnvGuard() { ::unsetenv("FINGAN_SEED"); }
};

}  // namespace

TEST_CASE("balancer audits reconcile for every shape") {
  const auto train = mixed_imbalanced(200, 3);
  for (auto kind : {Balancer::None, Balancer::Gan, Balancer::Wgan, Balancer::Ctgan}) {
    for (bool ocsvm : {false, true}) {
      for (auto target : {OversampleTarget::parity(), OversampleTarget::exactly(37)}) {
        CAPTURE(to_string(kind));
        CAPTURE(ocsvm);
        const auto r = balance(train, quick_balancer(kind, ocsvm), 5);
        const auto& a = r.audit;
        CHECK(a.reconciles());
        CHECK(a.balanced_rows == r.balanced.rows());
        CHECK(a.majority_original == train.count_label(0));
        CHECK(a.minority_original == train.count_label(1));
        CHECK(r.balanced.count_label(0) == a.majority_kept);
        CHECK(r.balanced.count_label(1) == a.minority_original + a.synthetic);
        if (ocsvm) {
          CHECK(a.majority_kept == a.support_vectors);
          CHECK(r.ocsvm.has_value());
        } else {
          CHECK(a.majority_kept == a.majority_original);
          CHECK(a.support_vectors == 0);
        }
        if (kind == Balancer::None) {
          CHECK(a.synthetic == 0);
        } else if (target.kind == OversampleTarget::Kind::Parity) {
          CHECK(r.balanced.count_label(1) == r.balanced.count_label(0));
        }
      }
    }
  }
}

TEST_CASE("balancer with target count keeps the configured synthetic rows") {
  auto cfg = quick_balancer(Balancer::Gan, false);
  cfg.target = OversampleTarget::exactly(37);
  const auto r = balance(mixed_imbalanced(200, 4), cfg, 1);
  CHECK(r.audit.synthetic == 37);
}

TEST_CASE("nu = 1 makes the undersampling pipeline identical to plain oversampling") {
  const auto train = mixed_imbalanced(150, 8);
  auto with = quick_balancer(Balancer::Gan, true);
  with.nu = 1.0;
  const auto without = quick_balancer(Balancer::Gan, false);
  const auto a = balance(train, with, 21);
  const auto b = balance(train, without, 21);
  CHECK(a.balanced.cells() == b.balanced.cells());
  CHECK(a.balanced.labels() == b.balanced.labels());
}

TEST_CASE("balancing needs minority rows when a generator is requested") {
  Schema s = make_schema({numeric("a")});
  const auto negatives = random_table(s, 30, 0.0, 1);
  try {
    balance(negatives, quick_balancer(Balancer::Gan, false), 1);
    FAIL("expected EmptyMinority");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyMinority);
  }
}

TEST_CASE("config JSON round trip and relative path resolution") {
  TempDir dir;
  auto c = blobs_config(dir.path);
  c.split.mode = SplitMode::Kfold;
  const auto j = c.to_json();
  const auto back = ExperimentConfig::from_json(j);
  CHECK(back.to_json() == j);

  Json rel = j;
  rel["dataset"]["csv"] = "blobs.csv";
  rel["dataset"]["schema"] = "blobs.schema.json";
  const auto path = dir.path / "exp.json";
  std::ofstream(path) << rel.dump();
  const auto loaded = ExperimentConfig::load(path.string());
  CHECK(fs::equivalent(loaded.csv, dir.path / "blobs.csv"));
  CHECK_NOTHROW(loaded.validate());
}

TEST_CASE("config validation rejects bad experiments") {
  TempDir dir;
  auto c = blobs_config(dir.path);
  CHECK_NOTHROW(c.validate());

  auto missing = c;
  missing.csv = (dir.path / "nope.csv").string();
  CHECK_THROWS_AS(missing.validate(), Error);

  auto none = c;
  none.classifiers.clear();
  CHECK_THROWS_AS(none.validate(), Error);

  auto dup = c;
  dup.classifiers[1].name = "DT";
  CHECK_THROWS_AS(dup.validate(), Error);

  auto frac = c;
  frac.split.train_fraction = 1.5;
  CHECK_THROWS_AS(frac.validate(), Error);

  CHECK_THROWS_AS(balancer_from_string("smote"), Error);
  CHECK(balancer_from_string("vanilla") == Balancer::Gan);
  CHECK_THROWS_AS(ClassifierSpec::from_json(Json{{"kind", "external"}}), Error);
}

TEST_CASE("constant classifier scores 0.5 in every fold") {
  SeedEnvGuard env;
  TempDir dir;
  auto c = blobs_config(dir.path);
  c.split.mode = SplitMode::Kfold;
  c.split.kfold_on_train = false;
  c.balancer = quick_balancer(Balancer::None, false);
  ClassifierSpec constant;
  constant.name = "const";
  constant.kind = ClassifierKind::Constant;
  c.classifiers = {constant};
  const auto report = evaluate_experiment(c, load_csv(c.csv, Schema::load(c.schema)));
  REQUIRE(report.classifiers.size() == 1);
  const auto& r = report.classifiers[0];
  REQUIRE(r.folds.size() == 10);
  for (const auto& m : r.folds) {
    CHECK(m.auc == 0.5);
    CHECK(m.sensitivity == 0.0);
  }
  REQUIRE(r.cv.has_value());
  CHECK(r.cv->mean.auc == 0.5);
}

TEST_CASE("reports are byte-identical across runs and worker counts") {
  SeedEnvGuard env;
  TempDir dir;
  auto c = blobs_config(dir.path);
  c.split.mode = SplitMode::Kfold;
  c.output_dir = (dir.path / "a").string();
  const auto first = run_experiment(c);
  const auto a = slurp(dir.path / "a" / "report.json");
  const auto rules = slurp(dir.path / "a" / "rules.txt");
  CHECK_FALSE(a.empty());
  run_experiment(c);
  CHECK(a == slurp(dir.path / "a" / "report.json"));
  CHECK(rules == slurp(dir.path / "a" / "rules.txt"));
  c.jobs = 3;
  run_experiment(c);
  CHECK(a == slurp(dir.path / "a" / "report.json"));
  for (const char* f : {"report.txt", "audit.json", "timings.json", "models/generator.json", "models/ocsvm.json",
                        "models/DT.json", "models/RF.json", "models/LR.json"})
    CHECK_MESSAGE(fs::exists(dir.path / "a" / f), f);

  for (const auto& audit : first.audits) CHECK(audit.reconciles());
  CHECK(first.audits.size() == 11);  // holdout train, then ten folds
  const auto parsed = ExperimentReport::from_json(Json::parse(a));
  CHECK(parsed.to_json().dump(2) == first.to_json().dump(2));
}

TEST_CASE("FINGAN_SEED replaces the configured seeds") {
  TempDir dir;
  auto c = blobs_config(dir.path);
  c.classifiers.resize(1);
  const auto data = load_csv(c.csv, Schema::load(c.schema));
  ::setenv("FINGAN_SEED", "5", 1);
  const auto with = evaluate_experiment(c, data);
  ::unsetenv("FINGAN_SEED");
  REQUIRE(with.seed_override.has_value());
  CHECK(*with.seed_override == 5);
  CHECK(with.seeds.to_json() == Seeds::from_master(5).to_json());
  const auto without = evaluate_experiment(c, data);
  CHECK_FALSE(without.seed_override.has_value());
  ::setenv("FINGAN_SEED", "abc", 1);
  CHECK_THROWS_AS(evaluate_experiment(c, data), Error);
  ::unsetenv("FINGAN_SEED");
}

TEST_CASE("holdout purity sentinel: poisoned test rows never reach a fit") {
  SeedEnvGuard env;
  TempDir dir;
  for (auto mode : {SplitMode::Holdout, SplitMode::Kfold}) {
    auto c = blobs_config(dir.path);
    c.split.mode = mode;
    const auto data = load_csv(c.csv, Schema::load(c.schema));
    const auto split = stratified_holdout(data, c.split.train_fraction, c.seeds.split);

    // Poison every test row. The split depends only on labels, so the same
    // rows are held out again.
    std::set<std::vector<double>> held_out;
    for (std::size_t r = 0; r < split.test.rows(); ++r)
      held_out.emplace(split.test.row(r).begin(), split.test.row(r).end());
    std::vector<double> cells = data.cells();
    const std::size_t cols = data.cols();
    std::size_t poisoned_rows = 0;
    for (std::size_t r = 0; r < data.rows(); ++r) {
      if (held_out.count(std::vector<double>(data.row(r).begin(), data.row(r).end())) == 0) continue;
      cells[r * cols] = 1e6;
      ++poisoned_rows;
    }
    REQUIRE(poisoned_rows == split.test.rows());
    const Table poisoned(data.schema(), cells, data.labels());

    bool leaked = false;
    std::size_t fits = 0;
    instrumentation::set_fit_observer([&](std::string_view, const Table& t) {
      ++fits;
      for (std::size_t r = 0; r < t.rows(); ++r) leaked |= t.at(r, 0) >= 1e5;
    });
    const auto clean = evaluate_experiment(c, data);
    const auto dirty = evaluate_experiment(c, poisoned);
    instrumentation::set_fit_observer({});

    CHECK(fits > 0);
    CHECK_FALSE(leaked);
    REQUIRE(clean.audits.size() == dirty.audits.size());
    for (std::size_t i = 0; i < clean.audits.size(); ++i)
      CHECK(clean.audits[i].to_json() == dirty.audits[i].to_json());
    for (std::size_t i = 0; i < clean.classifiers.size(); ++i) {
      CHECK(clean.classifiers[i].rules == dirty.classifiers[i].rules);
      CHECK(clean.classifiers[i].fold_counts == dirty.classifiers[i].fold_counts);
    }
  }
}

TEST_CASE("report rendering") {
  SeedEnvGuard env;
  TempDir dir;
  auto c = blobs_config(dir.path);
  c.split.mode = SplitMode::Kfold;
  const auto report = evaluate_experiment(c, load_csv(c.csv, Schema::load(c.schema)));
  const auto text = report.to_text();
  for (const char* needle : {"DT", "RF", "LR", "Spec", "Sen", "AUC", "2.83"})
    CHECK_MESSAGE(text.find(needle) != std::string::npos, needle);
  CHECK(report.rules_text().find("If (") != std::string::npos);
  CHECK_FALSE(report.best.empty());
  for (const auto& r : report.classifiers) CHECK(r.t_test.has_value() == (r.name != report.best));
}
