#include "fingan/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>

#include "fingan/error.hpp"
#include "fingan/random.hpp"

namespace fingan {

namespace fs = std::filesystem;

namespace {

template <typename F>
auto guard_json(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, std::string(what) + ": " + e.what());
  }
}

std::string fixed(double v, int precision = 3) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

std::string file_stem_for(const std::string& name) {
  std::string s;
  for (char c : name) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return s.empty() ? "classifier" : s;
}

Json counts_json(const ConfusionCounts& c) { return {{"tp", c.tp}, {"fn", c.fn}, {"tn", c.tn}, {"fp", c.fp}}; }

Json t_json(double t) {
  if (std::isinf(t)) return t > 0 ? "+inf" : "-inf";
  return t;
}

Json tree_params_json(const TreeParams& p) {
  return {{"max_depth", p.max_depth},
          {"min_samples_leaf", p.min_samples_leaf},
          {"min_samples_split", p.min_samples_split},
          {"max_features", p.max_features == MaxFeatures::Log2 ? "log2" : "all"}};
}

TreeParams tree_params_from(const Json& j) {
  TreeParams p;
  p.max_depth = j.value("max_depth", p.max_depth);
  p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
  p.min_samples_split = j.value("min_samples_split", p.min_samples_split);
  if (j.contains("max_features")) {
    const auto m = j.at("max_features").get<std::string>();
    if (m == "log2") p.max_features = MaxFeatures::Log2;
    else if (m == "all") p.max_features = MaxFeatures::All;
    else fail(ErrorCode::InvalidArgument, "classifier: unknown max_features '" + m + "'");
  }
  p.validate();
  return p;
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* v = std::getenv("FINGAN_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (errno != 0 || end == v || *end != '\0' || *v == '-')
    fail(ErrorCode::InvalidArgument, std::string("FINGAN_SEED is not an unsigned integer: '") + v + "'");
  return static_cast<std::uint64_t>(s);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

// ---------------------------------------------------------------- balancer

const char* to_string(Balancer b) {
  switch (b) {
    case Balancer::None: return "none";
    case Balancer::Gan: return "gan";
    case Balancer::Wgan: return "wgan";
    case Balancer::Ctgan: return "ctgan";
  }
  return "none";
}

Balancer balancer_from_string(const std::string& s) {
  for (auto b : {Balancer::None, Balancer::Gan, Balancer::Wgan, Balancer::Ctgan})
    if (s == to_string(b)) return b;
  if (s == "vanilla") return Balancer::Gan;
  fail(ErrorCode::InvalidArgument, "unknown balancer '" + s + "'");
}

void BalancerConfig::validate() const {
  if (!(nu > 0.0 && nu <= 1.0)) fail(ErrorCode::InvalidArgument, "balancer: nu must lie in (0, 1]");
  kernel.validate();
  gan.validate();
  ctgan.validate();
}

Json BalancerConfig::to_json() const {
  Json g = gan.to_json();
  g.erase("seed");
  g.erase("mode");
  Json c = ctgan.to_json();
  c.erase("seed");
  Json target_json = target.kind == OversampleTarget::Kind::Parity ? Json("parity") : Json(target.count);
  return {{"kind", to_string(kind)},
          {"ocsvm", ocsvm},
          {"kernel", kernel.to_json()},
          {"nu", nu},
          {"target", target_json},
          {"gan", g},
          {"ctgan", c},
          {"ocsvm_options",
           {{"tolerance", ocsvm_options.tolerance},
            {"max_iterations", ocsvm_options.max_iterations},
            {"cache_megabytes", ocsvm_options.cache_megabytes}}}};
}

BalancerConfig BalancerConfig::from_json(const Json& j) {
  BalancerConfig b;
  guard_json("balancer config", [&] {
    if (j.contains("kind")) b.kind = balancer_from_string(j.at("kind").get<std::string>());
    b.ocsvm = j.value("ocsvm", b.ocsvm);
    if (j.contains("kernel")) b.kernel = KernelSpec::from_json(j.at("kernel"));
    b.nu = j.value("nu", b.nu);
    if (j.contains("target")) {
      const auto& t = j.at("target");
      if (t.is_string()) {
        if (t.get<std::string>() != "parity")
          fail(ErrorCode::InvalidArgument, "balancer: target must be \"parity\" or a row count");
        b.target = OversampleTarget::parity();
      } else {
        b.target = OversampleTarget::exactly(t.get<std::size_t>());
      }
    }
    if (j.contains("gan")) b.gan = GanConfig::from_json(j.at("gan"));
    if (j.contains("ctgan")) b.ctgan = CtganConfig::from_json(j.at("ctgan"));
    if (j.contains("ocsvm_options")) {
      const auto& o = j.at("ocsvm_options");
      b.ocsvm_options.tolerance = o.value("tolerance", b.ocsvm_options.tolerance);
      b.ocsvm_options.max_iterations = o.value("max_iterations", b.ocsvm_options.max_iterations);
      b.ocsvm_options.cache_megabytes = o.value("cache_megabytes", b.ocsvm_options.cache_megabytes);
    }
    return 0;
  });
  b.validate();
  return b;
}

Json BalanceAudit::to_json() const {
  return {{"majority_original", majority_original},
          {"minority_original", minority_original},
          {"majority_kept", majority_kept},
          {"support_vectors", support_vectors},
          {"synthetic", synthetic},
          {"balanced_rows", balanced_rows},
          {"reconciles", reconciles()}};
}

BalanceResult balance(const Table& train, const BalancerConfig& config, std::uint64_t seed) {
  config.validate();
  const auto majority = train.indices_with_label(0);
  const auto minority = train.indices_with_label(1);

  BalanceResult result;
  result.audit.majority_original = majority.size();
  result.audit.minority_original = minority.size();

  Table reduced = train;
  if (config.ocsvm) {
    OcsvmModel model;
    undersample_majority(train, config.nu, config.kernel, derive_seed(seed, 1), &model, config.ocsvm_options);
    std::vector<std::size_t> keep = minority;
    for (std::size_t sv : model.support_indices) keep.push_back(majority[sv]);
    std::sort(keep.begin(), keep.end());
    reduced = train.select(keep);
    result.audit.support_vectors = model.support_indices.size();
    result.ocsvm = std::move(model);
  }
  result.audit.majority_kept = reduced.count_label(0);
  const std::size_t reduced_rows = reduced.rows();

  if (config.kind == Balancer::None) {
    result.balanced = std::move(reduced);
  } else {
    if (minority.empty()) fail(ErrorCode::EmptyMinority, "balance: the training split has no minority rows");
    const Table minority_rows = reduced.with_label(1);
    GeneratorModel generator;
    if (config.kind == Balancer::Ctgan) {
      CtganConfig c = config.ctgan;
      c.seed = derive_seed(seed, 0);
      generator = train_ctgan(minority_rows, c);
    } else {
      GanConfig g = config.gan;
      g.mode = config.kind == Balancer::Wgan ? GanMode::Wgan : GanMode::Vanilla;
      g.seed = derive_seed(seed, 0);
      generator = train_gan(minority_rows, g);
    }
    result.balanced = balance_by_oversampling(reduced, generator, config.target, derive_seed(seed, 2));
    result.generator = std::move(generator);
  }
  result.audit.balanced_rows = result.balanced.rows();
  result.audit.synthetic = result.balanced.rows() - reduced_rows;
  if (!result.audit.reconciles()) fail(ErrorCode::InvalidArgument, "balance: audit counts do not reconcile");
  return result;
}

// ---------------------------------------------------------------- classifiers

Json ClassifierSpec::to_json() const {
  Json j{{"name", name.empty() ? std::string(to_string(kind)) : name}, {"kind", to_string(kind)}};
  switch (kind) {
    case ClassifierKind::Logistic:
      j.update({{"l2", logistic.l2},
                {"epochs", logistic.epochs},
                {"learning_rate", logistic.learning_rate},
                {"tolerance", logistic.tolerance}});
      break;
    case ClassifierKind::Tree: j.update(tree_params_json(tree)); break;
    case ClassifierKind::Forest:
      j.update(tree_params_json(forest.tree));
      j.update({{"n_estimators", forest.n_estimators}, {"bootstrap", forest.bootstrap}});
      break;
    case ClassifierKind::Mlp:
      j.update({{"hidden", mlp.hidden},
                {"learning_rate", mlp.adam.learning_rate},
                {"beta1", mlp.adam.beta1},
                {"beta2", mlp.adam.beta2},
                {"epsilon", mlp.adam.epsilon},
                {"epochs", mlp.epochs},
                {"batch_size", mlp.batch_size}});
      break;
    case ClassifierKind::SvmLinear: j.update({{"c", svm.c}, {"epochs", svm.epochs}}); break;
    case ClassifierKind::Constant:
    case ClassifierKind::External: break;
  }
  return j;
}

ClassifierSpec ClassifierSpec::from_json(const Json& j) {
  ClassifierSpec s;
  guard_json("classifier spec", [&] {
    s.kind = classifier_kind_from_string(j.at("kind").get<std::string>());
    if (s.kind == ClassifierKind::External)
      fail(ErrorCode::InvalidArgument, "classifier: external classifiers cannot be configured from JSON");
    s.name = j.value("name", std::string(to_string(s.kind)));
    switch (s.kind) {
      case ClassifierKind::Logistic:
        s.logistic.l2 = j.value("l2", s.logistic.l2);
        s.logistic.epochs = j.value("epochs", s.logistic.epochs);
        s.logistic.learning_rate = j.value("learning_rate", s.logistic.learning_rate);
        s.logistic.tolerance = j.value("tolerance", s.logistic.tolerance);
        break;
      case ClassifierKind::Tree: s.tree = tree_params_from(j); break;
      case ClassifierKind::Forest:
        s.forest.tree = tree_params_from(j);
        s.forest.n_estimators = j.value("n_estimators", s.forest.n_estimators);
        s.forest.bootstrap = j.value("bootstrap", s.forest.bootstrap);
        if (s.forest.n_estimators == 0) fail(ErrorCode::InvalidArgument, "forest: n_estimators must be >= 1");
        break;
      case ClassifierKind::Mlp:
        s.mlp.hidden = j.value("hidden", s.mlp.hidden);
        s.mlp.adam.learning_rate = j.value("learning_rate", s.mlp.adam.learning_rate);
        s.mlp.adam.beta1 = j.value("beta1", s.mlp.adam.beta1);
        s.mlp.adam.beta2 = j.value("beta2", s.mlp.adam.beta2);
        s.mlp.adam.epsilon = j.value("epsilon", s.mlp.adam.epsilon);
        s.mlp.epochs = j.value("epochs", s.mlp.epochs);
        s.mlp.batch_size = j.value("batch_size", s.mlp.batch_size);
        break;
      case ClassifierKind::SvmLinear:
        s.svm.c = j.value("c", s.svm.c);
        s.svm.epochs = j.value("epochs", s.svm.epochs);
        if (!(s.svm.c > 0.0)) fail(ErrorCode::InvalidArgument, "svm: c must be positive");
        break;
      case ClassifierKind::Constant:
      case ClassifierKind::External: break;
    }
    return 0;
  });
  return s;
}

FittedClassifier fit_classifier(const ClassifierSpec& spec, const Table& train, std::uint64_t seed) {
  switch (spec.kind) {
    case ClassifierKind::Logistic: return fit_logistic(train, spec.logistic);
    case ClassifierKind::Tree: return fit_tree(train, spec.tree, seed);
    case ClassifierKind::Forest: {
      ForestParams p = spec.forest;
      p.seed = seed;
      return fit_forest(train, p);
    }
    case ClassifierKind::Mlp: {
      MlpClfParams p = spec.mlp;
      p.seed = seed;
      return fit_mlp_classifier(train, p);
    }
    case ClassifierKind::SvmLinear: {
      SvmParams p = spec.svm;
      p.seed = seed;
      return fit_svm_linear(train, p);
    }
    case ClassifierKind::Constant: return fit_constant(train);
    case ClassifierKind::External: break;
  }
  fail(ErrorCode::InvalidArgument, "fit_classifier: external classifiers need fit_external");
}

// ---------------------------------------------------------------- config

Json SplitConfig::to_json() const {
  return {{"mode", mode == SplitMode::Holdout ? "holdout" : "kfold"},
          {"train_fraction", train_fraction},
          {"folds", folds},
          {"kfold_on_train", kfold_on_train}};
}

SplitConfig SplitConfig::from_json(const Json& j) {
  SplitConfig s;
  guard_json("split config", [&] {
    if (j.contains("mode")) {
      const auto m = j.at("mode").get<std::string>();
      if (m == "holdout") s.mode = SplitMode::Holdout;
      else if (m == "kfold") s.mode = SplitMode::Kfold;
      else fail(ErrorCode::InvalidArgument, "split: unknown mode '" + m + "'");
    }
    s.train_fraction = j.value("train_fraction", s.train_fraction);
    s.folds = j.value("folds", s.folds);
    s.kfold_on_train = j.value("kfold_on_train", s.kfold_on_train);
    return 0;
  });
  return s;
}

Json Seeds::to_json() const { return {{"split", split}, {"balance", balance}, {"classifier", classifier}}; }

Seeds Seeds::from_json(const Json& j) {
  Seeds s;
  guard_json("seeds", [&] {
    s.split = j.value("split", s.split);
    s.balance = j.value("balance", s.balance);
    s.classifier = j.value("classifier", s.classifier);
    return 0;
  });
  return s;
}

Seeds Seeds::from_master(std::uint64_t seed) { return {derive_seed(seed, 0), derive_seed(seed, 1), derive_seed(seed, 2)}; }

void ExperimentConfig::validate() const {
  for (const auto& [what, path] : {std::pair{"dataset csv", csv}, std::pair{"schema", schema}}) {
    if (path.empty()) fail(ErrorCode::InvalidArgument, std::string("experiment: no ") + what + " path");
    if (!fs::exists(path)) fail(ErrorCode::Io, std::string("experiment: ") + what + " '" + path + "' does not exist");
  }
  if (classifiers.empty()) fail(ErrorCode::InvalidArgument, "experiment: at least one classifier is required");
  std::set<std::string> names;
  for (const auto& c : classifiers) {
    const std::string n = c.name.empty() ? to_string(c.kind) : c.name;
    if (!names.insert(n).second) fail(ErrorCode::InvalidArgument, "experiment: duplicate classifier name '" + n + "'");
  }
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0))
    fail(ErrorCode::InvalidArgument, "experiment: train_fraction must lie in (0, 1)");
  if (split.folds < 2) fail(ErrorCode::InvalidArgument, "experiment: folds must be >= 2");
  if (!(threshold > 0.0 && threshold <= 1.0)) fail(ErrorCode::InvalidArgument, "experiment: threshold must lie in (0, 1]");
  if (jobs == 0) fail(ErrorCode::InvalidArgument, "experiment: jobs must be >= 1");
  balancer.validate();
}

Json ExperimentConfig::to_json() const {
  Json cls = Json::array();
  for (const auto& c : classifiers) cls.push_back(c.to_json());
  return {{"dataset", {{"csv", csv}, {"schema", schema}}},
          {"output_dir", output_dir},
          {"split", split.to_json()},
          {"balancer", balancer.to_json()},
          {"classifiers", cls},
          {"seeds", seeds.to_json()},
          {"threshold", threshold}};
}

ExperimentConfig ExperimentConfig::from_json(const Json& j, const std::string& base_dir) {
  ExperimentConfig c;
  auto resolve = [&](const std::string& p) {
    if (p.empty() || base_dir.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base_dir) / p).lexically_normal().string();
  };
  guard_json("experiment config", [&] {
    const auto& d = j.at("dataset");
    c.csv = resolve(d.at("csv").get<std::string>());
    c.schema = resolve(d.at("schema").get<std::string>());
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("split")) c.split = SplitConfig::from_json(j.at("split"));
    if (j.contains("balancer")) c.balancer = BalancerConfig::from_json(j.at("balancer"));
    for (const auto& cj : j.at("classifiers")) c.classifiers.push_back(ClassifierSpec::from_json(cj));
    if (j.contains("seeds")) c.seeds = Seeds::from_json(j.at("seeds"));
    c.threshold = j.value("threshold", c.threshold);
    c.jobs = j.value("jobs", c.jobs);
    return 0;
  });
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, "config '" + path + "': " + e.what());
  }
  return from_json(j, fs::path(path).parent_path().string());
}

// ---------------------------------------------------------------- experiment

namespace {

struct Artifacts {
  std::optional<GeneratorModel> generator;
  std::optional<OcsvmModel> ocsvm;
  std::vector<std::optional<FittedClassifier>> classifiers;
  std::string source;  // "holdout" or "fold 1"
};

std::string name_of(const ClassifierSpec& s) { return s.name.empty() ? to_string(s.kind) : s.name; }

std::uint64_t classifier_seed(const Seeds& seeds, std::size_t stage, std::size_t index) {
  return derive_seed(derive_seed(seeds.classifier, stage), index);
}

ExperimentReport execute(const ExperimentConfig& config, const Table& data, Artifacts* artifacts) {
  const Stopwatch total;
  ExperimentReport report;
  report.seeds = config.seeds;
  if (const auto s = seed_from_environment()) {
    report.seed_override = s;
    report.seeds = Seeds::from_master(*s);
  }
  const Seeds& seeds = report.seeds;
  report.config = config.to_json();
  report.config["seeds"] = seeds.to_json();

  const std::size_t n_cls = config.classifiers.size();
  report.classifiers.resize(n_cls);
  for (std::size_t i = 0; i < n_cls; ++i) {
    report.classifiers[i].name = name_of(config.classifiers[i]);
    report.classifiers[i].kind = config.classifiers[i].kind;
  }
  std::vector<std::optional<FittedClassifier>> rule_models(n_cls);

  const bool holdout = config.split.mode == SplitMode::Holdout || config.split.kfold_on_train;
  const bool kfold = config.split.mode == SplitMode::Kfold;

  std::optional<Split> split;
  if (holdout) split = stratified_holdout(data, config.split.train_fraction, seeds.split);

  if (holdout) {
    const Stopwatch sw;
    auto balanced = balance(split->train, config.balancer, derive_seed(seeds.balance, 0));
    report.audits.push_back(balanced.audit);
    report.timings.emplace_back("balance_holdout", sw.seconds());
    if (artifacts) {
      artifacts->generator = balanced.generator;
      artifacts->ocsvm = balanced.ocsvm;
      artifacts->classifiers.assign(n_cls, std::nullopt);
      artifacts->source = "holdout";
    }
    for (std::size_t i = 0; i < n_cls; ++i) {
      const Stopwatch fit_sw;
      auto model = fit_classifier(config.classifiers[i], balanced.balanced, classifier_seed(seeds, 0, i));
      report.timings.emplace_back("fit_holdout_" + report.classifiers[i].name, fit_sw.seconds());
      auto& r = report.classifiers[i];
      const auto predicted = predict_labels(model, split->test, config.threshold);
      r.holdout_counts = confusion(split->test.labels(), predicted);
      r.holdout = metrics(*r.holdout_counts);
      const auto scores = predict_proba(model, split->test);
      r.holdout_roc_auc = roc_auc(split->test.labels(), scores);
      rule_models[i] = model;
      if (artifacts) artifacts->classifiers[i] = std::move(model);
    }
  }

  if (kfold) {
    const Stopwatch sw;
    const Table& cv_table = config.split.kfold_on_train ? split->train : data;
    std::vector<BalanceAudit> fold_audits(config.split.folds);
    std::mutex capture;
    const bool capture_fold = !holdout;
    auto results = cross_validate_many(
        cv_table, config.split.folds, derive_seed(seeds.split, 1), n_cls,
        [&](const Table& train, const Table& validation, std::size_t fold) {
          auto balanced = balance(train, config.balancer, derive_seed(seeds.balance, fold + 1));
          fold_audits[fold] = balanced.audit;
          std::vector<std::vector<int>> out;
          for (std::size_t i = 0; i < n_cls; ++i) {
            auto model = fit_classifier(config.classifiers[i], balanced.balanced, classifier_seed(seeds, fold + 1, i));
            out.push_back(predict_labels(model, validation, config.threshold));
            if (capture_fold && fold == 0) {
              std::lock_guard lock(capture);
              rule_models[i] = model;
              if (artifacts) {
                if (artifacts->classifiers.size() != n_cls) artifacts->classifiers.assign(n_cls, std::nullopt);
                artifacts->classifiers[i] = std::move(model);
              }
            }
          }
          if (capture_fold && fold == 0 && artifacts) {
            std::lock_guard lock(capture);
            artifacts->generator = std::move(balanced.generator);
            artifacts->ocsvm = std::move(balanced.ocsvm);
            artifacts->source = "fold 1";
          }
          return out;
        },
        config.jobs);
    report.timings.emplace_back("cross_validation", sw.seconds());
    report.audits.insert(report.audits.end(), fold_audits.begin(), fold_audits.end());
    for (std::size_t i = 0; i < n_cls; ++i) {
      auto& r = report.classifiers[i];
      r.folds = results[i].folds;
      r.fold_counts = results[i].counts;
      r.cv = results[i].summary;
    }
  }

  // Best classifier by validation AUC when folds ran, otherwise by test AUC.
  std::size_t best = 0;
  auto score = [&](const ClassifierResult& r) { return r.cv ? r.cv->mean.auc : r.holdout->auc; };
  for (std::size_t i = 1; i < n_cls; ++i)
    if (score(report.classifiers[i]) > score(report.classifiers[best])) best = i;
  report.best = report.classifiers[best].name;

  if (kfold && config.split.folds == kTTestSampleSize) {
    auto aucs = [](const ClassifierResult& r) {
      std::vector<double> v;
      for (const auto& m : r.folds) v.push_back(m.auc);
      return v;
    };
    const auto best_aucs = aucs(report.classifiers[best]);
    for (std::size_t i = 0; i < n_cls; ++i)
      if (i != best) report.classifiers[i].t_test = t_test_auc(best_aucs, aucs(report.classifiers[i]));
  }

  for (std::size_t i = 0; i < n_cls; ++i) {
    if (!rule_models[i] || rule_models[i]->kind != ClassifierKind::Tree) continue;
    for (const auto& rule : extract_rules(*rule_models[i]))
      report.classifiers[i].rules.push_back(format_rule(rule, data.schema()));
  }

  report.notes.push_back("auc is the balanced accuracy (sensitivity + specificity) / 2; roc_auc is the area under the ROC curve");
  report.notes.push_back(
      "standardization, OCSVM and generator fits use only the training rows of each split or fold, after splitting");
  if (kfold) {
    report.notes.push_back(config.split.kfold_on_train ? "cross-validation runs on the holdout training split"
                                                       : "cross-validation runs on the whole dataset");
    if (config.split.folds == kTTestSampleSize)
      report.notes.push_back(
          "t-test: two-sample, pooled variance, two-tailed, 18 degrees of freedom, against the best classifier; "
          "critical value 2.83 as published (the exact 1% two-tailed value is 2.878)");
    else
      report.notes.push_back("t-test omitted: it needs exactly 10 folds");
  }
  if (config.balancer.ocsvm && config.balancer.target.kind == OversampleTarget::Kind::Parity)
    report.notes.push_back("parity target counts the majority rows kept after undersampling");
  report.notes.push_back(std::string("rules come from the ") + (holdout ? "holdout" : "fold 1") + " tree");

  report.timings.emplace_back("total", total.seconds());
  return report;
}

}  // namespace

ExperimentReport evaluate_experiment(const ExperimentConfig& config, const Table& data) {
  config.balancer.validate();
  if (config.classifiers.empty()) fail(ErrorCode::InvalidArgument, "experiment: at least one classifier is required");
  return execute(config, data, nullptr);
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Schema schema = Schema::load(config.schema);
  const Table data = load_csv(config.csv, schema);
  Artifacts artifacts;
  auto report = execute(config, data, &artifacts);

  write_report(report, config.output_dir);
  const fs::path models = fs::path(config.output_dir) / "models";
  std::error_code ec;
  fs::create_directories(models, ec);
  if (ec) fail(ErrorCode::Io, "cannot create '" + models.string() + "': " + ec.message());
  if (artifacts.generator) artifacts.generator->save((models / "generator.json").string());
  if (artifacts.ocsvm) artifacts.ocsvm->save((models / "ocsvm.json").string());
  for (std::size_t i = 0; i < artifacts.classifiers.size(); ++i)
    if (artifacts.classifiers[i])
      artifacts.classifiers[i]->save((models / (file_stem_for(report.classifiers[i].name) + ".json")).string());
  return report;
}

// ---------------------------------------------------------------- report

Json ExperimentReport::to_json() const {
  Json cls = Json::array();
  for (const auto& r : classifiers) {
    Json c{{"name", r.name}, {"kind", to_string(r.kind)}};
    if (r.cv) {
      Json folds_json = Json::array();
      for (std::size_t f = 0; f < r.folds.size(); ++f) {
        Json fj = r.folds[f].to_json();
        fj["counts"] = counts_json(r.fold_counts[f]);
        folds_json.push_back(fj);
      }
      c["cv"] = {{"folds", folds_json}, {"mean", r.cv->mean.to_json()}, {"std", r.cv->stddev.to_json()}};
    }
    if (r.holdout) {
      Json h = r.holdout->to_json();
      h["counts"] = counts_json(*r.holdout_counts);
      h["roc_auc"] = *r.holdout_roc_auc;
      c["holdout"] = h;
    }
    if (r.t_test)
      c["t_test"] = {{"against", best}, {"t", t_json(r.t_test->t)}, {"significant", r.t_test->significant},
                     {"degrees_of_freedom", r.t_test->degrees_of_freedom}, {"critical_value", kCriticalT}};
    if (!r.rules.empty()) c["rules"] = r.rules;
    cls.push_back(c);
  }
  Json audits_json = Json::array();
  for (const auto& a : audits) audits_json.push_back(a.to_json());
  Json j{{"format", "fingan.report"},
         {"version", 1},
         {"library_version", kLibraryVersion},
         {"config", config},
         {"seeds", seeds.to_json()},
         {"audit", audits_json},
         {"classifiers", cls},
         {"best", best},
         {"notes", notes}};
  j["seed_override"] = seed_override ? Json(*seed_override) : Json(nullptr);
  return j;
}

ExperimentReport ExperimentReport::from_json(const Json& j) {
  auto metric = [](const Json& m) {
    return MetricSet{m.at("sensitivity").get<double>(), m.at("specificity").get<double>(),
                     m.at("accuracy").get<double>(), m.at("auc").get<double>()};
  };
  auto counts = [](const Json& c) {
    return ConfusionCounts{c.at("tp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
                           c.at("fp").get<std::size_t>(), c.at("fn").get<std::size_t>()};
  };
  ExperimentReport r;
  guard_json("report", [&] {
    if (j.value("format", std::string()) != "fingan.report")
      fail(ErrorCode::Serialization, "report: not a fingan report");
    r.config = j.at("config");
    r.seeds = Seeds::from_json(j.at("seeds"));
    if (!j.at("seed_override").is_null()) r.seed_override = j.at("seed_override").get<std::uint64_t>();
    for (const auto& a : j.at("audit")) {
      BalanceAudit b;
      b.majority_original = a.at("majority_original").get<std::size_t>();
      b.minority_original = a.at("minority_original").get<std::size_t>();
      b.majority_kept = a.at("majority_kept").get<std::size_t>();
      b.support_vectors = a.at("support_vectors").get<std::size_t>();
      b.synthetic = a.at("synthetic").get<std::size_t>();
      b.balanced_rows = a.at("balanced_rows").get<std::size_t>();
      r.audits.push_back(b);
    }
    for (const auto& c : j.at("classifiers")) {
      ClassifierResult cr;
      cr.name = c.at("name").get<std::string>();
      cr.kind = classifier_kind_from_string(c.at("kind").get<std::string>());
      if (c.contains("cv")) {
        for (const auto& f : c.at("cv").at("folds")) {
          cr.folds.push_back(metric(f));
          cr.fold_counts.push_back(counts(f.at("counts")));
        }
        cr.cv = MetricSummary{metric(c.at("cv").at("mean")), metric(c.at("cv").at("std"))};
      }
      if (c.contains("holdout")) {
        const auto& h = c.at("holdout");
        cr.holdout = metric(h);
        cr.holdout_counts = counts(h.at("counts"));
        cr.holdout_roc_auc = h.at("roc_auc").get<double>();
      }
      if (c.contains("t_test")) {
        const auto& t = c.at("t_test");
        TTestResult tr;
        if (t.at("t").is_string())
          tr.t = (t.at("t").get<std::string>() == "-inf" ? -1.0 : 1.0) * std::numeric_limits<double>::infinity();
        else
          tr.t = t.at("t").get<double>();
        tr.significant = t.at("significant").get<bool>();
        tr.degrees_of_freedom = t.at("degrees_of_freedom").get<int>();
        cr.t_test = tr;
      }
      if (c.contains("rules")) cr.rules = c.at("rules").get<std::vector<std::string>>();
      r.classifiers.push_back(std::move(cr));
    }
    r.best = j.at("best").get<std::string>();
    r.notes = j.at("notes").get<std::vector<std::string>>();
    return 0;
  });
  return r;
}

std::string ExperimentReport::to_text() const {
  std::ostringstream os;
  os << "FinGAN experiment report (library " << kLibraryVersion << ")\n";
  const auto& b = config.at("balancer");
  os << "Dataset: " << config.at("dataset").at("csv").get<std::string>() << "\n";
  os << "Balancer: " << b.at("kind").get<std::string>();
  if (b.at("ocsvm").get<bool>()) os << " + OCSVM (nu " << fixed(b.at("nu").get<double>(), 3) << ")";
  os << "\n";
  if (!audits.empty()) {
    const auto& a = audits.front();
    os << "Balancing (first split): majority " << a.majority_original << " -> " << a.majority_kept << ", minority "
       << a.minority_original << ", synthetic " << a.synthetic << ", total " << a.balanced_rows << "\n";
  }

  std::size_t width = 10;
  for (const auto& r : classifiers) width = std::max(width, r.name.size() + 2);
  auto header = [&](const std::string& last) {
    os << std::left << std::setw(static_cast<int>(width)) << "Classifier" << std::right << std::setw(8) << "Spec"
       << std::setw(8) << "Sen" << std::setw(8) << "AUC" << std::setw(10) << last << "\n";
  };
  auto row = [&](const std::string& name, const MetricSet& m, const std::string& last) {
    os << std::left << std::setw(static_cast<int>(width)) << name << std::right << std::setw(8) << fixed(m.specificity)
       << std::setw(8) << fixed(m.sensitivity) << std::setw(8) << fixed(m.auc) << std::setw(10) << last << "\n";
  };

  if (!classifiers.empty() && classifiers.front().cv) {
    os << "\nValidation (" << classifiers.front().folds.size() << "-fold cross-validation, means)\n";
    header("t-test");
    for (const auto& r : classifiers) {
      std::string t = "-";
      if (r.name == best) t = "best";
      else if (r.t_test) t = fixed(r.t_test->t, 2) + (r.t_test->significant ? "*" : "");
      row(r.name, r.cv->mean, t);
    }
  }
  if (!classifiers.empty() && classifiers.front().holdout) {
    os << "\nTest (holdout)\n";
    header("ROC-AUC");
    for (const auto& r : classifiers) row(r.name, *r.holdout, fixed(*r.holdout_roc_auc));
  }
  os << "\nNotes:\n";
  for (const auto& n : notes) os << "  - " << n << "\n";
  if (!classifiers.empty() && classifiers.front().cv && classifiers.size() > 1 &&
      std::any_of(classifiers.begin(), classifiers.end(), [](const auto& r) { return r.t_test.has_value(); }))
    os << "  * significant at |t| > " << fixed(kCriticalT, 2) << "\n";
  return os.str();
}

std::string ExperimentReport::rules_text() const {
  std::ostringstream os;
  for (const auto& r : classifiers) {
    if (r.rules.empty()) continue;
    os << "Rules for " << r.name << " (" << r.rules.size() << " rules)\n";
    for (std::size_t i = 0; i < r.rules.size(); ++i) os << (i + 1) << ". " << r.rules[i] << "\n";
    os << "\n";
  }
  return os.str();
}

void write_report(const ExperimentReport& report, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create '" + dir + "': " + ec.message());
  const fs::path base(dir);
  write_text(base / "report.json", report.to_json().dump(2) + "\n");
  write_text(base / "report.txt", report.to_text());
  write_text(base / "rules.txt", report.rules_text());
  Json audits = Json::array();
  for (const auto& a : report.audits) audits.push_back(a.to_json());
  write_text(base / "audit.json", audits.dump(2) + "\n");
  Json timings = Json::object();
  for (const auto& [k, v] : report.timings) timings[k] = v;
  write_text(base / "timings.json", timings.dump(2) + "\n");
}

}  // namespace fingan
