#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fingan/classifiers.hpp"
#include "fingan/ctgan.hpp"
#include "fingan/evaluation.hpp"
#include "fingan/gan.hpp"
#include "fingan/ocsvm.hpp"

namespace fingan {

inline constexpr const char* kLibraryVersion = "0.1.0";

enum class Balancer { None, Gan, Wgan, Ctgan };

const char* to_string(Balancer b);
Balancer balancer_from_string(const std::string& s);

struct BalancerConfig {
  Balancer kind = Balancer::None;
  bool ocsvm = false;  // undersample the majority to its support vectors first
  KernelSpec kernel;
  double nu = 0.5;
  OversampleTarget target = OversampleTarget::parity();
  GanConfig gan;  // Gan and Wgan; the mode follows `kind`
  CtganConfig ctgan;
  OcsvmOptions ocsvm_options;

  void validate() const;
  Json to_json() const;
  static BalancerConfig from_json(const Json& j);
};

struct BalanceAudit {
  std::size_t majority_original = 0;
  std::size_t minority_original = 0;
  std::size_t majority_kept = 0;
  std::size_t support_vectors = 0;  // zero without undersampling
  std::size_t synthetic = 0;
  std::size_t balanced_rows = 0;

  bool reconciles() const { return majority_kept + minority_original + synthetic == balanced_rows; }
  Json to_json() const;
};

struct BalanceResult {
  Table balanced;
  BalanceAudit audit;
  std::optional<GeneratorModel> generator;
  std::optional<OcsvmModel> ocsvm;
};

// Without undersampling: majority + minority + synthetic. With it: majority
// support vectors + minority + synthetic, where a parity target counts the
// kept majority. Rows keep their training order before synthetic rows are
// mixed in.
BalanceResult balance(const Table& train, const BalancerConfig& config, std::uint64_t seed);

struct ClassifierSpec {
  std::string name;  // report label; defaults to the kind name
  ClassifierKind kind = ClassifierKind::Tree;
  LogisticParams logistic;
  TreeParams tree;
  ForestParams forest;
  MlpClfParams mlp;
  SvmParams svm;

  Json to_json() const;
  static ClassifierSpec from_json(const Json& j);
};

FittedClassifier fit_classifier(const ClassifierSpec& spec, const Table& train, std::uint64_t seed);

enum class SplitMode { Holdout, Kfold };

struct SplitConfig {
  SplitMode mode = SplitMode::Holdout;
  double train_fraction = 0.8;
  std::size_t folds = 10;
  // Kfold only: run the folds on the holdout training split (and also score
  // the holdout test split) rather than on the whole dataset.
  bool kfold_on_train = true;

  Json to_json() const;
  static SplitConfig from_json(const Json& j);
};

struct Seeds {
  std::uint64_t split = 0;
  std::uint64_t balance = 1;
  std::uint64_t classifier = 2;

  Json to_json() const;
  static Seeds from_json(const Json& j);
  static Seeds from_master(std::uint64_t seed);
};

struct ExperimentConfig {
  std::string csv;
  std::string schema;
  std::string output_dir = "fingan-out";
  SplitConfig split;
  BalancerConfig balancer;
  std::vector<ClassifierSpec> classifiers;
  Seeds seeds;
  double threshold = 0.5;
  std::size_t jobs = 1;  // fold workers; not part of the report

  void validate() const;  // files exist, at least one classifier
  Json to_json() const;   // every default written out
  // Relative paths are resolved against `base_dir` when it is non-empty.
  static ExperimentConfig from_json(const Json& j, const std::string& base_dir = "");
  static ExperimentConfig load(const std::string& path);
};

struct ClassifierResult {
  std::string name;
  ClassifierKind kind = ClassifierKind::Constant;
  std::vector<MetricSet> folds;  // kfold runs
  std::vector<ConfusionCounts> fold_counts;
  std::optional<MetricSummary> cv;
  std::optional<MetricSet> holdout;
  std::optional<ConfusionCounts> holdout_counts;
  std::optional<double> holdout_roc_auc;
  std::optional<TTestResult> t_test;  // against the best classifier
  std::vector<std::string> rules;     // tree classifiers
};

struct ExperimentReport {
  Json config;
  Seeds seeds;
  std::optional<std::uint64_t> seed_override;
  std::vector<BalanceAudit> audits;  // holdout first, then one per fold
  std::vector<ClassifierResult> classifiers;
  std::string best;
  std::vector<std::string> notes;
  std::vector<std::pair<std::string, double>> timings;  // seconds, kept out of to_json

  Json to_json() const;
  static ExperimentReport from_json(const Json& j);
  std::string to_text() const;
  std::string rules_text() const;
};

// Runs the configured experiment and writes report.json, report.txt,
// rules.txt, audit.json, timings.json and models/ under the output directory.
// FINGAN_SEED, when set, replaces the configured seeds.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Same, without writing anything.
ExperimentReport evaluate_experiment(const ExperimentConfig& config, const Table& data);

void write_report(const ExperimentReport& report, const std::string& dir);

}  // namespace fingan
