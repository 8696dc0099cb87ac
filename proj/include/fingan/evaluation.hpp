#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fingan/classifiers.hpp"
#include "fingan/data_model.hpp"

namespace fingan {

struct ConfusionCounts {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

// `auc` is balanced accuracy, (sensitivity + specificity) / 2.
struct MetricSet {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double accuracy = 0.0;
  double auc = 0.0;

  Json to_json() const;
};

ConfusionCounts confusion(std::span<const int> labels, std::span<const int> predictions);
MetricSet metrics(const ConfusionCounts& counts);

// Area under the ROC curve from scores (ties share rank). Positives and
// negatives must both be present.
double roc_auc(std::span<const int> labels, std::span<const double> scores);

struct MetricSummary {
  MetricSet mean;
  MetricSet stddev;  // sample standard deviation (n - 1); zero for one fold
};

MetricSummary summarize(std::span<const MetricSet> folds);

inline constexpr double kCriticalT = 2.83;  // 18 degrees of freedom, 1% level
inline constexpr std::size_t kTTestSampleSize = 10;

struct TTestResult {
  double t = 0.0;
  bool significant = false;
  int degrees_of_freedom = 18;
};

// Two-sample pooled-variance t statistic on two samples of 10 fold AUCs.
// With zero pooled variance, t is 0 for equal means and +-infinity otherwise.
TTestResult t_test_auc(std::span<const double> a, std::span<const double> b);

struct CvResult {
  std::vector<MetricSet> folds;
  std::vector<ConfusionCounts> counts;
  MetricSummary summary;
};

// Receives the fold-train and fold-validation tables and returns predicted
// labels for the validation rows. With jobs > 1 folds run on that many
// threads, so the predictor must be safe to call concurrently.
using FoldPredictor = std::function<std::vector<int>(const Table& train, const Table& validation, std::size_t fold)>;

CvResult cross_validate(const Table& table, std::size_t k, std::uint64_t seed, const FoldPredictor& predict,
                        std::size_t jobs = 1);

// Several models scored on the same folds; the predictor returns one label
// vector per model.
using MultiFoldPredictor =
    std::function<std::vector<std::vector<int>>(const Table& train, const Table& validation, std::size_t fold)>;

std::vector<CvResult> cross_validate_many(const Table& table, std::size_t k, std::uint64_t seed, std::size_t models,
                                          const MultiFoldPredictor& predict, std::size_t jobs = 1);

struct Antecedent {
  std::size_t feature = 0;
  bool less_equal = true;  // x <= threshold, otherwise x > threshold
  double threshold = 0.0;

  bool holds(const double* row) const { return less_equal ? row[feature] <= threshold : row[feature] > threshold; }
};

struct Rule {
  std::vector<Antecedent> antecedents;  // root-to-leaf order
  int label = 0;
  std::size_t support = 0;  // training rows in the leaf
  double confidence = 0.0;  // fraction of those rows with `label`

  bool matches(const double* row) const;
};

// One rule per leaf of a tree classifier; throws NotATree otherwise.
std::vector<Rule> extract_rules(const FittedClassifier& tree);

// Label of the first matching rule; -1 when none matches.
int apply_rules(const std::vector<Rule>& rules, const double* row);

// "If (f1 <= 0.50) and (segment > 1.50) then yes" with support and
// confidence, one numbered line per rule.
std::string format_rule(const Rule& rule, const Schema& schema);
std::string format_rules(const std::vector<Rule>& rules, const Schema& schema);

}  // namespace fingan
