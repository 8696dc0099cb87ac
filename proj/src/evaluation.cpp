#include "fingan/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "fingan/error.hpp"

namespace fingan {

namespace {

std::string format_threshold(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

}  // namespace

Json MetricSet::to_json() const {
  return {{"sensitivity", sensitivity}, {"specificity", specificity}, {"accuracy", accuracy}, {"auc", auc}};
}

ConfusionCounts confusion(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size())
    fail(ErrorCode::LengthMismatch, "confusion: " + std::to_string(labels.size()) + " labels vs " +
                                        std::to_string(predictions.size()) + " predictions");
  if (labels.empty()) fail(ErrorCode::LengthMismatch, "confusion: no rows");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool actual = labels[i] == 1, predicted = predictions[i] == 1;
    if (actual && predicted) ++c.tp;
    else if (actual) ++c.fn;
    else if (predicted) ++c.fp;
    else ++c.tn;
  }
  return c;
}

MetricSet metrics(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0) fail(ErrorCode::UndefinedMetric, "metrics: no positive rows in the evaluation set");
  if (c.tn + c.fp == 0) fail(ErrorCode::UndefinedMetric, "metrics: no negative rows in the evaluation set");
  MetricSet m;
  m.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.auc = (m.sensitivity + m.specificity) / 2.0;
  return m;
}

double roc_auc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) fail(ErrorCode::LengthMismatch, "roc_auc: labels and scores differ in length");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney: sum of positive ranks with average ranks for ties.
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) {
        rank_sum += avg_rank;
        ++pos;
      }
    i = j;
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) fail(ErrorCode::UndefinedMetric, "roc_auc: both classes must be present");
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

MetricSummary summarize(std::span<const MetricSet> folds) {
  if (folds.empty()) fail(ErrorCode::InvalidArgument, "summarize: no folds");
  MetricSummary s;
  const double n = static_cast<double>(folds.size());
  auto field = [&](auto member) {
    double mean = 0.0;
    for (const auto& f : folds) mean += f.*member;
    mean /= n;
    double ss = 0.0;
    for (const auto& f : folds) ss += (f.*member - mean) * (f.*member - mean);
    s.mean.*member = mean;
    s.stddev.*member = folds.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  };
  field(&MetricSet::sensitivity);
  field(&MetricSet::specificity);
  field(&MetricSet::accuracy);
  field(&MetricSet::auc);
  return s;
}

TTestResult t_test_auc(std::span<const double> a, std::span<const double> b) {
  if (a.size() != kTTestSampleSize || b.size() != kTTestSampleSize)
    fail(ErrorCode::LengthMismatch, "t_test_auc: both samples must hold exactly 10 fold AUCs");
  auto mean_var = [](std::span<const double> x) {
    // A constant sample has exactly zero variance; summation round-off must not hide that.
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) return std::pair{x[0], 0.0};
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::pair{m, ss / static_cast<double>(x.size() - 1)};
  };
  const auto [ma, va] = mean_var(a);
  const auto [mb, vb] = mean_var(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
  TTestResult r;
  r.degrees_of_freedom = static_cast<int>(a.size() + b.size() - 2);
  const double diff = ma - mb;
  if (pooled <= 0.0) {
    r.t = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  } else {
    r.t = diff / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  }
  r.significant = std::abs(r.t) > kCriticalT;
  return r;
}

std::vector<CvResult> cross_validate_many(const Table& table, std::size_t k, std::uint64_t seed, std::size_t models,
                                          const MultiFoldPredictor& predict, std::size_t jobs) {
  if (!predict) fail(ErrorCode::InvalidArgument, "cross_validate: no fold predictor");
  if (models == 0) fail(ErrorCode::InvalidArgument, "cross_validate: no models");
  const auto folds = stratified_kfold_indices(table.labels(), k, seed);
  std::vector<CvResult> results(models);
  for (auto& r : results) {
    r.counts.resize(folds.size());
    r.folds.resize(folds.size());
  }
  std::vector<std::exception_ptr> errors(folds.size());

  auto run_fold = [&](std::size_t f) {
    try {
      const Table train = table.select(folds[f].train);
      const Table validation = table.select(folds[f].validation);
      const auto predicted = predict(train, validation, f);
      if (predicted.size() != models)
        fail(ErrorCode::LengthMismatch, "cross_validate: predictor returned " + std::to_string(predicted.size()) +
                                            " label vectors for " + std::to_string(models) + " models");
      for (std::size_t m = 0; m < models; ++m) {
        results[m].counts[f] = confusion(validation.labels(), predicted[m]);
        results[m].folds[f] = metrics(results[m].counts[f]);
      }
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };

  jobs = std::clamp<std::size_t>(jobs, 1, folds.size());
  if (jobs == 1) {
    for (std::size_t f = 0; f < folds.size(); ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        for (std::size_t f = next++; f < folds.size(); f = next++) run_fold(f);
      });
    for (auto& w : workers) w.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (auto& r : results) r.summary = summarize(r.folds);
  return results;
}

CvResult cross_validate(const Table& table, std::size_t k, std::uint64_t seed, const FoldPredictor& predict,
                        std::size_t jobs) {
  if (!predict) fail(ErrorCode::InvalidArgument, "cross_validate: no fold predictor");
  auto many = cross_validate_many(
      table, k, seed, 1,
      [&](const Table& train, const Table& validation, std::size_t fold) {
        return std::vector<std::vector<int>>{predict(train, validation, fold)};
      },
      jobs);
  return std::move(many.front());
}

// ---------------------------------------------------------------- rules

bool Rule::matches(const double* row) const {
  return std::all_of(antecedents.begin(), antecedents.end(), [&](const Antecedent& a) { return a.holds(row); });
}

std::vector<Rule> extract_rules(const FittedClassifier& model) {
  if (model.kind != ClassifierKind::Tree) fail(ErrorCode::NotATree, "extract_rules: classifier is not a decision tree");
  const auto& nodes = model.tree.nodes;
  std::vector<Rule> rules;
  std::vector<std::pair<std::size_t, std::vector<Antecedent>>> stack{{0, {}}};
  while (!stack.empty()) {
    auto [id, path] = std::move(stack.back());
    stack.pop_back();
    const TreeNode& n = nodes[id];
    if (n.is_leaf()) {
      Rule r;
      r.antecedents = std::move(path);
      const double p = n.probability();
      r.label = p >= 0.5 ? 1 : 0;
      r.support = n.samples;
      r.confidence = r.label == 1 ? p : 1.0 - p;
      rules.push_back(std::move(r));
      continue;
    }
    const auto f = static_cast<std::size_t>(n.feature);
    auto right = path;
    right.push_back({f, false, n.threshold});
    path.push_back({f, true, n.threshold});
    // Right pushed first so the left subtree is emitted first.
    stack.emplace_back(static_cast<std::size_t>(n.right), std::move(right));
    stack.emplace_back(static_cast<std::size_t>(n.left), std::move(path));
  }
  return rules;
}

int apply_rules(const std::vector<Rule>& rules, const double* row) {
  for (const auto& r : rules)
    if (r.matches(row)) return r.label;
  return -1;
}

std::string format_rule(const Rule& rule, const Schema& schema) {
  std::string s = "If ";
  if (rule.antecedents.empty()) s += "(always)";
  for (std::size_t i = 0; i < rule.antecedents.size(); ++i) {
    const auto& a = rule.antecedents[i];
    if (i > 0) s += " and ";
    const std::string name = a.feature < schema.columns.size() ? schema.columns[a.feature].name : "x" + std::to_string(a.feature);
    s += "(" + name + (a.less_equal ? " <= " : " > ") + format_threshold(a.threshold) + ")";
  }
  s += " then " + (rule.label == 1 ? schema.positive_label : schema.negative_label);
  return s;
}

std::string format_rules(const std::vector<Rule>& rules, const Schema& schema) {
  std::ostringstream os;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    os << (i + 1) << ". " << format_rule(rules[i], schema) << "  [support " << rules[i].support << ", confidence "
       << format_threshold(rules[i].confidence) << "]\n";
  }
  return os.str();
}

}  // namespace fingan
