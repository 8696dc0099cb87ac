#include "fingan/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fingan/error.hpp"
#include "fingan/random.hpp"

namespace fingan {

namespace {

constexpr int kFormatVersion = 1;
constexpr double kSplitEpsilon = 1e-12;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_xy(const nn::Matrix& x, const std::vector<int>& y, const char* who) {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    fail(ErrorCode::ShapeMismatch, std::string(who) + ": row count differs from label count");
  if (y.empty()) fail(ErrorCode::TooFewSamples, std::string(who) + ": no training rows");
  if (!x.allFinite()) fail(ErrorCode::NonFiniteInput, std::string(who) + ": non-finite feature value");
}

void require_both_classes(const std::vector<int>& y, const char* who) {
  const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  if (pos == 0 || pos == y.size())
    fail(ErrorCode::DegenerateClass, std::string(who) + ": training data must contain both classes");
}

std::vector<int> labels_of(const Table& t) { return t.labels(); }

// Platt scaling: p = sigmoid(a m + b) fitted to smoothed targets by Newton's
// method with backtracking.
std::pair<double, double> fit_platt(const std::vector<double>& margins, const std::vector<int>& y) {
  const double npos = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const double nneg = static_cast<double>(y.size()) - npos;
  const double hi = (npos + 1.0) / (npos + 2.0), lo = 1.0 / (nneg + 2.0);
  std::vector<double> t(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] == 1 ? hi : lo;

  auto loss = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double z = a * margins[i] + b;
      // -t log p - (1-t) log(1-p) with log p = -log1p(exp(-z))
      const double log_p = z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
      const double log_q = z >= 0 ? -z - std::log1p(std::exp(-z)) : -std::log1p(std::exp(z));
      s -= t[i] * log_p + (1.0 - t[i]) * log_q;
    }
    return s;
  };

  double a = 0.0, b = std::log((npos + 1.0) / (nneg + 1.0));
  double f = loss(a, b);
  for (int it = 0; it < 100; ++it) {
    double ga = 0.0, gb = 0.0, haa = 1e-12, hab = 0.0, hbb = 1e-12;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double p = sigmoid(a * margins[i] + b);
      const double r = p - t[i];
      const double w = p * (1.0 - p);
      ga += r * margins[i];
      gb += r;
      haa += w * margins[i] * margins[i];
      hab += w * margins[i];
      hbb += w;
    }
    if (std::abs(ga) < 1e-10 && std::abs(gb) < 1e-10) break;
    const double det = haa * hbb - hab * hab;
    if (!(det > 0.0)) break;
    const double da = -(hbb * ga - hab * gb) / det;
    const double db = -(haa * gb - hab * ga) / det;
    double step = 1.0;
    bool improved = false;
    while (step > 1e-10) {
      const double fn = loss(a + step * da, b + step * db);
      if (fn < f + 1e-4 * step * (ga * da + gb * db)) {
        a += step * da;
        b += step * db;
        f = fn;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return {a, b};
}

// ---------------------------------------------------------------- trees

struct TreeBuilder {
  const nn::Matrix& x;
  const std::vector<int>& y;
  const TreeParams& params;
  Rng rng;
  DecisionTree tree;

  struct Split {
    int feature = -1;
    double threshold = 0.0;
  };

  Split best_split(const std::vector<std::size_t>& idx, std::size_t positives) {
    const std::size_t n = idx.size();
    const std::size_t d = static_cast<std::size_t>(x.cols());
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    if (params.max_features == MaxFeatures::Log2) {
      const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(d)))));
      rng.shuffle(features);
      features.resize(std::min(k, d));
      std::sort(features.begin(), features.end());
    }
    Split best;
    double best_score = gini(positives, n) - kSplitEpsilon;
    std::vector<std::size_t> order(idx);
    for (std::size_t f : features) {
      const auto col = static_cast<Eigen::Index>(f);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x(static_cast<Eigen::Index>(a), col) < x(static_cast<Eigen::Index>(b), col); });
      std::size_t left_pos = 0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left_pos += y[order[k]] == 1 ? 1 : 0;
        const double v = x(static_cast<Eigen::Index>(order[k]), col);
        const double next = x(static_cast<Eigen::Index>(order[k + 1]), col);
        if (v == next) continue;
        const std::size_t nl = k + 1, nr = n - nl;
        if (nl < params.min_samples_leaf || nr < params.min_samples_leaf) continue;
        const double score = (static_cast<double>(nl) * gini(left_pos, nl) +
                              static_cast<double>(nr) * gini(positives - left_pos, nr)) /
                             static_cast<double>(n);
        if (score < best_score) {
          best_score = score - kSplitEpsilon;
          best.feature = static_cast<int>(f);
          double mid = 0.5 * (v + next);
          if (!(mid < next)) mid = v;
          best.threshold = mid;
        }
      }
    }
    return best;
  }

  int build(std::vector<std::size_t> idx, std::size_t depth) {
    TreeNode node;
    node.samples = idx.size();
    for (std::size_t i : idx) node.positives += y[i] == 1 ? 1 : 0;
    node.depth = depth;
    node.impurity = gini(node.positives, node.samples);
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);

    const bool pure = node.positives == 0 || node.positives == node.samples;
    if (pure || depth >= params.max_depth || node.samples < params.min_samples_split) return id;
    const Split s = best_split(idx, node.positives);
    if (s.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx)
      (x(static_cast<Eigen::Index>(i), s.feature) <= s.threshold ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    tree.nodes[static_cast<std::size_t>(id)].feature = s.feature;
    tree.nodes[static_cast<std::size_t>(id)].threshold = s.threshold;
    const int l = build(std::move(left), depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    const int r = build(std::move(right), depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

Json tree_json(const DecisionTree& t) {
  Json nodes = Json::array();
  for (const auto& n : t.nodes)
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.samples, n.positives, n.depth, n.impurity});
  return nodes;
}

DecisionTree tree_from_json(const Json& j) {
  DecisionTree t;
  for (const auto& a : j) {
    if (!a.is_array() || a.size() != 8) fail(ErrorCode::Serialization, "classifier: malformed tree node");
    TreeNode n;
    n.feature = a[0].get<int>();
    n.threshold = a[1].get<double>();
    n.left = a[2].get<int>();
    n.right = a[3].get<int>();
    n.samples = a[4].get<std::size_t>();
    n.positives = a[5].get<std::size_t>();
    n.depth = a[6].get<std::size_t>();
    n.impurity = a[7].get<double>();
    t.nodes.push_back(n);
  }
  const auto count = static_cast<int>(t.nodes.size());
  if (count == 0) fail(ErrorCode::Serialization, "classifier: empty tree");
  for (const auto& n : t.nodes)
    if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count))
      fail(ErrorCode::Serialization, "classifier: tree child index out of range");
  return t;
}

Json vector_json(const nn::Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nn::Vector vector_from(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const nn::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

// ---------------------------------------------------------------- basics

const char* to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::Logistic: return "logistic";
    case ClassifierKind::Tree: return "tree";
    case ClassifierKind::Forest: return "forest";
    case ClassifierKind::Mlp: return "mlp";
    case ClassifierKind::SvmLinear: return "svm";
    case ClassifierKind::Constant: return "constant";
    case ClassifierKind::External: return "external";
  }
  return "constant";
}

ClassifierKind classifier_kind_from_string(const std::string& s) {
  for (auto k : {ClassifierKind::Logistic, ClassifierKind::Tree, ClassifierKind::Forest, ClassifierKind::Mlp,
                 ClassifierKind::SvmLinear, ClassifierKind::Constant, ClassifierKind::External})
    if (s == to_string(k)) return k;
  if (s == "lr") return ClassifierKind::Logistic;
  if (s == "dt") return ClassifierKind::Tree;
  if (s == "rf") return ClassifierKind::Forest;
  fail(ErrorCode::InvalidArgument, "unknown classifier '" + s + "'");
}

double gini(std::size_t positives, std::size_t samples) {
  if (samples == 0) return 0.0;
  const double p = static_cast<double>(positives) / static_cast<double>(samples);
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

void TreeParams::validate() const {
  if (max_depth < 1 || min_samples_leaf < 1 || min_samples_split < 1)
    fail(ErrorCode::InvalidArgument, "tree: depth and sample limits must be >= 1");
}

std::size_t DecisionTree::leaf_for(const double* row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf())
    i = static_cast<std::size_t>(row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
  return i;
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::uint64_t forest_tree_seed(std::uint64_t seed, std::size_t tree) { return derive_seed(seed, 2 * tree); }

double svm_objective(const nn::Matrix& x, const std::vector<int>& y, const nn::Vector& w, double b, double c) {
  const double n = static_cast<double>(y.size());
  const double lambda = 1.0 / (c * n);
  const nn::Vector m = x * w;
  double hinge = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double s = y[i] == 1 ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - s * (m(static_cast<Eigen::Index>(i)) + b));
  }
  return 0.5 * lambda * (w.squaredNorm() + b * b) + hinge / n;
}

double logistic_objective(const nn::Matrix& x, const std::vector<int>& y, const nn::Vector& w, double b, double l2) {
  const nn::Vector z = x * w;
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double zi = z(static_cast<Eigen::Index>(i)) + b;
    // log(1 + exp(-s z)) with s = +-1
    const double s = y[i] == 1 ? 1.0 : -1.0;
    const double t = -s * zi;
    loss += t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  }
  return loss / static_cast<double>(y.size()) + 0.5 * l2 * w.squaredNorm();
}

// ---------------------------------------------------------------- logistic

FittedClassifier fit_logistic(const nn::Matrix& x, const std::vector<int>& y, const LogisticParams& params) {
  check_xy(x, y, "logistic");
  require_both_classes(y, "logistic");
  if (!(params.l2 >= 0.0)) fail(ErrorCode::InvalidArgument, "logistic: l2 must be >= 0");
  const auto n = static_cast<double>(y.size());
  const auto d = x.cols();

  double lr = params.learning_rate;
  if (lr <= 0.0) {
    // Largest eigenvalue of [X 1]'[X 1] / n by power iteration.
    nn::Vector v = nn::Vector::Ones(d + 1);
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
      const nn::Vector xv = x * v.head(d) + nn::Vector::Constant(x.rows(), v(d));
      nn::Vector next(d + 1);
      next.head(d) = x.transpose() * xv / n;
      next(d) = xv.sum() / n;
      const double norm = next.norm();
      if (norm <= 0.0) break;
      lambda = norm / v.norm();
      v = next / norm;
    }
    const double lipschitz = 0.25 * lambda * 1.05 + params.l2;
    lr = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
  }

  nn::Vector yv(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) yv(i) = y[static_cast<std::size_t>(i)];
  nn::Vector w = nn::Vector::Zero(d);
  double b = 0.0;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    nn::Vector r = (x * w).array() + b;
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = sigmoid(r(i)) - yv(i);
    const nn::Vector gw = x.transpose() * r / n + params.l2 * w;
    const double gb = r.sum() / n;
    if (std::sqrt(gw.squaredNorm() + gb * gb) < params.tolerance) break;
    w -= lr * gw;
    b -= lr * gb;
  }
  if (!w.allFinite() || !std::isfinite(b)) fail(ErrorCode::NonFiniteGradient, "logistic: diverged");

  FittedClassifier m;
  m.kind = ClassifierKind::Logistic;
  m.weights = w;
  m.bias = b;
  return m;
}

FittedClassifier fit_logistic(const Table& train, const LogisticParams& params) {
  instrumentation::notify_fit("classifier", train);
  auto enc = FeatureEncoder::fit(train, FeatureEncoding::StandardizedOneHot);
  FittedClassifier m = fit_logistic(enc.transform(train), labels_of(train), params);
  m.encoder = std::move(enc);
  return m;
}

// ---------------------------------------------------------------- svm

FittedClassifier fit_svm_linear(const nn::Matrix& x, const std::vector<int>& y, const SvmParams& params) {
  check_xy(x, y, "svm");
  require_both_classes(y, "svm");
  if (!(params.c > 0.0)) fail(ErrorCode::InvalidArgument, "svm: C must be > 0");
  if (params.epochs < 1) fail(ErrorCode::InvalidArgument, "svm: epochs must be >= 1");
  const std::size_t n = y.size();
  const auto d = x.cols();
  const double lambda = 1.0 / (params.c * static_cast<double>(n));

  // Pegasos on [x, 1]; iterates of the second half of the epochs are averaged.
  nn::Vector w = nn::Vector::Zero(d + 1), avg = nn::Vector::Zero(d + 1);
  std::size_t averaged = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(params.seed);
  std::uint64_t t = 0;
  const std::size_t average_from = params.epochs / 2;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const auto row = static_cast<Eigen::Index>(i);
      const double s = y[i] == 1 ? 1.0 : -1.0;
      const double margin = s * (x.row(row).dot(w.head(d)) + w(d));
      w *= 1.0 - 1.0 / static_cast<double>(t);
      if (margin < 1.0) {
        w.head(d) += eta * s * x.row(row).transpose();
        w(d) += eta * s;
      }
      if (epoch >= average_from) {
        avg += w;
        ++averaged;
      }
    }
  }
  avg /= static_cast<double>(std::max<std::size_t>(1, averaged));
  const double obj_last = svm_objective(x, y, w.head(d), w(d), params.c);
  const double obj_avg = svm_objective(x, y, avg.head(d), avg(d), params.c);
  const nn::Vector& best = obj_avg <= obj_last ? avg : w;

  FittedClassifier m;
  m.kind = ClassifierKind::SvmLinear;
  m.weights = best.head(d);
  m.bias = best(d);
  std::vector<double> margins(n);
  const nn::Vector mv = x * m.weights;
  for (std::size_t i = 0; i < n; ++i) margins[i] = mv(static_cast<Eigen::Index>(i)) + m.bias;
  std::tie(m.platt_a, m.platt_b) = fit_platt(margins, y);
  return m;
}

FittedClassifier fit_svm_linear(const Table& train, const SvmParams& params) {
  instrumentation::notify_fit("classifier", train);
  auto enc = FeatureEncoder::fit(train, FeatureEncoding::StandardizedOneHot);
  FittedClassifier m = fit_svm_linear(enc.transform(train), labels_of(train), params);
  m.encoder = std::move(enc);
  return m;
}

std::vector<double> svm_margins(const FittedClassifier& model, const nn::Matrix& x) {
  if (x.cols() != model.weights.size()) fail(ErrorCode::SchemaMismatch, "svm: feature width mismatch");
  const nn::Vector m = (x * model.weights).array() + model.bias;
  return {m.data(), m.data() + m.size()};
}

// ---------------------------------------------------------------- trees

DecisionTree fit_tree(const nn::Matrix& x, const std::vector<int>& y, const TreeParams& params, std::uint64_t seed) {
  check_xy(x, y, "tree");
  params.validate();
  TreeBuilder builder{x, y, params, Rng(seed), {}};
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), 0);
  builder.build(std::move(idx), 0);
  return std::move(builder.tree);
}

FittedClassifier fit_tree(const Table& train, const TreeParams& params, std::uint64_t seed) {
  instrumentation::notify_fit("classifier", train);
  FittedClassifier m;
  m.kind = ClassifierKind::Tree;
  m.encoder = FeatureEncoder::fit(train, FeatureEncoding::Raw);
  m.tree = fit_tree(m.encoder.transform(train), labels_of(train), params, seed);
  return m;
}

FittedClassifier fit_forest(const Table& train, const ForestParams& params) {
  instrumentation::notify_fit("classifier", train);
  if (params.n_estimators < 1) fail(ErrorCode::InvalidArgument, "forest: n_estimators must be >= 1");
  if (train.empty()) fail(ErrorCode::TooFewSamples, "forest: no training rows");
  FittedClassifier m;
  m.kind = ClassifierKind::Forest;
  m.encoder = FeatureEncoder::fit(train, FeatureEncoding::Raw);
  const nn::Matrix x = m.encoder.transform(train);
  const auto& y = train.labels();
  const std::size_t n = y.size();
  for (std::size_t t = 0; t < params.n_estimators; ++t) {
    if (!params.bootstrap) {
      m.forest.push_back(fit_tree(x, y, params.tree, forest_tree_seed(params.seed, t)));
      continue;
    }
    Rng boot(derive_seed(params.seed, 2 * t + 1));
    nn::Matrix xs(static_cast<Eigen::Index>(n), x.cols());
    std::vector<int> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pick = boot.uniform_index(n);
      xs.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(pick));
      ys[i] = y[pick];
    }
    m.forest.push_back(fit_tree(xs, ys, params.tree, forest_tree_seed(params.seed, t)));
  }
  return m;
}

// ---------------------------------------------------------------- mlp

FittedClassifier fit_mlp_classifier(const Table& train, const MlpClfParams& params) {
  instrumentation::notify_fit("classifier", train);
  require_both_classes(train.labels(), "mlp");
  if (params.epochs < 1 || params.batch_size < 1) fail(ErrorCode::InvalidArgument, "mlp: epochs and batch_size must be >= 1");
  FittedClassifier m;
  m.kind = ClassifierKind::Mlp;
  m.encoder = FeatureEncoder::fit(train, FeatureEncoding::StandardizedOneHot);
  const nn::Matrix x = m.encoder.transform(train);
  const std::size_t n = train.rows();

  nn::NetworkSpec spec;
  spec.input_dim = static_cast<std::size_t>(x.cols());
  for (std::size_t w : params.hidden) spec.layers.push_back({w, nn::Activation::relu(), {}});
  spec.layers.push_back({1, nn::Activation::sigmoid(), {}});
  m.network = nn::init_network(spec, derive_seed(params.seed, 0));

  Rng rng(derive_seed(params.seed, 1));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += params.batch_size) {
      const std::size_t end = std::min(n, start + params.batch_size);
      nn::Matrix xb(static_cast<Eigen::Index>(end - start), x.cols());
      nn::Vector yb(static_cast<Eigen::Index>(end - start));
      for (std::size_t k = start; k < end; ++k) {
        xb.row(static_cast<Eigen::Index>(k - start)) = x.row(static_cast<Eigen::Index>(order[k]));
        yb(static_cast<Eigen::Index>(k - start)) = train.label(order[k]);
      }
      const auto acts = nn::forward(m.network, xb);
      const auto loss = nn::bce_loss(acts.output().col(0), yb);
      nn::adam_step(m.network, nn::backward(m.network, acts, loss.grad), params.adam);
      total += loss.loss * static_cast<double>(end - start);
    }
    if (!std::isfinite(total))
      fail(ErrorCode::NonFiniteLoss, "mlp: non-finite loss at epoch " + std::to_string(epoch + 1));
  }
  return m;
}

// ---------------------------------------------------------------- others

FittedClassifier fit_constant(const Table& train) {
  instrumentation::notify_fit("classifier", train);
  if (train.empty()) fail(ErrorCode::TooFewSamples, "constant: no training rows");
  FittedClassifier m;
  m.kind = ClassifierKind::Constant;
  m.encoder = FeatureEncoder::fit(train, FeatureEncoding::Raw);
  m.constant = static_cast<double>(train.count_label(1)) / static_cast<double>(train.rows());
  return m;
}

FittedClassifier fit_external(const Table& train, std::shared_ptr<ExternalClassifier> model, FeatureEncoding encoding) {
  instrumentation::notify_fit("classifier", train);
  if (!model) fail(ErrorCode::InvalidArgument, "external: no model supplied");
  FittedClassifier m;
  m.kind = ClassifierKind::External;
  m.encoder = FeatureEncoder::fit(train, encoding);
  model->fit(m.encoder.transform(train), train.labels());
  m.external = std::move(model);
  return m;
}

// ---------------------------------------------------------------- prediction

std::vector<double> predict_proba_encoded(const FittedClassifier& model, const nn::Matrix& x) {
  if (x.cols() != static_cast<Eigen::Index>(model.encoder.width))
    fail(ErrorCode::SchemaMismatch, "predict: feature width mismatch");
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<double> p(n);
  switch (model.kind) {
    case ClassifierKind::Logistic: {
      const nn::Vector z = (x * model.weights).array() + model.bias;
      for (std::size_t i = 0; i < n; ++i) p[i] = sigmoid(z(static_cast<Eigen::Index>(i)));
      break;
    }
    case ClassifierKind::SvmLinear: {
      const auto m = svm_margins(model, x);
      for (std::size_t i = 0; i < n; ++i) p[i] = sigmoid(model.platt_a * m[i] + model.platt_b);
      break;
    }
    case ClassifierKind::Tree:
    case ClassifierKind::Forest: {
      const nn::Matrix rm = x;  // column-major; copy rows out for pointer access
      std::vector<double> row(static_cast<std::size_t>(x.cols()));
      for (std::size_t i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = rm(static_cast<Eigen::Index>(i), c);
        if (model.kind == ClassifierKind::Tree) {
          p[i] = model.tree.predict(row.data());
        } else {
          double s = 0.0;
          for (const auto& t : model.forest) s += t.predict(row.data());
          p[i] = s / static_cast<double>(model.forest.size());
        }
      }
      break;
    }
    case ClassifierKind::Mlp: {
      const nn::Matrix out = nn::predict(model.network, x);
      for (std::size_t i = 0; i < n; ++i) p[i] = out(static_cast<Eigen::Index>(i), 0);
      break;
    }
    case ClassifierKind::Constant: std::fill(p.begin(), p.end(), model.constant); break;
    case ClassifierKind::External: {
      p = model.external->predict_proba(x);
      if (p.size() != n) fail(ErrorCode::ShapeMismatch, "external: wrong number of predictions");
      break;
    }
  }
  for (double& v : p) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteInput, "predict: non-finite probability");
    v = std::clamp(v, 0.0, 1.0);
  }
  return p;
}

std::vector<double> predict_proba(const FittedClassifier& model, const Table& rows) {
  return predict_proba_encoded(model, model.encoder.transform(rows));
}

std::vector<int> predict_labels(const FittedClassifier& model, const Table& rows, double threshold) {
  const nn::Matrix x = model.encoder.transform(rows);
  std::vector<int> out(rows.rows());
  if (model.kind == ClassifierKind::Forest) {
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(static_cast<Eigen::Index>(i), c);
      std::size_t votes = 0;
      for (const auto& t : model.forest) votes += t.predict(row.data()) >= 0.5 ? 1 : 0;
      out[i] = static_cast<double>(votes) >= threshold * static_cast<double>(model.forest.size()) ? 1 : 0;
    }
    return out;
  }
  const auto p = predict_proba_encoded(model, x);
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= threshold ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------- persistence

Json FittedClassifier::to_json() const {
  if (kind == ClassifierKind::External)
    fail(ErrorCode::Serialization, "classifier: external models cannot be serialized");
  Json j = {{"format", "fingan.classifier"},
            {"version", kFormatVersion},
            {"kind", fingan::to_string(kind)},
            {"encoder", encoder.to_json()}};
  switch (kind) {
    case ClassifierKind::Logistic:
      j["weights"] = vector_json(weights);
      j["bias"] = bias;
      break;
    case ClassifierKind::SvmLinear:
      j["weights"] = vector_json(weights);
      j["bias"] = bias;
      j["platt"] = {platt_a, platt_b};
      break;
    case ClassifierKind::Tree: j["tree"] = tree_json(tree); break;
    case ClassifierKind::Forest: {
      Json trees = Json::array();
      for (const auto& t : forest) trees.push_back(tree_json(t));
      j["trees"] = trees;
      break;
    }
    case ClassifierKind::Mlp: j["network"] = nn::to_json(network); break;
    case ClassifierKind::Constant: j["constant"] = constant; break;
    case ClassifierKind::External: break;
  }
  return j;
}

FittedClassifier FittedClassifier::from_json(const Json& j) {
  FittedClassifier m;
  try {
    if (j.at("format").get<std::string>() != "fingan.classifier" || j.at("version").get<int>() != kFormatVersion)
      fail(ErrorCode::Serialization, "classifier: unsupported format");
    m.kind = classifier_kind_from_string(j.at("kind").get<std::string>());
    m.encoder = FeatureEncoder::from_json(j.at("encoder"));
    const auto width = static_cast<Eigen::Index>(m.encoder.width);
    switch (m.kind) {
      case ClassifierKind::Logistic:
      case ClassifierKind::SvmLinear:
        m.weights = vector_from(j.at("weights"));
        if (m.weights.size() != width) fail(ErrorCode::Serialization, "classifier: weight width mismatch");
        m.bias = j.at("bias").get<double>();
        if (m.kind == ClassifierKind::SvmLinear) {
          m.platt_a = j.at("platt").at(0).get<double>();
          m.platt_b = j.at("platt").at(1).get<double>();
        }
        break;
      case ClassifierKind::Tree: m.tree = tree_from_json(j.at("tree")); break;
      case ClassifierKind::Forest:
        for (const auto& t : j.at("trees")) m.forest.push_back(tree_from_json(t));
        if (m.forest.empty()) fail(ErrorCode::Serialization, "classifier: empty forest");
        break;
      case ClassifierKind::Mlp:
        m.network = nn::state_from_json(j.at("network"));
        if (m.network.spec.input_dim != m.encoder.width) fail(ErrorCode::Serialization, "classifier: network width mismatch");
        break;
      case ClassifierKind::Constant: m.constant = j.at("constant").get<double>(); break;
      case ClassifierKind::External: fail(ErrorCode::Serialization, "classifier: external models cannot be loaded");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, std::string("classifier: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) fail(ErrorCode::Serialization, e.what());
    throw;
  }
  return m;
}

void FittedClassifier::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path + "'");
  out << to_json().dump() << '\n';
}

FittedClassifier FittedClassifier::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return from_json(Json::parse(buf.str()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, "'" + path + "': " + e.what());
  }
}

}  // namespace fingan
