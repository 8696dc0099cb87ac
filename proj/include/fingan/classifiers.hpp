#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fingan/data_model.hpp"
#include "fingan/features.hpp"
#include "fingan/nn.hpp"

namespace fingan {

enum class ClassifierKind { Logistic, Tree, Forest, Mlp, SvmLinear, Constant, External };

const char* to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(const std::string& s);

struct LogisticParams {
  double l2 = 1e-3;
  std::size_t epochs = 5000;
  double learning_rate = 0.0;  // 0: 1 / Lipschitz bound
  double tolerance = 1e-6;     // on the gradient norm
};

enum class MaxFeatures { All, Log2 };

struct TreeParams {
  std::size_t max_depth = 10;
  std::size_t min_samples_leaf = 10;
  std::size_t min_samples_split = 10;
  MaxFeatures max_features = MaxFeatures::Log2;

  void validate() const;
};

struct ForestParams {
  std::size_t n_estimators = 100;
  TreeParams tree;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct MlpClfParams {
  std::vector<std::size_t> hidden{16, 16};
  nn::AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

struct SvmParams {
  double c = 1.0;
  std::size_t epochs = 500;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;  // rows with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  std::size_t samples = 0;
  std::size_t positives = 0;
  std::size_t depth = 0;
  double impurity = 0.0;  // Gini

  bool is_leaf() const { return feature < 0; }
  double probability() const { return samples == 0 ? 0.0 : static_cast<double>(positives) / static_cast<double>(samples); }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t leaf_for(const double* row) const;
  double predict(const double* row) const { return nodes[leaf_for(row)].probability(); }
  std::size_t depth() const;
  std::size_t leaf_count() const;
};

double gini(std::size_t positives, std::size_t samples);

// Implemented outside this library; must not retain references to inputs.
class ExternalClassifier {
 public:
  virtual ~ExternalClassifier() = default;
  virtual std::string name() const = 0;
  virtual void fit(const nn::Matrix& x, const std::vector<int>& y) = 0;
  virtual std::vector<double> predict_proba(const nn::Matrix& x) const = 0;
};

struct FittedClassifier {
  ClassifierKind kind = ClassifierKind::Constant;
  FeatureEncoder encoder;
  // Logistic and linear SVM.
  nn::Vector weights;
  double bias = 0.0;
  double platt_a = 1.0, platt_b = 0.0;  // SVM probability link
  // Tree and forest.
  DecisionTree tree;
  std::vector<DecisionTree> forest;
  // MLP.
  nn::NetworkState network;
  // Constant.
  double constant = 0.5;
  std::shared_ptr<ExternalClassifier> external;

  Json to_json() const;
  static FittedClassifier from_json(const Json& j);
  void save(const std::string& path) const;
  static FittedClassifier load(const std::string& path);
};

// Matrix-level trainers; labels are 0/1.
FittedClassifier fit_logistic(const nn::Matrix& x, const std::vector<int>& y, const LogisticParams& params);
DecisionTree fit_tree(const nn::Matrix& x, const std::vector<int>& y, const TreeParams& params, std::uint64_t seed);
FittedClassifier fit_svm_linear(const nn::Matrix& x, const std::vector<int>& y, const SvmParams& params);

// Table-level trainers. Logistic, SVM and MLP use standardized numerics with
// one-hot categoricals; trees and forests use raw values and level codes.
FittedClassifier fit_logistic(const Table& train, const LogisticParams& params = {});
FittedClassifier fit_tree(const Table& train, const TreeParams& params = {}, std::uint64_t seed = 0);
FittedClassifier fit_forest(const Table& train, const ForestParams& params = {});
FittedClassifier fit_mlp_classifier(const Table& train, const MlpClfParams& params = {});
FittedClassifier fit_svm_linear(const Table& train, const SvmParams& params = {});
FittedClassifier fit_constant(const Table& train);
FittedClassifier fit_external(const Table& train, std::shared_ptr<ExternalClassifier> model,
                              FeatureEncoding encoding = FeatureEncoding::StandardizedOneHot);

// Tree t of a forest is fit_tree(sample_t, params.tree, forest_tree_seed(params.seed, t)).
std::uint64_t forest_tree_seed(std::uint64_t seed, std::size_t tree);

// Hinge objective lambda/2 (|w|^2 + b^2) + mean hinge with lambda = 1/(C n).
double svm_objective(const nn::Matrix& x, const std::vector<int>& y, const nn::Vector& w, double b, double c);
// Mean BCE + l2/2 |w|^2 (bias unpenalized).
double logistic_objective(const nn::Matrix& x, const std::vector<int>& y, const nn::Vector& w, double b, double l2);

std::vector<double> predict_proba(const FittedClassifier& model, const Table& rows);
std::vector<double> predict_proba_encoded(const FittedClassifier& model, const nn::Matrix& x);

// Labels at `threshold`; forests vote (a tree votes positive when its leaf
// probability is >= 0.5) and predict positive when the positive vote share
// reaches the threshold.
std::vector<int> predict_labels(const FittedClassifier& model, const Table& rows, double threshold = 0.5);

// SVM decision value w.x + b on encoded rows.
std::vector<double> svm_margins(const FittedClassifier& model, const nn::Matrix& x);

}  // namespace fingan
