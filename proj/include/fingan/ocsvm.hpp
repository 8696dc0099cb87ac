#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fingan/data_model.hpp"
#include "fingan/features.hpp"
#include "fingan/nn.hpp"

namespace fingan {

enum class KernelKind { Sigmoid, Rbf, Linear };

const char* to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& s);

struct KernelSpec {
  KernelKind kind = KernelKind::Sigmoid;
  std::optional<double> gamma;  // unset: 1 / feature count
  double coef0 = 0.0;           // Sigmoid only

  void validate() const;
  double resolved_gamma(std::size_t dims) const;
  Json to_json() const;
  static KernelSpec from_json(const Json& j);
};

double kernel_value(KernelKind kind, double gamma, double coef0, const nn::Vector& a, const nn::Vector& b);

inline constexpr double kSupportTolerance = 1e-8;

struct OcsvmOptions {
  double tolerance = 1e-6;             // on the maximal violating-pair gap
  std::size_t max_iterations = 100000;  // pair updates
  bool record_objective = false;
  std::size_t cache_megabytes = 512;
};

// Solution of  min 1/2 a'Ka  s.t.  0 <= a_i <= 1/(nu n),  sum a = 1.
struct OcsvmSolution {
  std::vector<double> alpha;
  double rho = 0.0;
  double upper_bound = 0.0;  // 1/(nu n)
  double objective = 0.0;
  std::size_t iterations = 0;
  bool stalled = false;  // iteration cap hit before the tolerance
  std::vector<double> objective_trace;  // after every update, when recorded

  std::vector<std::size_t> support() const;  // alpha > kSupportTolerance
};

// Solves the dual on already-encoded points with a resolved gamma.
OcsvmSolution solve_ocsvm(const nn::Matrix& x, double nu, KernelKind kind, double gamma, double coef0,
                          std::uint64_t seed, const OcsvmOptions& options = {});

struct OcsvmModel {
  KernelSpec kernel;  // gamma resolved at fit time
  double nu = 0.5;
  FeatureEncoder encoder;
  std::vector<double> alpha;                  // over the training rows
  std::vector<std::size_t> support_indices;   // rows with alpha > kSupportTolerance
  nn::Matrix support_vectors;                 // encoded support rows
  double rho = 0.0;
  std::size_t iterations = 0;
  bool stalled = false;

  Json to_json() const;
  static OcsvmModel from_json(const Json& j);
  void save(const std::string& path) const;
  static OcsvmModel load(const std::string& path);
};

// Encodes `majority` (standardized numerics + one-hot categoricals) and fits.
OcsvmModel fit_ocsvm(const Table& majority, double nu, const KernelSpec& kernel, std::uint64_t seed,
                     const OcsvmOptions& options = {});

// sum_i alpha_i k(x_i, x) - rho; non-negative inside the learned region.
std::vector<double> decision_function(const OcsvmModel& model, const Table& rows);
std::vector<double> decision_function(const OcsvmModel& model, const nn::Matrix& encoded);

// Majority rows of `train` that are support vectors, original values, in
// their original order. Minority rows are not included.
Table undersample_majority(const Table& train, double nu, const KernelSpec& kernel, std::uint64_t seed,
                           OcsvmModel* model_out = nullptr, const OcsvmOptions& options = {});

}  // namespace fingan
