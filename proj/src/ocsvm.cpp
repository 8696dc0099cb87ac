#include "fingan/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "fingan/error.hpp"
#include "fingan/log.hpp"
#include "fingan/random.hpp"

namespace fingan {

namespace {

constexpr double kTau = 1e-12;
constexpr int kFormatVersion = 1;

// Kernel columns computed on demand; the oldest column is dropped once the
// budget is reached.
class KernelCache {
 public:
  KernelCache(const nn::Matrix& x, KernelKind kind, double gamma, double coef0, std::size_t megabytes)
      : x_(x), kind_(kind), gamma_(gamma), coef0_(coef0) {
    sqnorm_ = x_.rowwise().squaredNorm();
    const std::size_t bytes_per_column = std::max<std::size_t>(1, static_cast<std::size_t>(x_.rows()) * sizeof(double));
    capacity_ = std::max<std::size_t>(2, megabytes * 1024 * 1024 / bytes_per_column);
  }

  const nn::Vector& column(std::size_t i) {
    if (auto it = columns_.find(i); it != columns_.end()) return it->second;
    if (columns_.size() >= capacity_) {
      columns_.erase(order_.front());
      order_.pop_front();
    }
    order_.push_back(i);
    return columns_.emplace(i, compute(i)).first->second;
  }

  nn::Vector compute(std::size_t i) const { return transform(x_ * x_.row(static_cast<Eigen::Index>(i)).transpose(), i); }

  // Columns for a set of indices as a dense block (n x |idx|).
  nn::Matrix block(const std::vector<std::size_t>& idx) const {
    nn::Matrix sub(static_cast<Eigen::Index>(idx.size()), x_.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) sub.row(static_cast<Eigen::Index>(k)) = x_.row(static_cast<Eigen::Index>(idx[k]));
    nn::Matrix dots = x_ * sub.transpose();
    for (std::size_t k = 0; k < idx.size(); ++k) dots.col(static_cast<Eigen::Index>(k)) = transform(dots.col(static_cast<Eigen::Index>(k)), idx[k]);
    return dots;
  }

  double diagonal(std::size_t i) const {
    const double d = sqnorm_(static_cast<Eigen::Index>(i));
    switch (kind_) {
      case KernelKind::Linear: return d;
      case KernelKind::Rbf: return 1.0;
      case KernelKind::Sigmoid: return std::tanh(gamma_ * d + coef0_);
    }
    return d;
  }

 private:
  nn::Vector transform(nn::Vector dots, std::size_t i) const {
    switch (kind_) {
      case KernelKind::Linear: break;
      case KernelKind::Sigmoid: dots = (gamma_ * dots.array() + coef0_).tanh().matrix(); break;
      case KernelKind::Rbf: {
        const double si = sqnorm_(static_cast<Eigen::Index>(i));
        for (Eigen::Index r = 0; r < dots.size(); ++r) {
          const double d2 = std::max(0.0, sqnorm_(r) + si - 2.0 * dots(r));
          dots(r) = std::exp(-gamma_ * d2);
        }
        dots(static_cast<Eigen::Index>(i)) = 1.0;
        break;
      }
    }
    return dots;
  }

  const nn::Matrix& x_;
  KernelKind kind_;
  double gamma_, coef0_;
  nn::Vector sqnorm_;
  std::size_t capacity_ = 2;
  std::unordered_map<std::size_t, nn::Vector> columns_;
  std::deque<std::size_t> order_;
};

double compute_rho(const std::vector<double>& alpha, const nn::Vector& grad, double c) {
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t free = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double g = grad(static_cast<Eigen::Index>(i));
    if (alpha[i] >= c) lb = std::max(lb, g);
    else if (alpha[i] <= 0.0) ub = std::min(ub, g);
    else {
      sum_free += g;
      ++free;
    }
  }
  if (free > 0) return sum_free / static_cast<double>(free);
  if (!std::isfinite(ub)) return lb;
  if (!std::isfinite(lb)) return ub;
  return 0.5 * (ub + lb);
}

}  // namespace

const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Sigmoid: return "sigmoid";
    case KernelKind::Rbf: return "rbf";
    case KernelKind::Linear: return "linear";
  }
  return "sigmoid";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "sigmoid") return KernelKind::Sigmoid;
  if (s == "rbf") return KernelKind::Rbf;
  if (s == "linear") return KernelKind::Linear;
  fail(ErrorCode::InvalidArgument, "unknown kernel '" + s + "'");
}

void KernelSpec::validate() const {
  if (gamma && !(*gamma > 0.0 && std::isfinite(*gamma)))
    fail(ErrorCode::InvalidArgument, "kernel: gamma must be > 0");
  if (!std::isfinite(coef0)) fail(ErrorCode::InvalidArgument, "kernel: coef0 must be finite");
}

double KernelSpec::resolved_gamma(std::size_t dims) const {
  if (gamma) return *gamma;
  return 1.0 / static_cast<double>(std::max<std::size_t>(1, dims));
}

Json KernelSpec::to_json() const {
  Json j = {{"kind", fingan::to_string(kind)}, {"coef0", coef0}};
  j["gamma"] = gamma ? Json(*gamma) : Json("auto");
  return j;
}

KernelSpec KernelSpec::from_json(const Json& j) {
  KernelSpec k;
  try {
    if (j.contains("kind")) k.kind = kernel_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("gamma") && !j.at("gamma").is_string()) k.gamma = j.at("gamma").get<double>();
    else if (j.contains("gamma") && j.at("gamma").get<std::string>() != "auto")
      fail(ErrorCode::InvalidArgument, "kernel: gamma must be a number or \"auto\"");
    k.coef0 = j.value("coef0", 0.0);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, std::string("kernel: ") + e.what());
  }
  k.validate();
  return k;
}

double kernel_value(KernelKind kind, double gamma, double coef0, const nn::Vector& a, const nn::Vector& b) {
  switch (kind) {
    case KernelKind::Linear: return a.dot(b);
    case KernelKind::Sigmoid: return std::tanh(gamma * a.dot(b) + coef0);
    case KernelKind::Rbf: return std::exp(-gamma * (a - b).squaredNorm());
  }
  return 0.0;
}

std::vector<std::size_t> OcsvmSolution::support() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (alpha[i] > kSupportTolerance) out.push_back(i);
  return out;
}

OcsvmSolution solve_ocsvm(const nn::Matrix& x, double nu, KernelKind kind, double gamma, double coef0,
                          std::uint64_t seed, const OcsvmOptions& options) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  if (n < 2) fail(ErrorCode::TooFewSamples, "ocsvm: need at least 2 rows");
  if (!(nu > 0.0 && nu <= 1.0)) fail(ErrorCode::InvalidArgument, "ocsvm: nu must lie in (0, 1]");
  if (!(gamma > 0.0)) fail(ErrorCode::InvalidArgument, "ocsvm: gamma must be > 0");
  if (!x.allFinite()) fail(ErrorCode::NonFiniteInput, "ocsvm: non-finite input");

  OcsvmSolution sol;
  const double c = 1.0 / (nu * static_cast<double>(n));
  sol.upper_bound = c;
  sol.alpha.assign(n, 0.0);

  // Start from a feasible point: floor(nu n) entries at the bound, the rest of
  // the mass on the next entry, in a seed-shuffled order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  const auto full = std::min(n, static_cast<std::size_t>(std::floor(nu * static_cast<double>(n))));
  for (std::size_t k = 0; k < full; ++k) sol.alpha[order[k]] = c;
  if (full < n) sol.alpha[order[full]] = std::max(0.0, 1.0 - static_cast<double>(full) * c);

  KernelCache cache(x, kind, gamma, coef0, options.cache_megabytes);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < n; ++i)
    if (sol.alpha[i] > 0.0) active.push_back(i);
  nn::Vector grad = nn::Vector::Zero(static_cast<Eigen::Index>(n));
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < active.size(); start += kChunk) {
    std::vector<std::size_t> part(active.begin() + static_cast<std::ptrdiff_t>(start),
                                  active.begin() + static_cast<std::ptrdiff_t>(std::min(active.size(), start + kChunk)));
    nn::Vector a(static_cast<Eigen::Index>(part.size()));
    for (std::size_t k = 0; k < part.size(); ++k) a(static_cast<Eigen::Index>(k)) = sol.alpha[part[k]];
    grad += cache.block(part) * a;
  }
  double objective = 0.0;
  for (std::size_t i = 0; i < n; ++i) objective += 0.5 * sol.alpha[i] * grad(static_cast<Eigen::Index>(i));

  std::size_t it = 0;
  for (;; ++it) {
    // i maximizes -G over alpha < C; j minimizes -G over alpha > 0.
    std::size_t bi = n, bj = n;
    double gmin = std::numeric_limits<double>::infinity();
    double gmax = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      const double g = grad(static_cast<Eigen::Index>(t));
      if (sol.alpha[t] < c && g < gmin) {
        gmin = g;
        bi = t;
      }
      if (sol.alpha[t] > 0.0 && g > gmax) {
        gmax = g;
        bj = t;
      }
    }
    if (bi == n || bj == n || gmax - gmin < options.tolerance) break;
    if (it >= options.max_iterations) {
      sol.stalled = true;
      log_warning("ocsvm: iteration cap reached before tolerance (" + std::to_string(it) + " updates)");
      break;
    }
    const nn::Vector& ki = cache.column(bi);
    const nn::Vector kic = ki;  // the cache may drop ki when fetching kj
    const nn::Vector& kj = cache.column(bj);
    const auto ii = static_cast<Eigen::Index>(bi), jj = static_cast<Eigen::Index>(bj);
    const double curvature = cache.diagonal(bi) + cache.diagonal(bj) - 2.0 * kic(jj);
    const double a = curvature > 0.0 ? curvature : kTau;
    const double gi = grad(ii), gj = grad(jj);
    double delta = (gj - gi) / a;
    const double room_i = c - sol.alpha[bi];
    const double room_j = sol.alpha[bj];
    if (delta >= room_i && room_i <= room_j) {
      delta = room_i;
      sol.alpha[bi] = c;
      sol.alpha[bj] = room_i == room_j ? 0.0 : sol.alpha[bj] - delta;
    } else if (delta >= room_j) {
      delta = room_j;
      sol.alpha[bi] += delta;
      sol.alpha[bj] = 0.0;
    } else {
      sol.alpha[bi] += delta;
      sol.alpha[bj] -= delta;
    }
    sol.alpha[bi] = std::min(sol.alpha[bi], c);
    sol.alpha[bj] = std::max(sol.alpha[bj], 0.0);
    grad += delta * (kic - kj);
    objective += delta * (gi - gj) + 0.5 * curvature * delta * delta;
    if (options.record_objective) sol.objective_trace.push_back(objective);
  }
  sol.iterations = it;
  sol.rho = compute_rho(sol.alpha, grad, c);
  sol.objective = objective;
  return sol;
}

// ---------------------------------------------------------------- model

OcsvmModel fit_ocsvm(const Table& majority, double nu, const KernelSpec& kernel, std::uint64_t seed,
                     const OcsvmOptions& options) {
  instrumentation::notify_fit("ocsvm", majority);
  kernel.validate();
  if (majority.rows() < 2) fail(ErrorCode::TooFewSamples, "ocsvm: need at least 2 rows");
  if (!(nu > 0.0 && nu <= 1.0)) fail(ErrorCode::InvalidArgument, "ocsvm: nu must lie in (0, 1]");

  OcsvmModel m;
  m.nu = nu;
  m.encoder = FeatureEncoder::fit(majority, FeatureEncoding::StandardizedOneHot);
  const nn::Matrix x = m.encoder.transform(majority);
  m.kernel = kernel;
  m.kernel.gamma = kernel.resolved_gamma(static_cast<std::size_t>(x.cols()));
  const auto sol = solve_ocsvm(x, nu, kernel.kind, *m.kernel.gamma, kernel.coef0, seed, options);
  m.alpha = sol.alpha;
  m.rho = sol.rho;
  m.iterations = sol.iterations;
  m.stalled = sol.stalled;
  m.support_indices = sol.support();
  m.support_vectors.resize(static_cast<Eigen::Index>(m.support_indices.size()), x.cols());
  for (std::size_t k = 0; k < m.support_indices.size(); ++k)
    m.support_vectors.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(m.support_indices[k]));
  return m;
}

std::vector<double> decision_function(const OcsvmModel& model, const nn::Matrix& encoded) {
  if (encoded.cols() != model.support_vectors.cols())
    fail(ErrorCode::SchemaMismatch, "ocsvm: encoded width does not match the model");
  const double gamma = model.kernel.gamma.value_or(1.0);
  std::vector<double> out(static_cast<std::size_t>(encoded.rows()));
  for (Eigen::Index r = 0; r < encoded.rows(); ++r) {
    const nn::Vector row = encoded.row(r).transpose();
    double s = 0.0;
    for (std::size_t k = 0; k < model.support_indices.size(); ++k)
      s += model.alpha[model.support_indices[k]] *
           kernel_value(model.kernel.kind, gamma, model.kernel.coef0,
                        model.support_vectors.row(static_cast<Eigen::Index>(k)).transpose(), row);
    out[static_cast<std::size_t>(r)] = s - model.rho;
  }
  return out;
}

std::vector<double> decision_function(const OcsvmModel& model, const Table& rows) {
  return decision_function(model, model.encoder.transform(rows));
}

Table undersample_majority(const Table& train, double nu, const KernelSpec& kernel, std::uint64_t seed,
                           OcsvmModel* model_out, const OcsvmOptions& options) {
  const auto majority_idx = train.indices_with_label(0);
  if (majority_idx.empty() || majority_idx.size() == train.rows())
    fail(ErrorCode::DegenerateClass, "undersample: training data must contain both classes");
  const Table majority = train.select(majority_idx);
  OcsvmModel model = fit_ocsvm(majority, nu, kernel, seed, options);
  Table kept = majority.select(model.support_indices);
  if (model_out) *model_out = std::move(model);
  return kept;
}

// ---------------------------------------------------------------- persistence

Json OcsvmModel::to_json() const {
  std::vector<double> sv(static_cast<std::size_t>(support_vectors.size()));
  for (Eigen::Index r = 0; r < support_vectors.rows(); ++r)
    for (Eigen::Index c = 0; c < support_vectors.cols(); ++c)
      sv[static_cast<std::size_t>(r * support_vectors.cols() + c)] = support_vectors(r, c);
  return {{"format", "fingan.ocsvm"},
          {"version", kFormatVersion},
          {"kernel", kernel.to_json()},
          {"nu", nu},
          {"encoder", encoder.to_json()},
          {"alpha", alpha},
          {"support_indices", support_indices},
          {"support_vectors", {{"shape", {support_vectors.rows(), support_vectors.cols()}}, {"data", sv}}},
          {"rho", rho},
          {"iterations", iterations},
          {"stalled", stalled}};
}

OcsvmModel OcsvmModel::from_json(const Json& j) {
  OcsvmModel m;
  try {
    if (j.at("format").get<std::string>() != "fingan.ocsvm" || j.at("version").get<int>() != kFormatVersion)
      fail(ErrorCode::Serialization, "ocsvm: unsupported format");
    m.kernel = KernelSpec::from_json(j.at("kernel"));
    m.nu = j.at("nu").get<double>();
    m.encoder = FeatureEncoder::from_json(j.at("encoder"));
    m.alpha = j.at("alpha").get<std::vector<double>>();
    m.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
    const auto& sv = j.at("support_vectors");
    const auto shape = sv.at("shape").get<std::vector<Eigen::Index>>();
    const auto data = sv.at("data").get<std::vector<double>>();
    if (shape.size() != 2 || static_cast<std::size_t>(shape[0] * shape[1]) != data.size() ||
        static_cast<std::size_t>(shape[0]) != m.support_indices.size())
      fail(ErrorCode::Serialization, "ocsvm: malformed support vectors");
    m.support_vectors.resize(shape[0], shape[1]);
    for (Eigen::Index r = 0; r < shape[0]; ++r)
      for (Eigen::Index c = 0; c < shape[1]; ++c) m.support_vectors(r, c) = data[static_cast<std::size_t>(r * shape[1] + c)];
    for (std::size_t i : m.support_indices)
      if (i >= m.alpha.size()) fail(ErrorCode::Serialization, "ocsvm: support index out of range");
    m.rho = j.at("rho").get<double>();
    m.iterations = j.at("iterations").get<std::size_t>();
    m.stalled = j.at("stalled").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, std::string("ocsvm: ") + e.what());
  }
  return m;
}

void OcsvmModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path + "'");
  out << to_json().dump() << '\n';
}

OcsvmModel OcsvmModel::load(const std::string& path) {
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
