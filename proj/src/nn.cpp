#include "fingan/nn.hpp"

#include <algorithm>
#include <cmath>

#include "fingan/error.hpp"
#include "fingan/random.hpp"

namespace fingan::nn {

namespace {

constexpr int kFormatVersion = 1;

const char* activation_name(ActivationKind k) {
  switch (k) {
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::LeakyReLU: return "leaky_relu";
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Softmax: return "softmax";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Identity: return "identity";
  }
  return "identity";
}

ActivationKind activation_from_name(const std::string& s) {
  for (auto k : {ActivationKind::ReLU, ActivationKind::LeakyReLU, ActivationKind::Sigmoid,
                 ActivationKind::Softmax, ActivationKind::Tanh, ActivationKind::Identity})
    if (s == activation_name(k)) return k;
  fail(ErrorCode::Serialization, "unknown activation '" + s + "'");
}

Json activation_json(const Activation& a) {
  Json j = {{"kind", activation_name(a.kind)}};
  if (a.kind == ActivationKind::LeakyReLU) j["slope"] = a.slope;
  return j;
}

Activation activation_from_json(const Json& j) {
  Activation a;
  a.kind = activation_from_name(j.at("kind").get<std::string>());
  if (a.kind == ActivationKind::LeakyReLU) a.slope = j.at("slope").get<double>();
  return a;
}

void validate_activation(const Activation& a, bool terminal) {
  if (a.kind == ActivationKind::Softmax && !terminal)
    fail(ErrorCode::InvalidArgument, "softmax is only allowed on the output layer");
  if (a.kind == ActivationKind::LeakyReLU && !(a.slope > 0.0 && a.slope < 1.0))
    fail(ErrorCode::InvalidArgument, "leaky ReLU slope must lie in (0, 1)");
}

// In-place activation on a column block of z.
template <typename Block>
void activate(Block&& z, const Activation& a) {
  switch (a.kind) {
    case ActivationKind::ReLU:
      z = z.cwiseMax(0.0);
      break;
    case ActivationKind::LeakyReLU:
      z = z.unaryExpr([s = a.slope](double v) { return v > 0.0 ? v : s * v; });
      break;
    case ActivationKind::Sigmoid:
      z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      break;
    case ActivationKind::Tanh:
      z = z.array().tanh().matrix();
      break;
    case ActivationKind::Softmax:
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double m = z.row(r).maxCoeff();
        auto e = (z.row(r).array() - m).exp().eval();
        z.row(r) = (e / e.sum()).matrix();
      }
      break;
    case ActivationKind::Identity:
      break;
  }
}

// dL/dz from dL/da for one block, given z and a = act(z).
Matrix activation_backward(const Matrix& z, const Matrix& a, const Matrix& g, const Activation& act) {
  switch (act.kind) {
    case ActivationKind::ReLU:
      return (z.array() > 0.0).cast<double>().matrix().cwiseProduct(g);
    case ActivationKind::LeakyReLU:
      return z.unaryExpr([s = act.slope](double v) { return v > 0.0 ? 1.0 : s; }).cwiseProduct(g);
    case ActivationKind::Sigmoid:
      return (a.array() * (1.0 - a.array()) * g.array()).matrix();
    case ActivationKind::Tanh:
      return ((1.0 - a.array().square()) * g.array()).matrix();
    case ActivationKind::Softmax: {
      Vector dot = a.cwiseProduct(g).rowwise().sum();
      return (a.array() * (g.colwise() - dot).array()).matrix();
    }
    case ActivationKind::Identity:
      return g;
  }
  return g;
}

Json matrix_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

Json vector_json(const Vector& v) {
  return {{"shape", {v.size()}}, {"data", std::vector<double>(v.data(), v.data() + v.size())}};
}

Matrix matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  const auto& data = j.at("data");
  if (shape.size() != 2 || shape[0] != rows || shape[1] != cols ||
      data.size() != static_cast<std::size_t>(rows * cols))
    fail(ErrorCode::Serialization, "network json: weight shape does not match spec");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  return m;
}

Vector vector_from_json(const Json& j, Eigen::Index size) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  const auto& data = j.at("data");
  if (shape.size() != 1 || shape[0] != size || data.size() != static_cast<std::size_t>(size))
    fail(ErrorCode::Serialization, "network json: bias shape does not match spec");
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = data[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

// ---------------------------------------------------------------- spec

void NetworkSpec::validate() const {
  if (input_dim == 0) fail(ErrorCode::InvalidArgument, "network: input_dim must be >= 1");
  if (layers.empty()) fail(ErrorCode::InvalidArgument, "network: needs at least one layer");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const bool terminal = l + 1 == layers.size();
    if (layer.width == 0) fail(ErrorCode::InvalidArgument, "network: layer width must be >= 1");
    if (layer.segments.empty()) {
      validate_activation(layer.activation, terminal);
      continue;
    }
    std::size_t total = 0;
    for (const auto& seg : layer.segments) {
      if (seg.width == 0) fail(ErrorCode::InvalidArgument, "network: empty segment");
      validate_activation(seg.activation, terminal);
      total += seg.width;
    }
    if (total != layer.width)
      fail(ErrorCode::InvalidArgument, "network: segments do not partition the layer width");
  }
}

Json NetworkSpec::to_json() const {
  Json jl = Json::array();
  for (const auto& layer : layers) {
    Json j = {{"width", layer.width}, {"activation", activation_json(layer.activation)}};
    if (!layer.segments.empty()) {
      Json segs = Json::array();
      for (const auto& s : layer.segments)
        segs.push_back({{"width", s.width}, {"activation", activation_json(s.activation)}});
      j["segments"] = segs;
    }
    jl.push_back(std::move(j));
  }
  return {{"input_dim", input_dim}, {"layers", jl}};
}

NetworkSpec NetworkSpec::from_json(const Json& j) {
  NetworkSpec spec;
  spec.input_dim = j.at("input_dim").get<std::size_t>();
  for (const auto& jl : j.at("layers")) {
    LayerSpec layer;
    layer.width = jl.at("width").get<std::size_t>();
    layer.activation = activation_from_json(jl.at("activation"));
    if (jl.contains("segments"))
      for (const auto& js : jl.at("segments"))
        layer.segments.push_back(
            {js.at("width").get<std::size_t>(), activation_from_json(js.at("activation"))});
    spec.layers.push_back(std::move(layer));
  }
  spec.validate();
  return spec;
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) fail(ErrorCode::InvalidArgument, "adam: learning_rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0))
    fail(ErrorCode::InvalidArgument, "adam: betas must lie in (0, 1)");
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "adam: epsilon must be > 0");
}

// ---------------------------------------------------------------- state

std::size_t NetworkState::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

bool NetworkState::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l)
    if (!weights[l].allFinite() || !biases[l].allFinite() || !m_weights[l].allFinite() ||
        !v_weights[l].allFinite() || !m_biases[l].allFinite() || !v_biases[l].allFinite())
      return false;
  return true;
}

NetworkState init_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  NetworkState s;
  s.spec = spec;
  Rng rng(seed);
  std::size_t fan_in = spec.input_dim;
  for (const auto& layer : spec.layers) {
    const auto out = static_cast<Eigen::Index>(layer.width);
    const auto in = static_cast<Eigen::Index>(fan_in);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + layer.width));
    Matrix w(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) w(r, c) = rng.uniform(-limit, limit);
    s.weights.push_back(std::move(w));
    s.biases.push_back(Vector::Zero(out));
    s.m_weights.push_back(Matrix::Zero(out, in));
    s.v_weights.push_back(Matrix::Zero(out, in));
    s.m_biases.push_back(Vector::Zero(out));
    s.v_biases.push_back(Vector::Zero(out));
    fan_in = layer.width;
  }
  return s;
}

// ---------------------------------------------------------------- forward / backward

Activations forward(const NetworkState& state, const Matrix& batch) {
  const auto& spec = state.spec;
  if (batch.cols() != static_cast<Eigen::Index>(spec.input_dim))
    fail(ErrorCode::ShapeMismatch, "forward: batch has " + std::to_string(batch.cols()) +
                                       " columns, network expects " +
                                       std::to_string(spec.input_dim));
  if (!batch.allFinite()) fail(ErrorCode::NonFiniteInput, "forward: batch contains NaN/Inf");

  Activations acts;
  acts.input = batch;
  acts.pre.reserve(spec.layers.size());
  acts.post.reserve(spec.layers.size());
  const Matrix* prev = &acts.input;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    Matrix z = *prev * state.weights[l].transpose();
    z.rowwise() += state.biases[l].transpose();
    Matrix a = z;
    const auto& layer = spec.layers[l];
    if (layer.segments.empty()) {
      activate(a, layer.activation);
    } else {
      Eigen::Index offset = 0;
      for (const auto& seg : layer.segments) {
        const auto w = static_cast<Eigen::Index>(seg.width);
        activate(a.middleCols(offset, w), seg.activation);
        offset += w;
      }
    }
    acts.pre.push_back(std::move(z));
    acts.post.push_back(std::move(a));
    prev = &acts.post.back();
  }
  return acts;
}

Matrix predict(const NetworkState& state, const Matrix& batch) {
  return forward(state, batch).output();
}

namespace {

Gradients backprop(const NetworkState& state, const Activations& acts, const Matrix& grad_output,
                   bool parameters) {
  const auto& spec = state.spec;
  const std::size_t L = spec.layers.size();
  if (acts.post.size() != L)
    fail(ErrorCode::ShapeMismatch, "backward: activations do not belong to this network");
  const Matrix& out = acts.output();
  if (grad_output.rows() != out.rows() || grad_output.cols() != out.cols())
    fail(ErrorCode::ShapeMismatch, "backward: output gradient has the wrong shape");

  Gradients g;
  g.weights.resize(L);
  g.biases.resize(L);
  Matrix upstream = grad_output;
  for (std::size_t l = L; l-- > 0;) {
    const auto& layer = spec.layers[l];
    const Matrix& z = acts.pre[l];
    const Matrix& a = acts.post[l];
    Matrix dz(z.rows(), z.cols());
    if (layer.segments.empty()) {
      dz = activation_backward(z, a, upstream, layer.activation);
    } else {
      Eigen::Index offset = 0;
      for (const auto& seg : layer.segments) {
        const auto w = static_cast<Eigen::Index>(seg.width);
        dz.middleCols(offset, w) =
            activation_backward(z.middleCols(offset, w), a.middleCols(offset, w),
                                upstream.middleCols(offset, w), seg.activation);
        offset += w;
      }
    }
    const Matrix& prev = l == 0 ? acts.input : acts.post[l - 1];
    if (parameters) {
      g.weights[l] = dz.transpose() * prev;
      g.biases[l] = dz.colwise().sum().transpose();
    }
    upstream = dz * state.weights[l];
  }
  g.input = std::move(upstream);
  return g;
}

}  // namespace

Gradients backward(const NetworkState& state, const Activations& acts, const Matrix& grad_output) {
  return backprop(state, acts, grad_output, true);
}

Matrix backward_input(const NetworkState& state, const Activations& acts, const Matrix& grad_output) {
  return backprop(state, acts, grad_output, false).input;
}

Gradients Gradients::zeros_like(const NetworkState& state) {
  Gradients g;
  for (std::size_t l = 0; l < state.weights.size(); ++l) {
    g.weights.push_back(Matrix::Zero(state.weights[l].rows(), state.weights[l].cols()));
    g.biases.push_back(Vector::Zero(state.biases[l].size()));
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.weights.size() != weights.size())
    fail(ErrorCode::ShapeMismatch, "gradients: layer count mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

bool Gradients::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l)
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  return true;
}

// ---------------------------------------------------------------- optimisation

void adam_step(NetworkState& state, const Gradients& grads, const AdamConfig& config) {
  if (grads.weights.size() != state.weights.size())
    fail(ErrorCode::ShapeMismatch, "adam_step: gradient layer count mismatch");
  for (std::size_t l = 0; l < state.weights.size(); ++l)
    if (grads.weights[l].rows() != state.weights[l].rows() ||
        grads.weights[l].cols() != state.weights[l].cols() ||
        grads.biases[l].size() != state.biases[l].size())
      fail(ErrorCode::ShapeMismatch, "adam_step: gradient shape mismatch at layer " +
                                         std::to_string(l));
  if (!grads.all_finite()) fail(ErrorCode::NonFiniteGradient, "adam_step: gradient has NaN/Inf");

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const double lr = config.learning_rate;
  const double b1 = config.beta1, b2 = config.beta2, eps = config.epsilon;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < state.weights.size(); ++l) {
    update(state.weights[l], state.m_weights[l], state.v_weights[l], grads.weights[l]);
    update(state.biases[l], state.m_biases[l], state.v_biases[l], grads.biases[l]);
  }
  if (!state.all_finite())
    fail(ErrorCode::NonFiniteGradient, "adam_step: update produced NaN/Inf parameters");
}

void clip_parameters(NetworkState& state, double limit) {
  for (std::size_t l = 0; l < state.weights.size(); ++l) {
    state.weights[l] = state.weights[l].cwiseMax(-limit).cwiseMin(limit);
    state.biases[l] = state.biases[l].cwiseMax(-limit).cwiseMin(limit);
  }
}

double max_abs_parameter(const NetworkState& state) {
  double m = 0.0;
  for (std::size_t l = 0; l < state.weights.size(); ++l) {
    m = std::max(m, state.weights[l].cwiseAbs().maxCoeff());
    m = std::max(m, state.biases[l].cwiseAbs().maxCoeff());
  }
  return m;
}

LossResult bce_loss(const Vector& predictions, const Vector& targets) {
  if (predictions.size() != targets.size() || predictions.size() == 0)
    fail(ErrorCode::ShapeMismatch, "bce_loss: predictions and targets differ in length");
  const double n = static_cast<double>(predictions.size());
  LossResult res;
  res.grad.resize(predictions.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < predictions.size(); ++i) {
    const double raw = predictions(i);
    const double p = std::clamp(raw, kProbabilityFloor, 1.0 - kProbabilityFloor);
    const double t = targets(i);
    total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    // The clamp is flat outside its range, so the derivative there is zero.
    res.grad(i) = p == raw ? (-(t / p) + (1.0 - t) / (1.0 - p)) / n : 0.0;
  }
  res.loss = total / n;
  return res;
}

// ---------------------------------------------------------------- serialization

Json to_json(const NetworkState& state) {
  Json params = Json::array();
  Json adam = Json::array();
  for (std::size_t l = 0; l < state.weights.size(); ++l) {
    params.push_back({{"weight", matrix_json(state.weights[l])}, {"bias", vector_json(state.biases[l])}});
    adam.push_back({{"m_weight", matrix_json(state.m_weights[l])},
                    {"v_weight", matrix_json(state.v_weights[l])},
                    {"m_bias", vector_json(state.m_biases[l])},
                    {"v_bias", vector_json(state.v_biases[l])}});
  }
  return {{"format", "fingan.network"},
          {"version", kFormatVersion},
          {"spec", state.spec.to_json()},
          {"parameters", params},
          {"adam", {{"step", state.step}, {"moments", adam}}}};
}

NetworkState state_from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "fingan.network")
      fail(ErrorCode::Serialization, "network json: wrong format tag");
    if (j.at("version").get<int>() != kFormatVersion)
      fail(ErrorCode::Serialization, "network json: unsupported version");
    NetworkState s;
    s.spec = NetworkSpec::from_json(j.at("spec"));
    const auto& params = j.at("parameters");
    const auto& moments = j.at("adam").at("moments");
    if (params.size() != s.spec.layers.size() || moments.size() != s.spec.layers.size())
      fail(ErrorCode::Serialization, "network json: layer count does not match spec");
    std::size_t fan_in = s.spec.input_dim;
    for (std::size_t l = 0; l < s.spec.layers.size(); ++l) {
      const auto out = static_cast<Eigen::Index>(s.spec.layers[l].width);
      const auto in = static_cast<Eigen::Index>(fan_in);
      s.weights.push_back(matrix_from_json(params[l].at("weight"), out, in));
      s.biases.push_back(vector_from_json(params[l].at("bias"), out));
      s.m_weights.push_back(matrix_from_json(moments[l].at("m_weight"), out, in));
      s.v_weights.push_back(matrix_from_json(moments[l].at("v_weight"), out, in));
      s.m_biases.push_back(vector_from_json(moments[l].at("m_bias"), out));
      s.v_biases.push_back(vector_from_json(moments[l].at("v_bias"), out));
      fan_in = s.spec.layers[l].width;
    }
    s.step = j.at("adam").at("step").get<std::uint64_t>();
    if (!s.all_finite()) fail(ErrorCode::Serialization, "network json: non-finite parameter");
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, std::string("network json: ") + e.what());
  }
}

}  // namespace fingan::nn
