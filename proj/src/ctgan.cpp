#include "fingan/ctgan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "fingan/error.hpp"
#include "fingan/log.hpp"
#include "fingan/random.hpp"
#include "training.hpp"

namespace fingan {

namespace {

constexpr double kAlphaScale = 4.0;
constexpr std::size_t kMaxEmIterations = 300;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_normal_pdf(double x, double mean, double stddev) {
  const double z = (x - mean) / stddev;
  return -0.5 * z * z - std::log(stddev) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double log_sum_exp(std::span<const double> v) {
  double hi = kNegInf;
  for (double x : v) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

struct Mixture {
  std::vector<double> w, mu, sigma;
  double log_likelihood = kNegInf;
  std::vector<double> trace;
};

std::vector<double> kmeanspp_centers(std::span<const double> x, std::size_t m, Rng& rng) {
  std::vector<double> centers{x[rng.uniform_index(x.size())]};
  std::vector<double> d2(x.size());
  while (centers.size() < m) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) best = std::min(best, (x[i] - c) * (x[i] - c));
      d2[i] = best;
    }
    if (std::accumulate(d2.begin(), d2.end(), 0.0) <= 0.0) break;
    centers.push_back(x[rng.categorical(d2)]);
  }
  return centers;
}

Mixture run_em(std::span<const double> x, std::size_t m, double floor, Rng& rng) {
  const std::size_t n = x.size();
  const auto centers = kmeanspp_centers(x, m, rng);
  const std::size_t k = centers.size();

  // Hard assignment to the nearest center seeds weights and spreads.
  Mixture mix;
  mix.w.assign(k, 0.0);
  mix.mu = centers;
  mix.sigma.assign(k, 0.0);
  std::vector<double> sum(k, 0.0), sumsq(k, 0.0);
  for (double v : x) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (std::abs(v - centers[j]) < std::abs(v - centers[best])) best = j;
    mix.w[best] += 1.0;
    sum[best] += v;
    sumsq[best] += v * v;
  }
  for (std::size_t j = 0; j < k; ++j) {
    const double cnt = mix.w[j];
    mix.mu[j] = sum[j] / cnt;
    const double var = std::max(0.0, sumsq[j] / cnt - mix.mu[j] * mix.mu[j]);
    mix.sigma[j] = std::max(floor, std::sqrt(var));
    mix.w[j] = cnt / static_cast<double>(n);
  }

  std::vector<double> resp(n * k), logp(k);
  double prev = kNegInf;
  for (std::size_t it = 0; it < kMaxEmIterations; ++it) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j)
        logp[j] = mix.w[j] > 0.0 ? std::log(mix.w[j]) + log_normal_pdf(x[i], mix.mu[j], mix.sigma[j]) : kNegInf;
      const double lse = log_sum_exp(logp);
      ll += lse;
      for (std::size_t j = 0; j < k; ++j) resp[i * k + j] = logp[j] == kNegInf ? 0.0 : std::exp(logp[j] - lse);
    }
    mix.trace.push_back(ll);
    mix.log_likelihood = ll;
    if (it > 0 && ll - prev <= 1e-10 * std::abs(ll) + 1e-12) break;
    prev = ll;

    for (std::size_t j = 0; j < k; ++j) {
      double nk = 0.0, s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * k + j];
        s += resp[i * k + j] * x[i];
      }
      if (nk <= 0.0) {
        mix.w[j] = 0.0;
        continue;
      }
      const double mu = s / nk;
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) ss += resp[i * k + j] * (x[i] - mu) * (x[i] - mu);
      mix.w[j] = nk / static_cast<double>(n);
      mix.mu[j] = mu;
      mix.sigma[j] = std::max(floor, std::sqrt(ss / nk));
    }
  }
  return mix;
}

std::size_t argmax(const nn::Matrix& m, Eigen::Index row, Eigen::Index offset, Eigen::Index width) {
  Eigen::Index best = 0;
  m.row(row).segment(offset, width).maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

void validate_ctgan_model(const GeneratorModel& model) {
  if (model.mode != GanMode::Ctgan || !std::holds_alternative<CtganTransform>(model.transform))
    fail(ErrorCode::InvalidArgument, "sample_ctgan: not a CTGAN model");
}

}  // namespace

// ---------------------------------------------------------------- config

void CtganConfig::validate() const {
  if (epochs < 1) fail(ErrorCode::InvalidArgument, "ctgan: epochs must be >= 1");
  if (batch_size < 1) fail(ErrorCode::InvalidArgument, "ctgan: batch_size must be >= 1");
  if (latent_dim < 1) fail(ErrorCode::InvalidArgument, "ctgan: latent_dim must be >= 1");
  if (max_modes < 1) fail(ErrorCode::InvalidArgument, "ctgan: max_modes must be >= 1");
  if (!(prune_threshold >= 0.0 && prune_threshold < 1.0))
    fail(ErrorCode::InvalidArgument, "ctgan: prune_threshold must lie in [0, 1)");
  if (!(wgan_clip > 0.0)) fail(ErrorCode::InvalidArgument, "ctgan: wgan_clip must be > 0");
  if (critic_steps < 1) fail(ErrorCode::InvalidArgument, "ctgan: critic_steps must be >= 1");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
    fail(ErrorCode::InvalidArgument, "ctgan: leaky_slope must lie in (0, 1)");
  adam.validate();
}

Json CtganConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"latent_dim", latent_dim},
          {"max_modes", max_modes},
          {"prune_threshold", prune_threshold},
          {"learning_rate", adam.learning_rate},
          {"beta1", adam.beta1},
          {"beta2", adam.beta2},
          {"epsilon", adam.epsilon},
          {"wgan_clip", wgan_clip},
          {"critic_steps", critic_steps},
          {"seed", seed},
          {"generator_hidden", generator_hidden},
          {"discriminator_hidden", discriminator_hidden},
          {"leaky_slope", leaky_slope}};
}

CtganConfig CtganConfig::from_json(const Json& j) {
  CtganConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.max_modes = j.value("max_modes", c.max_modes);
    c.prune_threshold = j.value("prune_threshold", c.prune_threshold);
    c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    c.wgan_clip = j.value("wgan_clip", c.wgan_clip);
    c.critic_steps = j.value("critic_steps", c.critic_steps);
    c.seed = j.value("seed", c.seed);
    c.generator_hidden = j.value("generator_hidden", c.generator_hidden);
    c.discriminator_hidden = j.value("discriminator_hidden", c.discriminator_hidden);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, std::string("ctgan config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------- normalizer

ModeNormalizer fit_mode_normalizer(std::span<const double> values, std::size_t max_modes,
                                   std::uint64_t seed, double prune_threshold, EmTrace* trace) {
  if (values.empty()) fail(ErrorCode::InvalidArgument, "fit_mode_normalizer: no values");
  if (max_modes < 1) fail(ErrorCode::InvalidArgument, "fit_mode_normalizer: max_modes must be >= 1");
  for (double v : values)
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteInput, "fit_mode_normalizer: non-finite value");

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double range = *hi_it - *lo_it;
  ModeNormalizer norm;
  norm.sigma_floor = range > 0.0 ? 1e-6 * range : 1e-6;

  std::vector<double> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) {
    norm.weights = {1.0};
    norm.means = {values[0]};
    norm.stds = {norm.sigma_floor};
    if (trace) trace->log_likelihood.clear();
    return norm;
  }

  const double n = static_cast<double>(values.size());
  const std::size_t limit = std::min(max_modes, distinct.size());
  Mixture best;
  double best_bic = std::numeric_limits<double>::infinity();
  for (std::size_t m = 1; m <= limit; ++m) {
    Rng rng(derive_seed(seed, m));
    Mixture mix = run_em(values, m, norm.sigma_floor, rng);
    const double params = 3.0 * static_cast<double>(mix.w.size()) - 1.0;
    const double bic = -2.0 * mix.log_likelihood + params * std::log(n);
    if (bic < best_bic) {
      best_bic = bic;
      best = std::move(mix);
    }
  }
  if (trace) trace->log_likelihood = best.trace;

  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < best.w.size(); ++j)
    if (best.w[j] >= prune_threshold) keep.push_back(j);
  if (keep.empty())
    keep.push_back(static_cast<std::size_t>(std::max_element(best.w.begin(), best.w.end()) - best.w.begin()));
  std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) { return best.mu[a] < best.mu[b]; });
  double total = 0.0;
  for (std::size_t j : keep) total += best.w[j];
  for (std::size_t j : keep) {
    norm.weights.push_back(best.w[j] / total);
    norm.means.push_back(best.mu[j]);
    norm.stds.push_back(best.sigma[j]);
  }
  return norm;
}

ModeEncoding encode_continuous(double value, const ModeNormalizer& norm, Rng& rng) {
  const std::size_t m = norm.modes();
  if (m == 0) fail(ErrorCode::InvalidArgument, "encode_continuous: empty normalizer");
  std::vector<double> logp(m);
  for (std::size_t k = 0; k < m; ++k)
    logp[k] = norm.weights[k] > 0.0 ? std::log(norm.weights[k]) + log_normal_pdf(value, norm.means[k], norm.stds[k])
                                    : kNegInf;
  const double lse = log_sum_exp(logp);
  std::vector<double> p(m);
  if (lse == kNegInf) {
    // Far from every mode: fall back to the nearest center.
    std::size_t best = 0;
    for (std::size_t k = 1; k < m; ++k)
      if (std::abs(value - norm.means[k]) < std::abs(value - norm.means[best])) best = k;
    p[best] = 1.0;
  } else {
    for (std::size_t k = 0; k < m; ++k) p[k] = logp[k] == kNegInf ? 0.0 : std::exp(logp[k] - lse);
  }
  ModeEncoding e;
  e.mode = m == 1 ? 0 : rng.categorical(p);
  e.alpha = std::clamp((value - norm.means[e.mode]) / (kAlphaScale * norm.stds[e.mode]), -1.0, 1.0);
  e.onehot.assign(m, 0.0);
  e.onehot[e.mode] = 1.0;
  return e;
}

ModeEncoding encode_continuous(double value, const ModeNormalizer& norm, std::uint64_t seed) {
  Rng rng(seed);
  return encode_continuous(value, norm, rng);
}

double decode_continuous(double alpha, std::size_t mode, const ModeNormalizer& norm) {
  if (mode >= norm.modes()) fail(ErrorCode::InvalidOneHot, "decode_continuous: mode index out of range");
  return alpha * kAlphaScale * norm.stds[mode] + norm.means[mode];
}

double decode_continuous(double alpha, std::span<const double> onehot, const ModeNormalizer& norm) {
  if (onehot.size() != norm.modes())
    fail(ErrorCode::InvalidOneHot, "decode_continuous: one-hot width does not match the mode count");
  std::size_t hot = 0, count = 0;
  for (std::size_t k = 0; k < onehot.size(); ++k) {
    if (onehot[k] == 1.0) {
      hot = k;
      ++count;
    } else if (onehot[k] != 0.0) {
      fail(ErrorCode::InvalidOneHot, "decode_continuous: one-hot entries must be 0 or 1");
    }
  }
  if (count != 1) fail(ErrorCode::InvalidOneHot, "decode_continuous: expected exactly one hot bit");
  return decode_continuous(alpha, hot, norm);
}

// ---------------------------------------------------------------- conditioning

CondVector sample_condvec(const std::vector<std::vector<double>>& frequencies, Rng& rng) {
  if (frequencies.empty()) fail(ErrorCode::NoDiscreteColumns, "sample_condvec: no discrete columns");
  std::size_t width = 0;
  for (const auto& f : frequencies) {
    if (f.empty()) fail(ErrorCode::InvalidArgument, "sample_condvec: discrete column without levels");
    width += f.size();
  }
  CondVector cv;
  cv.column = rng.uniform_index(frequencies.size());
  const auto& freq = frequencies[cv.column];
  std::vector<double> w(freq.size());
  double total = 0.0;
  for (std::size_t k = 0; k < freq.size(); ++k) total += (w[k] = std::log1p(std::max(0.0, freq[k])));
  if (total <= 0.0) std::fill(w.begin(), w.end(), 1.0);
  cv.category = rng.categorical(w);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < cv.column; ++c) offset += frequencies[c].size();
  cv.onehot.assign(width, 0.0);
  cv.onehot[offset + cv.category] = 1.0;
  return cv;
}

CondVector sample_condvec(const std::vector<std::vector<double>>& frequencies, std::uint64_t seed) {
  Rng rng(seed);
  return sample_condvec(frequencies, rng);
}

// ---------------------------------------------------------------- training

namespace {

struct Conditioner {
  const CtganTransform& t;
  std::vector<std::size_t> discrete;                        // indices into t.columns
  std::vector<std::vector<double>> frequencies;             // per discrete column
  std::vector<std::vector<std::vector<std::size_t>>> rows;  // [discrete col][level] -> row ids

  Conditioner(const CtganTransform& transform, const Table& table) : t(transform), discrete(t.discrete_columns()) {
    for (std::size_t d : discrete) {
      const auto& col = t.columns[d];
      frequencies.push_back(col.frequencies);
      std::vector<std::vector<std::size_t>> buckets(col.width);
      for (std::size_t r = 0; r < table.rows(); ++r) buckets[table.category(r, col.column)].push_back(r);
      rows.push_back(std::move(buckets));
    }
  }

  bool active() const { return !discrete.empty(); }

  // Fills `cond` (b x cond_width) and the chosen (discrete col, level) per row.
  void draw(Eigen::Index b, Rng& rng, nn::Matrix& cond, std::vector<std::pair<std::size_t, std::size_t>>& picks) const {
    cond = nn::Matrix::Zero(b, static_cast<Eigen::Index>(t.cond_width));
    picks.resize(static_cast<std::size_t>(b));
    for (Eigen::Index i = 0; i < b; ++i) {
      const CondVector cv = sample_condvec(frequencies, rng);
      const auto& col = t.columns[discrete[cv.column]];
      cond(i, static_cast<Eigen::Index>(col.cond_offset + cv.category)) = 1.0;
      picks[static_cast<std::size_t>(i)] = {cv.column, cv.category};
    }
  }

  std::vector<std::size_t> matching_rows(const std::vector<std::pair<std::size_t, std::size_t>>& picks,
                                         std::size_t n, Rng& rng) const {
    std::vector<std::size_t> out;
    out.reserve(picks.size());
    for (const auto& [c, k] : picks) {
      const auto& bucket = rows[c][k];
      if (bucket.empty()) {
        log_warning("ctgan: empty condition bucket; drawing an unconditioned real row");
        out.push_back(rng.uniform_index(n));
      } else {
        out.push_back(bucket[rng.uniform_index(bucket.size())]);
      }
    }
    return out;
  }
};

nn::Matrix hcat(const nn::Matrix& a, const nn::Matrix& b) {
  if (b.cols() == 0) return a;
  nn::Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

CtganTransform fit_ctgan_transform(const Table& table, const CtganConfig& cfg) {
  const auto& schema = table.schema();
  CtganTransform t;
  std::size_t offset = 0, cond_offset = 0;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    CtganColumn col;
    col.column = c;
    col.kind = schema.columns[c].kind;
    col.offset = offset;
    if (col.kind == ColumnKind::Numeric) {
      std::vector<double> v(table.rows());
      for (std::size_t r = 0; r < table.rows(); ++r) v[r] = table.at(r, c);
      col.normalizer = fit_mode_normalizer(v, cfg.max_modes, derive_seed(cfg.seed, 100 + c), cfg.prune_threshold);
      col.min = *std::min_element(v.begin(), v.end());
      col.max = *std::max_element(v.begin(), v.end());
      col.width = 1 + col.normalizer.modes();
    } else {
      col.width = schema.columns[c].categories.size();
      col.cond_offset = cond_offset;
      col.frequencies.assign(col.width, 0.0);
      for (std::size_t r = 0; r < table.rows(); ++r) col.frequencies[table.category(r, c)] += 1.0;
      cond_offset += col.width;
    }
    offset += col.width;
    t.columns.push_back(std::move(col));
  }
  t.width = offset;
  t.cond_width = cond_offset;
  return t;
}

nn::Matrix encode_ctgan(const Table& table, const CtganTransform& t, Rng& rng) {
  nn::Matrix out = nn::Matrix::Zero(static_cast<Eigen::Index>(table.rows()), static_cast<Eigen::Index>(t.width));
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    for (const auto& col : t.columns) {
      const auto off = static_cast<Eigen::Index>(col.offset);
      if (col.kind == ColumnKind::Numeric) {
        const ModeEncoding e = encode_continuous(table.at(r, col.column), col.normalizer, rng);
        out(row, off) = e.alpha;
        out(row, off + 1 + static_cast<Eigen::Index>(e.mode)) = 1.0;
      } else {
        out(row, off + static_cast<Eigen::Index>(table.category(r, col.column))) = 1.0;
      }
    }
  }
  return out;
}

nn::NetworkSpec ctgan_generator_spec(const CtganTransform& t, const CtganConfig& cfg) {
  nn::NetworkSpec spec;
  spec.input_dim = cfg.latent_dim + t.cond_width;
  for (std::size_t w : cfg.generator_hidden) spec.layers.push_back({w, nn::Activation::relu(), {}});
  nn::LayerSpec head{t.width, nn::Activation::identity(), {}};
  for (const auto& col : t.columns) {
    if (col.kind == ColumnKind::Numeric) {
      head.segments.push_back({1, nn::Activation::tanh()});
      head.segments.push_back({col.width - 1, nn::Activation::softmax()});
    } else {
      head.segments.push_back({col.width, nn::Activation::softmax()});
    }
  }
  spec.layers.push_back(std::move(head));
  return spec;
}

nn::NetworkSpec ctgan_critic_spec(const CtganTransform& t, const CtganConfig& cfg) {
  nn::NetworkSpec spec;
  spec.input_dim = t.width + t.cond_width;
  for (std::size_t w : cfg.discriminator_hidden)
    spec.layers.push_back({w, nn::Activation::leaky_relu(cfg.leaky_slope), {}});
  spec.layers.push_back({1, nn::Activation::identity(), {}});
  return spec;
}

}  // namespace

GeneratorModel train_ctgan(const Table& minority, const CtganConfig& config, const CriticObserver& observer) {
  instrumentation::notify_fit("train_ctgan", minority);
  config.validate();
  if (minority.empty()) fail(ErrorCode::EmptyMinority, "train_ctgan: minority table is empty");
  if (minority.count_label(1) != minority.rows())
    fail(ErrorCode::InvalidArgument, "train_ctgan: every training row must be positive");

  CtganTransform t = fit_ctgan_transform(minority, config);
  Rng encode_rng(derive_seed(config.seed, 3));
  const nn::Matrix data = encode_ctgan(minority, t, encode_rng);
  const Conditioner cond(t, minority);

  GeneratorModel model;
  model.mode = GanMode::Ctgan;
  model.schema = minority.schema();
  model.latent_dim = config.latent_dim;
  model.generator = nn::init_network(ctgan_generator_spec(t, config), derive_seed(config.seed, 0));
  auto critic = nn::init_network(ctgan_critic_spec(t, config), derive_seed(config.seed, 1));
  Rng rng(derive_seed(config.seed, 2));

  const std::size_t n = minority.rows();
  const auto b = static_cast<Eigen::Index>(std::min(config.batch_size, n));
  const std::size_t steps = generator_steps_per_epoch(n, config.batch_size);
  detail::BatchStream stream(n, config.batch_size, rng);
  const auto width = static_cast<Eigen::Index>(t.width);
  nn::Matrix cvec;
  std::vector<std::pair<std::size_t, std::size_t>> picks;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double d_sum = 0.0, g_sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      double critic_loss = 0.0;
      for (std::size_t k = 0; k < config.critic_steps; ++k) {
        nn::Matrix real;
        if (cond.active()) {
          cond.draw(b, rng, cvec, picks);
          real = detail::gather_rows(data, cond.matching_rows(picks, n, rng));
        } else {
          real = detail::gather_rows(data, stream.next());
          cvec = nn::Matrix::Zero(real.rows(), 0);
        }
        const nn::Matrix z = detail::latent_batch(real.rows(), config.latent_dim, rng);
        const nn::Matrix fake = nn::predict(model.generator, hcat(z, cvec));
        critic_loss = detail::critic_update(critic, hcat(real, cvec), hcat(fake, cvec), config.adam, config.wgan_clip);
        if (observer) observer(critic);
      }

      if (cond.active()) cond.draw(b, rng, cvec, picks);
      else cvec = nn::Matrix::Zero(b, 0);
      auto gen_acts = nn::forward(model.generator, hcat(detail::latent_batch(b, config.latent_dim, rng), cvec));
      const nn::Matrix& out = gen_acts.output();
      auto judged = nn::forward(critic, hcat(out, cvec));
      double loss = -judged.output().mean();
      nn::Matrix upstream =
          detail::input_gradient(critic, judged, nn::Vector::Constant(b, -1.0 / static_cast<double>(b)))
              .leftCols(width);
      if (cond.active()) {
        // Cross-entropy between the condition and the generated block.
        double ce = 0.0;
        for (Eigen::Index i = 0; i < b; ++i) {
          const auto& [c, level] = picks[static_cast<std::size_t>(i)];
          const auto col = static_cast<Eigen::Index>(t.columns[cond.discrete[c]].offset + level);
          const double p = std::max(out(i, col), nn::kProbabilityFloor);
          ce -= std::log(p);
          upstream(i, col) -= 1.0 / (p * static_cast<double>(b));
        }
        loss += ce / static_cast<double>(b);
      }
      nn::adam_step(model.generator, nn::backward(model.generator, gen_acts, upstream), config.adam);
      d_sum += critic_loss;
      g_sum += loss;
    }
    detail::record_epoch(model.history, epoch, d_sum / static_cast<double>(steps), g_sum / static_cast<double>(steps));
  }

  model.transform = std::move(t);
  return model;
}

// ---------------------------------------------------------------- sampling

Table sample_ctgan(const GeneratorModel& model, std::size_t n, std::uint64_t seed,
                   const std::optional<Condition>& condition, bool enforce_condition) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "sample_ctgan: n must be >= 1");
  validate_ctgan_model(model);
  const auto& t = std::get<CtganTransform>(model.transform);
  const auto& schema = model.schema;
  const auto discrete = t.discrete_columns();

  std::optional<std::pair<std::size_t, std::size_t>> fixed;  // (index into t.columns, level)
  if (condition) {
    const std::size_t c = schema.index_of(condition->column);
    if (schema.columns[c].kind != ColumnKind::Categorical)
      fail(ErrorCode::InvalidArgument, "sample_ctgan: condition column '" + condition->column + "' is not categorical");
    const auto& cats = schema.columns[c].categories;
    const auto it = std::find(cats.begin(), cats.end(), condition->category);
    if (it == cats.end())
      fail(ErrorCode::UnknownCategory,
           "sample_ctgan: unknown category '" + condition->category + "' for column '" + condition->column + "'");
    fixed = std::pair{c, static_cast<std::size_t>(it - cats.begin())};
  }

  Rng rng(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  nn::Matrix cvec = nn::Matrix::Zero(rows, static_cast<Eigen::Index>(t.cond_width));
  if (t.cond_width > 0) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      std::size_t col, level;
      if (fixed) {
        col = fixed->first;
        level = fixed->second;
      } else {
        col = discrete[rng.uniform_index(discrete.size())];
        level = rng.categorical(t.columns[col].frequencies);
      }
      cvec(i, static_cast<Eigen::Index>(t.columns[col].cond_offset + level)) = 1.0;
    }
  }
  const nn::Matrix z = detail::latent_batch(rows, model.latent_dim, rng);
  const nn::Matrix out = nn::predict(model.generator, hcat(z, cvec));

  const std::size_t d = schema.columns.size();
  std::vector<double> cells(n * d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    for (const auto& col : t.columns) {
      const auto off = static_cast<Eigen::Index>(col.offset);
      double value;
      if (col.kind == ColumnKind::Numeric) {
        const double alpha = std::clamp(out(row, off), -1.0, 1.0);
        const std::size_t mode = argmax(out, row, off + 1, static_cast<Eigen::Index>(col.width - 1));
        value = std::clamp(decode_continuous(alpha, mode, col.normalizer), col.min, col.max);
      } else if (model.categorical_decode == CategoricalDecode::Sample) {
        std::vector<double> w(col.width);
        for (std::size_t k = 0; k < col.width; ++k) w[k] = std::max(0.0, out(row, off + static_cast<Eigen::Index>(k)));
        value = static_cast<double>(rng.categorical(w));
      } else {
        value = static_cast<double>(argmax(out, row, off, static_cast<Eigen::Index>(col.width)));
      }
      cells[r * d + col.column] = value;
    }
    if (fixed && enforce_condition) cells[r * d + fixed->first] = static_cast<double>(fixed->second);
  }
  return Table(schema, std::move(cells), std::vector<int>(n, 1));
}

}  // namespace fingan
