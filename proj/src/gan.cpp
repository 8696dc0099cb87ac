#include "fingan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fingan/error.hpp"
#include "fingan/random.hpp"
#include "training.hpp"

namespace fingan {

namespace {

const char* decode_name(CategoricalDecode d) { return d == CategoricalDecode::Argmax ? "argmax" : "sample"; }

}  // namespace

// ---------------------------------------------------------------- config

void GanConfig::validate() const {
  if (epochs < 1) fail(ErrorCode::InvalidArgument, "gan: epochs must be >= 1");
  if (batch_size < 1) fail(ErrorCode::InvalidArgument, "gan: batch_size must be >= 1");
  if (latent_dim < 1) fail(ErrorCode::InvalidArgument, "gan: latent_dim must be >= 1");
  if (!(wgan_clip > 0.0)) fail(ErrorCode::InvalidArgument, "gan: wgan_clip must be > 0");
  if (critic_steps < 1) fail(ErrorCode::InvalidArgument, "gan: critic_steps must be >= 1");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
    fail(ErrorCode::InvalidArgument, "gan: leaky_slope must lie in (0, 1)");
  adam.validate();
}

Json GanConfig::to_json() const {
  return {{"mode", fingan::to_string(mode)},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"latent_dim", latent_dim},
          {"learning_rate", adam.learning_rate},
          {"beta1", adam.beta1},
          {"beta2", adam.beta2},
          {"epsilon", adam.epsilon},
          {"wgan_clip", wgan_clip},
          {"critic_steps", critic_steps},
          {"seed", seed},
          {"generator_hidden", generator_hidden},
          {"discriminator_hidden", discriminator_hidden},
          {"leaky_slope", leaky_slope},
          {"categorical_decode", decode_name(categorical_decode)}};
}

GanConfig GanConfig::from_json(const Json& j) {
  GanConfig c;
  try {
    if (j.contains("mode")) c.mode = gan_mode_from_string(j.at("mode").get<std::string>());
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
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
    if (j.contains("categorical_decode")) {
      const auto d = j.at("categorical_decode").get<std::string>();
      if (d == "argmax") c.categorical_decode = CategoricalDecode::Argmax;
      else if (d == "sample") c.categorical_decode = CategoricalDecode::Sample;
      else fail(ErrorCode::InvalidArgument, "gan: unknown categorical_decode '" + d + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, std::string("gan config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------- encoding

GanLayout make_gan_layout(const Table& standardized) {
  const auto& schema = standardized.schema();
  GanLayout layout;
  std::size_t offset = 0;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const auto& col = schema.columns[c];
    if (col.kind != ColumnKind::Categorical) continue;
    layout.blocks.push_back({c, ColumnKind::Categorical, offset, col.categories.size(), 0.0, 0.0});
    offset += col.categories.size();
  }
  layout.numeric_offset = offset;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (schema.columns[c].kind != ColumnKind::Numeric) continue;
    double lo = 0.0, hi = 0.0;
    if (!standardized.empty()) {
      lo = hi = standardized.at(0, c);
      for (std::size_t r = 1; r < standardized.rows(); ++r) {
        lo = std::min(lo, standardized.at(r, c));
        hi = std::max(hi, standardized.at(r, c));
      }
    }
    layout.blocks.push_back({c, ColumnKind::Numeric, offset, 1, lo, hi});
    ++offset;
  }
  layout.numeric_width = offset - layout.numeric_offset;
  layout.width = offset;
  return layout;
}

nn::Matrix encode_for_gan(const Table& standardized, const GanLayout& layout) {
  nn::Matrix out = nn::Matrix::Zero(static_cast<Eigen::Index>(standardized.rows()),
                                    static_cast<Eigen::Index>(layout.width));
  for (std::size_t r = 0; r < standardized.rows(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    for (const auto& b : layout.blocks) {
      const double v = standardized.at(r, b.column);
      if (b.kind == ColumnKind::Categorical) {
        out(row, static_cast<Eigen::Index>(b.offset + static_cast<std::size_t>(v))) = 1.0;
      } else {
        const double range = b.max - b.min;
        out(row, static_cast<Eigen::Index>(b.offset)) = range > 0.0 ? (v - b.min) / range : 0.5;
      }
    }
  }
  return out;
}

GanEncoding encode_for_gan(const Table& standardized) {
  GanEncoding e;
  e.layout = make_gan_layout(standardized);
  e.data = encode_for_gan(standardized, e.layout);
  return e;
}

Table decode_from_gan(const nn::Matrix& encoded, const GanLayout& layout, const Schema& schema,
                      CategoricalDecode decode, Rng* rng) {
  if (encoded.cols() != static_cast<Eigen::Index>(layout.width))
    fail(ErrorCode::ShapeMismatch, "decode_from_gan: encoded width does not match layout");
  const std::size_t n = static_cast<std::size_t>(encoded.rows());
  const std::size_t d = schema.columns.size();
  std::vector<double> cells(n * d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    for (const auto& b : layout.blocks) {
      const auto off = static_cast<Eigen::Index>(b.offset);
      if (b.kind == ColumnKind::Categorical) {
        std::size_t pick = 0;
        if (decode == CategoricalDecode::Sample && rng != nullptr) {
          std::vector<double> w(b.width);
          for (std::size_t k = 0; k < b.width; ++k)
            w[k] = std::max(0.0, encoded(row, off + static_cast<Eigen::Index>(k)));
          pick = rng->categorical(w);
        } else {
          Eigen::Index best = 0;
          encoded.row(row).segment(off, static_cast<Eigen::Index>(b.width)).maxCoeff(&best);
          pick = static_cast<std::size_t>(best);
        }
        cells[r * d + b.column] = static_cast<double>(pick);
      } else {
        const double x = std::clamp(encoded(row, off), 0.0, 1.0);
        cells[r * d + b.column] = b.min + x * (b.max - b.min);
      }
    }
  }
  return Table(schema, std::move(cells), std::vector<int>(n, 1));
}

// ---------------------------------------------------------------- networks

nn::NetworkSpec generator_spec(const GanLayout& layout, const GanConfig& config) {
  nn::NetworkSpec spec;
  spec.input_dim = config.latent_dim;
  for (std::size_t w : config.generator_hidden) spec.layers.push_back({w, nn::Activation::relu(), {}});
  nn::LayerSpec head{layout.width, nn::Activation::identity(), {}};
  for (const auto& b : layout.blocks)
    if (b.kind == ColumnKind::Categorical) head.segments.push_back({b.width, nn::Activation::softmax()});
  if (layout.numeric_width > 0) head.segments.push_back({layout.numeric_width, nn::Activation::sigmoid()});
  spec.layers.push_back(std::move(head));
  return spec;
}

nn::NetworkSpec discriminator_spec(std::size_t input_dim, const GanConfig& config) {
  nn::NetworkSpec spec;
  spec.input_dim = input_dim;
  for (std::size_t w : config.discriminator_hidden)
    spec.layers.push_back({w, nn::Activation::leaky_relu(config.leaky_slope), {}});
  spec.layers.push_back({1,
                         config.mode == GanMode::Vanilla ? nn::Activation::sigmoid()
                                                         : nn::Activation::identity(),
                         {}});
  return spec;
}

std::size_t generator_steps_per_epoch(std::size_t rows, std::size_t batch_size) {
  return std::max<std::size_t>(1, (rows + batch_size - 1) / batch_size);
}

// ---------------------------------------------------------------- training

namespace {

void train_vanilla(nn::NetworkState& gen, nn::NetworkState& disc, const nn::Matrix& data,
                   const GanConfig& cfg, Rng& rng, TrainingHistory& history) {
  const std::size_t n = static_cast<std::size_t>(data.rows());
  detail::BatchStream stream(n, cfg.batch_size, rng);
  const std::size_t steps = generator_steps_per_epoch(n, cfg.batch_size);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double d_sum = 0.0, g_sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      const nn::Matrix real = detail::gather_rows(data, stream.next());
      const auto b = real.rows();

      // Discriminator: real -> 1, fake -> 0.
      const nn::Matrix fake = nn::predict(gen, detail::latent_batch(b, cfg.latent_dim, rng));
      auto real_acts = nn::forward(disc, real);
      auto real_loss = nn::bce_loss(real_acts.output().col(0), nn::Vector::Ones(b));
      auto grads = nn::backward(disc, real_acts, real_loss.grad);
      auto fake_acts = nn::forward(disc, fake);
      auto fake_loss = nn::bce_loss(fake_acts.output().col(0), nn::Vector::Zero(b));
      grads += nn::backward(disc, fake_acts, fake_loss.grad);
      nn::adam_step(disc, grads, cfg.adam);

      // Generator: non-saturating loss -log D(G(z)).
      auto gen_acts = nn::forward(gen, detail::latent_batch(b, cfg.latent_dim, rng));
      auto judged = nn::forward(disc, gen_acts.output());
      auto gen_loss = nn::bce_loss(judged.output().col(0), nn::Vector::Ones(b));
      const nn::Matrix upstream = detail::input_gradient(disc, judged, gen_loss.grad);
      nn::adam_step(gen, nn::backward(gen, gen_acts, upstream), cfg.adam);

      d_sum += real_loss.loss + fake_loss.loss;
      g_sum += gen_loss.loss;
    }
    detail::record_epoch(history, epoch, d_sum / static_cast<double>(steps),
                         g_sum / static_cast<double>(steps));
  }
}

void train_wgan(nn::NetworkState& gen, nn::NetworkState& critic, const nn::Matrix& data,
                const GanConfig& cfg, Rng& rng, TrainingHistory& history,
                const CriticObserver& observer) {
  const std::size_t n = static_cast<std::size_t>(data.rows());
  detail::BatchStream stream(n, cfg.batch_size, rng);
  const std::size_t steps = generator_steps_per_epoch(n, cfg.batch_size);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double d_sum = 0.0, g_sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      double critic_loss = 0.0;
      for (std::size_t k = 0; k < cfg.critic_steps; ++k) {
        const nn::Matrix real = detail::gather_rows(data, stream.next());
        const nn::Matrix fake = nn::predict(gen, detail::latent_batch(real.rows(), cfg.latent_dim, rng));
        critic_loss = detail::critic_update(critic, real, fake, cfg.adam, cfg.wgan_clip);
        if (observer) observer(critic);
      }
      const auto b = static_cast<Eigen::Index>(std::min(cfg.batch_size, n));
      auto gen_acts = nn::forward(gen, detail::latent_batch(b, cfg.latent_dim, rng));
      auto judged = nn::forward(critic, gen_acts.output());
      const double gen_loss = -judged.output().mean();
      const nn::Matrix upstream =
          detail::input_gradient(critic, judged, nn::Vector::Constant(b, -1.0 / static_cast<double>(b)));
      nn::adam_step(gen, nn::backward(gen, gen_acts, upstream), cfg.adam);

      d_sum += critic_loss;
      g_sum += gen_loss;
    }
    detail::record_epoch(history, epoch, d_sum / static_cast<double>(steps),
                         g_sum / static_cast<double>(steps));
  }
}

}  // namespace

GeneratorModel train_gan(const Table& minority, const GanConfig& config,
                         const CriticObserver& observer, nn::NetworkState* discriminator_out) {
  instrumentation::notify_fit("train_gan", minority);
  config.validate();
  if (config.mode == GanMode::Ctgan)
    fail(ErrorCode::InvalidArgument, "train_gan: use train_ctgan for CTGAN models");
  if (minority.empty()) fail(ErrorCode::EmptyMinority, "train_gan: minority table is empty");
  if (minority.count_label(1) != minority.rows())
    fail(ErrorCode::InvalidArgument, "train_gan: every training row must be positive");

  GanTransform transform;
  transform.preprocess = fit_preprocess(minority);
  const Table standardized = apply_preprocess(minority, transform.preprocess, Direction::Forward);
  transform.layout = make_gan_layout(standardized);
  const nn::Matrix data = encode_for_gan(standardized, transform.layout);
  const auto& schema = minority.schema();
  transform.raw_min.assign(schema.columns.size(), 0.0);
  transform.raw_max.assign(schema.columns.size(), 0.0);
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (schema.columns[c].kind != ColumnKind::Numeric) continue;
    double lo = minority.at(0, c), hi = lo;
    for (std::size_t r = 1; r < minority.rows(); ++r) {
      lo = std::min(lo, minority.at(r, c));
      hi = std::max(hi, minority.at(r, c));
    }
    transform.raw_min[c] = lo;
    transform.raw_max[c] = hi;
  }

  GeneratorModel model;
  model.mode = config.mode;
  model.schema = schema;
  model.latent_dim = config.latent_dim;
  model.categorical_decode = config.categorical_decode;
  model.generator = nn::init_network(generator_spec(transform.layout, config), derive_seed(config.seed, 0));
  auto disc = nn::init_network(discriminator_spec(transform.layout.width, config), derive_seed(config.seed, 1));
  Rng rng(derive_seed(config.seed, 2));

  if (config.mode == GanMode::Vanilla)
    train_vanilla(model.generator, disc, data, config, rng, model.history);
  else
    train_wgan(model.generator, disc, data, config, rng, model.history, observer);
  if (discriminator_out) *discriminator_out = std::move(disc);

  model.transform = std::move(transform);
  return model;
}

// ---------------------------------------------------------------- sampling

Table sample_synthetic(const GeneratorModel& model, std::size_t n, std::uint64_t seed) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "sample_synthetic: n must be >= 1");
  const auto* t = std::get_if<GanTransform>(&model.transform);
  if (t == nullptr) fail(ErrorCode::InvalidArgument, "sample_synthetic: not a vanilla/WGAN model");
  Rng rng(seed);
  const nn::Matrix z = detail::latent_batch(static_cast<Eigen::Index>(n), model.latent_dim, rng);
  const nn::Matrix out = nn::predict(model.generator, z);
  const Table standardized = decode_from_gan(out, t->layout, model.schema, model.categorical_decode, &rng);
  Table raw = apply_preprocess(standardized, t->preprocess, Direction::Inverse);

  std::vector<double> cells = raw.cells();
  const std::size_t d = model.schema.columns.size();
  for (std::size_t c = 0; c < d; ++c) {
    if (model.schema.columns[c].kind != ColumnKind::Numeric) continue;
    for (std::size_t r = 0; r < n; ++r)
      cells[r * d + c] = std::clamp(cells[r * d + c], t->raw_min[c], t->raw_max[c]);
  }
  return Table(model.schema, std::move(cells), std::vector<int>(n, 1));
}

Table balance_by_oversampling(const Table& train, const GeneratorModel& model,
                              OversampleTarget target, std::uint64_t seed) {
  const std::size_t minority = train.count_label(1);
  const std::size_t majority = train.rows() - minority;
  const std::size_t synth = target.synthetic_rows(majority, minority);

  Table merged = train;
  if (synth > 0)
    merged = Table::concat(train, sample_model(model, synth, derive_seed(seed, 0)));
  std::vector<std::size_t> order(merged.rows());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 1));
  rng.shuffle(order);
  return merged.select(order);
}

}  // namespace fingan
