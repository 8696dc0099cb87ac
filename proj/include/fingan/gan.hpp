#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fingan/generator_model.hpp"
#include "fingan/random.hpp"

namespace fingan {

struct GanConfig {
  GanMode mode = GanMode::Vanilla;
  std::size_t epochs = 3000;
  std::size_t batch_size = 64;
  std::size_t latent_dim = 64;
  nn::AdamConfig adam{2e-4, 0.9, 0.999, 1e-8};
  double wgan_clip = 0.01;
  std::size_t critic_steps = 5;
  std::uint64_t seed = 0;
  std::vector<std::size_t> generator_hidden{64, 128};
  std::vector<std::size_t> discriminator_hidden{128, 64, 32, 16, 8};
  double leaky_slope = 0.2;
  CategoricalDecode categorical_decode = CategoricalDecode::Argmax;

  void validate() const;
  Json to_json() const;
  static GanConfig from_json(const Json& j);  // missing keys keep defaults
};

struct GanEncoding {
  GanLayout layout;
  nn::Matrix data;  // rows x layout.width
};

// Layout (with numeric ranges) learned from a standardized table.
GanLayout make_gan_layout(const Table& standardized);
nn::Matrix encode_for_gan(const Table& standardized, const GanLayout& layout);
GanEncoding encode_for_gan(const Table& standardized);

// Inverse of encode_for_gan. Categorical blocks decode by argmax unless an
// rng is given and `decode` is Sample. Numerics are clamped to the block range.
Table decode_from_gan(const nn::Matrix& encoded, const GanLayout& layout, const Schema& schema,
                      CategoricalDecode decode = CategoricalDecode::Argmax, Rng* rng = nullptr);

nn::NetworkSpec generator_spec(const GanLayout& layout, const GanConfig& config);
nn::NetworkSpec discriminator_spec(std::size_t input_dim, const GanConfig& config);

// Called after every critic update with the clipped critic; test hook.
using CriticObserver = std::function<void(const nn::NetworkState& critic)>;

// Trains on positive-class rows only. Vanilla and WGAN modes. The trained
// discriminator (or critic) is copied to `discriminator_out` when given.
GeneratorModel train_gan(const Table& minority, const GanConfig& config,
                         const CriticObserver& observer = {},
                         nn::NetworkState* discriminator_out = nullptr);

Table sample_synthetic(const GeneratorModel& model, std::size_t n, std::uint64_t seed);

struct OversampleTarget {
  enum class Kind { Count, Parity };
  Kind kind = Kind::Parity;
  std::size_t count = 0;

  static OversampleTarget parity() { return {Kind::Parity, 0}; }
  static OversampleTarget exactly(std::size_t n) { return {Kind::Count, n}; }

  std::size_t synthetic_rows(std::size_t majority, std::size_t minority) const {
    if (kind == Kind::Count) return count;
    return majority > minority ? majority - minority : 0;
  }
};

// majority + original minority + synthetic rows, shuffled with `seed`.
Table balance_by_oversampling(const Table& train, const GeneratorModel& model,
                              OversampleTarget target, std::uint64_t seed);

// Shared WGAN-style epoch structure: `ceil(n / batch)` generator updates per
// epoch, each preceded by `critic_steps` critic updates.
std::size_t generator_steps_per_epoch(std::size_t rows, std::size_t batch_size);

}  // namespace fingan
