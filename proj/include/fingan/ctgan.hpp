#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fingan/gan.hpp"
#include "fingan/generator_model.hpp"

namespace fingan {

struct CtganConfig {
  std::size_t epochs = 3000;
  std::size_t batch_size = 64;
  std::size_t latent_dim = 64;
  std::size_t max_modes = 10;
  double prune_threshold = 0.005;
  nn::AdamConfig adam{2e-4, 0.9, 0.999, 1e-8};
  double wgan_clip = 0.01;
  std::size_t critic_steps = 5;
  std::uint64_t seed = 0;
  std::vector<std::size_t> generator_hidden{64, 128};
  std::vector<std::size_t> discriminator_hidden{128, 64, 32, 16, 8};
  double leaky_slope = 0.2;

  void validate() const;
  Json to_json() const;
  static CtganConfig from_json(const Json& j);
};

// Log-likelihood after every EM iteration of the selected mixture.
struct EmTrace {
  std::vector<double> log_likelihood;
};

// Mixture with at most `max_modes` components; the component count is chosen
// by BIC, then components lighter than `prune_threshold` are dropped.
ModeNormalizer fit_mode_normalizer(std::span<const double> values, std::size_t max_modes,
                                   std::uint64_t seed, double prune_threshold = 0.005,
                                   EmTrace* trace = nullptr);

struct ModeEncoding {
  double alpha = 0.0;
  std::size_t mode = 0;
  std::vector<double> onehot;
};

ModeEncoding encode_continuous(double value, const ModeNormalizer& norm, Rng& rng);
ModeEncoding encode_continuous(double value, const ModeNormalizer& norm, std::uint64_t seed);

// Throws InvalidOneHot unless `onehot` has exactly one entry equal to 1 and
// the rest 0.
double decode_continuous(double alpha, std::span<const double> onehot, const ModeNormalizer& norm);
double decode_continuous(double alpha, std::size_t mode, const ModeNormalizer& norm);

struct CondVector {
  std::size_t column = 0;    // index among the discrete columns
  std::size_t category = 0;  // level within that column
  std::vector<double> onehot;
};

// `frequencies[c][k]` is the count of level k in discrete column c.
CondVector sample_condvec(const std::vector<std::vector<double>>& frequencies, Rng& rng);
CondVector sample_condvec(const std::vector<std::vector<double>>& frequencies, std::uint64_t seed);

GeneratorModel train_ctgan(const Table& minority, const CtganConfig& config,
                           const CriticObserver& observer = {});

// With `enforce_condition` off, the conditioned column is left as generated.
Table sample_ctgan(const GeneratorModel& model, std::size_t n, std::uint64_t seed,
                   const std::optional<Condition>& condition = std::nullopt,
                   bool enforce_condition = true);

}  // namespace fingan
