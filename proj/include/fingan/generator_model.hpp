#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fingan/data_model.hpp"
#include "fingan/nn.hpp"

namespace fingan {

enum class GanMode { Vanilla, Wgan, Ctgan };

const char* to_string(GanMode mode);
GanMode gan_mode_from_string(const std::string& s);

enum class CategoricalDecode { Argmax, Sample };

// Column block of the GAN encoding. Categorical blocks come first (one-hot,
// in schema order), followed by one unit per numeric column scaled to [0, 1].
struct GanBlock {
  std::size_t column = 0;
  ColumnKind kind = ColumnKind::Numeric;
  std::size_t offset = 0;
  std::size_t width = 1;
  double min = 0.0;  // numeric: range of the standardized training values
  double max = 0.0;
};

struct GanLayout {
  std::vector<GanBlock> blocks;
  std::size_t width = 0;
  std::size_t numeric_offset = 0;
  std::size_t numeric_width = 0;
};

struct GanTransform {
  PreprocessParams preprocess;
  GanLayout layout;
  std::vector<double> raw_min, raw_max;  // per schema column, numeric only
};

// Gaussian mixture fitted to one continuous column.
struct ModeNormalizer {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> stds;
  double sigma_floor = 1e-6;

  std::size_t modes() const { return weights.size(); }
};

struct CtganColumn {
  std::size_t column = 0;
  ColumnKind kind = ColumnKind::Numeric;
  std::size_t offset = 0;  // numeric: alpha at offset, mode one-hot after it
  std::size_t width = 0;
  ModeNormalizer normalizer;             // numeric only
  double min = 0.0, max = 0.0;           // numeric: observed training range
  std::size_t cond_offset = 0;           // categorical: block in the cond vector
  std::vector<double> frequencies;       // categorical: training counts per level
};

struct CtganTransform {
  std::vector<CtganColumn> columns;
  std::size_t width = 0;
  std::size_t cond_width = 0;

  std::vector<std::size_t> discrete_columns() const;  // indices into `columns`
};

struct TrainingHistory {
  std::vector<double> discriminator_loss;  // per epoch mean
  std::vector<double> generator_loss;
};

struct GeneratorModel {
  GanMode mode = GanMode::Vanilla;
  Schema schema;
  std::size_t latent_dim = 64;
  nn::NetworkState generator;
  std::variant<GanTransform, CtganTransform> transform;
  TrainingHistory history;
  CategoricalDecode categorical_decode = CategoricalDecode::Argmax;

  Json to_json() const;
  static GeneratorModel from_json(const Json& j);
  void save(const std::string& path) const;
  static GeneratorModel load(const std::string& path);
};

// Fixes one categorical column to a level when sampling.
struct Condition {
  std::string column;
  std::string category;
};

// Dispatches on the model's mode. Conditions are only meaningful for CTGAN
// models; other modes reject them.
Table sample_model(const GeneratorModel& model, std::size_t n, std::uint64_t seed,
                   const std::optional<Condition>& condition = std::nullopt);

}  // namespace fingan
