#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fingan/data_model.hpp"

// Small synthetic datasets used by the test suites and `fingan fixtures`.
namespace fingan::fixtures {

inline constexpr double kBimodalLow = 0.25;
inline constexpr double kBimodalHigh = 0.75;
inline constexpr double kBimodalSigma = 0.08;

// One numeric column "x"; every row positive. Half the rows come from
// N(0.25, 0.08^2), half from N(0.75, 0.08^2), clamped to [0, 1].
Table bimodal(std::size_t rows = 128, std::uint64_t seed = 7, double sigma = kBimodalSigma);

// Half from N(0, 0.1^2), half from N(10, 0.1^2).
std::vector<double> separated_mixture(std::size_t n = 2000, std::uint64_t seed = 11);

// Positive rows with a categorical column "channel" (levels common/rare at
// 95%/5%) and a numeric column "amount" whose scale depends on the level.
Table rare_category(std::size_t rows = 200, std::uint64_t seed = 13);

// Imbalanced binary task: numerics "f1", "f2" and categorical "segment".
// Positives are shifted along both numerics and favour segment "b".
Table blobs(std::size_t negatives = 950, std::size_t positives = 50, std::uint64_t seed = 17);

// Writes every fixture as <name>.csv plus <name>.schema.json into `dir`.
std::vector<std::string> write_all(const std::string& dir);

}  // namespace fingan::fixtures
