#pragma once

#include "fingan/data_model.hpp"
#include "fingan/nn.hpp"

namespace fingan {

enum class FeatureEncoding {
  StandardizedOneHot,  // z-scored numerics followed by one-hot categoricals
  Raw,                 // numerics as-is, categoricals as integer codes
};

// Turns a Table into a dense design matrix. The column order is schema order
// for Raw; for StandardizedOneHot each categorical expands in place.
struct FeatureEncoder {
  FeatureEncoding encoding = FeatureEncoding::Raw;
  PreprocessParams preprocess;  // fitted only for StandardizedOneHot
  Schema schema;
  std::size_t width = 0;

  static FeatureEncoder fit(const Table& table, FeatureEncoding encoding);
  nn::Matrix transform(const Table& table) const;  // throws SchemaMismatch

  // Display names of the encoded columns ("segment=b" for one-hot units).
  std::vector<std::string> feature_names() const;

  Json to_json() const;
  static FeatureEncoder from_json(const Json& j);
};

}  // namespace fingan
