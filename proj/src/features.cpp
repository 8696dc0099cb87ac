#include "fingan/features.hpp"

#include "fingan/error.hpp"

namespace fingan {

namespace {

std::size_t encoded_width(const Schema& schema, FeatureEncoding encoding) {
  if (encoding == FeatureEncoding::Raw) return schema.columns.size();
  std::size_t w = 0;
  for (const auto& c : schema.columns) w += c.kind == ColumnKind::Numeric ? 1 : c.categories.size();
  return w;
}

}  // namespace

FeatureEncoder FeatureEncoder::fit(const Table& table, FeatureEncoding encoding) {
  FeatureEncoder e;
  e.encoding = encoding;
  e.schema = table.schema();
  e.width = encoded_width(e.schema, encoding);
  if (encoding == FeatureEncoding::StandardizedOneHot) e.preprocess = fit_preprocess(table);
  return e;
}

nn::Matrix FeatureEncoder::transform(const Table& table) const {
  if (!(table.schema() == schema)) fail(ErrorCode::SchemaMismatch, "features: table schema differs from the fitted schema");
  const auto rows = static_cast<Eigen::Index>(table.rows());
  nn::Matrix x = nn::Matrix::Zero(rows, static_cast<Eigen::Index>(width));
  if (encoding == FeatureEncoding::Raw) {
    for (std::size_t r = 0; r < table.rows(); ++r)
      for (std::size_t c = 0; c < table.cols(); ++c)
        x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = table.at(r, c);
    return x;
  }
  const Table scaled = apply_preprocess(table, preprocess, Direction::Forward);
  for (std::size_t r = 0; r < scaled.rows(); ++r) {
    Eigen::Index col = 0;
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t c = 0; c < scaled.cols(); ++c) {
      const auto& spec = schema.columns[c];
      if (spec.kind == ColumnKind::Numeric) {
        x(row, col++) = scaled.at(r, c);
      } else {
        x(row, col + static_cast<Eigen::Index>(scaled.category(r, c))) = 1.0;
        col += static_cast<Eigen::Index>(spec.categories.size());
      }
    }
  }
  return x;
}

std::vector<std::string> FeatureEncoder::feature_names() const {
  std::vector<std::string> names;
  for (const auto& c : schema.columns) {
    if (encoding == FeatureEncoding::Raw || c.kind == ColumnKind::Numeric) {
      names.push_back(c.name);
    } else {
      for (const auto& level : c.categories) names.push_back(c.name + "=" + level);
    }
  }
  return names;
}

Json FeatureEncoder::to_json() const {
  Json j = {{"encoding", encoding == FeatureEncoding::Raw ? "raw" : "standardized_onehot"},
            {"schema", schema.to_json()},
            {"width", width}};
  if (encoding == FeatureEncoding::StandardizedOneHot) j["preprocess"] = preprocess.to_json();
  return j;
}

FeatureEncoder FeatureEncoder::from_json(const Json& j) {
  FeatureEncoder e;
  try {
    const auto enc = j.at("encoding").get<std::string>();
    if (enc == "raw") e.encoding = FeatureEncoding::Raw;
    else if (enc == "standardized_onehot") e.encoding = FeatureEncoding::StandardizedOneHot;
    else fail(ErrorCode::Serialization, "features: unknown encoding '" + enc + "'");
    e.schema = Schema::from_json(j.at("schema"));
    e.width = j.at("width").get<std::size_t>();
    if (e.width != encoded_width(e.schema, e.encoding))
      fail(ErrorCode::Serialization, "features: width does not match the schema");
    if (e.encoding == FeatureEncoding::StandardizedOneHot) e.preprocess = PreprocessParams::from_json(j.at("preprocess"));
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::Serialization, std::string("features: ") + ex.what());
  }
  return e;
}

}  // namespace fingan
