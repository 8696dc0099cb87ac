#include "fingan/generator_model.hpp"

#include <fstream>
#include <sstream>

#include "fingan/ctgan.hpp"
#include "fingan/error.hpp"
#include "fingan/gan.hpp"

namespace fingan {

namespace {

constexpr int kFormatVersion = 1;

const char* kind_name(ColumnKind k) { return k == ColumnKind::Numeric ? "numeric" : "categorical"; }

ColumnKind kind_from_name(const std::string& s) {
  if (s == "numeric") return ColumnKind::Numeric;
  if (s == "categorical") return ColumnKind::Categorical;
  fail(ErrorCode::Serialization, "generator model: unknown column kind '" + s + "'");
}

Json layout_json(const GanLayout& layout) {
  Json blocks = Json::array();
  for (const auto& b : layout.blocks)
    blocks.push_back({{"column", b.column},
                      {"kind", kind_name(b.kind)},
                      {"offset", b.offset},
                      {"width", b.width},
                      {"min", b.min},
                      {"max", b.max}});
  return {{"blocks", blocks},
          {"width", layout.width},
          {"numeric_offset", layout.numeric_offset},
          {"numeric_width", layout.numeric_width}};
}

GanLayout layout_from_json(const Json& j) {
  GanLayout layout;
  for (const auto& b : j.at("blocks"))
    layout.blocks.push_back({b.at("column").get<std::size_t>(), kind_from_name(b.at("kind").get<std::string>()),
                             b.at("offset").get<std::size_t>(), b.at("width").get<std::size_t>(),
                             b.at("min").get<double>(), b.at("max").get<double>()});
  layout.width = j.at("width").get<std::size_t>();
  layout.numeric_offset = j.at("numeric_offset").get<std::size_t>();
  layout.numeric_width = j.at("numeric_width").get<std::size_t>();
  return layout;
}

Json ctgan_json(const CtganTransform& t) {
  Json cols = Json::array();
  for (const auto& c : t.columns) {
    Json jc = {{"column", c.column}, {"kind", kind_name(c.kind)}, {"offset", c.offset}, {"width", c.width}};
    if (c.kind == ColumnKind::Numeric) {
      jc["normalizer"] = {{"weights", c.normalizer.weights},
                          {"means", c.normalizer.means},
                          {"stds", c.normalizer.stds},
                          {"sigma_floor", c.normalizer.sigma_floor}};
      jc["min"] = c.min;
      jc["max"] = c.max;
    } else {
      jc["cond_offset"] = c.cond_offset;
      jc["frequencies"] = c.frequencies;
    }
    cols.push_back(std::move(jc));
  }
  return {{"columns", cols}, {"width", t.width}, {"cond_width", t.cond_width}};
}

CtganTransform ctgan_from_json(const Json& j) {
  CtganTransform t;
  for (const auto& jc : j.at("columns")) {
    CtganColumn c;
    c.column = jc.at("column").get<std::size_t>();
    c.kind = kind_from_name(jc.at("kind").get<std::string>());
    c.offset = jc.at("offset").get<std::size_t>();
    c.width = jc.at("width").get<std::size_t>();
    if (c.kind == ColumnKind::Numeric) {
      const auto& n = jc.at("normalizer");
      c.normalizer.weights = n.at("weights").get<std::vector<double>>();
      c.normalizer.means = n.at("means").get<std::vector<double>>();
      c.normalizer.stds = n.at("stds").get<std::vector<double>>();
      c.normalizer.sigma_floor = n.at("sigma_floor").get<double>();
      if (c.normalizer.means.size() != c.normalizer.modes() || c.normalizer.stds.size() != c.normalizer.modes() ||
          c.normalizer.modes() == 0)
        fail(ErrorCode::Serialization, "generator model: malformed mode normalizer");
      c.min = jc.at("min").get<double>();
      c.max = jc.at("max").get<double>();
    } else {
      c.cond_offset = jc.at("cond_offset").get<std::size_t>();
      c.frequencies = jc.at("frequencies").get<std::vector<double>>();
    }
    t.columns.push_back(std::move(c));
  }
  t.width = j.at("width").get<std::size_t>();
  t.cond_width = j.at("cond_width").get<std::size_t>();
  return t;
}

}  // namespace

const char* to_string(GanMode mode) {
  switch (mode) {
    case GanMode::Vanilla: return "vanilla";
    case GanMode::Wgan: return "wgan";
    case GanMode::Ctgan: return "ctgan";
  }
  return "vanilla";
}

GanMode gan_mode_from_string(const std::string& s) {
  if (s == "vanilla" || s == "gan") return GanMode::Vanilla;
  if (s == "wgan") return GanMode::Wgan;
  if (s == "ctgan") return GanMode::Ctgan;
  fail(ErrorCode::InvalidArgument, "unknown GAN mode '" + s + "'");
}

std::vector<std::size_t> CtganTransform::discrete_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].kind == ColumnKind::Categorical) out.push_back(i);
  return out;
}

Json GeneratorModel::to_json() const {
  Json j = {{"format", "fingan.generator"},
            {"version", kFormatVersion},
            {"mode", fingan::to_string(mode)},
            {"schema", schema.to_json()},
            {"latent_dim", latent_dim},
            {"categorical_decode", categorical_decode == CategoricalDecode::Argmax ? "argmax" : "sample"},
            {"generator", nn::to_json(generator)},
            {"history",
             {{"discriminator_loss", history.discriminator_loss},
              {"generator_loss", history.generator_loss}}}};
  if (const auto* g = std::get_if<GanTransform>(&transform)) {
    j["transform"] = {{"preprocess", g->preprocess.to_json()},
                      {"layout", layout_json(g->layout)},
                      {"raw_min", g->raw_min},
                      {"raw_max", g->raw_max}};
  } else {
    j["transform"] = ctgan_json(std::get<CtganTransform>(transform));
  }
  return j;
}

GeneratorModel GeneratorModel::from_json(const Json& j) {
  GeneratorModel m;
  try {
    if (j.at("format").get<std::string>() != "fingan.generator")
      fail(ErrorCode::Serialization, "generator model: wrong format tag");
    if (j.at("version").get<int>() != kFormatVersion)
      fail(ErrorCode::Serialization, "generator model: unsupported version");
    m.mode = gan_mode_from_string(j.at("mode").get<std::string>());
    m.schema = Schema::from_json(j.at("schema"));
    m.latent_dim = j.at("latent_dim").get<std::size_t>();
    m.categorical_decode = j.value("categorical_decode", std::string("argmax")) == "sample"
                               ? CategoricalDecode::Sample
                               : CategoricalDecode::Argmax;
    m.generator = nn::state_from_json(j.at("generator"));
    m.history.discriminator_loss = j.at("history").at("discriminator_loss").get<std::vector<double>>();
    m.history.generator_loss = j.at("history").at("generator_loss").get<std::vector<double>>();
    const auto& t = j.at("transform");
    if (m.mode == GanMode::Ctgan) {
      m.transform = ctgan_from_json(t);
    } else {
      GanTransform g;
      g.preprocess = PreprocessParams::from_json(t.at("preprocess"));
      g.layout = layout_from_json(t.at("layout"));
      g.raw_min = t.at("raw_min").get<std::vector<double>>();
      g.raw_max = t.at("raw_max").get<std::vector<double>>();
      m.transform = std::move(g);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, std::string("generator model: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) fail(ErrorCode::Serialization, e.what());
    throw;
  }
  return m;
}

void GeneratorModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path + "'");
  out << to_json().dump() << '\n';
  if (!out) fail(ErrorCode::Io, "write failed for '" + path + "'");
}

GeneratorModel GeneratorModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Json j;
  try {
    j = Json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Serialization, "'" + path + "': " + e.what());
  }
  return from_json(j);
}

Table sample_model(const GeneratorModel& model, std::size_t n, std::uint64_t seed,
                   const std::optional<Condition>& condition) {
  if (model.mode == GanMode::Ctgan) return sample_ctgan(model, n, seed, condition);
  if (condition) fail(ErrorCode::InvalidArgument, "conditional sampling requires a CTGAN model");
  return sample_synthetic(model, n, seed);
}

}  // namespace fingan
