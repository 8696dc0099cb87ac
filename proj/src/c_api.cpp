#include "fingan/fingan.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <optional>
#include <string>

#include "fingan/classifiers.hpp"
#include "fingan/ctgan.hpp"
#include "fingan/error.hpp"
#include "fingan/fixtures.hpp"
#include "fingan/gan.hpp"
#include "fingan/ocsvm.hpp"
#include "fingan/pipeline.hpp"

struct fingan_table {
  fingan::Table table;
};
struct fingan_generator {
  fingan::GeneratorModel model;
};
struct fingan_ocsvm {
  fingan::OcsvmModel model;
};
struct fingan_classifier {
  fingan::FittedClassifier model;
};

namespace {

thread_local std::string last_error;

int set_error(int status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename F>
int guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return FINGAN_OK;
  } catch (const fingan::Error& e) {
    return set_error(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(FINGAN_E_OUT_OF_MEMORY, "out of memory");
  } catch (const std::exception& e) {
    return set_error(FINGAN_E_INTERNAL, std::string("internal error: ") + e.what());
  } catch (...) {
    return set_error(FINGAN_E_INTERNAL, "internal error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) fingan::fail(fingan::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fingan::Json parse_json(const char* text, const char* what) {
  if (text == nullptr || *text == '\0') return fingan::Json::object();
  try {
    return fingan::Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fingan::fail(fingan::ErrorCode::Serialization, std::string(what) + ": " + e.what());
  }
}

}  // namespace

extern "C" {

const char* fingan_version(void) { return fingan::kLibraryVersion; }

const char* fingan_status_name(int status) {
  switch (status) {
    case FINGAN_OK: return "Ok";
    case FINGAN_E_OUT_OF_MEMORY: return "OutOfMemory";
    case FINGAN_E_INTERNAL: return "Internal";
    default: break;
  }
  if (status >= FINGAN_E_INVALID_ARGUMENT && status <= FINGAN_E_SERIALIZATION)
    return fingan::to_string(static_cast<fingan::ErrorCode>(status));
  return "Unknown";
}

const char* fingan_last_error(void) { return last_error.c_str(); }

void fingan_string_free(char* s) { std::free(s); }

// ---------------------------------------------------------------- tables

int fingan_table_load(const char* csv_path, const char* schema_path, fingan_table** out) {
  return guarded([&] {
    require(csv_path, "csv_path");
    require(schema_path, "schema_path");
    require(out, "out");
    *out = nullptr;
    const auto schema = fingan::Schema::load(schema_path);
    *out = new fingan_table{fingan::load_csv(csv_path, schema)};
  });
}

int fingan_table_save(const fingan_table* table, const char* csv_path) {
  return guarded([&] {
    require(table, "table");
    require(csv_path, "csv_path");
    fingan::save_csv(table->table, csv_path);
  });
}

int fingan_table_shape(const fingan_table* table, size_t* rows, size_t* cols) {
  return guarded([&] {
    require(table, "table");
    if (rows) *rows = table->table.rows();
    if (cols) *cols = table->table.cols();
  });
}

int fingan_table_count_label(const fingan_table* table, int label, size_t* out) {
  return guarded([&] {
    require(table, "table");
    require(out, "out");
    if (label != 0 && label != 1) fingan::fail(fingan::ErrorCode::InvalidArgument, "label must be 0 or 1");
    *out = table->table.count_label(label);
  });
}

void fingan_table_free(fingan_table* table) { delete table; }

int fingan_preprocess(const fingan_table* table, const char* params_path, fingan_table** out) {
  return guarded([&] {
    require(table, "table");
    require(out, "out");
    *out = nullptr;
    const auto params = fingan::fit_preprocess(table->table);
    auto standardized = fingan::apply_preprocess(table->table, params, fingan::Direction::Forward);
    if (params_path != nullptr) {
      std::ofstream f(params_path);
      if (!f) fingan::fail(fingan::ErrorCode::Io, std::string("cannot write '") + params_path + "'");
      f << params.to_json().dump(2) << '\n';
    }
    *out = new fingan_table{std::move(standardized)};
  });
}

// ---------------------------------------------------------------- generators

int fingan_generator_train(const fingan_table* train, const char* config_json, fingan_generator** out) {
  return guarded([&] {
    require(train, "train");
    require(out, "out");
    *out = nullptr;
    auto j = parse_json(config_json, "generator config");
    const std::string mode = j.value("mode", std::string("vanilla"));
    const auto minority = train->table.with_label(1);
    if (fingan::gan_mode_from_string(mode) == fingan::GanMode::Ctgan) {
      j.erase("mode");
      *out = new fingan_generator{fingan::train_ctgan(minority, fingan::CtganConfig::from_json(j))};
    } else {
      *out = new fingan_generator{fingan::train_gan(minority, fingan::GanConfig::from_json(j))};
    }
  });
}

int fingan_generator_load(const char* path, fingan_generator** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new fingan_generator{fingan::GeneratorModel::load(path)};
  });
}

int fingan_generator_save(const fingan_generator* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    model->model.save(path);
  });
}

int fingan_generator_sample(const fingan_generator* model, size_t n, uint64_t seed, const char* condition_column,
                            const char* condition_category, fingan_table** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = nullptr;
    std::optional<fingan::Condition> condition;
    if (condition_column != nullptr || condition_category != nullptr) {
      require(condition_column, "condition_column");
      require(condition_category, "condition_category");
      condition = fingan::Condition{condition_column, condition_category};
    }
    *out = new fingan_table{fingan::sample_model(model->model, n, seed, condition)};
  });
}

int fingan_generator_mode(const fingan_generator* model, const char** mode) {
  return guarded([&] {
    require(model, "model");
    require(mode, "mode");
    *mode = fingan::to_string(model->model.mode);
  });
}

void fingan_generator_free(fingan_generator* model) { delete model; }

// ---------------------------------------------------------------- ocsvm

int fingan_undersample(const fingan_table* train, double nu, const char* kernel_json, uint64_t seed,
                       fingan_table** support_rows, fingan_ocsvm** model) {
  return guarded([&] {
    require(train, "train");
    require(support_rows, "support_rows");
    *support_rows = nullptr;
    if (model) *model = nullptr;
    const auto kernel = fingan::KernelSpec::from_json(parse_json(kernel_json, "kernel"));
    fingan::OcsvmModel fitted;
    auto rows = fingan::undersample_majority(train->table, nu, kernel, seed, &fitted);
    auto* t = new fingan_table{std::move(rows)};
    if (model) {
      try {
        *model = new fingan_ocsvm{std::move(fitted)};
      } catch (...) {
        delete t;
        throw;
      }
    }
    *support_rows = t;
  });
}

int fingan_ocsvm_save(const fingan_ocsvm* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    model->model.save(path);
  });
}

int fingan_ocsvm_support_count(const fingan_ocsvm* model, size_t* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = model->model.support_indices.size();
  });
}

void fingan_ocsvm_free(fingan_ocsvm* model) { delete model; }

// ---------------------------------------------------------------- classifiers

int fingan_classifier_fit(const fingan_table* train, const char* spec_json, uint64_t seed, fingan_classifier** out) {
  return guarded([&] {
    require(train, "train");
    require(spec_json, "spec_json");
    require(out, "out");
    *out = nullptr;
    const auto spec = fingan::ClassifierSpec::from_json(parse_json(spec_json, "classifier spec"));
    *out = new fingan_classifier{fingan::fit_classifier(spec, train->table, seed)};
  });
}

int fingan_classifier_load(const char* path, fingan_classifier** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new fingan_classifier{fingan::FittedClassifier::load(path)};
  });
}

int fingan_classifier_save(const fingan_classifier* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    model->model.save(path);
  });
}

int fingan_classifier_predict_proba(const fingan_classifier* model, const fingan_table* rows, double* out,
                                    size_t capacity) {
  return guarded([&] {
    require(model, "model");
    require(rows, "rows");
    require(out, "out");
    if (capacity < rows->table.rows())
      fingan::fail(fingan::ErrorCode::LengthMismatch, "output buffer holds " + std::to_string(capacity) +
                                                          " values for " + std::to_string(rows->table.rows()) +
                                                          " rows");
    const auto p = fingan::predict_proba(model->model, rows->table);
    std::copy(p.begin(), p.end(), out);
  });
}

void fingan_classifier_free(fingan_classifier* model) { delete model; }

// ---------------------------------------------------------------- experiments

int fingan_run_experiment(const char* config_path, const char* output_dir, size_t jobs, char** report_json) {
  return guarded([&] {
    require(config_path, "config_path");
    if (report_json) *report_json = nullptr;
    auto config = fingan::ExperimentConfig::load(config_path);
    if (output_dir != nullptr) config.output_dir = output_dir;
    if (jobs > 0) config.jobs = jobs;
    const auto report = fingan::run_experiment(config);
    if (report_json) *report_json = duplicate(report.to_json().dump(2));
  });
}

int fingan_render_report(const char* report_path, const char* what, char** text) {
  return guarded([&] {
    require(report_path, "report_path");
    require(text, "text");
    *text = nullptr;
    std::ifstream in(report_path);
    if (!in) fingan::fail(fingan::ErrorCode::Io, std::string("cannot open '") + report_path + "'");
    fingan::Json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fingan::fail(fingan::ErrorCode::Serialization, std::string("report: ") + e.what());
    }
    const auto report = fingan::ExperimentReport::from_json(j);
    const std::string kind = what == nullptr ? "table" : what;
    if (kind == "table") *text = duplicate(report.to_text());
    else if (kind == "rules") *text = duplicate(report.rules_text());
    else fingan::fail(fingan::ErrorCode::InvalidArgument, "render: unknown view '" + kind + "'");
  });
}

int fingan_write_fixtures(const char* dir, char** files_json) {
  return guarded([&] {
    require(dir, "dir");
    if (files_json) *files_json = nullptr;
    const auto files = fingan::fixtures::write_all(dir);
    if (files_json) *files_json = duplicate(fingan::Json(files).dump());
  });
}

}  // extern "C"
