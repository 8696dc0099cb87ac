// Command-line front end. Talks to the library only through fingan.h.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fingan/fingan.h"
#include "json.hpp"

namespace {

using Json = nlohmann::json;

struct Failure {
  int status;
  std::string message;
};

void check(int status) {
  if (status != FINGAN_OK) throw Failure{status, fingan_last_error()};
}

struct TableDeleter {
  void operator()(fingan_table* t) const { fingan_table_free(t); }
};
struct GeneratorDeleter {
  void operator()(fingan_generator* g) const { fingan_generator_free(g); }
};
struct OcsvmDeleter {
  void operator()(fingan_ocsvm* m) const { fingan_ocsvm_free(m); }
};
struct StringDeleter {
  void operator()(char* s) const { fingan_string_free(s); }
};
using TablePtr = std::unique_ptr<fingan_table, TableDeleter>;
using GeneratorPtr = std::unique_ptr<fingan_generator, GeneratorDeleter>;
using OcsvmPtr = std::unique_ptr<fingan_ocsvm, OcsvmDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

TablePtr load_table(const std::string& csv, const std::string& schema) {
  fingan_table* t = nullptr;
  check(fingan_table_load(csv.c_str(), schema.c_str(), &t));
  return TablePtr(t);
}

std::size_t rows_of(const fingan_table* t) {
  std::size_t rows = 0;
  check(fingan_table_shape(t, &rows, nullptr));
  return rows;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{FINGAN_E_IO, "cannot open '" + path + "'"};
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Failure{FINGAN_E_SERIALIZATION, path + ": " + e.what()};
  }
}

struct Output {
  bool json = false;

  void emit(const Json& result, const std::string& human) const {
    if (json) {
      Json j = result;
      j["status"] = "ok";
      std::cout << j.dump(2) << '\n';
    } else if (!human.empty()) {
      std::cout << human;
      if (human.back() != '\n') std::cout << '\n';
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FinGAN: GAN-based oversampling, OCSVM undersampling and classifier evaluation for imbalanced tabular data"};
  app.name("fingan");
  app.require_subcommand(1);
  app.fallthrough();
  Output out;
  app.add_flag("--json", out.json, "Print machine-readable JSON on stdout");
  app.set_version_flag("--version", std::string(fingan_version()));

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Fit z-score standardization and write the standardized table");
  std::string pre_data, pre_schema, pre_out, pre_params;
  pre->add_option("--data", pre_data, "Input CSV")->required()->check(CLI::ExistingFile);
  pre->add_option("--schema", pre_schema, "Schema JSON")->required()->check(CLI::ExistingFile);
  pre->add_option("--out", pre_out, "Output CSV")->required();
  pre->add_option("--params", pre_params, "Write the fitted parameters to this JSON file");

  // train-gan
  auto* tg = app.add_subcommand("train-gan", "Train a generator on the positive rows of a table");
  std::string tg_data, tg_schema, tg_out, tg_config, tg_mode = "vanilla";
  std::optional<std::size_t> tg_epochs, tg_batch, tg_latent;
  std::uint64_t tg_seed = 0;
  tg->add_option("--data", tg_data, "Training CSV")->required()->check(CLI::ExistingFile);
  tg->add_option("--schema", tg_schema, "Schema JSON")->required()->check(CLI::ExistingFile);
  tg->add_option("--mode", tg_mode, "vanilla, wgan or ctgan")
      ->check(CLI::IsMember({"vanilla", "gan", "wgan", "ctgan"}))
      ->capture_default_str();
  tg->add_option("--config", tg_config, "JSON file with further generator settings")->check(CLI::ExistingFile);
  tg->add_option("--epochs", tg_epochs, "Training epochs (default 3000)");
  tg->add_option("--batch-size", tg_batch, "Batch size (default 64)");
  tg->add_option("--latent-dim", tg_latent, "Latent dimension (default 64)");
  tg->add_option("--seed", tg_seed, "Random seed")->capture_default_str();
  tg->add_option("--out", tg_out, "Output model JSON")->required();

  // sample
  auto* sa = app.add_subcommand("sample", "Draw synthetic rows from a trained generator");
  std::string sa_model, sa_out, sa_condition;
  std::size_t sa_n = 1500;
  std::uint64_t sa_seed = 0;
  sa->add_option("--model", sa_model, "Generator model JSON")->required()->check(CLI::ExistingFile);
  sa->add_option("--n", sa_n, "Number of rows")->capture_default_str();
  sa->add_option("--seed", sa_seed, "Random seed")->capture_default_str();
  sa->add_option("--condition", sa_condition, "CTGAN only: fix a categorical column, as column=level");
  sa->add_option("--out", sa_out, "Output CSV")->required();

  // undersample
  auto* us = app.add_subcommand("undersample", "Keep the majority rows that are one-class SVM support vectors");
  std::string us_data, us_schema, us_out, us_model, us_kernel = "sigmoid", us_gamma = "auto";
  double us_nu = 0.5, us_coef0 = 0.0;
  std::uint64_t us_seed = 0;
  us->add_option("--data", us_data, "Training CSV")->required()->check(CLI::ExistingFile);
  us->add_option("--schema", us_schema, "Schema JSON")->required()->check(CLI::ExistingFile);
  us->add_option("--nu", us_nu, "nu in (0, 1]")->capture_default_str();
  us->add_option("--kernel", us_kernel, "sigmoid, rbf or linear")
      ->check(CLI::IsMember({"sigmoid", "rbf", "linear"}))
      ->capture_default_str();
  us->add_option("--gamma", us_gamma, "Kernel gamma, or auto for 1/features")->capture_default_str();
  us->add_option("--coef0", us_coef0, "Sigmoid kernel offset")->capture_default_str();
  us->add_option("--seed", us_seed, "Random seed")->capture_default_str();
  us->add_option("--out", us_out, "Output CSV of kept majority rows")->required();
  us->add_option("--model-out", us_model, "Write the fitted OCSVM model JSON here");

  // run
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  std::string run_config, run_out;
  std::size_t run_jobs = 0;
  run->add_option("--config", run_config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Output directory (overrides the config)");
  run->add_option("--jobs", run_jobs, "Folds evaluated in parallel (default: config value, else 1)");

  // report
  auto* rep = app.add_subcommand("report", "Print a saved experiment report");
  std::string rep_in;
  bool rep_rules = false;
  rep->add_option("--in", rep_in, "Run directory or report.json")->required()->check(CLI::ExistingPath);
  rep->add_flag("--rules", rep_rules, "Print the extracted tree rules instead of the metric tables");

  // fixtures
  auto* fx = app.add_subcommand("fixtures", "Write the toy datasets used by the tests");
  std::string fx_out;
  fx->add_option("--out", fx_out, "Output directory")->required();

  // Global options are all flags, so the first bare word names the subcommand.
  for (int i = 1; i < argc; ++i) {
    const std::string word = argv[i];
    if (word.empty() || word[0] == '-') continue;
    if (app.get_subcommand_no_throw(word) == nullptr) {
      std::cerr << "fingan: unknown subcommand '" << word << "'\n\n" << app.help();
      return 2;
    }
    break;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "fingan: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*pre) {
      auto table = load_table(pre_data, pre_schema);
      fingan_table* standardized = nullptr;
      check(fingan_preprocess(table.get(), pre_params.empty() ? nullptr : pre_params.c_str(), &standardized));
      TablePtr result(standardized);
      check(fingan_table_save(result.get(), pre_out.c_str()));
      const auto rows = rows_of(result.get());
      out.emit({{"rows", rows}, {"out", pre_out}, {"params", pre_params.empty() ? Json(nullptr) : Json(pre_params)}},
               "wrote " + std::to_string(rows) + " standardized rows to " + pre_out);
    } else if (*tg) {
      auto table = load_table(tg_data, tg_schema);
      Json config = tg_config.empty() ? Json::object() : read_json_file(tg_config);
      config["mode"] = tg_mode;
      if (tg_epochs) config["epochs"] = *tg_epochs;
      if (tg_batch) config["batch_size"] = *tg_batch;
      if (tg_latent) config["latent_dim"] = *tg_latent;
      config["seed"] = tg_seed;
      fingan_generator* g = nullptr;
      check(fingan_generator_train(table.get(), config.dump().c_str(), &g));
      GeneratorPtr model(g);
      check(fingan_generator_save(model.get(), tg_out.c_str()));
      std::size_t positives = 0;
      check(fingan_table_count_label(table.get(), 1, &positives));
      const char* mode = nullptr;
      check(fingan_generator_mode(model.get(), &mode));
      out.emit({{"mode", mode}, {"training_rows", positives}, {"out", tg_out}},
               "trained " + std::string(mode) + " generator on " + std::to_string(positives) + " rows -> " + tg_out);
    } else if (*sa) {
      fingan_generator* g = nullptr;
      check(fingan_generator_load(sa_model.c_str(), &g));
      GeneratorPtr model(g);
      std::string column, level;
      if (!sa_condition.empty()) {
        const auto eq = sa_condition.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == sa_condition.size()) {
          std::cerr << "fingan: --condition expects column=level\n";
          return 2;
        }
        column = sa_condition.substr(0, eq);
        level = sa_condition.substr(eq + 1);
      }
      fingan_table* t = nullptr;
      check(fingan_generator_sample(model.get(), sa_n, sa_seed, column.empty() ? nullptr : column.c_str(),
                                    column.empty() ? nullptr : level.c_str(), &t));
      TablePtr table(t);
      check(fingan_table_save(table.get(), sa_out.c_str()));
      out.emit({{"rows", rows_of(table.get())}, {"seed", sa_seed}, {"out", sa_out}},
               "wrote " + std::to_string(rows_of(table.get())) + " synthetic rows to " + sa_out);
    } else if (*us) {
      auto table = load_table(us_data, us_schema);
      Json kernel{{"kind", us_kernel}, {"coef0", us_coef0}};
      if (us_gamma == "auto") {
        kernel["gamma"] = "auto";
      } else {
        try {
          std::size_t used = 0;
          kernel["gamma"] = std::stod(us_gamma, &used);
          if (used != us_gamma.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
          std::cerr << "fingan: --gamma expects a number or auto\n";
          return 2;
        }
      }
      fingan_table* kept = nullptr;
      fingan_ocsvm* m = nullptr;
      check(fingan_undersample(table.get(), us_nu, kernel.dump().c_str(), us_seed, &kept, &m));
      TablePtr kept_rows(kept);
      OcsvmPtr model(m);
      check(fingan_table_save(kept_rows.get(), us_out.c_str()));
      if (!us_model.empty()) check(fingan_ocsvm_save(model.get(), us_model.c_str()));
      std::size_t majority = 0, svs = 0;
      check(fingan_table_count_label(table.get(), 0, &majority));
      check(fingan_ocsvm_support_count(model.get(), &svs));
      out.emit({{"majority_rows", majority}, {"support_vectors", svs}, {"out", us_out}},
               "kept " + std::to_string(svs) + " of " + std::to_string(majority) + " majority rows -> " + us_out);
    } else if (*run) {
      char* report = nullptr;
      check(fingan_run_experiment(run_config.c_str(), run_out.empty() ? nullptr : run_out.c_str(), run_jobs, &report));
      StringPtr owned(report);
      const Json j = Json::parse(report);
      const std::string dir = run_out.empty() ? j.at("config").at("output_dir").get<std::string>() : run_out;
      if (out.json) {
        out.emit({{"output_dir", dir}, {"best", j.at("best")}, {"report", j}}, "");
      } else {
        char* text = nullptr;
        check(fingan_render_report((std::filesystem::path(dir) / "report.json").string().c_str(), "table", &text));
        StringPtr owned_text(text);
        std::cout << text << "\nreport written to " << dir << '\n';
      }
    } else if (*rep) {
      std::filesystem::path path(rep_in);
      if (std::filesystem::is_directory(path)) path /= "report.json";
      char* text = nullptr;
      check(fingan_render_report(path.string().c_str(), rep_rules ? "rules" : "table", &text));
      StringPtr owned(text);
      out.emit({{"report", path.string()}, {"text", std::string(text)}}, text);
    } else if (*fx) {
      char* files = nullptr;
      check(fingan_write_fixtures(fx_out.c_str(), &files));
      StringPtr owned(files);
      const Json list = Json::parse(files);
      std::ostringstream human;
      for (const auto& f : list) human << f.get<std::string>() << '\n';
      out.emit({{"files", list}}, human.str());
    }
  } catch (const Failure& f) {
    std::cerr << "fingan: error: " << fingan_status_name(f.status) << ": " << f.message << '\n';
    if (out.json)
      std::cout << Json{{"status", "error"}, {"code", fingan_status_name(f.status)}, {"message", f.message}}.dump(2)
                << '\n';
    return 1;
  }
  return 0;
}
