// ghsom: batch entry points (train, eval, export, serve) over the C API.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 internal error.
// Every option can also be set through an environment variable named
// GHSOM_<OPTION> (upper case, dashes as underscores), e.g. GHSOM_TAU1=0.05.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ghsom/ghsom.h"
#include "http_server.hpp"

namespace {

using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(ghsom_status s) {
  switch (s) {
    case GHSOM_E_INVALID_ARGUMENT: return kExitUsage;
    case GHSOM_E_DATA:
    case GHSOM_E_IO:
    case GHSOM_E_FORMAT:
    case GHSOM_E_VERSION:
    case GHSOM_E_INTEGRITY: return kExitData;
    default: return kExitInternal;
  }
}

void check(ghsom_status s) {
  if (s != GHSOM_OK) throw Failure{exit_code_for(s), ghsom_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  ghsom_string_free(s);
  return out;
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using DatasetPtr = std::unique_ptr<ghsom_dataset, Deleter<ghsom_dataset, ghsom_dataset_free>>;
using ParamsPtr = std::unique_ptr<ghsom_params, Deleter<ghsom_params, ghsom_params_free>>;
using ModelPtr = std::unique_ptr<ghsom_model, Deleter<ghsom_model, ghsom_model_free>>;

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{kExitData, "cannot write " + path};
  out << text;
}

std::string env_name(const std::string& flag) {
  std::string out = "GHSOM_";
  for (char c : flag) out.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(c)));
  return out;
}

// Engine parameters exposed as flags; the key is the engine spelling.
struct ParamFlag {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr ParamFlag kParamFlags[] = {
    {"tau1", "tau1", "horizontal growth threshold: grow while mqe_M >= tau1 * parent qe"},
    {"tau2", "tau2", "stratification threshold: expand units with qe >= tau2 * qe0; 'off' disables"},
    {"alpha", "alpha", "Case 1: veto a child map when the unit holds <= alpha * n samples"},
    {"beta", "beta", "Case 2: insert a unit when qe_k >= beta * tau1 * sum(qe)"},
    {"max-map-units", "max_map_units", "lattice size cap per map"},
    {"max-depth", "max_depth", "maximum number of layers"},
    {"growth-mode", "growth_mode", "row_column | unit_level | hybrid"},
    {"tau1-reference", "tau1_reference", "parent statistic scaled by tau1: sum | mean"},
    {"epochs", "epochs", "passes over the samples per training phase"},
    {"lr-start", "lr_start", "initial learning rate"},
    {"lr-end", "lr_end", "final learning rate"},
    {"radius-start", "radius_start", "initial neighbourhood radius (lattice units)"},
    {"radius-end", "radius_end", "final neighbourhood radius"},
    {"gamma-w", "gamma_w", "walking-distance smoothing"},
    {"gamma-v", "gamma_v", "output-variance smoothing"},
    {"gamma-a", "gamma_a", "activation smoothing"},
    {"theta-g", "theta_g", "unit generation threshold"},
    {"theta-e", "theta_e", "elimination threshold on output variance"},
    {"theta-c", "theta_c", "elimination threshold on output correlation"},
    {"jobs", "jobs", "threads for sibling subtrees"},
};

struct DataOptions {
  std::string path;
  std::string label_column = "auto";
  std::string delimiter = ",";
  bool no_header = false;
  std::string normalization = "minmax";

  void add(CLI::App* app, bool required) {
    auto* o = app->add_option("--data", path, "CSV file with one sample per row");
    o->envname(env_name("data"));
    if (required) o->required();
    app->add_option("--label-column", label_column,
                    "label column by name or index; 'auto' uses a trailing non-numeric column "
                    "named class/label/species, 'none' disables")
        ->capture_default_str()
        ->envname(env_name("label-column"));
    app->add_option("--delimiter", delimiter, "CSV delimiter")->capture_default_str()->envname(env_name("delimiter"));
    app->add_flag("--no-header", no_header, "the CSV has no header row")->envname(env_name("no-header"));
    app->add_option("--normalization", normalization, "minmax | zscore")
        ->capture_default_str()
        ->check(CLI::IsMember({"minmax", "zscore"}))
        ->envname(env_name("normalization"));
  }

  json options() const {
    json o{{"delimiter", delimiter}, {"header", !no_header}, {"normalization", normalization}};
    if (label_column != "auto" && label_column != "none") o["label_column"] = label_column;
    return o;
  }

  DatasetPtr load() const {
    json o = options();
    if (label_column == "auto") {
      const json detected = detect_label();
      if (!detected.is_null()) o["label_column"] = detected;
    }
    ghsom_dataset* ds = nullptr;
    check(ghsom_dataset_load_csv(path.c_str(), o.dump().c_str(), &ds));
    return DatasetPtr(ds);
  }

  // Header name of the last column when it looks like a class label.
  json detect_label() const {
    if (no_header) return nullptr;
    std::ifstream in(path);
    std::string header;
    if (!std::getline(in, header)) return nullptr;
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const auto pos = header.rfind(delimiter.empty() ? ',' : delimiter.front());
    std::string last = pos == std::string::npos ? header : header.substr(pos + 1);
    std::string lower;
    for (char c : last) lower.push_back(static_cast<char>(std::tolower(c)));
    for (const char* name : {"class", "label", "species", "target"})
      if (lower == name) return last;
    return nullptr;
  }
};

struct Common {
  std::string format = "text";

  void add(CLI::App* app) {
    app->add_option("--format", format, "output format: text | json")
        ->capture_default_str()
        ->check(CLI::IsMember({"text", "json"}))
        ->envname(env_name("format"));
  }
};

void print_report(const json& report, const std::string& format) {
  if (format == "json") {
    std::cout << report.dump(2) << "\n";
    return;
  }
  for (const auto& [key, value] : report.items()) {
    if (value.is_object() || value.is_array()) continue;
    std::cout << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
  }
}

std::map<std::string, std::string> default_params() {
  ghsom_params* p = nullptr;
  check(ghsom_params_create(&p));
  ParamsPtr guard(p);
  char* text = nullptr;
  check(ghsom_params_to_json(p, &text));
  const json j = json::parse(take(text));
  std::map<std::string, std::string> out;
  for (const auto& [key, value] : j.items())
    out[key] = value.is_string() ? value.get<std::string>() : value.dump();
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Growing hierarchical self-organizing maps: train, evaluate, export, serve"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ghsom_version());

  // ---- train
  auto* train = app.add_subcommand("train", "train a hierarchy and write the model file");
  DataOptions train_data;
  train_data.add(train, true);
  Common train_common;
  train_common.add(train);
  auto params_text = default_params();
  for (const ParamFlag& f : kParamFlags)
    train->add_option(std::string("--") + f.flag, params_text[f.key], f.help)
        ->capture_default_str()
        ->envname(env_name(f.flag));
  bool interactive = false;
  train->add_flag("--interactive", interactive, "enable the Case 1 / Case 2 interactive policy")
      ->envname(env_name("interactive"));
  std::uint64_t seed = 1;
  train->add_option("--seed", seed, "random seed")->capture_default_str()->envname(env_name("seed"));
  std::string out_path = "model.ghsom";
  train->add_option("--out", out_path, "model file")->capture_default_str()->envname(env_name("out"));
  std::string audit_path, history_path;
  train->add_option("--audit", audit_path, "audit log (JSON); default <out>.audit.json")
      ->envname(env_name("audit"));
  train->add_option("--history", history_path, "QE history (CSV); default <out>.qe.csv")
      ->envname(env_name("history"));
  bool dump_config = false;
  train->add_flag("--dump-config", dump_config, "print the resolved configuration and exit");

  // ---- eval
  auto* eval = app.add_subcommand("eval", "evaluate a model against a dataset");
  std::string eval_model;
  eval->add_option("--model", eval_model, "model file")->required()->envname(env_name("model"));
  DataOptions eval_data;
  eval_data.add(eval, true);
  Common eval_common;
  eval_common.add(eval);
  std::string units_csv, svg_path;
  eval->add_option("--units-csv", units_csv, "write per-unit statistics (CSV)");
  eval->add_option("--svg", svg_path, "write the QE history chart (SVG)");

  // ---- export
  auto* exp = app.add_subcommand("export", "write the tree document of a model");
  std::string export_model, export_out = "-";
  exp->add_option("--model", export_model, "model file")->required()->envname(env_name("model"));
  exp->add_option("--out", export_out, "output file, '-' for stdout")->capture_default_str();

  // ---- serve
  auto* serve = app.add_subcommand("serve", "run the session service over HTTP");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host, "bind address")->capture_default_str()->envname(env_name("host"));
  serve->add_option("--port", port, "bind port")->capture_default_str()->envname(env_name("port"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) {
      ghsom_params* raw = nullptr;
      check(ghsom_params_create(&raw));
      ParamsPtr params(raw);
      for (const auto& [key, value] : params_text) check(ghsom_params_set(params.get(), key.c_str(), value.c_str()));
      if (interactive) check(ghsom_params_set(params.get(), "interactive", "true"));
      check(ghsom_params_validate(params.get(), 0));

      char* ptext = nullptr;
      check(ghsom_params_to_json(params.get(), &ptext));
      const json resolved = json::parse(take(ptext));
      if (dump_config) {
        json cfg{{"params", resolved},
                 {"seed", seed},
                 {"data", train_data.path},
                 {"csv", train_data.options()},
                 {"out", out_path}};
        std::cout << cfg.dump(2) << "\n";
        return 0;
      }

      DatasetPtr ds = train_data.load();
      check(ghsom_params_validate(params.get(), ghsom_dataset_size(ds.get())));
      ghsom_model* mraw = nullptr;
      check(ghsom_train(ds.get(), params.get(), seed, &mraw));
      ModelPtr model(mraw);
      check(ghsom_model_save(model.get(), out_path.c_str()));

      char* text = nullptr;
      check(ghsom_model_audit(model.get(), &text));
      write_text(audit_path.empty() ? out_path + ".audit.json" : audit_path, take(text) + "\n");
      check(ghsom_model_qe_history_csv(model.get(), &text));
      write_text(history_path.empty() ? out_path + ".qe.csv" : history_path, take(text));

      check(ghsom_model_summary(model.get(), ds.get(), &text));
      json report = json::parse(take(text));
      report["model"] = out_path;
      report["seed"] = seed;
      report["interactive"] = interactive;
      print_report(report, train_common.format);
      return 0;
    }

    if (*eval) {
      ghsom_model* mraw = nullptr;
      check(ghsom_model_load(eval_model.c_str(), &mraw));
      ModelPtr model(mraw);
      DatasetPtr ds = eval_data.load();
      char* text = nullptr;
      check(ghsom_model_evaluate(model.get(), ds.get(), &text));
      json report = json::parse(take(text));
      if (!units_csv.empty()) {
        check(ghsom_model_unit_table_csv(model.get(), ds.get(), &text));
        write_text(units_csv, take(text));
      }
      if (!svg_path.empty()) {
        check(ghsom_model_qe_history_svg(model.get(), &text));
        write_text(svg_path, take(text));
      }
      if (eval_common.format == "text") {
        for (const char* k : {"purity_leaf", "purity_layer1"})
          if (report.contains(k)) report[std::string(k) + "_overall"] = report[k]["purity"];
      }
      print_report(report, eval_common.format);
      return 0;
    }

    if (*exp) {
      ghsom_model* mraw = nullptr;
      check(ghsom_model_load(export_model.c_str(), &mraw));
      ModelPtr model(mraw);
      char* text = nullptr;
      check(ghsom_model_export_tree(model.get(), &text));
      write_text(export_out, json::parse(take(text)).dump(2) + "\n");
      return 0;
    }

    if (*serve) {
      ghsom::http::SessionServer server;
      std::cerr << "serving on http://" << host << ":" << port << "\n";
      server.run(host, port);
      return 0;
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
