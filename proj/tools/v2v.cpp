// Command line front end: bounds, dataset, train, predict, simulate,
// validate and reproduce. Every run writes its artifacts and a manifest into
// one output directory.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "v2v/error.hpp"
#include "v2v/experiments.hpp"
#include "v2v/hybrid.hpp"
#include "v2v/platoon.hpp"
#include "v2v/surrogate.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace v2v;

namespace {

constexpr const char* kRunSchema = "v2v.run/1";
constexpr const char* kManifestSchema = "v2v.manifest/1";
constexpr const char* kVersion = "1.0.0";
constexpr const char* kOutputRootVar = "V2V_OUTPUT_ROOT";

int verbosity = 0;

void log(const std::string& msg) {
  if (verbosity > 0) std::cerr << "v2v: " << msg << '\n';
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string read_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ConfigError(what + " not found: " + p.string());
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(what + " is not valid JSON: " + e.what());
  }
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
};

// The run document after file loading and overrides.
json load_document(const Common& c) {
  json doc = json::object();
  if (!c.config.empty()) doc = parse_json(read_file(c.config, "config file"), "config file");
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (doc.contains("schema")) {
    if (doc["schema"] != kRunSchema) throw ConfigError("unsupported config schema: " + doc["schema"].dump());
    doc.erase("schema");
  }
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key.path=value, got " + s);
    std::string ptr = "/" + s.substr(0, eq);
    for (auto& ch : ptr) {
      if (ch == '.') ch = '/';
    }
    const std::string text = s.substr(eq + 1);
    json value;
    try {
      value = json::parse(text);
    } catch (const json::exception&) {
      value = text;
    }
    try {
      doc[json::json_pointer(ptr)] = value;
    } catch (const json::exception& e) {
      throw ConfigError("--set " + s + ": " + e.what());
    }
  }
  if (c.seed) doc["seed"] = *c.seed;
  return doc;
}

std::uint64_t seed_of(const json& doc) {
  try {
    return doc.value("seed", std::uint64_t{1});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("seed: ") + e.what());
  }
}

class Output {
 public:
  Output(const std::string& subcommand, const std::string& out, const json& resolved, std::uint64_t seed)
      : subcommand_(subcommand), config_(resolved), seed_(seed) {
    if (!out.empty()) {
      dir_ = out;
    } else if (const char* root = std::getenv(kOutputRootVar); root && *root) {
      dir_ = fs::path(root) / subcommand;
    } else {
      dir_ = fs::path("v2v-out") / subcommand;
    }
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
    hash_ = sha256_hex(config_.dump());
  }

  json provenance() const {
    return {{"schema", kManifestSchema}, {"config_sha256", hash_}, {"seed", seed_}, {"tool_version", kVersion}};
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << content;
    f.close();
    if (!f) throw IoError("cannot write " + path.string());
    files_.push_back({{"file", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    log("wrote " + path.string());
  }

  void write_json(const std::string& name, json j) {
    j["provenance"] = provenance();
    write(name, j.dump(2) + "\n");
  }

  void write_series(const experiments::Series& s) {
    std::ostringstream o;
    experiments::write_series_csv(s, o);
    write(s.name + ".csv", o.str());
  }

  void finish() {
    json m = provenance();
    m["subcommand"] = subcommand_;
    m["config"] = config_;
    m["artifacts"] = files_;
    const auto path = dir_ / "manifest.json";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << m.dump(2) << "\n";
    f.close();
    if (!f) throw IoError("cannot write " + path.string());
  }

 private:
  std::string subcommand_;
  json config_;
  std::uint64_t seed_;
  fs::path dir_;
  std::string hash_;
  json files_ = json::array();
};

template <class T>
T get_or(const json& doc, const char* key, T fallback) {
  try {
    return doc.value(key, fallback);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

// ------------------------------------------------------------------ bounds

int run_bounds(const Common& common) {
  const json doc = load_document(common);
  const auto seed = seed_of(doc);
  const json ch = get_or(doc, "channel", json::object());
  const double per_ms = get_or(ch, "lambda_per_ms", 0.1);
  const int n = get_or(ch, "n", 10);
  const double split = get_or(ch, "split", 0.5);
  const double p = get_or(ch, "p", 0.01);

  hybrid::HybridConfig c;
  if (doc.contains("cellular")) cellular::update_from_json(c.cellular, doc["cellular"]);
  if (doc.contains("mmwave")) mmwave::update_from_json(c.mmwave, doc["mmwave"]);
  c.cellular.n = n;
  c.mmwave.n_vehicles = n;
  c.split = split;
  c.lambda_total = cellular::per_slot_rate(per_ms, c.cellular.slot_duration);
  c.cellular.lambda = c.lambda_total;
  std::vector<double> grid = hybrid::log_grid();
  if (doc.contains("x_grid")) {
    const auto& x = doc["x_grid"];
    grid = hybrid::log_grid(get_or(x, "lo", 1.0), get_or(x, "hi", 1e6), get_or(x, "points", 200));
  }
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("channel.p must be in (0, 1)");

  const json resolved = {{"seed", seed},
                         {"channel", {{"lambda_per_ms", per_ms}, {"n", n}, {"split", split}, {"p", p}}},
                         {"cellular", cellular::to_json(c.cellular)},
                         {"mmwave", mmwave::to_json(c.mmwave)},
                         {"x_grid", {{"lo", grid.front()}, {"hi", grid.back()}, {"points", grid.size()}}}};
  Output out("bounds", common.out, resolved, seed);

  log("hybrid bound");
  const hybrid::HybridModel model(c);
  json summary = json::object();
  // single-channel references at the full load; unstable ones are reported, not fatal
  std::optional<cellular::ServiceCurve> cell;
  try {
    cell = cellular::cellular_service_curve(c.cellular, cellular::solve_metrics(c.cellular));
  } catch (const RegimeError& e) {
    summary["cellular_only_error"] = e.name();
  }
  std::optional<mmwave::Model> mm;
  const auto arrival = mmwave::flow_arrival(c.mmwave, c.lambda_total);
  try {
    mm.emplace(c.mmwave);
    mmwave::mmwave_service_bound(c.mmwave, arrival);
  } catch (const RegimeError& e) {
    mm.reset();
    summary["mmwave_only_error"] = e.name();
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  experiments::Series s{"bounds", {"x_slots", "x_ms", "hybrid", "cellular_only", "mmwave_only"}, {}};
  const double to_ms = c.cellular.slot_duration * 1e3;
  for (double x : grid) {
    s.rows.push_back({x, x * to_ms, model.delay_ccdf(x), cell ? cellular::cellular_delay_ccdf(*cell, x) : nan,
                      mm ? mm->delay_ccdf_optimized(arrival, x) : nan});
  }
  const auto delay_at = [&](int col) -> json {
    std::vector<double> xs, ys;
    for (const auto& r : s.rows) {
      xs.push_back(r[0]);
      ys.push_back(r[col]);
    }
    if (std::isnan(ys.front())) return nullptr;
    try {
      const auto ccdf = [&](double x) {
        const auto it = std::lower_bound(xs.begin(), xs.end(), x);
        if (it != xs.end() && *it == x) return ys[it - xs.begin()];
        if (col == 2) return model.delay_ccdf(x);
        if (col == 3) return cellular::cellular_delay_ccdf(*cell, x);
        return mm->delay_ccdf_optimized(arrival, x);
      };
      const double d = surrogate::invert_ccdf(ccdf, p, grid);
      return {{"slots", d}, {"ms", d * to_ms}};
    } catch (const RegimeError& e) {
      return e.name();
    }
  };
  summary["delay_at_p"] = {{"p", p}, {"hybrid", delay_at(2)}, {"cellular_only", delay_at(3)}, {"mmwave_only", delay_at(4)}};
  const auto mean = [&](hybrid::Mode m) -> json {
    try {
      const auto r = hybrid::average_delay(c, m, grid);
      return {{"slots", r.mean}, {"ms", r.mean * to_ms}, {"truncated", r.truncated}};
    } catch (const RegimeError& e) {
      return e.name();
    }
  };
  summary["average_delay"] = {{"hybrid", mean(hybrid::Mode::hybrid)},
                              {"cellular_only", mean(hybrid::Mode::cellular)},
                              {"mmwave_only", mean(hybrid::Mode::mmwave)}};
  out.write_series(s);
  out.write_json("summary.json", summary);
  out.finish();
  return 0;
}

// ----------------------------------------------------------------- dataset

int run_dataset(const Common& common) {
  const json doc = load_document(common);
  const auto seed = seed_of(doc);
  const auto grid = surrogate::grid_from_json(get_or(doc, "grid", json::object()));
  Output out("dataset", common.out, {{"seed", seed}, {"grid", grid.to_json()}}, seed);
  log("generating dataset");
  const auto d = surrogate::generate_dataset(grid);
  std::ostringstream csv;
  surrogate::write_csv(d, csv);
  out.write("dataset.csv", csv.str());
  json skipped = json::array();
  for (const auto& s : d.skipped) {
    const auto& q = s.query;
    skipped.push_back({{"p", q.p}, {"lambda", q.lambda}, {"n", q.n}, {"noise_level", q.noise_level},
                       {"split", q.split}, {"reason", s.reason}});
  }
  out.write_json("summary.json", {{"rows", d.rows.size()}, {"skipped", skipped}});
  out.finish();
  return 0;
}

// ------------------------------------------------------------------- train

int run_train(const Common& common, const std::string& dataset_flag) {
  const json doc = load_document(common);
  const auto seed = seed_of(doc);
  const std::string path = !dataset_flag.empty() ? dataset_flag : get_or(doc, "dataset", std::string());
  if (path.empty()) throw ConfigError("train needs a dataset (--dataset or \"dataset\")");
  const std::string text = read_file(path, "dataset");
  json tj = get_or(doc, "training", json::object());
  if (!tj.contains("seed")) tj["seed"] = seed;
  const auto hp = surrogate::hyperparams_from_json(tj);
  std::istringstream in(text);
  const auto d = surrogate::read_csv(in);

  Output out("train", common.out,
             {{"seed", seed}, {"dataset_sha256", sha256_hex(text)}, {"training", surrogate::to_json(hp)}}, seed);
  log("training on " + std::to_string(d.rows.size()) + " rows");
  const auto r = surrogate::train_mlp(d, hp);
  const double defect = surrogate::monotonicity_defect_rate(r.model, 1000, seed);
  out.write("model.json", r.model.to_json().dump(2) + "\n");
  out.write_json("training.json", {{"rows", d.rows.size()},
                                   {"holdout_rows", r.holdout_rows},
                                   {"train_rel_error", r.train_rel_error},
                                   {"holdout_rel_error", r.holdout_rel_error},
                                   {"holdout_max_rel_error", r.holdout_max_rel_error},
                                   {"monotonicity_defect_rate", defect},
                                   {"epochs", r.report.epochs},
                                   {"final_learning_rate", r.report.final_learning_rate},
                                   {"loss", r.report.loss}});
  out.finish();
  return 0;
}

surrogate::MlpModel load_model(const std::string& path, std::string* hash) {
  const std::string text = read_file(path, "model");
  if (hash) *hash = sha256_hex(text);
  return surrogate::MlpModel::from_json(parse_json(text, "model"));
}

std::string model_path(const json& doc, const std::string& flag) {
  return !flag.empty() ? flag : get_or(doc, "model", std::string());
}

// ----------------------------------------------------------------- predict

struct QueryFlags {
  std::optional<double> p, lambda_per_ms, n, noise, split;
};

int run_predict(const Common& common, const std::string& model_flag, const QueryFlags& qf) {
  json doc = load_document(common);
  const auto seed = seed_of(doc);
  const std::string path = model_path(doc, model_flag);
  if (path.empty()) throw ConfigError("predict needs a model (--model or \"model\")");
  std::string hash;
  const auto model = load_model(path, &hash);
  json q = get_or(doc, "query", json::object());
  if (qf.p) q["p"] = *qf.p;
  if (qf.lambda_per_ms) q["lambda_per_ms"] = *qf.lambda_per_ms;
  if (qf.n) q["n"] = *qf.n;
  if (qf.noise) q["noise_level"] = *qf.noise;
  if (qf.split) q["split"] = *qf.split;
  const double slot = get_or(q, "slot_duration", 13e-6);
  surrogate::DelayQuery dq;
  dq.p = get_or(q, "p", dq.p);
  dq.lambda = cellular::per_slot_rate(get_or(q, "lambda_per_ms", 0.2), slot);
  dq.n = get_or(q, "n", 6.0);
  dq.noise_level = get_or(q, "noise_level", dq.noise_level);
  dq.split = get_or(q, "split", dq.split);
  try {
    dq.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  const json resolved = {{"seed", seed},
                         {"model_sha256", hash},
                         {"query",
                          {{"p", dq.p}, {"lambda", dq.lambda}, {"n", dq.n}, {"noise_level", dq.noise_level},
                           {"split", dq.split}, {"slot_duration", slot}}}};
  Output out("predict", common.out, resolved, seed);
  const auto pr = surrogate::predict_delay(model, dq);
  out.write_json("prediction.json", {{"delay_slots", pr.delay_slots},
                                     {"delay_s", pr.delay_slots * slot},
                                     {"extrapolated", pr.extrapolated}});
  if (pr.extrapolated) std::cerr << "v2v: warning: ExtrapolationWarning, query outside the training box\n";
  out.finish();
  return 0;
}

// ------------------------------------------------------------- experiments

experiments::ExperimentConfig experiment_config(const json& doc, const std::string& model_flag, json& resolved) {
  auto cfg = experiments::experiment_from_json(doc);
  const bool scenario_seed = doc.contains("scenario") && doc["scenario"].is_object() &&
                             doc["scenario"].contains("seed");
  if (!scenario_seed) cfg.scenario.seed = cfg.seed;
  resolved = experiments::to_json(cfg);
  const std::string path = model_path(doc, model_flag);
  if (!path.empty()) {
    std::string hash;
    auto model = std::make_shared<surrogate::MlpModel>(load_model(path, &hash));
    cfg.oracle = [model](const surrogate::DelayQuery& q) { return surrogate::predict_delay(*model, q); };
    resolved["model_sha256"] = hash;
  } else {
    resolved["model_sha256"] = nullptr;
  }
  return cfg;
}

int report_checks(const experiments::FigureResult& r) {
  for (const auto& c : r.checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << r.id << ' ' << c.name << ": " << c.detail << '\n';
  }
  if (r.passed()) return 0;
  json failed = json::array();
  for (const auto& c : r.checks) {
    if (!c.pass) failed.push_back(c.name);
  }
  std::cerr << json{{"error", "ValidationFailure"}, {"class", "validation"}, {"id", r.id}, {"failed", failed},
                    {"exit_code", 4}}
                   .dump()
            << '\n';
  return 4;
}

int write_figure(const std::string& sub, const Common& common, const json& resolved, std::uint64_t seed,
                 const experiments::FigureResult& r) {
  Output out(sub, common.out, resolved, seed);
  for (const auto& s : r.series) out.write_series(s);
  out.write_json("report.json", experiments::report_json(r));
  out.finish();
  return report_checks(r);
}

struct SimFlags {
  std::string controller;
  bool no_prediction = false;
  std::optional<double> duration;
  std::optional<double> brake_at;
};

int run_simulate(const Common& common, const std::string& model_flag, const SimFlags& f) {
  json doc = load_document(common);
  if (f.duration) doc["scenario"]["duration"] = *f.duration;
  json ctl = get_or(doc, "controller", json::object());
  if (!f.controller.empty()) ctl["kind"] = f.controller;
  if (f.no_prediction) ctl["prediction"] = false;
  const std::string kind = get_or(ctl, "kind", std::string("intelligent"));
  if (kind != "intelligent" && kind != "baseline") throw ConfigError("unknown controller kind: " + kind);
  const bool prediction = get_or(ctl, "prediction", true);

  json resolved;
  auto cfg = experiment_config(doc, model_flag, resolved);
  if (f.brake_at) cfg.scenario.events.push_back({*f.brake_at, sim::EventKind::lead_brake});
  try {
    cfg.scenario.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  resolved["scenario"] = sim::to_json(cfg.scenario);
  resolved["controller"] = {{"kind", kind}, {"prediction", prediction}};
  Output out("simulate", common.out, resolved, cfg.seed);

  log("training environment predictors");
  const auto pl = experiments::platoon_setup(cfg);
  const auto c = experiments::controllers(
      cfg, pl, kind == "baseline" ? sim::ControllerKind::baseline : sim::ControllerKind::intelligent, prediction);
  const bool brake = std::any_of(cfg.scenario.events.begin(), cfg.scenario.events.end(),
                                 [](const sim::Event& e) { return e.kind == sim::EventKind::lead_brake; });
  log("simulating");
  const auto tr = brake ? sim::urgent_brake_scenario(cfg.scenario, c) : sim::run_platoon_scenario(cfg.scenario, c);
  const auto m = sim::compute_metrics(tr);
  std::ostringstream csv;
  sim::write_trace_csv(tr, csv);
  out.write("trace.csv", csv.str());
  auto summary = m.summary(tr);
  summary["S_degraded"] = pl.S_ref;
  summary["D_degraded_s"] = pl.D_ref;
  out.write_json("summary.json", summary);
  out.finish();
  if (tr.extrapolated) std::cerr << "v2v: warning: ExtrapolationWarning, a delay query left the training box\n";
  return 0;
}

int run_validate(const Common& common) {
  const json doc = load_document(common);
  json resolved;
  const auto cfg = experiment_config(doc, "", resolved);
  log("running Monte Carlo oracles");
  return write_figure("validate", common, resolved, cfg.seed, experiments::validate_bounds(cfg));
}

int run_reproduce(Common common, const std::string& id, const std::string& model_flag) {
  const auto& ids = experiments::figure_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) throw ConfigError("unknown figure id: " + id);
  const json doc = load_document(common);
  json resolved;
  const auto cfg = experiment_config(doc, model_flag, resolved);
  resolved["figure"] = id;
  if (common.out.empty()) {
    const char* root = std::getenv(kOutputRootVar);
    common.out = (fs::path(root && *root ? root : "v2v-out") / "reproduce" / id).string();
  }
  log("reproducing " + id);
  return write_figure("reproduce", common, resolved, cfg.seed, experiments::reproduce(id, cfg));
}

int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::config:
    case ErrorClass::domain:
      return 2;
    case ErrorClass::regime:
    case ErrorClass::convergence:
      return 3;
    case ErrorClass::validation:
      return 4;
    case ErrorClass::io:
      return 5;
  }
  return 1;
}

const char* class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::config: return "config";
    case ErrorClass::domain: return "domain";
    case ErrorClass::regime: return "regime";
    case ErrorClass::convergence: return "convergence";
    case ErrorClass::validation: return "validation";
    case ErrorClass::io: return "io";
  }
  return "unknown";
}

int error_report(const std::string& name, const char* cls, const std::string& message, int code) {
  std::cerr << json{{"error", name}, {"class", cls}, {"message", message}, {"exit_code", code}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay bounds, surrogate training and platoon simulation for V2V communication"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  std::string model, dataset, figure;
  QueryFlags qf;
  SimFlags sf;
  const auto add_common = [&](CLI::App* s) {
    s->add_option("-c,--config", common.config, "JSON run document");
    s->add_option("-o,--out", common.out, std::string("output directory (default $") + kOutputRootVar + "/<subcommand>)");
    s->add_option("--seed", common.seed, "seed, overrides the document");
    s->add_option("--set", common.sets, "override a document value, key.path=json")->take_all();
    s->add_flag("-v,--verbose", verbosity, "progress on stderr");
  };
  auto* bounds = app.add_subcommand("bounds", "cellular, mmWave and hybrid delay CCDF bounds");
  auto* ds = app.add_subcommand("dataset", "delay-bound dataset over a parameter grid");
  auto* train = app.add_subcommand("train", "fit the delay surrogate to a dataset");
  train->add_option("--dataset", dataset, "dataset CSV");
  auto* predict = app.add_subcommand("predict", "surrogate delay bound for one query");
  predict->add_option("--model", model, "model JSON");
  predict->add_option("--p", qf.p, "timeout probability");
  predict->add_option("--lambda", qf.lambda_per_ms, "packets/ms per vehicle");
  predict->add_option("--n", qf.n, "vehicle count");
  predict->add_option("--noise", qf.noise, "noise level");
  predict->add_option("--split", qf.split, "mmWave traffic share");
  auto* simulate = app.add_subcommand("simulate", "platoon simulation, trace and metrics");
  simulate->add_option("--model", model, "surrogate model JSON (default: exact bound)");
  simulate->add_option("--controller", sf.controller, "intelligent or baseline");
  simulate->add_flag("--no-prediction", sf.no_prediction, "use current channel parameters only");
  simulate->add_option("--duration", sf.duration, "s");
  simulate->add_option("--brake-at", sf.brake_at, "lead vehicle emergency brake time, s");
  auto* validate = app.add_subcommand("validate", "Monte Carlo dominance checks of the bounds");
  auto* reproduce = app.add_subcommand("reproduce", "data and claim checks behind one figure");
  reproduce->add_option("figure", figure, "fig5, fig6, fig7, fig8, fig9 or fig10")->required();
  reproduce->add_option("--model", model, "surrogate model JSON for fig9 and fig10 (default: exact bound)");
  for (auto* s : {bounds, ds, train, predict, simulate, validate, reproduce}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return error_report("ConfigError", "config", e.what(), 2);
  }

  try {
    if (*bounds) return run_bounds(common);
    if (*ds) return run_dataset(common);
    if (*train) return run_train(common, dataset);
    if (*predict) return run_predict(common, model, qf);
    if (*simulate) return run_simulate(common, model, sf);
    if (*validate) return run_validate(common);
    if (*reproduce) return run_reproduce(common, figure, model);
  } catch (const Error& e) {
    return error_report(e.name(), class_name(e.error_class()), e.what(), exit_code(e.error_class()));
  } catch (const fs::filesystem_error& e) {
    return error_report("IOError", "io", e.what(), 5);
  } catch (const std::exception& e) {
    return error_report("InternalError", "internal", e.what(), 1);
  }
  return 1;
}
