#include "v2v/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>

#include "v2v/empirical.hpp"
#include "v2v/error.hpp"
#include "v2v/montecarlo.hpp"

namespace v2v::experiments {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kLevel = 0.95;

std::uint64_t stream(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + k + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string label(double v) { return fmt("%g", v); }

struct Dominance {
  long resolved = 0;
  long unresolved = 0;  // bound < 1 but below the Monte Carlo resolution floor
  long violations = 0;
  double worst_excess = 0.0;  // largest upper - bound at a resolved point

  Check check(const std::string& name) const {
    std::ostringstream d;
    d << resolved << " resolved points, " << unresolved << " below the resolution floor, "
      << violations << " violations";
    if (violations) d << ", worst excess " << fmt("%.3g", worst_excess);
    return {name, violations == 0 && resolved > 0, d.str()};
  }
};

// Point estimate <= bound everywhere; upper envelope <= bound where the bound
// is informative and above the floor. Appends x,bound,empirical,upper,lower.
Dominance dominance(const std::function<double(double)>& bound, const EmpiricalCcdf& emp,
                    const std::vector<double>& grid, Series& s) {
  Dominance d;
  const double floor = emp.resolution_floor(kLevel);
  for (double x : grid) {
    const double b = bound(x);
    const double e = emp.ccdf(x);
    const double up = emp.upper(x, kLevel);
    s.rows.push_back({x, b, e, up, emp.lower(x, kLevel)});
    if (e > b) ++d.violations;
    if (b >= 1.0) continue;
    if (b < floor) {
      ++d.unresolved;
      continue;
    }
    ++d.resolved;
    if (up > b) {
      ++d.violations;
      d.worst_excess = std::max(d.worst_excess, up - b);
    }
  }
  return d;
}

const std::vector<std::string> kDominanceColumns{"x_slots", "bound", "empirical", "upper95", "lower95"};

cellular::BackoffParams cellular_at(const ExperimentConfig& cfg, double per_ms) {
  auto p = cfg.cellular;
  p.lambda = cellular::per_slot_rate(per_ms, p.slot_duration);
  return p;
}

hybrid::HybridConfig hybrid_at(const ExperimentConfig& cfg, double per_ms, double split = 0.5) {
  hybrid::HybridConfig c;
  c.split = split;
  c.cellular = cfg.cellular;
  c.mmwave = cfg.mmwave;
  c.lambda_total = cellular::per_slot_rate(per_ms, cfg.cellular.slot_duration);
  c.cellular.lambda = c.lambda_total;
  return c;
}

void cellular_dominance(const ExperimentConfig& cfg, FigureResult& r, const std::string& prefix) {
  int k = 0;
  for (double per_ms : {0.1, 0.2}) {
    const auto p = cellular_at(cfg, per_ms);
    const auto sc = cellular::cellular_service_curve(p, cellular::solve_metrics(p));
    const auto mc = sim::simulate_cellular_mc(p, cfg.mc_packets, stream(cfg.seed, 10 + k++));
    Series s{prefix + "_cellular_lambda" + label(per_ms), kDominanceColumns, {}};
    const auto d =
        dominance([&](double x) { return cellular::cellular_delay_ccdf(sc, x); }, mc.delays, cfg.x_grid, s);
    r.checks.push_back(d.check("cellular_dominance_lambda" + label(per_ms)));
    r.summary["cellular"][label(per_ms)] = {{"resolved", d.resolved},
                                            {"unresolved", d.unresolved},
                                            {"violations", d.violations},
                                            {"resolution_floor", mc.delays.resolution_floor(kLevel)},
                                            {"empirical_mean_slots", mc.delays.mean()},
                                            {"collision_fraction", mc.stats.collision_fraction()}};
    r.series.push_back(std::move(s));
  }
}

FigureResult fig5(const ExperimentConfig& cfg) {
  FigureResult r{"fig5", "cellular delay bound against the slot-level Monte Carlo", {}, {}, {}};
  cellular_dominance(cfg, r, "fig5");
  return r;
}

double inverse_or_nan(const std::function<double(double)>& ccdf, double p, const std::vector<double>& grid) {
  try {
    return surrogate::invert_ccdf(ccdf, p, grid);
  } catch (const RegimeError&) {
    return kNaN;
  }
}

FigureResult fig6(const ExperimentConfig& cfg) {
  FigureResult r{"fig6", "mmWave delay bound for n and 2n vehicles", {}, {}, {}};
  const double lam = cellular::per_slot_rate(0.1, cfg.cellular.slot_duration);
  Series s{"fig6_mmwave", {"x_slots", "bound_n6", "bound_n12", "empirical_n6", "empirical_n12"}, {}};
  std::vector<std::function<double(double)>> bounds;
  std::vector<EmpiricalCcdf> emp;
  int k = 0;
  for (int n : {6, 12}) {
    auto p = cfg.mmwave;
    p.n_vehicles = n;
    auto m = std::make_shared<mmwave::Model>(p);
    const auto a = mmwave::flow_arrival(p, lam);
    bounds.push_back([m, a](double x) { return m->delay_ccdf_optimized(a, x); });
    emp.push_back(sim::simulate_mmwave_mc(p, n * lam, cfg.mc_packets, stream(cfg.seed, 20 + k++)));
  }
  std::vector<std::vector<double>> b(2);
  for (double x : cfg.x_grid) {
    for (int i = 0; i < 2; ++i) b[i].push_back(bounds[i](x));
    const auto& last = b[0].size() - 1;
    s.rows.push_back({x, b[0][last], b[1][last], emp[0].ccdf(x), emp[1].ccdf(x)});
  }
  // tabulated bound, so the inversion does not recompute it
  const auto tab = [&](int i) {
    return [&, i](double x) {
      const auto it = std::lower_bound(cfg.x_grid.begin(), cfg.x_grid.end(), x);
      if (it != cfg.x_grid.end() && *it == x) return b[i][it - cfg.x_grid.begin()];
      return bounds[i](x);
    };
  };
  nlohmann::json ratios = nlohmann::json::object();
  double primary = kNaN;
  for (double p : {0.1, 0.01, 0.001}) {
    const double d6 = inverse_or_nan(tab(0), p, cfg.x_grid);
    const double d12 = inverse_or_nan(tab(1), p, cfg.x_grid);
    const double ratio = d12 / d6;
    ratios[label(p)] = {{"bound_n6", d6}, {"bound_n12", d12}, {"ratio", ratio},
                        {"empirical_n6", emp[0].quantile(1.0 - p)},
                        {"empirical_n12", emp[1].quantile(1.0 - p)},
                        {"empirical_ratio", emp[1].quantile(1.0 - p) / emp[0].quantile(1.0 - p)}};
    if (p == 0.01) primary = ratio;
  }
  r.summary["ratios"] = ratios;
  r.checks.push_back({"doubling_ratio", primary >= 2.5 && primary <= 6.0,
                      "bound ratio n=12 / n=6 at tail probability 0.01: " + fmt("%.3f", primary) +
                          " (accepted range [2.5, 6])"});
  for (int i = 0; i < 2; ++i) {
    Series d{"", kDominanceColumns, {}};
    const auto dom = dominance(tab(i), emp[i], cfg.x_grid, d);
    r.checks.push_back(dom.check(i == 0 ? "mmwave_dominance_n6" : "mmwave_dominance_n12"));
  }
  r.series.push_back(std::move(s));
  return r;
}

FigureResult fig7(const ExperimentConfig& cfg) {
  FigureResult r{"fig7", "hybrid delay bound against pure cellular at 0.2 packets/ms", {}, {}, {}};
  const auto c = hybrid_at(cfg, 0.2);
  const hybrid::HybridModel model(c);
  auto full = c.cellular;
  full.lambda = c.lambda_total;
  const auto sc = cellular::cellular_service_curve(full, cellular::solve_metrics(full));
  Series s{"fig7_hybrid", {"x_slots", "hybrid", "cellular_only", "cellular_branch", "mmwave_branch"}, {}};
  long above = 0, informative = 0;
  for (double x : cfg.x_grid) {
    const double h = model.delay_ccdf(x);
    const double cell = cellular::cellular_delay_ccdf(sc, x);
    s.rows.push_back({x, h, cell, model.cellular_ccdf(x), model.mmwave_ccdf(x)});
    if (h > cell + 1e-12) ++above;
    if (cell < 1.0) ++informative;
  }
  r.checks.push_back({"hybrid_below_cellular", above == 0 && informative > 0,
                      std::to_string(above) + " of " + std::to_string(cfg.x_grid.size()) +
                          " grid points above the cellular bound, " + std::to_string(informative) +
                          " with cellular bound < 1"});
  const double p = 0.01;
  r.summary["delay_at_p0.01_slots"] = {
      {"hybrid", inverse_or_nan([&](double x) { return model.delay_ccdf(x); }, p, cfg.x_grid)},
      {"cellular_only", inverse_or_nan([&](double x) { return cellular::cellular_delay_ccdf(sc, x); }, p, cfg.x_grid)}};
  r.series.push_back(std::move(s));
  return r;
}

double mean_or_nan(const hybrid::HybridConfig& c, hybrid::Mode m, const std::vector<double>& grid) {
  try {
    return hybrid::average_delay(c, m, grid).mean;
  } catch (const RegimeError&) {
    return kNaN;
  }
}

FigureResult fig8(const ExperimentConfig& cfg) {
  FigureResult r{"fig8", "average delay bound against the arrival rate", {}, {}, {}};
  Series s{"fig8_average", {"lambda_per_ms", "cellular_ms", "mmwave_ms", "hybrid_ms"}, {}};
  const double to_ms = cfg.cellular.slot_duration * 1e3;
  for (int k = 1; k <= 6; ++k) {
    const double per_ms = 0.05 * k;
    const auto c = hybrid_at(cfg, per_ms);
    s.rows.push_back({per_ms, mean_or_nan(c, hybrid::Mode::cellular, cfg.x_grid) * to_ms,
                      mean_or_nan(c, hybrid::Mode::mmwave, cfg.x_grid) * to_ms,
                      mean_or_nan(c, hybrid::Mode::hybrid, cfg.x_grid) * to_ms});
  }
  const auto& lo = s.rows.front();
  const auto& hi = s.rows.back();
  const bool cross = lo[2] < lo[3] && hi[2] > hi[3] && (hi[2] - lo[2]) > (hi[3] - lo[3]);
  r.checks.push_back({"mmwave_crossover", cross,
                      "mmWave / hybrid mean at 0.05: " + fmt("%.4g", lo[2]) + " / " + fmt("%.4g", lo[3]) +
                          " ms, at 0.3: " + fmt("%.4g", hi[2]) + " / " + fmt("%.4g", hi[3]) + " ms"});
  r.series.push_back(std::move(s));
  return r;
}

// ---------------------------------------------------------------- platoon

sim::Controllers intelligent(const ExperimentConfig& cfg, const PlatoonSetup& pl, double k2, bool prediction) {
  auto c = controllers(cfg, pl, sim::ControllerKind::intelligent, prediction);
  c.control.k2 = k2;
  return c;
}

double tail_mean(const std::vector<double>& series, const sim::SimTrace& tr, double from) {
  double sum = 0.0;
  long n = 0;
  for (std::size_t k = 0; k < tr.rows.size(); ++k) {
    if (tr.rows[k].t < from) continue;
    sum += series[k];
    ++n;
  }
  return n ? sum / n : kNaN;
}

double conv_or_inf(const sim::Metrics& m) {
  return m.converged ? m.convergence_time : std::numeric_limits<double>::infinity();
}

FigureResult fig9(const ExperimentConfig& cfg) {
  FigureResult r{"fig9", "platoon stability after a communication degradation", {}, {}, {}};
  const auto pl = platoon_setup(cfg);
  const auto& sc = cfg.scenario;
  const double k2 = cfg.control.k2;

  struct Run {
    std::string name;
    sim::SimTrace trace;
    sim::Metrics metrics;
  };
  std::vector<Run> runs;
  const auto add = [&](std::string name, const sim::Controllers& c) {
    auto tr = sim::run_platoon_scenario(sc, c);
    auto m = sim::compute_metrics(tr);
    runs.push_back({std::move(name), std::move(tr), std::move(m)});
    return runs.size() - 1;
  };
  auto sweep = cfg.k2_sweep;
  std::sort(sweep.begin(), sweep.end());
  std::vector<std::size_t> sweep_idx;
  std::size_t main = runs.size();
  for (double k : sweep) {
    sweep_idx.push_back(add("k2_" + label(k), intelligent(cfg, pl, k, true)));
    if (k == k2) main = sweep_idx.back();
  }
  if (main == runs.size()) main = add("k2_" + label(k2), intelligent(cfg, pl, k2, true));
  const auto off = add("no_prediction", intelligent(cfg, pl, k2, false));
  const auto bl = add("baseline", controllers(cfg, pl, sim::ControllerKind::baseline, false));

  Series changes{"fig9_speed_changes", {"t"}, {}};
  Series gaps{"fig9_average_gap", {"t"}, {}};
  for (const auto& run : runs) {
    changes.columns.push_back(run.name);
    gaps.columns.push_back(run.name);
  }
  gaps.columns.push_back("S_degraded");
  for (std::size_t k = 0; k < runs[main].trace.rows.size(); ++k) {
    std::vector<double> c{runs[main].trace.rows[k].t}, g{c[0]};
    for (const auto& run : runs) {
      c.push_back(run.metrics.changes[k]);
      g.push_back(run.metrics.average_gap[k]);
    }
    g.push_back(pl.S_ref);
    changes.rows.push_back(std::move(c));
    gaps.rows.push_back(std::move(g));
  }

  const auto& m = runs[main].metrics;
  const auto& tm = runs[main].trace;
  for (const auto& run : runs) r.summary["runs"][run.name] = run.metrics.summary(run.trace);
  r.summary["S_degraded"] = pl.S_ref;
  r.summary["D_degraded_s"] = pl.D_ref;
  r.summary["predictor_max_tv"] = pl.trained.max_tv;

  bool safe = true;
  std::string unsafe;
  for (const auto& run : runs) {
    if (run.name == "baseline") continue;
    if (run.trace.collision || !(run.metrics.min_gap > 0.0)) {
      safe = false;
      unsafe += " " + run.name;
    }
  }
  r.checks.push_back({"no_collision", safe,
                      safe ? "min gap " + fmt("%.3f", m.min_gap) + " m in the main run, no collision in any intelligent run"
                           : "collision in:" + unsafe});
  const bool settled = m.settled_time >= 0.0 && m.settled_time <= 20.0;
  r.checks.push_back({"settles_within_20s", settled,
                      "counts stay 0 from t = " + fmt("%.2f", m.settled_time) + " s; first quiet " +
                          fmt("%g", sim::MetricsOptions{}.dwell) + " s window ends at " +
                          fmt("%.2f", m.convergence_time) + " s"});
  const double steady = tail_mean(m.average_gap, tm, sc.duration - 10.0);
  const double err = std::abs(steady - pl.S_ref) / pl.S_ref;
  r.checks.push_back({"steady_gap", err <= 0.15,
                      "mean gap over the last 10 s " + fmt("%.3f", steady) + " m against S = " +
                          fmt("%.3f", pl.S_ref) + " m (" + fmt("%.1f", 100.0 * err) + "%)"});
  bool ordered = true;
  std::string conv;
  for (std::size_t i = 0; i < sweep_idx.size(); ++i) {
    const double t = conv_or_inf(runs[sweep_idx[i]].metrics);
    conv += (i ? ", " : "") + runs[sweep_idx[i]].name + ": " + fmt("%.2f", t) + " s";
    if (i && conv_or_inf(runs[sweep_idx[i - 1]].metrics) > t) ordered = false;
  }
  r.checks.push_back({"k2_ordering", ordered, "convergence " + conv});
  const long on_count = m.changes_between(tm, cfg.stable_from, sc.duration);
  const long off_count = runs[off].metrics.changes_between(runs[off].trace, cfg.stable_from, sc.duration);
  r.checks.push_back({"prediction_benefit", 2 * on_count <= off_count,
                      "speed changes after t = " + fmt("%g", cfg.stable_from) + " s: " + std::to_string(on_count) +
                          " with prediction, " + std::to_string(off_count) + " without"});
  const auto& mb = runs[bl].metrics;
  const double base_gap = tail_mean(mb.average_gap, runs[bl].trace, sc.duration - 10.0);
  const bool slower = conv_or_inf(mb) > conv_or_inf(m);
  r.checks.push_back({"baseline_comparison", slower && base_gap > steady && !runs[bl].trace.collision,
                      "baseline convergence " + fmt("%.2f", conv_or_inf(mb)) + " s, steady gap " +
                          fmt("%.3f", base_gap) + " m"});
  r.series.push_back(std::move(changes));
  r.series.push_back(std::move(gaps));
  return r;
}

FigureResult fig10(const ExperimentConfig& cfg) {
  FigureResult r{"fig10", "urgent brake of the lead vehicle", {}, {}, {}};
  const auto pl = platoon_setup(cfg);
  auto sc = cfg.scenario;
  sc.duration = cfg.brake_time + 10.0;
  std::erase_if(sc.events, [](const sim::Event& e) { return e.kind == sim::EventKind::lead_brake; });
  sc.events.push_back({cfg.brake_time, sim::EventKind::lead_brake});
  const auto ctl = intelligent(cfg, pl, cfg.control.k2, true);
  const auto tr = sim::urgent_brake_scenario(sc, ctl);
  const auto m = sim::compute_metrics(tr);

  const auto event = std::size_t(std::llround(cfg.brake_time / sc.tick));
  const double D = tr.rows.at(event).D.back();
  const bool onset = m.brake_onset_latency >= 0.0 && m.brake_onset_latency <= D + sc.tick + 1e-9;
  r.checks.push_back({"brake_onset", onset,
                      "last vehicle brakes " + fmt("%.4f", m.brake_onset_latency) + " s after the event; bound " +
                          fmt("%.4f", D) + " s + one control period " + fmt("%g", sc.tick) + " s"});
  r.checks.push_back({"no_collision", !tr.collision && m.min_gap > 0.0,
                      "minimum gap " + fmt("%.3f", m.min_gap) + " m"});

  auto slow = sc;
  slow.fixed_delay = 10.0 * D;
  const auto ts = sim::urgent_brake_scenario(slow, ctl);
  long stale = 0;
  double first = -1.0;
  for (const auto& row : ts.rows) {
    if (row.failsafe == 0) continue;
    ++stale;
    if (first < 0.0) first = row.t;
  }
  r.checks.push_back({"failsafe_engages", stale > 0 && !ts.collision,
                      "with delays of 10x the bound the stale-data brake engages at t = " + fmt("%.2f", first) +
                          " s"});

  Series s{"fig10_urgent_brake", {"t", "lead_speed", "last_speed", "last_command", "min_gap"}, {}};
  for (const auto& row : tr.rows) {
    s.rows.push_back({row.t, row.speed.front(), row.speed.back(), row.command.back(),
                      *std::min_element(row.gap.begin(), row.gap.end())});
  }
  r.summary["metrics"] = m.summary(tr);
  r.summary["delay_bound_s"] = D;
  r.series.push_back(std::move(s));
  return r;
}

}  // namespace

PlatoonSetup platoon_setup(const ExperimentConfig& cfg) {
  PlatoonSetup pl;
  pl.trained = sim::train_environment_predictors(cfg.scenario.env, cfg.predictor);
  if (cfg.oracle) {
    pl.oracle = cfg.oracle;
  } else {
    surrogate::GridSpec g;
    g.base.cellular = cfg.cellular;
    g.base.mmwave = cfg.mmwave;
    g.x_grid = cfg.x_grid;
    pl.oracle = surrogate::bound_oracle(g);
  }
  const auto& env = cfg.scenario.env.params;
  surrogate::DelayQuery q;
  q.p = cfg.control.p;
  q.split = cfg.control.split;
  q.noise_level = env[control::kNoise].values.back();
  q.n = env[control::kVehicles].values.back();
  q.lambda = env[control::kLoad].values.back();
  pl.D_ref = pl.oracle(q).delay_slots * cfg.control.slot_duration;
  auto car = cfg.scenario.vehicle;
  car.speed = cfg.scenario.initial_speed;
  auto lead = car;
  lead.position = 100.0;
  pl.S_ref = control::safe_distance(car, lead, pl.D_ref);
  return pl;
}

sim::Controllers controllers(const ExperimentConfig& cfg, const PlatoonSetup& pl, sim::ControllerKind kind,
                             bool prediction) {
  sim::Controllers c;
  c.kind = kind;
  c.control = cfg.control;
  c.predictors = pl.trained.predictors;
  c.predictors.enabled = prediction;
  c.oracle = pl.oracle;
  return c;
}

bool FigureResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check& FigureResult::check(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw ConfigError(id + " has no check named " + name);
}

void ExperimentConfig::validate() const {
  if (mc_packets < 1) throw ConfigError("mc_packets must be >= 1");
  if (x_grid.empty() || !std::is_sorted(x_grid.begin(), x_grid.end())) {
    throw ConfigError("x_grid must be sorted and non-empty");
  }
  if (k2_sweep.empty()) throw ConfigError("k2_sweep must not be empty");
  if (!(brake_time > 0.0)) throw ConfigError("brake_time must be positive");
  try {
    cellular.validate();
    mmwave.validate();
    control.validate();
    for (double k : k2_sweep) {
      auto c = control;
      c.k2 = k;
      c.validate();
    }
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  scenario.validate();
}

nlohmann::json to_json(const ExperimentConfig& c) {
  const auto& mk = c.predictor.markov;
  return {{"seed", c.seed},
          {"mc_packets", c.mc_packets},
          {"cellular", cellular::to_json(c.cellular)},
          {"mmwave", mmwave::to_json(c.mmwave)},
          {"x_grid", {{"lo", c.x_grid.front()}, {"hi", c.x_grid.back()}, {"points", c.x_grid.size()}}},
          {"scenario", sim::to_json(c.scenario)},
          {"control", control::to_json(c.control)},
          {"predictor",
           {{"samples", c.predictor.samples},
            {"seed", c.predictor.seed},
            {"order", mk.order},
            {"zeta", mk.zeta},
            {"threshold", mk.threshold},
            {"hidden", c.predictor.options.hidden},
            {"epochs", c.predictor.options.train.epochs}}},
          {"k2_sweep", c.k2_sweep},
          {"stable_from", c.stable_from},
          {"brake_time", c.brake_time}};
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.mc_packets = j.value("mc_packets", c.mc_packets);
    if (j.contains("cellular")) cellular::update_from_json(c.cellular, j.at("cellular"));
    if (j.contains("mmwave")) mmwave::update_from_json(c.mmwave, j.at("mmwave"));
    if (j.contains("x_grid")) {
      const auto& x = j.at("x_grid");
      c.x_grid = hybrid::log_grid(x.value("lo", 1.0), x.value("hi", 1e6), x.value("points", 200));
    }
    if (j.contains("scenario")) c.scenario = sim::scenario_from_json(j.at("scenario"));
    if (j.contains("control")) control::update_from_json(c.control, j.at("control"));
    if (j.contains("predictor")) {
      const auto& p = j.at("predictor");
      auto& t = c.predictor;
      t.samples = p.value("samples", t.samples);
      t.seed = p.value("seed", t.seed);
      t.markov.order = p.value("order", t.markov.order);
      t.markov.zeta = p.value("zeta", t.markov.zeta);
      t.markov.threshold = p.value("threshold", t.markov.threshold);
      t.options.hidden = p.value("hidden", t.options.hidden);
      t.options.train.epochs = p.value("epochs", t.options.train.epochs);
    }
    c.k2_sweep = j.value("k2_sweep", c.k2_sweep);
    c.stable_from = j.value("stable_from", c.stable_from);
    c.brake_time = j.value("brake_time", c.brake_time);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"fig5", "fig6", "fig7", "fig8", "fig9", "fig10"};
  return ids;
}

FigureResult reproduce(const std::string& id, const ExperimentConfig& cfg) {
  cfg.validate();
  static const std::map<std::string, FigureResult (*)(const ExperimentConfig&)> recipes{
      {"fig5", fig5}, {"fig6", fig6}, {"fig7", fig7}, {"fig8", fig8}, {"fig9", fig9}, {"fig10", fig10}};
  const auto it = recipes.find(id);
  if (it == recipes.end()) throw ConfigError("unknown figure id: " + id);
  return it->second(cfg);
}

FigureResult validate_bounds(const ExperimentConfig& cfg) {
  cfg.validate();
  FigureResult r{"validate", "Monte Carlo dominance of the analytic delay bounds", {}, {}, {}};
  cellular_dominance(cfg, r, "validate");

  auto mp = cfg.mmwave;
  mp.n_vehicles = 6;
  const double lam = cellular::per_slot_rate(0.1, cfg.cellular.slot_duration);
  const mmwave::Model model(mp);
  const auto a = mmwave::flow_arrival(mp, lam);
  const auto mm = sim::simulate_mmwave_mc(mp, mp.n_vehicles * lam, cfg.mc_packets, stream(cfg.seed, 30));
  Series ms{"validate_mmwave_n6", kDominanceColumns, {}};
  r.checks.push_back(
      dominance([&](double x) { return model.delay_ccdf_optimized(a, x); }, mm, cfg.x_grid, ms).check("mmwave_dominance_n6"));
  r.series.push_back(std::move(ms));

  // routed traffic: each packet takes mmWave with probability split
  const auto c = hybrid_at(cfg, 0.2);
  const hybrid::HybridModel hm(c);
  auto cp = c.cellular;
  cp.lambda = (1.0 - c.split) * c.lambda_total;
  const auto cell = sim::simulate_cellular_mc(cp, cfg.mc_packets, stream(cfg.seed, 31));
  const auto mmr =
      sim::simulate_mmwave_mc(c.mmwave, c.mmwave.n_vehicles * c.split * c.lambda_total, cfg.mc_packets, stream(cfg.seed, 32));
  std::mt19937_64 rng(stream(cfg.seed, 33));
  std::bernoulli_distribution to_mm(c.split);
  std::vector<double> routed;
  for (long i = 0; i < cfg.mc_packets; ++i) {
    routed.push_back(to_mm(rng) ? mmr.samples()[i] : cell.delays.samples()[i]);
  }
  Series hs{"validate_hybrid_lambda0.2", kDominanceColumns, {}};
  r.checks.push_back(dominance([&](double x) { return hm.delay_ccdf(x); }, EmpiricalCcdf(routed), cfg.x_grid, hs)
                         .check("hybrid_dominance_lambda0.2"));
  r.series.push_back(std::move(hs));
  return r;
}

void write_series_csv(const Series& s, std::ostream& out) {
  for (std::size_t i = 0; i < s.columns.size(); ++i) out << (i ? "," : "") << s.columns[i];
  out << '\n';
  char buf[32];
  for (const auto& row : s.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.10g", row[i]);
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
}

nlohmann::json report_json(const FigureResult& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  nlohmann::json files = nlohmann::json::array();
  for (const auto& s : r.series) files.push_back(s.name + ".csv");
  return {{"id", r.id}, {"title", r.title}, {"passed", r.passed()}, {"checks", checks},
          {"series", files}, {"summary", r.summary}};
}

}  // namespace v2v::experiments
