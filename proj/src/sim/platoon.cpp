#include "v2v/platoon.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <ostream>
#include <random>

#include "v2v/error.hpp"
#include "v2v/montecarlo.hpp"

namespace v2v::sim {

namespace {

constexpr double kTimeEps = 1e-9;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix(seed ^ mix(stream));
}

double unit(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

int draw(const std::vector<double>& row, std::mt19937_64& rng) {
  const double u = unit(rng);
  double acc = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    acc += row[j];
    if (u < acc) return int(j);
  }
  for (std::size_t j = row.size(); j-- > 0;) {
    if (row[j] > 0.0) return int(j);
  }
  return 0;
}

void check_rows(const std::vector<std::vector<double>>& rows, std::size_t levels) {
  if (rows.size() != levels) throw ConfigError("environment chain needs one row per level");
  for (const auto& r : rows) {
    if (r.size() != levels) throw ConfigError("environment chain row has the wrong length");
    double s = 0.0;
    for (double v : r) {
      if (!(v >= 0.0)) throw ConfigError("environment transition probabilities must be >= 0");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("environment chain rows must sum to 1");
  }
}

std::vector<double> levels_to_edges(int levels) {
  std::vector<double> e(levels + 1);
  for (int i = 0; i <= levels; ++i) e[i] = i;
  return e;
}

}  // namespace

void EnvModel::validate() const {
  if (!(period > 0.0)) throw ConfigError("environment period must be positive");
  for (const auto& p : params) {
    if (p.values.empty()) throw ConfigError("environment parameter has no levels");
    check_rows(p.nominal, p.values.size());
    check_rows(p.degraded, p.values.size());
    if (p.initial < 0 || p.initial >= int(p.values.size())) {
      throw ConfigError("initial environment level out of range");
    }
  }
}

EnvModel default_environment(double slot_duration) {
  EnvModel m;
  auto& noise = m.params[control::kNoise];
  noise.values = {0.0, 3.0, 6.0};
  noise.nominal = {{1, 0, 0}, {1, 0, 0}, {1, 0, 0}};
  noise.degraded = {{0.5, 0.4, 0.1}, {0.2, 0.6, 0.2}, {0.1, 0.4, 0.5}};

  auto& veh = m.params[control::kVehicles];
  veh.values = {6.0, 8.0};
  veh.nominal = {{1, 0}, {1, 0}};
  veh.degraded = {{0.6, 0.4}, {0.3, 0.7}};

  auto& load = m.params[control::kLoad];
  for (double per_ms : {0.2, 0.3, 0.4, 0.5}) {
    load.values.push_back(cellular::per_slot_rate(per_ms, slot_duration));
  }
  load.nominal = {{1, 0, 0, 0}, {1, 0, 0, 0}, {1, 0, 0, 0}, {1, 0, 0, 0}};
  load.degraded = {{0.1, 0.4, 0.3, 0.2},
                   {0.05, 0.5, 0.3, 0.15},
                   {0.05, 0.3, 0.45, 0.2},
                   {0.05, 0.2, 0.35, 0.4}};
  return m;
}

std::vector<int> sample_levels(const EnvParam& p, Regime r, long steps, std::uint64_t seed) {
  const auto& rows = r == Regime::nominal ? p.nominal : p.degraded;
  check_rows(rows, p.values.size());
  std::mt19937_64 rng(seed);
  std::vector<int> out;
  out.reserve(std::max(0L, steps));
  int x = p.initial;
  for (long k = 0; k < steps; ++k) {
    out.push_back(x);
    x = draw(rows[x], rng);
  }
  return out;
}

void ScenarioConfig::validate() const {
  if (vehicle_count < 2) throw ConfigError("need at least 2 vehicles");
  if (!(initial_gap > 0.0)) throw ConfigError("initial gap must be positive");
  if (!(initial_speed >= 0.0)) throw ConfigError("initial speed must be >= 0");
  if (!(tick > 0.0)) throw ConfigError("tick must be positive");
  if (!(duration >= 0.0)) throw ConfigError("duration must be >= 0");
  if (pool_packets < 1) throw ConfigError("delay pool needs at least one packet");
  if (!(delay_scale >= 0.0)) throw ConfigError("delay scale must be >= 0");
  if (fixed_delay && !(*fixed_delay >= 0.0)) throw ConfigError("fixed delay must be >= 0");
  for (const auto& e : events) {
    if (!(e.time >= 0.0)) throw ConfigError("event times must be >= 0");
  }
  vehicle.validate();
  env.validate();
}

ScenarioConfig reference_scenario() {
  ScenarioConfig sc;
  sc.events = {{0.0, EventKind::degrade}};
  sc.env = default_environment(sc.channel.slot_duration);
  return sc;
}

double baseline_follower(double gap, double v_self, double v_lead, const BaselineConfig& cfg,
                         const control::VehicleState& limits) {
  const double a =
      cfg.k_v * (v_lead - v_self) + cfg.k_g * (gap - cfg.headway * v_self - cfg.standstill);
  return std::clamp(a, -limits.a_max_brake, limits.a_max_accel);
}

TrainedEnvironment train_environment_predictors(const EnvModel& env, const PredictorTraining& t) {
  env.validate();
  TrainedEnvironment out;
  out.predictors.threshold = t.markov.threshold;
  out.predictors.order = t.markov.order;
  for (int k = 0; k < control::kParams; ++k) {
    const auto& p = env.params[k];
    auto cfg = t.markov;
    cfg.bin_edges = levels_to_edges(int(p.values.size()));
    cfg.validate();
    const auto seq = sample_levels(p, Regime::degraded, t.samples, stream_seed(t.seed, 100 + k));
    const auto table = smooth_frequencies(estimate_frequencies({seq}, cfg), cfg);
    auto opts = t.options;
    opts.train.seed = stream_seed(t.seed, 200 + k);
    auto trained = predictor::train_predictor(table, cfg, opts);
    out.max_tv[k] = trained.max_tv;
    auto model = std::make_shared<predictor::PredictorModel>(std::move(trained.model));
    out.predictors.params[k].next = [model](const predictor::Context& c) { return model->predict(c); };
    out.predictors.params[k].level_values = p.values;
  }
  return out;
}

namespace {

struct Message {
  double sent = 0.0;
  double arrival = 0.0;
  control::VehicleState state;
};

struct Link {
  std::deque<Message> in_flight;  // arrival order is not guaranteed
  std::optional<Message> latest;
};

class DelaySource {
 public:
  explicit DelaySource(const ScenarioConfig& sc) : sc_(sc), rng_(stream_seed(sc.seed, 2)) {}

  double sample(int n_level, int load_level) {
    if (sc_.fixed_delay) return *sc_.fixed_delay;
    auto& pool = pools_[{n_level, load_level}];
    if (pool.empty()) {
      auto bp = sc_.channel;
      bp.n = int(std::lround(sc_.env.params[control::kVehicles].values[n_level]));
      bp.lambda = sc_.env.params[control::kLoad].values[load_level];
      const std::uint64_t s = stream_seed(sc_.seed, 1000 + 64 * n_level + load_level);
      pool = simulate_cellular_mc(bp, sc_.pool_packets, s).delays.samples();
      if (pool.empty()) throw RegimeError("EmptyDelayPool", "no packets delivered in delay pool");
    }
    const auto i = std::size_t(unit(rng_) * double(pool.size()));
    return pool[std::min(i, pool.size() - 1)] * bp_slot() * sc_.delay_scale;
  }

 private:
  double bp_slot() const { return sc_.channel.slot_duration; }

  const ScenarioConfig& sc_;
  std::mt19937_64 rng_;
  std::map<std::pair<int, int>, std::vector<double>> pools_;
};

class Environment {
 public:
  Environment(const ScenarioConfig& sc, int order) : sc_(sc), rng_(stream_seed(sc.seed, 1)) {
    for (int k = 0; k < control::kParams; ++k) {
      level_[k] = sc.env.params[k].initial;
      ctx_.context[k].assign(std::max(1, order), level_[k]);
    }
  }

  void step() {
    for (int k = 0; k < control::kParams; ++k) {
      const auto& p = sc_.env.params[k];
      const auto& rows = regime_ == Regime::nominal ? p.nominal : p.degraded;
      level_[k] = draw(rows[level_[k]], rng_);
      auto& c = ctx_.context[k];
      c.erase(c.begin());
      c.push_back(level_[k]);
    }
  }

  void degrade() { regime_ = Regime::degraded; }
  int level(int k) const { return level_[k]; }
  const std::array<int, control::kParams>& levels() const { return level_; }
  const control::Environment& context() const { return ctx_; }

 private:
  const ScenarioConfig& sc_;
  std::mt19937_64 rng_;
  Regime regime_ = Regime::nominal;
  std::array<int, control::kParams> level_{};
  control::Environment ctx_;
};

SimTrace simulate(const ScenarioConfig& sc, const Controllers& ctl) {
  sc.validate();
  const bool intelligent = ctl.kind == ControllerKind::intelligent;
  if (intelligent) {
    ctl.control.validate();
    if (!ctl.oracle) throw ConfigError("intelligent controller needs a delay oracle");
    for (int k = 0; k < control::kParams; ++k) {
      if (ctl.predictors.params[k].level_values != sc.env.params[k].values) {
        throw ConfigError("predictor level values do not match the environment");
      }
      if (ctl.predictors.enabled && !ctl.predictors.params[k].next) {
        throw ConfigError("prediction enabled without a transition model");
      }
    }
  }

  const int N = sc.vehicle_count;
  const double dt = sc.tick;
  auto cfg = ctl.control;
  cfg.control_period = dt;

  std::vector<control::VehicleState> car(N, sc.vehicle);
  for (int i = 0; i < N; ++i) {
    car[i].speed = sc.initial_speed;
    car[i].position = -i * (sc.initial_gap + sc.vehicle.length);
  }

  // Followers start with their predecessor's state as of t = 0.
  std::vector<Link> link(N);
  for (int i = 1; i < N; ++i) link[i].latest = Message{0.0, 0.0, car[i - 1]};

  auto events = sc.events;
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  std::size_t next_event = 0;

  Environment env(sc, ctl.predictors.order);
  DelaySource delays(sc);
  double next_env = sc.env.period;

  bool lead_braking = false;
  std::vector<double> brake_arrival(N, -1.0);  // emergency message arrival per follower
  std::vector<bool> braking(N, false);

  std::optional<std::array<int, control::kParams>> cached_levels;
  std::optional<std::vector<int>> cached_ctx;
  control::DelayEstimate estimate;

  SimTrace tr;
  tr.tick = dt;
  tr.speed_change_definition =
      "vehicles whose commanded acceleration differs from the previous tick by more than the "
      "tolerance";
  const long ticks = long(std::floor(sc.duration / dt + kTimeEps));
  tr.rows.reserve(ticks + 1);

  for (long k = 0; k <= ticks; ++k) {
    const double t = k * dt;

    while (next_event < events.size() && events[next_event].time <= t + kTimeEps) {
      const auto& e = events[next_event++];
      if (e.kind == EventKind::degrade) {
        env.degrade();
        env.step();
      } else {
        lead_braking = true;
        if (tr.brake_event_time < 0.0) tr.brake_event_time = t;
        for (int i = 1; i < N; ++i) {
          const double d = delays.sample(env.level(control::kVehicles), env.level(control::kLoad));
          brake_arrival[i] = t + d;
        }
      }
    }
    if (k > 0 && t + kTimeEps >= next_env) {
      env.step();
      next_env += sc.env.period;
    }

    for (int i = 1; i < N; ++i) {
      auto& l = link[i];
      for (auto it = l.in_flight.begin(); it != l.in_flight.end();) {
        if (it->arrival <= t + kTimeEps && it->sent < t - kTimeEps) {
          if (!l.latest || it->sent > l.latest->sent) l.latest = *it;
          it = l.in_flight.erase(it);
        } else {
          ++it;
        }
      }
      if (brake_arrival[i] >= 0.0 && brake_arrival[i] <= t + kTimeEps &&
          tr.brake_event_time < t - kTimeEps) {
        if (!braking[i] && i == N - 1) tr.last_brake_time = t;
        braking[i] = true;
      }
    }

    if (intelligent) {
      std::vector<int> flat;
      for (const auto& c : env.context().context) flat.insert(flat.end(), c.begin(), c.end());
      if (!cached_ctx || *cached_ctx != flat) {
        estimate = control::predicted_delay(env.context(), ctl.predictors, ctl.oracle, cfg);
        cached_ctx = flat;
        if (estimate.extrapolated) tr.extrapolated = true;
      }
    }

    TickRow row;
    row.t = t;
    row.env = env.levels();
    row.command.assign(N, 0.0);
    row.gap.assign(N - 1, 0.0);
    row.S.assign(N - 1, 0.0);
    row.D.assign(N - 1, 0.0);
    row.delay.assign(N - 1, 0.0);
    for (int i = 0; i < N; ++i) {
      row.position.push_back(car[i].position);
      row.speed.push_back(car[i].speed);
    }

    for (int i = 0; i < N; ++i) {
      double a = 0.0;
      if (i == 0) {
        a = lead_braking ? -car[0].a_max_brake
                         : control::decide({car[0], std::nullopt, 0.0}, {}, cfg).acceleration;
      } else {
        row.gap[i - 1] = control::gap_between(car[i], car[i - 1]);
        if (braking[i]) {
          a = -car[i].a_max_brake;
        } else if (intelligent) {
          const auto& m = link[i].latest;
          control::Snapshot s{car[i], std::nullopt, 0.0};
          if (m) {
            s.predecessor = m->state;
            s.age = t - m->sent;
          }
          const auto c = control::decide(s, estimate, cfg);
          a = c.acceleration;
          row.S[i - 1] = c.S;
          row.D[i - 1] = c.D;
          if (c.failsafe) ++row.failsafe;
        } else {
          a = baseline_follower(row.gap[i - 1], car[i].speed, car[i - 1].speed, ctl.baseline, car[i]);
        }
      }
      row.command[i] = a;
    }

    for (int i = 1; i < N; ++i) {
      if (row.gap[i - 1] <= 0.0 && !tr.collision) {
        tr.collision = true;
        tr.collision_time = t;
      }
    }

    for (int i = 1; i < N; ++i) {
      const double d = delays.sample(env.level(control::kVehicles), env.level(control::kLoad));
      row.delay[i - 1] = d;
      link[i].in_flight.push_back({t, t + d, car[i - 1]});
    }

    tr.rows.push_back(std::move(row));
    if (k == ticks) break;

    const auto& cmd = tr.rows.back().command;
    for (int i = 0; i < N; ++i) {
      const double v0 = car[i].speed;
      const double v1 = std::max(0.0, v0 + cmd[i] * dt);
      car[i].position += 0.5 * (v0 + v1) * dt;
      car[i].speed = v1;
    }
  }
  return tr;
}

}  // namespace

SimTrace run_platoon_scenario(const ScenarioConfig& sc, const Controllers& ctl) {
  return simulate(sc, ctl);
}

SimTrace urgent_brake_scenario(const ScenarioConfig& sc, const Controllers& ctl) {
  const bool has_brake = std::any_of(sc.events.begin(), sc.events.end(),
                                     [](const Event& e) { return e.kind == EventKind::lead_brake; });
  if (!has_brake) throw ConfigError("urgent brake scenario needs a lead-brake event");
  return simulate(sc, ctl);
}

long Metrics::changes_between(const SimTrace& tr, double t0, double t1) const {
  long n = 0;
  for (std::size_t k = 0; k < tr.rows.size(); ++k) {
    const double t = tr.rows[k].t;
    if (t >= t0 - kTimeEps && t <= t1 + kTimeEps) n += changes[k];
  }
  return n;
}

Metrics compute_metrics(const SimTrace& tr, const MetricsOptions& opts) {
  Metrics m;
  const std::size_t T = tr.rows.size();
  m.changes.assign(T, 0);
  m.average_gap.assign(T, 0.0);
  m.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < T; ++k) {
    const auto& r = tr.rows[k];
    for (std::size_t i = 0; i < r.command.size(); ++i) {
      const double prev = k == 0 ? 0.0 : tr.rows[k - 1].command[i];
      if (std::abs(r.command[i] - prev) > opts.tolerance) ++m.changes[k];
    }
    m.total_changes += m.changes[k];
    double s = 0.0;
    for (double g : r.gap) {
      s += g;
      m.min_gap = std::min(m.min_gap, g);
    }
    m.average_gap[k] = r.gap.empty() ? 0.0 : s / double(r.gap.size());
  }
  if (T == 0) return m;

  const double t_end = tr.rows.back().t;
  // A quiet window starts either at t = 0 or just after a tick with changes.
  for (std::size_t k = 0; k < T && !m.converged; ++k) {
    if (k > 0 && m.changes[k - 1] == 0) continue;
    if (k > 0 && m.changes[k] != 0) continue;
    if (k == 0 && m.changes[0] != 0) continue;
    const double start = k == 0 ? tr.rows[0].t : tr.rows[k - 1].t;
    if (start + opts.dwell > t_end + kTimeEps) break;
    bool quiet = true;
    for (std::size_t j = k; j < T && tr.rows[j].t <= start + opts.dwell + kTimeEps; ++j) {
      if (m.changes[j] != 0) {
        quiet = false;
        break;
      }
    }
    if (quiet) {
      m.converged = true;
      m.convergence_time = k == 0 ? tr.rows[0].t : start + opts.dwell;
    }
  }

  std::size_t last = T;
  for (std::size_t k = T; k-- > 0;) {
    if (m.changes[k] != 0) {
      last = k;
      break;
    }
  }
  if (last == T) {
    m.settled_time = tr.rows[0].t;
  } else if (last + 1 < T) {
    m.settled_time = tr.rows[last + 1].t;
  }

  if (tr.brake_event_time >= 0.0 && tr.last_brake_time >= 0.0) {
    m.brake_onset_latency = tr.last_brake_time - tr.brake_event_time;
  }
  return m;
}

nlohmann::json Metrics::summary(const SimTrace& tr) const {
  nlohmann::json j;
  j["collision"] = tr.collision;
  j["collision_time"] = tr.collision ? nlohmann::json(tr.collision_time) : nlohmann::json(nullptr);
  j["min_gap"] = min_gap;
  j["converged"] = converged;
  j["convergence_time"] = converged ? nlohmann::json(convergence_time) : nlohmann::json(nullptr);
  j["settled_time"] = settled_time >= 0.0 ? nlohmann::json(settled_time) : nlohmann::json(nullptr);
  j["total_speed_changes"] = total_changes;
  j["brake_onset_latency"] =
      brake_onset_latency >= 0.0 ? nlohmann::json(brake_onset_latency) : nlohmann::json(nullptr);
  j["final_average_gap"] = average_gap.empty() ? 0.0 : average_gap.back();
  j["extrapolated"] = tr.extrapolated;
  j["speed_change_definition"] = tr.speed_change_definition;
  return j;
}

void write_trace_csv(const SimTrace& tr, std::ostream& out) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  out << "t,vehicle,position,speed,gap,S,D,command,delay\n";
  for (const auto& r : tr.rows) {
    for (std::size_t i = 0; i < r.position.size(); ++i) {
      out << num(r.t) << ',' << i << ',' << num(r.position[i]) << ',' << num(r.speed[i]) << ',';
      if (i == 0) {
        out << ",,,";
      } else {
        out << num(r.gap[i - 1]) << ',' << num(r.S[i - 1]) << ',' << num(r.D[i - 1]) << ',';
      }
      out << num(r.command[i]) << ',';
      if (i > 0) out << num(r.delay[i - 1]);
      out << '\n';
    }
  }
}

namespace {

const char* event_name(EventKind k) { return k == EventKind::degrade ? "degrade" : "lead_brake"; }

EventKind event_kind(const std::string& s) {
  if (s == "degrade") return EventKind::degrade;
  if (s == "lead_brake") return EventKind::lead_brake;
  throw ConfigError("unknown event kind: " + s);
}

}  // namespace

nlohmann::json to_json(const ScenarioConfig& sc) {
  nlohmann::json j;
  j["vehicle_count"] = sc.vehicle_count;
  j["initial_gap"] = sc.initial_gap;
  j["initial_speed"] = sc.initial_speed;
  j["duration"] = sc.duration;
  j["tick"] = sc.tick;
  j["seed"] = sc.seed;
  j["events"] = nlohmann::json::array();
  for (const auto& e : sc.events) j["events"].push_back({{"time", e.time}, {"kind", event_name(e.kind)}});
  j["vehicle"] = {{"a_max_brake", sc.vehicle.a_max_brake},
                  {"a_max_accel", sc.vehicle.a_max_accel},
                  {"length", sc.vehicle.length}};
  const char* names[] = {"noise_level", "n", "lambda"};
  j["environment"]["period"] = sc.env.period;
  for (int k = 0; k < control::kParams; ++k) {
    const auto& p = sc.env.params[k];
    j["environment"][names[k]] = {{"values", p.values},
                                  {"nominal", p.nominal},
                                  {"degraded", p.degraded},
                                  {"initial", p.initial}};
  }
  const auto& c = sc.channel;
  j["channel"] = {{"W", c.W},     {"m", c.m},     {"M", c.M},         {"t_s", c.t_s},
                  {"t_C", c.t_C}, {"t_TX", c.t_TX}, {"L", c.L},       {"slot_duration", c.slot_duration}};
  j["pool_packets"] = sc.pool_packets;
  j["delay_scale"] = sc.delay_scale;
  j["fixed_delay"] = sc.fixed_delay ? nlohmann::json(*sc.fixed_delay) : nlohmann::json(nullptr);
  return j;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig sc = reference_scenario();
  try {
    if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
    sc.vehicle_count = j.value("vehicle_count", sc.vehicle_count);
    sc.initial_gap = j.value("initial_gap", sc.initial_gap);
    sc.initial_speed = j.value("initial_speed", sc.initial_speed);
    sc.duration = j.value("duration", sc.duration);
    sc.tick = j.value("tick", sc.tick);
    sc.seed = j.value("seed", sc.seed);
    if (j.contains("events")) {
      sc.events.clear();
      for (const auto& e : j.at("events")) {
        sc.events.push_back({e.at("time").get<double>(), event_kind(e.at("kind").get<std::string>())});
      }
    }
    if (j.contains("vehicle")) {
      const auto& v = j.at("vehicle");
      sc.vehicle.a_max_brake = v.value("a_max_brake", sc.vehicle.a_max_brake);
      sc.vehicle.a_max_accel = v.value("a_max_accel", sc.vehicle.a_max_accel);
      sc.vehicle.length = v.value("length", sc.vehicle.length);
    }
    if (j.contains("channel")) {
      const auto& c = j.at("channel");
      auto& b = sc.channel;
      b.W = c.value("W", b.W);
      b.m = c.value("m", b.m);
      b.M = c.value("M", b.M);
      b.t_s = c.value("t_s", b.t_s);
      b.t_C = c.value("t_C", b.t_C);
      b.t_TX = c.value("t_TX", b.t_TX);
      b.L = c.value("L", b.L);
      b.slot_duration = c.value("slot_duration", b.slot_duration);
      sc.env = default_environment(b.slot_duration);
    }
    if (j.contains("environment")) {
      const auto& e = j.at("environment");
      sc.env.period = e.value("period", sc.env.period);
      const char* names[] = {"noise_level", "n", "lambda"};
      for (int k = 0; k < control::kParams; ++k) {
        if (!e.contains(names[k])) continue;
        const auto& p = e.at(names[k]);
        auto& q = sc.env.params[k];
        q.values = p.at("values").get<std::vector<double>>();
        q.nominal = p.at("nominal").get<std::vector<std::vector<double>>>();
        q.degraded = p.at("degraded").get<std::vector<std::vector<double>>>();
        q.initial = p.value("initial", 0);
      }
    }
    sc.pool_packets = j.value("pool_packets", sc.pool_packets);
    sc.delay_scale = j.value("delay_scale", sc.delay_scale);
    if (j.contains("fixed_delay") && !j.at("fixed_delay").is_null()) {
      sc.fixed_delay = j.at("fixed_delay").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  sc.validate();
  return sc;
}

}  // namespace v2v::sim
