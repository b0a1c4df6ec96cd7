#include "v2v/control.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

#include "v2v/error.hpp"

namespace v2v::control {

void VehicleState::validate() const {
  if (!(speed >= 0.0)) throw DomainError("speed must be >= 0");
  if (!(a_max_brake > 0.0) || !(a_max_accel > 0.0)) {
    throw DomainError("braking and acceleration limits must be positive");
  }
  if (!(length >= 0.0) || !std::isfinite(position)) throw DomainError("invalid vehicle geometry");
}

void ControlConfig::validate() const {
  if (!(k1 > 1.0 && k2 > k1)) throw DomainError("need k2 > k1 > 1");
  if (!(A_a > 0.0) || !(A_d < 0.0)) throw DomainError("need A_a > 0 and A_d < 0");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("timeout probability must lie in (0, 1)");
  if (T_n < 1) throw DomainError("prediction horizon must be >= 1");
  if (!(control_period > 0.0) || !(slot_duration > 0.0)) throw DomainError("periods must be positive");
  if (!(split >= 0.0 && split <= 1.0)) throw DomainError("split must lie in [0, 1]");
  if (staleness_cap < 1) throw DomainError("staleness cap must be >= 1");
  if (!(target_speed >= 0.0)) throw DomainError("target speed must be >= 0");
}

double gap_between(const VehicleState& follower, const VehicleState& leader) {
  return leader.position - leader.length - follower.position;
}

double safe_distance(const VehicleState& follower, const VehicleState& leader, double D) {
  if (!(D >= 0.0)) throw DomainError("delay bound must be >= 0");
  if (!(follower.a_max_brake > 0.0) || !(leader.a_max_brake > 0.0)) {
    throw DomainError("braking magnitudes must be positive");
  }
  const double vf = follower.speed, vl = leader.speed;
  const double s = vf * vf / (2.0 * follower.a_max_brake) + D * vf - vl * vl / (2.0 * leader.a_max_brake);
  return std::max(0.0, s);
}

double map_acceleration(double gap, double S, const ControlConfig& cfg) {
  if (!(S >= 0.0)) throw DomainError("safe distance must be >= 0");
  if (gap > cfg.k2 * S) return cfg.A_a;
  if (gap > cfg.k1 * S) return 0.0;
  return cfg.A_d;
}

DelayEstimate predicted_delay(const Environment& env, const Predictors& pred, const DelayOracle& oracle,
                              const ControlConfig& cfg) {
  DelayEstimate out;
  for (int k = 0; k < kParams; ++k) {
    const auto& ctx = env.context[k];
    const auto& model = pred.params[k];
    if (ctx.empty()) throw DomainError("environment context is empty");
    int level = ctx.back();
    if (pred.enabled) {
      level = std::max(level, predictor::worst_case_horizon(model.next, ctx, cfg.T_n, pred.threshold));
    }
    if (level < 0 || level >= int(model.level_values.size())) {
      throw DomainError("parameter level has no representative value");
    }
    out.values[k] = model.level_values[level];
  }
  const surrogate::DelayQuery q{cfg.p, out.values[kLoad], out.values[kVehicles], out.values[kNoise],
                                cfg.split};
  const auto p = oracle(q);
  out.seconds = p.delay_slots * cfg.slot_duration;
  out.extrapolated = p.extrapolated;
  return out;
}

Command decide(const Snapshot& s, const DelayEstimate& d, const ControlConfig& cfg) {
  Command c;
  c.D = d.seconds;
  c.extrapolated = d.extrapolated;
  const double dt = cfg.control_period;
  auto track = [&](double v_ref, double lo, double hi) {
    return std::clamp((v_ref - s.self.speed) / dt, lo, hi);
  };
  if (!s.predecessor) {
    c.acceleration = track(cfg.target_speed, -s.self.a_max_brake, s.self.a_max_accel);
    return c;
  }
  const auto& pred = *s.predecessor;
  c.gap = gap_between(s.self, pred);
  auto self = s.self;
  if (cfg.speed_reference == SpeedReference::settled) self.speed = std::max(self.speed, pred.speed);
  c.S = safe_distance(self, pred, d.seconds);
  if (s.age > cfg.staleness_cap * dt * (1.0 + 1e-9)) {
    c.failsafe = true;
    c.acceleration = cfg.A_d;
    return c;
  }
  double g = c.gap;
  if (cfg.anticipate) {
    const double dv = pred.speed - s.self.speed;
    g += dv > 0.0 ? dv * dv / (2.0 * cfg.A_a) : -dv * dv / (2.0 * -cfg.A_d);
  }
  const double a = map_acceleration(g, c.S, cfg);
  c.acceleration = a != 0.0 ? a : track(pred.speed, cfg.A_d, cfg.A_a);
  return c;
}

Command control_step(const Snapshot& s, const Environment& env, const Predictors& pred,
                     const DelayOracle& oracle, const ControlConfig& cfg) {
  if (!s.predecessor) return decide(s, {}, cfg);
  return decide(s, predicted_delay(env, pred, oracle, cfg), cfg);
}

namespace {

const char* const speed_reference_names[] = {"current", "settled"};

template <class T>
void read(const nlohmann::json& j, const char* key, T& v) {
  if (j.contains(key)) v = j.at(key).get<T>();
}

}  // namespace

nlohmann::json to_json(const ControlConfig& p) {
  return {
      {"k1", p.k1},
      {"k2", p.k2},
      {"A_a", p.A_a},
      {"A_d", p.A_d},
      {"p", p.p},
      {"T_n", p.T_n},
      {"control_period", p.control_period},
      {"slot_duration", p.slot_duration},
      {"split", p.split},
      {"staleness_cap", p.staleness_cap},
      {"target_speed", p.target_speed},
      {"anticipate", p.anticipate},
      {"speed_reference", speed_reference_names[int(p.speed_reference)]},
  };
}

void update_from_json(ControlConfig& p, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("control parameters must be a JSON object");
  try {
    read(j, "k1", p.k1);
    read(j, "k2", p.k2);
    read(j, "A_a", p.A_a);
    read(j, "A_d", p.A_d);
    read(j, "p", p.p);
    read(j, "T_n", p.T_n);
    read(j, "control_period", p.control_period);
    read(j, "slot_duration", p.slot_duration);
    read(j, "split", p.split);
    read(j, "staleness_cap", p.staleness_cap);
    read(j, "target_speed", p.target_speed);
    read(j, "anticipate", p.anticipate);
    if (j.contains("speed_reference")) {
      const auto s = j.at("speed_reference").get<std::string>();
      const auto it = std::find(std::begin(speed_reference_names), std::end(speed_reference_names), s);
      if (it == std::end(speed_reference_names)) throw ConfigError("unknown speed_reference: " + s);
      p.speed_reference = SpeedReference(it - std::begin(speed_reference_names));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("control parameters: ") + e.what());
  }
}

}  // namespace v2v::control
