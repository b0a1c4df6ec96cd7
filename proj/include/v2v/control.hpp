#pragma once

// Per-vehicle distance control: safe distance from the delay bound,
// hysteresis mapping of the gap to an acceleration, and the control step
// that ties in parameter prediction and the delay surrogate.

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "v2v/predictor.hpp"
#include "v2v/surrogate.hpp"

namespace v2v::control {

struct VehicleState {
  double position = 0.0;     // front bumper, m
  double speed = 0.0;        // m/s
  double a_max_brake = 6.0;  // magnitude, m/s^2
  double a_max_accel = 2.0;
  double length = 4.5;

  void validate() const;
};

// Follower speed used for S inside the control step. `current` is the
// instantaneous speed; `settled` never uses less than the predecessor's
// speed, which is where the follower ends up inside the dead band.
enum class SpeedReference { current, settled };

struct ControlConfig {
  double k1 = 1.02;
  double k2 = 1.1;
  double A_a = 1.0;
  double A_d = -2.0;
  double p = 0.01;
  int T_n = 4;                   // prediction horizon, environment steps
  double control_period = 0.01;  // s
  double slot_duration = 13e-6;  // s
  double split = 0.5;
  int staleness_cap = 3;         // control periods before fail-safe braking
  double target_speed = 7.5;     // lead vehicle
  SpeedReference speed_reference = SpeedReference::settled;
  bool anticipate = true;  // map the gap expected once speeds match at A_a / A_d

  void validate() const;
};

// Bumper-to-bumper distance from the follower to the vehicle ahead.
double gap_between(const VehicleState& follower, const VehicleState& leader);

// S = v_f^2 / (2 b_f) + D v_f - v_l^2 / (2 b_l), floored at 0; D in seconds.
double safe_distance(const VehicleState& follower, const VehicleState& leader, double D);

// A_a above k2 S, A_d at or below k1 S, 0 in between (k2 S itself coasts).
double map_acceleration(double gap, double S, const ControlConfig& cfg);

enum Param { kNoise = 0, kVehicles = 1, kLoad = 2 };
inline constexpr int kParams = 3;

struct ParameterModel {
  predictor::TransitionFn next;     // distribution of the next level
  std::vector<double> level_values; // representative value per level; higher is worse
};

struct Predictors {
  std::array<ParameterModel, kParams> params;
  bool enabled = true;
  double threshold = 0.05;
  int order = 1;  // context length the transition maps expect
};

// Recent levels per parameter, oldest first; back() is the current level.
struct Environment {
  std::array<predictor::Context, kParams> context;
};

using DelayOracle = std::function<surrogate::Prediction(const surrogate::DelayQuery&)>;

struct DelayEstimate {
  double seconds = 0.0;
  bool extrapolated = false;
  std::array<double, kParams> values{};  // parameter values used in the query
};

// Worst parameter values over the horizon (or the current ones when
// prediction is off), mapped through the delay oracle.
DelayEstimate predicted_delay(const Environment& env, const Predictors& pred, const DelayOracle& oracle,
                              const ControlConfig& cfg);

struct Snapshot {
  VehicleState self;
  std::optional<VehicleState> predecessor;  // last received state
  double age = 0.0;                          // s since that state was sent
};

struct Command {
  double acceleration = 0.0;
  double gap = 0.0;
  double S = 0.0;
  double D = 0.0;
  bool failsafe = false;
  bool extrapolated = false;
};

// Decision for one vehicle given the delay estimate. The lead vehicle holds
// the target speed. Followers brake with A_d when the predecessor's state is
// missing or older than the staleness cap. Otherwise the gap (optionally the
// gap left once speeds match) is mapped per the hysteresis law, and inside
// the dead band the follower holds the predecessor's speed, reached as fast
// as A_d / A_a allow.
Command decide(const Snapshot& s, const DelayEstimate& d, const ControlConfig& cfg);

Command control_step(const Snapshot& s, const Environment& env, const Predictors& pred,
                     const DelayOracle& oracle, const ControlConfig& cfg);

// Missing keys keep the current values; wrong types throw ConfigError.
nlohmann::json to_json(const ControlConfig& p);
void update_from_json(ControlConfig& p, const nlohmann::json& j);

}  // namespace v2v::control
