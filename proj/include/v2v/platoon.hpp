#pragma once

// Discrete-time platoon simulator: a Markov-modulated channel environment,
// per-link message delays drawn from the cellular Monte Carlo, the
// intelligent and baseline follower controllers, and trace metrics.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2v/cellular.hpp"
#include "v2v/control.hpp"
#include "v2v/predictor.hpp"

namespace v2v::sim {

// One environment parameter. Levels are ordered from best to worst; each
// regime is a first-order chain over all levels.
struct EnvParam {
  std::vector<double> values;  // DelayQuery units: noise level, vehicles, packets/slot
  std::vector<std::vector<double>> nominal;
  std::vector<std::vector<double>> degraded;
  int initial = 0;
};

struct EnvModel {
  std::array<EnvParam, control::kParams> params;  // indexed by control::Param
  double period = 0.5;                            // s between chain steps

  void validate() const;
};

// Nominal: noise 0, 6 vehicles, 0.2 packets/ms. Degraded: noise {0, 3, 6},
// 6 or 8 vehicles, 0.3 to 0.5 packets/ms.
EnvModel default_environment(double slot_duration = 13e-6);

enum class Regime { nominal, degraded };

// Level sequence of one parameter under a fixed regime, starting at `initial`.
std::vector<int> sample_levels(const EnvParam& p, Regime r, long steps, std::uint64_t seed);

enum class EventKind { degrade, lead_brake };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::degrade;
};

struct ScenarioConfig {
  int vehicle_count = 6;
  double initial_gap = 10.0;   // m, bumper to bumper
  double initial_speed = 7.5;  // m/s
  double duration = 60.0;      // s
  double tick = 0.01;          // s
  std::vector<Event> events;
  std::uint64_t seed = 1;
  control::VehicleState vehicle;      // limits and length shared by all vehicles
  EnvModel env;
  cellular::BackoffParams channel;    // n and lambda come from the environment
  long pool_packets = 2000;           // Monte Carlo delays per environment state
  double delay_scale = 1.0;
  std::optional<double> fixed_delay;  // s; replaces the sampled delays

  void validate() const;
};

// 6 vehicles, 10 m, 7.5 m/s, degradation at t = 0, 60 s.
ScenarioConfig reference_scenario();

enum class ControllerKind { intelligent, baseline };

// Constant time headway follower.
struct BaselineConfig {
  double k_v = 0.5;
  double k_g = 0.2;
  double headway = 1.5;     // s
  double standstill = 2.0;  // m
};

// k_v (v_lead - v_self) + k_g (gap - h v_self - g0), saturated to the limits.
double baseline_follower(double gap, double v_self, double v_lead, const BaselineConfig& cfg,
                         const control::VehicleState& limits);

struct Controllers {
  ControllerKind kind = ControllerKind::intelligent;
  control::ControlConfig control;
  control::Predictors predictors;  // level values must match the environment
  control::DelayOracle oracle;
  BaselineConfig baseline;
};

struct PredictorTraining {
  predictor::MarkovConfig markov;  // order, zeta, threshold; bin edges are replaced
  predictor::PredictorOptions options;
  long samples = 20000;            // chain steps per parameter, degraded regime
  std::uint64_t seed = 11;
};

struct TrainedEnvironment {
  control::Predictors predictors;
  std::array<double, control::kParams> max_tv{};
};

// Fits one predictor per parameter to a sampled degraded-regime sequence.
TrainedEnvironment train_environment_predictors(const EnvModel& env, const PredictorTraining& t);

struct TickRow {
  double t = 0.0;
  std::vector<double> position, speed, command;  // per vehicle
  std::vector<double> gap, S, D, delay;          // per follower link, index i is vehicle i + 1
  std::array<int, control::kParams> env{};       // current levels
  int failsafe = 0;                              // followers on the stale-data path
};

struct SimTrace {
  double tick = 0.0;
  std::vector<TickRow> rows;
  bool collision = false;
  double collision_time = -1.0;
  double brake_event_time = -1.0;  // -1 when no lead-brake event
  double last_brake_time = -1.0;   // last vehicle starts emergency braking
  bool extrapolated = false;       // some delay query left the surrogate's box
  std::string speed_change_definition;
};

SimTrace run_platoon_scenario(const ScenarioConfig& sc, const Controllers& ctl);

// Requires a lead-brake event. On the event the lead brakes at its limit
// and broadcasts a brake message; each follower brakes at its limit once the
// message arrives.
SimTrace urgent_brake_scenario(const ScenarioConfig& sc, const Controllers& ctl);

struct MetricsOptions {
  double tolerance = 1e-9;  // m/s^2, numerical zero
  double dwell = 5.0;       // s
};

struct Metrics {
  std::vector<int> changes;         // per tick
  std::vector<double> average_gap;  // per tick
  double min_gap = 0.0;
  bool converged = false;
  double convergence_time = -1.0;   // first quiet dwell window, end of the window
  double settled_time = -1.0;       // counts stay 0 from here to the end of the trace
  double brake_onset_latency = -1.0;
  long total_changes = 0;

  long changes_between(const SimTrace& tr, double t0, double t1) const;
  nlohmann::json summary(const SimTrace& tr) const;
};

Metrics compute_metrics(const SimTrace& tr, const MetricsOptions& opts = {});

// Long format: t,vehicle,position,speed,gap,S,D,command,delay. Follower
// columns are empty for the lead.
void write_trace_csv(const SimTrace& tr, std::ostream& out);

nlohmann::json to_json(const ScenarioConfig& sc);
ScenarioConfig scenario_from_json(const nlohmann::json& j);

}  // namespace v2v::sim
