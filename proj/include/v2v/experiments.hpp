#pragma once

// Figure reproduction recipes shared by the command line and the acceptance
// runner. Each recipe returns its data series and the checks of the claim the
// figure supports.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2v/cellular.hpp"
#include "v2v/control.hpp"
#include "v2v/hybrid.hpp"
#include "v2v/mmwave.hpp"
#include "v2v/platoon.hpp"
#include "v2v/surrogate.hpp"

namespace v2v::experiments {

struct Series {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct FigureResult {
  std::string id;
  std::string title;
  std::vector<Series> series;
  std::vector<Check> checks;
  nlohmann::json summary = nlohmann::json::object();

  bool passed() const;
  const Check& check(const std::string& name) const;  // throws ConfigError if absent
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  long mc_packets = 10000;
  cellular::BackoffParams cellular;  // lambda and n are set per experiment
  mmwave::MmWaveParams mmwave;
  std::vector<double> x_grid = hybrid::log_grid();

  sim::ScenarioConfig scenario = sim::reference_scenario();
  control::ControlConfig control;
  sim::PredictorTraining predictor;
  std::vector<double> k2_sweep{1.05, 1.1, 1.2};
  double stable_from = 20.0;  // s, start of the stable period
  double brake_time = 30.0;   // s, lead brake in fig10
  control::DelayOracle oracle;  // empty: the hybrid bound inverted directly

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
// Missing keys keep their defaults.
ExperimentConfig experiment_from_json(const nlohmann::json& j);

// Predictors trained on the scenario's degraded regime, the delay oracle and
// the reference safe distance at the worst degraded levels.
struct PlatoonSetup {
  sim::TrainedEnvironment trained;
  control::DelayOracle oracle;
  double D_ref = 0.0;  // s
  double S_ref = 0.0;  // m, at the scenario's initial speed
};
PlatoonSetup platoon_setup(const ExperimentConfig& cfg);
sim::Controllers controllers(const ExperimentConfig& cfg, const PlatoonSetup& pl, sim::ControllerKind kind,
                             bool prediction);

const std::vector<std::string>& figure_ids();

// fig5 cellular bound against Monte Carlo, fig6 mmWave vehicle doubling,
// fig7 hybrid against cellular, fig8 average delay, fig9 platoon stability,
// prediction and gaps, fig10 urgent brake. Unknown ids throw ConfigError.
FigureResult reproduce(const std::string& id, const ExperimentConfig& cfg);

// Monte Carlo dominance of the cellular, mmWave and hybrid bounds.
FigureResult validate_bounds(const ExperimentConfig& cfg);

// Header line, then one row per line with %.10g fields.
void write_series_csv(const Series& s, std::ostream& out);
nlohmann::json report_json(const FigureResult& r);

}  // namespace v2v::experiments
