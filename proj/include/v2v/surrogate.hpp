#pragma once

// Offline delay dataset over the hybrid bound and the feed-forward network
// that answers "delay bound at timeout probability p" in constant time.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2v/hybrid.hpp"
#include "v2v/mlp.hpp"

namespace v2v::surrogate {

inline constexpr int kFeatures = 5;
using Features = std::array<double, kFeatures>;

struct DelayQuery {
  double p = 0.01;
  double lambda = 0.0;       // packets per slot per vehicle
  double n = 10;             // vehicle count
  double noise_level = 0.0;  // dB of channel degradation, see NoiseMapping
  double split = 0.5;

  void validate() const;
  Features features() const { return {p, lambda, n, noise_level, split}; }
};

// noise_level xi lowers the mmWave SNR by snr_db_per_level * xi dB and
// widens the shadowing by shadow_db_per_level * xi dB.
struct NoiseMapping {
  double snr_db_per_level = 1.0;
  double shadow_db_per_level = 0.5;
};

// Base config with the query's load, vehicle count, noise and split applied.
hybrid::HybridConfig config_for(const hybrid::HybridConfig& base, const DelayQuery& q,
                                const NoiseMapping& noise = {});

// Smallest x with ccdf(x) <= p: first grid point that qualifies, then
// bisection between it and its predecessor. 0 when ccdf(0) <= p already.
// Throws RegimeError("NotReached") when ccdf(grid.back()) > p.
double invert_ccdf(const std::function<double(double)>& ccdf, double p,
                   const std::vector<double>& grid);

struct GridSpec {
  std::vector<double> p{0.01};
  std::vector<double> lambda{0.0};
  std::vector<double> n{10};
  std::vector<double> noise_level{0.0};
  std::vector<double> split{0.5};
  hybrid::HybridConfig base;
  NoiseMapping noise;
  std::vector<double> x_grid = hybrid::log_grid();

  nlohmann::json to_json() const;
};

// Grid covering the platoon scenarios: p 0.005 to 0.1, 0.1 to 0.5
// packets/ms per vehicle, 4 to 8 vehicles, noise 0 to 6, split 0.5.
GridSpec default_grid(double slot_duration = 13e-6);

// Keys as written by GridSpec::to_json; missing keys keep the default_grid
// values. Throws ConfigError.
GridSpec grid_from_json(const nlohmann::json& j);

struct Row {
  DelayQuery query;
  double delay_slots = 0.0;
};

struct Skipped {
  DelayQuery query;
  std::string reason;
};

struct Dataset {
  std::vector<Row> rows;
  std::vector<Skipped> skipped;  // unstable or unreachable grid points
};

// Cartesian product of the grid. The hybrid model is built once per
// (lambda, n, noise, split) and inverted at every p.
Dataset generate_dataset(const GridSpec& spec);

// Header: p,lambda,n,noise_level,split,delay_slots
void write_csv(const Dataset& d, std::ostream& out);
Dataset read_csv(std::istream& in);

struct Hyperparams {
  std::vector<int> hidden{64, 64};
  nn::TrainOptions train;
  double holdout = 0.2;
  std::uint64_t split_seed = 7;
};

nlohmann::json to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const nlohmann::json& j);

struct MlpModel {
  nn::Mlp net;
  Features in_mean{}, in_scale{};
  Features box_lo{}, box_hi{};  // training bounding box
  double out_mean = 0.0, out_scale = 1.0;  // of log1p(delay)

  nlohmann::json to_json() const;
  static MlpModel from_json(const nlohmann::json& j);
};

struct TrainResult {
  MlpModel model;
  nn::TrainReport report;
  double train_rel_error = 0.0;        // mean |D' - D| / D
  double holdout_rel_error = 0.0;      // mean over the held-out rows
  double holdout_max_rel_error = 0.0;
  std::size_t holdout_rows = 0;
};

// Requires >= 50 rows. Inputs are standardized, the target is the
// standardized log1p(delay), loss is mean squared error.
TrainResult train_mlp(const Dataset& d, const Hyperparams& hp = {});

struct Prediction {
  double delay_slots = 0.0;
  bool extrapolated = false;  // ExtrapolationWarning: query outside the training box
};

Prediction predict_delay(const MlpModel& m, const DelayQuery& q);

// Hybrid bound inverted directly for each query (base, noise mapping and x
// grid from the spec), memoized per query. Never flags extrapolation.
std::function<Prediction(const DelayQuery&)> bound_oracle(const GridSpec& spec);

// Fraction of random queries inside the training box whose prediction at
// p = 0.01 falls below the prediction at p = 0.1.
double monotonicity_defect_rate(const MlpModel& m, int pairs, std::uint64_t seed);

}  // namespace v2v::surrogate
