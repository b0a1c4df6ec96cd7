#pragma once

// n-order Markov prediction of discretized channel parameters: transition
// counting, confidence-factor smoothing, a small network fit of the
// transition map and worst-case lookahead.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2v/mlp.hpp"

namespace v2v::predictor {

enum class Smoothing {
  renormalized,  // clamp at epsilon, then rescale to sum 1
  verbatim,      // the update rule as printed, no clamp or rescale
};

struct MarkovConfig {
  int order = 1;
  std::vector<double> bin_edges{0.0, 1.0, 2.0};  // levels = edges - 1
  double zeta = -0.1;
  int horizon = 10;
  double threshold = 0.05;     // pessimism rule; 0 means any non-zero probability
  Smoothing smoothing = Smoothing::renormalized;
  double epsilon = 1e-9;

  int levels() const { return int(bin_edges.size()) - 1; }
  void validate() const;
};

// Previous `order` levels, oldest first.
using Context = std::vector<int>;
using Distribution = std::vector<double>;
using TransitionFn = std::function<Distribution(const Context&)>;

// Half-open bins [e_i, e_{i+1}); values outside the edges clamp to the end bins.
int discretize(double value, const std::vector<double>& bin_edges);

struct TransitionTable {
  int order = 1;
  int levels = 2;
  std::map<Context, std::vector<long>> counts;  // successor counts per context
  std::map<Context, Distribution> freq;

  long context_count(const Context& c) const;
  // Row for the context; uniform if it was never observed.
  Distribution row(const Context& c) const;
};

TransitionTable estimate_frequencies(const std::vector<std::vector<int>>& sequences,
                                     const MarkovConfig& cfg);

// 1 - e^{zeta C}
double confidence_factor(double count, double zeta);

TransitionTable smooth_frequencies(const TransitionTable& table, const MarkovConfig& cfg);

struct PredictorOptions {
  std::vector<int> hidden{32, 32};
  nn::TrainOptions train{.epochs = 3000, .batch = 16, .min_learning_rate = 1e-7};
};

class PredictorModel {
 public:
  PredictorModel() = default;
  PredictorModel(int order, int levels, nn::Mlp net);

  int order() const noexcept { return order_; }
  int levels() const noexcept { return levels_; }
  const nn::Mlp& net() const noexcept { return net_; }

  // Softmax over the network outputs; inputs are the one-hot coded context.
  Distribution predict(const Context& c) const;

  nlohmann::json to_json() const;
  static PredictorModel from_json(const nlohmann::json& j);

 private:
  int order_ = 1;
  int levels_ = 2;
  nn::Mlp net_;
};

struct TrainedPredictor {
  PredictorModel model;
  double max_tv = 0.0;  // worst total-variation distance to the table rows
  nn::TrainReport report;
};

// Fits the network to the table rows by soft-label cross-entropy.
TrainedPredictor train_predictor(const TransitionTable& table, const MarkovConfig& cfg,
                                 const PredictorOptions& opts = {});

double total_variation(const Distribution& a, const Distribution& b);

// Highest level reachable within `horizon` steps along paths whose every
// transition has probability above `threshold` (or above 0 when the
// threshold is 0). Higher levels are worse.
int worst_case_horizon(const TransitionFn& next, const Context& current, int horizon,
                       double threshold);

// Timestamped parameter samples: header t,noise_level,n,lambda.
struct ParameterSamples {
  std::vector<double> t, noise_level, n, lambda;
};
ParameterSamples read_samples(std::istream& in);
void write_samples(const ParameterSamples& s, std::ostream& out);

}  // namespace v2v::predictor
