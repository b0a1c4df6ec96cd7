#pragma once

// Small dense feed-forward networks with ramp (ReLU) hidden units and a
// linear output layer, trained by mini-batch Adam. Shared by the delay
// surrogate and the Markov predictor.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

namespace v2v::nn {

struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;
};

class Mlp {
 public:
  Mlp() = default;
  // dims = {input, hidden..., output}; He-uniform hidden weights, zero
  // output weights and zero biases.
  Mlp(std::vector<int> dims, std::uint64_t seed);

  const std::vector<int>& dims() const noexcept { return dims_; }
  int inputs() const { return dims_.front(); }
  int outputs() const { return dims_.back(); }
  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  std::vector<double> forward(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  std::vector<int> dims_;
  std::vector<Layer> layers_;
};

// Per-sample loss: given the network output, write dL/dy and return L.
using LossFn = std::function<double(std::size_t row, std::span<const double> y, std::span<double> dy)>;

struct TrainOptions {
  int epochs = 2000;
  int batch = 32;
  double learning_rate = 1e-2;
  double min_learning_rate = 1e-6;
  int patience = 5;  // rejected epochs in a row before the step size halves
  std::uint64_t seed = 1;
};

struct TrainReport {
  int epochs = 0;
  double final_learning_rate = 0.0;
  std::vector<double> loss;  // accepted mean training loss per epoch
};

// Trains on rows [0, n). After every epoch the full training loss is
// recomputed; an epoch that does not lower it is rolled back (weights
// restored, optimizer moments reset), and after
// `patience` such epochs in a row the step size is halved. The recorded loss
// therefore never increases. Throws
// ConvergenceError("Diverged") on a non-finite loss.
TrainReport train(Mlp& net, std::span<const std::vector<double>> inputs, const LossFn& loss,
                  const TrainOptions& opts);

double mean_loss(const Mlp& net, std::span<const std::vector<double>> inputs, const LossFn& loss);

}  // namespace v2v::nn
