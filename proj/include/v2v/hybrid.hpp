#pragma once

// Parallel composition of the cellular and mmWave channels. A fraction
// `split` of every vehicle's traffic goes over mmWave, the rest over the
// cellular channel.

#include <functional>
#include <optional>
#include <vector>

#include "v2v/cellular.hpp"
#include "v2v/mmwave.hpp"

namespace v2v::hybrid {

struct HybridConfig {
  double split = 0.5;
  cellular::BackoffParams cellular;
  mmwave::MmWaveParams mmwave;
  double lambda_total = 0.0;  // packets per slot per vehicle

  void validate() const;
};

// `points` log-spaced values over [lo, hi].
std::vector<double> log_grid(double lo = 1.0, double hi = 1e6, int points = 200);

struct HybridOptions {
  double stieltjes_tolerance = 1e-6;
  int stieltjes_steps = 1024;
  int stieltjes_halvings = 10;
  double tail_cutoff = 1e-12;  // mmWave table ends once the bound drops below this
  long exact_knots = 10000;    // integer delays tabulated exactly; geometric after
  double knot_ratio = 1.002;
  long max_delay = 100000000;
};

class HybridModel {
 public:
  explicit HybridModel(HybridConfig cfg, HybridOptions opts = {});

  const HybridConfig& config() const noexcept { return cfg_; }
  double cellular_rate() const noexcept { return c1_; }
  double mmwave_rate() const noexcept { return c2_; }

  // Per-branch delay bounds at the branch loads.
  double cellular_ccdf(double x) const;
  double mmwave_ccdf(double x) const;  // tabulated, step-wise upper bound

  // Bounding function of the combined deficit on the traffic axis:
  // g_h(y) = int g1(y - u) dG2(u), G2 = 1 - g2.
  double combined_bound(double y) const;

  // Upper bound on P{delay > x}, x in slots.
  double delay_ccdf(double x) const;

 private:
  double g1(double v) const;
  double G2(double u) const;

  HybridConfig cfg_;
  HybridOptions opts_;
  double c1_ = 0.0;
  double c2_ = 0.0;
  std::optional<cellular::ServiceCurve> cell_;
  std::vector<double> knots_;  // delays in slots
  std::vector<double> b_mm_;   // mmWave bound at each knot
};

double hybrid_delay_ccdf(const HybridConfig& cfg, double x);

enum class Mode { cellular, mmwave, hybrid };

struct MeanResult {
  double mean = 0.0;
  double tail = 0.0;       // CCDF at the last grid point
  bool truncated = false;  // TruncationWarning: tail > 1e-3
};

// int_0^inf ccdf(x) dx over [0, grid.back()], five-point Gauss-Legendre on
// [0, grid[0]] and on every grid interval.
MeanResult mean_from_ccdf(const std::function<double(double)>& ccdf,
                          const std::vector<double>& grid);

// Mean delay bound in slots with all traffic on one channel (cellular,
// mmwave) or split per the config (hybrid).
MeanResult average_delay(const HybridConfig& cfg, Mode mode,
                         const std::vector<double>& grid = log_grid());

}  // namespace v2v::hybrid
