#pragma once

// Contention-based (exponential backoff) broadcast channel. All times are in
// slots; slot_duration converts at the boundary.

#include <vector>

#include <json.hpp>

#include "v2v/snc.hpp"

namespace v2v::cellular {

// How the mean window size mu_k is derived from CW_k.
enum class MeanWindowRule { half, half_plus_one, half_minus_one };

struct BackoffParams {
  int W = 4;  // CW_min
  int m = 3;  // max-window exponent
  int M = 5;  // max backoff stage index
  int n = 10;
  double t_s = 10.0;
  double t_C = 5.0;
  double t_TX = 10.0;
  int L = 100;
  double lambda = 0.0;  // packets per slot
  double slot_duration = 13e-6;
  MeanWindowRule mu_rule = MeanWindowRule::half;

  void validate() const;
};

// packets/ms -> packets/slot
double per_slot_rate(double per_ms, double slot_duration);

struct Windows {
  std::vector<double> cw;
  std::vector<double> mu;
  double B_sum = 0.0;
};

Windows contention_windows(const BackoffParams& p);

// p_a as a function of p_c (second line of the fixed-point system).
double attempt_probability(const Windows& w, double p_c);

enum class FixedPointMethod { damped, bisection };

struct FixedPointOptions {
  FixedPointMethod method = FixedPointMethod::damped;
  double damping = 0.5;
  long max_iterations = 100000;
  double tolerance = 1e-13;
  bool bisection_fallback = true;
};

struct FixedPoint {
  double p_c = 0.0;
  double p_a = 0.0;
  long iterations = 0;
  double residual = 0.0;  // max of the two equation residuals
};

FixedPoint solve_collision_fixed_point(const BackoffParams& p, const FixedPointOptions& opts = {});

struct ServiceMoments {
  double t_B = 0.0;
  double t_bar_serv = 0.0;
  double var_serv = 0.0;
  double rho = 0.0;
  double t_q = 0.0;
};

// Throws RegimeError("UnstableQueue") when rho = lambda * t_bar_serv >= 1.
ServiceMoments service_time_moments(const BackoffParams& p, double p_c, double p_a);

struct CellularMetrics {
  double p_c = 0.0;
  double p_a = 0.0;
  std::vector<double> cw;
  std::vector<double> mu;
  double t_B = 0.0;
  double t_bar_serv = 0.0;
  double var_serv = 0.0;
  double rho = 0.0;
  double t_q = 0.0;
  double B_sum = 0.0;
};

CellularMetrics solve_metrics(const BackoffParams& p);

// [(q/y)^y ((1-q)/(1-y))^(1-y)]^L for 0 < y < 1, no clamping.
double binomial_entropy_bound(double q, double y, int L);

struct ServiceCurve {
  snc::Curve beta;
  snc::TailBound g;  // g_t on the delay axis
  double q = 0.0;
  double denom = 0.0;  // M t_C + L t_serv + B t_s
  double rate = 0.0;   // final rate of beta
};

// beta = (t_serv lambda t) (x) (t_q lambda t) and the binomial Chernoff
// bounding function. g_t is 1 for y <= q and 0 for y >= 1.
// Throws RegimeError("InvalidRegime") unless 0 < q < 1.
ServiceCurve cellular_service_curve(const BackoffParams& p, const CellularMetrics& m);

// Upper bound on P{delay > x}, x in slots.
double cellular_delay_ccdf(const ServiceCurve& sc, double x);
double cellular_delay_ccdf(const BackoffParams& p, double x);

// Missing keys keep the current values; wrong types throw ConfigError.
nlohmann::json to_json(const BackoffParams& p);
void update_from_json(BackoffParams& p, const nlohmann::json& j);

}  // namespace v2v::cellular
