#pragma once

// Line-of-sight high-band multi-hop channel. Time advances in ticks of one
// slot; hop h carries capacity_scale * log2(1 + gamma_h) packets per tick.

#include <functional>
#include <vector>

#include <json.hpp>

#include "v2v/snc.hpp"

namespace v2v::mmwave {

// Which random variable the q-hat kernel integrates over.
enum class KernelVariable { sinr, channel_gain };

struct MmWaveParams {
  double alpha_fit = -4.0;  // floating intercept, dB
  double beta_fit = 2.0;
  double v = 4.0;       // shadowing std-dev, dB
  double mu_si = 0.01;  // self-interference coefficient
  double snr = 100.0;   // linear
  double kappa = 1.0;
  int n_vehicles = 10;
  double link_length = 5.0;
  double delta = 0.01;
  double theta = 1.0;
  double capacity_scale = 0.0148;  // packets per tick per bit/s/Hz
  KernelVariable kernel = KernelVariable::sinr;

  void validate() const;
};

struct LinkSinr {
  double gain;   // linear
  double omega;  // effective SNR after self-interference
  double sinr;
};

// Link into node `index` (1..n); nodes 1..n-1 are full-duplex, node n is the
// destination. xi is the shadowing draw in dB.
LinkSinr link_sinr(const MmWaveParams& p, int index, double xi = 0.0);

// CDF of the kernel variable on the link into `index`.
std::function<double(double)> kernel_cdf(const MmWaveParams& p, int index);

// E[(1+X)^-theta] by summation by parts on a grid of step max(delta, 1e-4 x),
// stopping once the CDF is within `tail` of 1. Throws DomainError("InvalidCDF") if cdf
// decreases on the grid.
double q_hat(double theta, double delta, const std::function<double(double)>& cdf,
             double tail = 1e-12);

// min(G1, G2) exactly as printed. G2 is not monotone in tau.
double log_g_tau_n_printed(long tau, long n, double x);
double g_tau_n_printed(long tau, long n, double x);

// min over tau' <= tau of min(G1, G2) at tau'. Each term bounds the tail
// sum_{k>=tau'} C(n+k, n) x^k, which only shrinks as tau grows, so the
// running minimum is still a bound and is non-increasing in tau. Computed in
// O(1) from the unimodality of the subtracted G2 term. Throws DomainError
// unless 0 < x < 1.
double log_g_tau_n(long tau, long n, double x);
double g_tau_n(long tau, long n, double x);

struct ServiceBound {
  double theta = 0.0;
  double sigma_theta = 0.0;
  double pa_theta = 0.0;  // e^{theta rho(theta)}
  double qhat = 0.0;      // per-tick service kernel at theta
  int hops_n = 0;         // n - 1, the G index

  double g_value(long tau, double x) const { return g_tau_n(tau, hops_n, x); }
  // e^{theta sigma} pa^{t-s} G_{tau,n-1}(pa qhat), tau = max(s - t, 0).
  double mgf_bound(double s, double t) const;
};

// Per-tick service kernel E[exp(-theta * capacity)] for the worst hop.
double service_kernel(const MmWaveParams& p, double theta);

// Throws RegimeError("UnstableRegime") if pa * qhat >= 1.
ServiceBound mmwave_service_bound(const MmWaveParams& p, const snc::StochasticArrival& arrival);

struct ThetaGrid {
  double lo = 1e-3;
  double hi = 30.0;
  int points = 200;
};

struct ThetaChoice {
  double theta;
  double bound;
};

// Caches the service kernel on the theta grid; evaluations at off-grid theta
// compute it directly.
class Model {
 public:
  explicit Model(MmWaveParams p, ThetaGrid grid = {});

  const MmWaveParams& params() const noexcept { return p_; }
  const std::vector<double>& thetas() const noexcept { return thetas_; }
  double kernel(double theta) const;
  // Log-linear interpolation of the cached kernel; never below kernel().
  double kernel_upper(double theta) const;

  // log of e^{theta sigma} pa^{-w} G_{w,n-1}(pa qhat) at integer w = floor(x);
  // +inf outside the stability region.
  double log_bound(const snc::StochasticArrival& a, double theta, double x) const;
  double log_bound_with(const snc::StochasticArrival& a, double theta, double x,
                        double qhat) const;

  // Bound at the arrival's own theta, through the generic delay theorem.
  double delay_ccdf(const snc::StochasticArrival& a, double x) const;

  ThetaChoice optimize_theta(const snc::StochasticArrival& a, double x) const;
  double delay_ccdf_optimized(const snc::StochasticArrival& a, double x) const;

 private:
  MmWaveParams p_;
  std::vector<double> thetas_;
  std::vector<double> table_;
  std::function<double(double)> cdf_;
  std::vector<double> F_;     // kernel CDF on the quadrature grid
  std::vector<double> logs_;  // ln(1 + x_i)
};

// Aggregate Poisson input of the n-hop flow: every vehicle offers
// lambda_per_vehicle packets per tick.
snc::StochasticArrival flow_arrival(const MmWaveParams& p, double lambda_per_vehicle,
                                    double theta = 1.0);

double mmwave_delay_ccdf(const MmWaveParams& p, const snc::StochasticArrival& a, double x);
ThetaChoice optimize_theta(const MmWaveParams& p, const snc::StochasticArrival& a, double x);

// Missing keys keep the current values; wrong types throw ConfigError.
nlohmann::json to_json(const MmWaveParams& p);
void update_from_json(MmWaveParams& p, const nlohmann::json& j);

}  // namespace v2v::mmwave
