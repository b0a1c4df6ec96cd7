#include "v2v/mmwave.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <string>

#include "v2v/error.hpp"

namespace v2v::mmwave {
namespace {

constexpr double kGolden = 0.6180339887498949;

double log_binom(double a, double b) {
  return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
}

// Mean of the kernel variable in dB on the link into `index`.
double mean_db(const MmWaveParams& p, int index) {
  const double path = -(p.alpha_fit + 10.0 * p.beta_fit * std::log10(p.link_length));
  if (p.kernel == KernelVariable::channel_gain) return path;
  const LinkSinr l = link_sinr(p, index);
  return 10.0 * std::log10(p.kappa * l.omega) + path;
}

int worst_index(const MmWaveParams& p) { return p.n_vehicles >= 3 ? 1 : p.n_vehicles; }

// Summation by parts over a tabulated CDF, F[i] = F(x_i), with
// logs[i] = ln(1 + x_i). The partial expression is non-increasing in N
// for a valid CDF; the min is kept anyway.
double q_hat_table(double theta, const std::vector<double>& F, const std::vector<double>& logs) {
  double best = 1.0;  // N = 0
  double sum = 0.0;
  double prev = 1.0;  // (1 + x_{i-1})^-theta
  for (std::size_t i = 1; i < F.size(); ++i) {
    const double cur = std::exp(-theta * logs[i]);
    sum += (prev - cur) * F[i];
    best = std::min(best, cur + sum);
    prev = cur;
  }
  return best;
}

// Kernel CDF on x_0 = 0 < x_1 < ...; the step is delta, growing to
// kRelStep * x once that is larger, so heavy shadowing tails stay cheap.
// The left-endpoint sum in q_hat_table is an upper bound on any grid.
constexpr double kRelStep = 1e-4;

struct CdfTable {
  std::vector<double> F;
  std::vector<double> logs;  // ln(1 + x_i)
};

CdfTable tabulate_cdf(const std::function<double(double)>& cdf, double delta, double tail) {
  CdfTable t;
  double x = 0.0;
  t.F.push_back(cdf(0.0));
  t.logs.push_back(0.0);
  const std::size_t cap = 100000000;
  while (t.F.back() < 1.0 - tail && t.F.size() < cap) {
    x += std::max(delta, kRelStep * x);
    const double v = cdf(x);
    if (!(v >= t.F.back() - 1e-15) || v > 1.0 + 1e-15 || v < 0.0) {
      throw DomainError("CDF is not a monotone probability on the grid", "InvalidCDF");
    }
    t.F.push_back(v);
    t.logs.push_back(std::log1p(x));
  }
  return t;
}

}  // namespace

void MmWaveParams::validate() const {
  if (!(mu_si >= 0.0 && mu_si <= 1.0)) throw DomainError("mu_si must lie in [0, 1]");
  if (!(snr > 0.0)) throw DomainError("snr must be positive");
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  if (!(theta > 0.0)) throw DomainError("theta must be positive");
  if (n_vehicles < 2) throw DomainError("n_vehicles must be >= 2");
  if (!(link_length > 0.0)) throw DomainError("link_length must be positive");
  if (!(v >= 0.0)) throw DomainError("shadowing std-dev must be >= 0");
  if (!(kappa > 0.0) || !(capacity_scale > 0.0)) throw DomainError("kappa and capacity_scale must be positive");
}

LinkSinr link_sinr(const MmWaveParams& p, int index, double xi) {
  if (index < 1 || index > p.n_vehicles) throw DomainError("link index out of range");
  const double g_db = -(p.alpha_fit + 10.0 * p.beta_fit * std::log10(p.link_length) + xi);
  const double g = std::pow(10.0, g_db / 10.0);
  const double omega = index < p.n_vehicles ? p.snr / (1.0 + p.mu_si * p.snr) : p.snr;
  return {g, omega, p.kappa * omega * g};
}

std::function<double(double)> kernel_cdf(const MmWaveParams& p, int index) {
  const double m = mean_db(p, index);
  const double v = p.v;
  return [m, v](double x) {
    if (x <= 0.0) return 0.0;
    const double db = 10.0 * std::log10(x);
    if (v == 0.0) return db >= m ? 1.0 : 0.0;
    return 0.5 * std::erfc(-(db - m) / (v * std::sqrt(2.0)));
  };
}

double q_hat(double theta, double delta, const std::function<double(double)>& cdf, double tail) {
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  if (!(theta >= 0.0)) throw DomainError("theta must be >= 0");
  const CdfTable t = tabulate_cdf(cdf, delta, tail);
  return q_hat_table(theta, t.F, t.logs);
}

namespace {

void check_g_args(long tau, long n, double x) {
  if (!(x > 0.0 && x < 1.0)) throw DomainError("G_{tau,n} needs 0 < x < 1");
  if (tau < 0 || n < 0) throw DomainError("G_{tau,n} needs tau, n >= 0");
}

// log of C(n+tau, n+1) x^{tau-1}, the term G2 subtracts; -inf at tau = 0.
double log_g2_term(long tau, long n, double x) {
  if (tau == 0) return -std::numeric_limits<double>::infinity();
  return log_binom(n + tau, n + 1) + (tau - 1) * std::log(x);
}

double log_g_from(long tau, long n, double x, double log_b) {
  const double log_a = -(n + 1) * std::log1p(-x);  // 1 / (1-x)^{n+1}
  // min(1, x^tau C(n+tau, n)) is already non-increasing in tau.
  const double log_g1 = std::min(0.0, tau * std::log(x) + log_binom(n + tau, n)) + log_a;
  const double ratio = std::exp(log_b - log_a);
  if (!(ratio < 1.0)) return log_g1;
  return std::min(log_g1, log_a + std::log1p(-ratio));
}

}  // namespace

double log_g_tau_n_printed(long tau, long n, double x) {
  check_g_args(tau, n, x);
  return log_g_from(tau, n, x, log_g2_term(tau, n, x));
}

double g_tau_n_printed(long tau, long n, double x) { return std::exp(log_g_tau_n_printed(tau, n, x)); }

double log_g_tau_n(long tau, long n, double x) {
  check_g_args(tau, n, x);
  // The subtracted term grows in tau while x (n + tau + 1) >= tau, then
  // decays; its running max over tau' <= tau sits at min(tau, peak).
  const double r = x * (n + 1) / (1.0 - x);
  double log_b = log_g2_term(tau, n, x);
  for (double c : {std::floor(r), std::floor(r) + 1.0}) {
    if (c >= 1.0 && c <= double(tau)) log_b = std::max(log_b, log_g2_term(long(c), n, x));
  }
  return log_g_from(tau, n, x, log_b);
}

double g_tau_n(long tau, long n, double x) { return std::exp(log_g_tau_n(tau, n, x)); }

double ServiceBound::mgf_bound(double s, double t) const {
  const long tau = std::max(0L, static_cast<long>(std::ceil(s - t)));
  return std::exp(theta * sigma_theta) * std::pow(pa_theta, t - s) *
         g_value(tau, pa_theta * qhat);
}

double service_kernel(const MmWaveParams& p, double theta) {
  p.validate();
  return q_hat(theta * p.capacity_scale / std::log(2.0), p.delta, kernel_cdf(p, worst_index(p)));
}

ServiceBound mmwave_service_bound(const MmWaveParams& p, const snc::StochasticArrival& arrival) {
  ServiceBound b;
  b.theta = arrival.theta;
  b.sigma_theta = arrival.burst();
  b.pa_theta = std::exp(arrival.theta * arrival.rate());
  b.qhat = service_kernel(p, arrival.theta);
  b.hops_n = p.n_vehicles - 1;
  if (!(b.pa_theta * b.qhat < 1.0)) {
    throw RegimeError("UnstableRegime",
                      "pa * qhat = " + std::to_string(b.pa_theta * b.qhat) + " >= 1");
  }
  return b;
}

Model::Model(MmWaveParams p, ThetaGrid grid) : p_(std::move(p)) {
  p_.validate();
  if (!(grid.lo > 0.0 && grid.hi > grid.lo && grid.points >= 2)) {
    throw DomainError("theta grid needs 0 < lo < hi and >= 2 points");
  }
  cdf_ = kernel_cdf(p_, worst_index(p_));
  CdfTable t = tabulate_cdf(cdf_, p_.delta, 1e-12);
  F_ = std::move(t.F);
  logs_ = std::move(t.logs);
  const double scale = p_.capacity_scale / std::log(2.0);
  for (int i = 0; i < grid.points; ++i) {
    const double th = grid.lo * std::pow(grid.hi / grid.lo, double(i) / (grid.points - 1));
    thetas_.push_back(th);
    table_.push_back(q_hat_table(th * scale, F_, logs_));
  }
}

double Model::kernel(double theta) const {
  const auto it = std::find(thetas_.begin(), thetas_.end(), theta);
  if (it != thetas_.end()) return table_[it - thetas_.begin()];
  return q_hat_table(theta * p_.capacity_scale / std::log(2.0), F_, logs_);
}

double Model::kernel_upper(double theta) const {
  // ln qhat is convex in theta, so the chord between grid neighbours lies
  // above it and the interpolated kernel is still an upper bound.
  const auto it = std::lower_bound(thetas_.begin(), thetas_.end(), theta);
  if (it == thetas_.end() || it == thetas_.begin()) return kernel(theta);
  const std::size_t i = it - thetas_.begin();
  if (thetas_[i] == theta) return table_[i];
  const double w = (theta - thetas_[i - 1]) / (thetas_[i] - thetas_[i - 1]);
  return std::exp((1.0 - w) * std::log(table_[i - 1]) + w * std::log(table_[i]));
}

double Model::log_bound(const snc::StochasticArrival& a, double theta, double x) const {
  return log_bound_with(a, theta, x, kernel(theta));
}

double Model::log_bound_with(const snc::StochasticArrival& a, double theta, double x,
                             double qhat) const {
  const double lpa = theta * a.rho(theta);
  const double lx = lpa + std::log(qhat);
  if (!(lx < 0.0)) return std::numeric_limits<double>::infinity();
  const long w = static_cast<long>(std::floor(std::max(0.0, x)));
  return theta * a.sigma(theta) - w * lpa + log_g_tau_n(w, p_.n_vehicles - 1, std::exp(lx));
}

double Model::delay_ccdf(const snc::StochasticArrival& a, double x) const {
  if (x < 0.0) return 1.0;
  const double th = a.theta;
  const double rho = a.rate();
  if (!(rho > 0.0)) return 0.0;  // no traffic, no delay
  const double sigma = a.burst();
  const double qh = kernel(th);
  const double pa = std::exp(th * rho);
  if (!(pa * qh < 1.0)) {
    throw RegimeError("UnstableRegime", "pa * qhat = " + std::to_string(pa * qh) + " >= 1");
  }
  const long n1 = p_.n_vehicles - 1;
  const double arg = pa * qh;
  // Weak service curve rho t with bound e^{theta (sigma - v)} G_{tau,n-1},
  // tau the delay that the deficit v corresponds to at rate rho.
  const snc::TailBound g(
      [=](double v) {
        const long tau = static_cast<long>(std::floor(v / rho * (1.0 + 1e-12)));
        return std::exp(th * (sigma - v) + log_g_tau_n(std::max(0L, tau), n1, arg));
      },
      0.0);
  const snc::Curve line = snc::Curve::affine(rho);
  return snc::delay_bound(line, line, snc::TailBound::zero(), g, std::floor(x));
}

ThetaChoice Model::optimize_theta(const snc::StochasticArrival& a, double x) const {
  std::size_t best_i = thetas_.size();
  double best = std::numeric_limits<double>::infinity();
  // Compared after clamping to probability 1, so a vacuous bound keeps the
  // smallest stable theta.
  for (std::size_t i = 0; i < thetas_.size(); ++i) {
    const double raw = log_bound(a, thetas_[i], x);
    if (!std::isfinite(raw)) continue;  // outside the stability region
    const double v = std::min(0.0, raw);
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  if (best_i == thetas_.size()) {
    throw RegimeError("EmptyStabilityRegion", "no theta on the grid satisfies pa * qhat < 1");
  }
  double theta = thetas_[best_i];
  // One golden-section pass between the neighbouring grid points.
  double lo = thetas_[best_i == 0 ? 0 : best_i - 1];
  double hi = thetas_[std::min(best_i + 1, thetas_.size() - 1)];
  if (hi > lo && best < 0.0) {
    auto f = [&](double th) { return log_bound_with(a, th, x, kernel_upper(th)); };
    double c = hi - kGolden * (hi - lo), d = lo + kGolden * (hi - lo);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 40; ++it) {
      if (fc <= fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - kGolden * (hi - lo);
        fc = f(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + kGolden * (hi - lo);
        fd = f(d);
      }
    }
    const double cand = fc <= fd ? c : d;
    const double fv = log_bound(a, cand, x);
    if (fv < best) {
      best = fv;
      theta = cand;
    }
  }
  return {theta, std::min(1.0, std::exp(best))};
}

double Model::delay_ccdf_optimized(const snc::StochasticArrival& a, double x) const {
  if (x < 0.0) return 1.0;
  return optimize_theta(a, x).bound;
}

snc::StochasticArrival flow_arrival(const MmWaveParams& p, double lambda_per_vehicle,
                                    double theta) {
  return snc::poisson_arrival(p.n_vehicles * lambda_per_vehicle, theta);
}

double mmwave_delay_ccdf(const MmWaveParams& p, const snc::StochasticArrival& a, double x) {
  return Model(p, ThetaGrid{a.theta, a.theta * 2.0, 2}).delay_ccdf(a, x);
}

ThetaChoice optimize_theta(const MmWaveParams& p, const snc::StochasticArrival& a, double x) {
  return Model(p).optimize_theta(a, x);
}

namespace {

const char* const kernel_names[] = {"sinr", "channel_gain"};

template <class T>
void read(const nlohmann::json& j, const char* key, T& v) {
  if (j.contains(key)) v = j.at(key).get<T>();
}

}  // namespace

nlohmann::json to_json(const MmWaveParams& p) {
  return {
      {"alpha_fit", p.alpha_fit},
      {"beta_fit", p.beta_fit},
      {"v", p.v},
      {"mu_si", p.mu_si},
      {"snr", p.snr},
      {"kappa", p.kappa},
      {"n_vehicles", p.n_vehicles},
      {"link_length", p.link_length},
      {"delta", p.delta},
      {"theta", p.theta},
      {"capacity_scale", p.capacity_scale},
      {"kernel", kernel_names[int(p.kernel)]},
  };
}

void update_from_json(MmWaveParams& p, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("mmwave parameters must be a JSON object");
  try {
    read(j, "alpha_fit", p.alpha_fit);
    read(j, "beta_fit", p.beta_fit);
    read(j, "v", p.v);
    read(j, "mu_si", p.mu_si);
    read(j, "snr", p.snr);
    read(j, "kappa", p.kappa);
    read(j, "n_vehicles", p.n_vehicles);
    read(j, "link_length", p.link_length);
    read(j, "delta", p.delta);
    read(j, "theta", p.theta);
    read(j, "capacity_scale", p.capacity_scale);
    if (j.contains("kernel")) {
      const auto s = j.at("kernel").get<std::string>();
      const auto it = std::find(std::begin(kernel_names), std::end(kernel_names), s);
      if (it == std::end(kernel_names)) throw ConfigError("unknown kernel: " + s);
      p.kernel = KernelVariable(it - std::begin(kernel_names));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("mmwave parameters: ") + e.what());
  }
}

}  // namespace v2v::mmwave
