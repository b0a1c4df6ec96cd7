#include "v2v/cellular.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <string>

#include "v2v/error.hpp"

namespace v2v::cellular {

void BackoffParams::validate() const {
  if (W < 1) throw DomainError("W must be >= 1");
  if (!(m > 0 && m <= M)) throw DomainError("need 0 < m <= M");
  if (n < 1) throw DomainError("n must be >= 1");
  if (!(t_s > 0.0 && t_C > 0.0 && t_TX > 0.0)) throw DomainError("slot lengths must be positive");
  if (L < 1) throw DomainError("L must be >= 1");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  if (!(slot_duration > 0.0)) throw DomainError("slot_duration must be positive");
}

double per_slot_rate(double per_ms, double slot_duration) { return per_ms * slot_duration / 1e-3; }

Windows contention_windows(const BackoffParams& p) {
  p.validate();
  Windows w;
  const double cap = std::ldexp(double(p.W), p.m);
  for (int i = 0; i <= p.M; ++i) {
    const double cw = std::min(std::ldexp(double(p.W), i), cap);
    w.cw.push_back(cw);
    switch (p.mu_rule) {
      case MeanWindowRule::half: w.mu.push_back(cw / 2.0); break;
      case MeanWindowRule::half_plus_one: w.mu.push_back((cw + 1.0) / 2.0); break;
      case MeanWindowRule::half_minus_one: w.mu.push_back((cw - 1.0) / 2.0); break;
    }
    w.B_sum += cw - 1.0;
  }
  if (!(w.mu.front() > 0.0)) throw DomainError("mean window of stage 0 must be positive");
  return w;
}

double attempt_probability(const Windows& w, double p_c) {
  double num = 0.0, den = 0.0, pk = 1.0;
  for (std::size_t k = 0; k < w.mu.size(); ++k) {
    num += pk;
    den += w.mu[k] * pk;
    pk *= p_c;
  }
  return num / den;
}

namespace {

double collision_of(int n, double p_a) { return -std::expm1(-(n - 1) * p_a); }

FixedPoint finish(const Windows& w, int n, double p_c, long iterations) {
  FixedPoint fp;
  fp.p_c = p_c;
  fp.p_a = attempt_probability(w, p_c);
  fp.iterations = iterations;
  fp.residual = std::abs(p_c - collision_of(n, fp.p_a));
  return fp;
}

FixedPoint bisect(const Windows& w, int n) {
  auto r = [&](double pc) { return pc - collision_of(n, attempt_probability(w, pc)); };
  double lo = 0.0, hi = 1.0;
  if (r(lo) >= 0.0) return finish(w, n, 0.0, 0);
  long it = 0;
  while (hi - lo > 1e-16 && it < 200) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (r(mid) < 0.0 ? lo : hi) = mid;
    ++it;
  }
  const double pc = std::abs(r(lo)) <= std::abs(r(hi)) ? lo : hi;
  return finish(w, n, pc, it);
}

}  // namespace

FixedPoint solve_collision_fixed_point(const BackoffParams& p, const FixedPointOptions& opts) {
  const Windows w = contention_windows(p);
  if (p.n == 1) return finish(w, 1, 0.0, 0);
  if (opts.method == FixedPointMethod::bisection) return bisect(w, p.n);

  double pc = 0.5;
  double d = opts.damping;
  double prev_res = std::numeric_limits<double>::infinity();
  for (long it = 1; it <= opts.max_iterations; ++it) {
    const double target = collision_of(p.n, attempt_probability(w, pc));
    const double res = std::abs(pc - target);
    if (res < opts.tolerance) return finish(w, p.n, pc, it);
    if (res > prev_res) d *= 0.5;
    prev_res = res;
    pc = (1.0 - d) * pc + d * target;
  }
  if (opts.bisection_fallback) return bisect(w, p.n);
  throw ConvergenceError("NoConvergence",
                         "damped iteration hit the cap of " + std::to_string(opts.max_iterations) +
                             " iterations",
                         prev_res);
}

ServiceMoments service_time_moments(const BackoffParams& p, double p_c, double p_a) {
  const Windows w = contention_windows(p);
  ServiceMoments s;
  const int n = p.n;
  s.t_B = std::pow(1.0 - p_a, n) + n * p_a * std::pow(1.0 - p_a, n - 1) * p.t_TX + p_c * p.t_C;

  std::vector<double> tj;
  for (double mu : w.mu) tj.push_back(mu * s.t_B + p.t_TX);

  // Stage count J is a geometric variable truncated at M; the service time is
  // the sum of the stage times up to J, each with a uniform backoff counter.
  double pj = 1.0, cum = 0.0, mean = 0.0, second = 0.0, within = 0.0;
  for (int j = 0; j <= p.M; ++j) {
    cum += tj[j];
    const double stop = j < p.M ? pj * (1.0 - p_c) : pj;
    mean += stop * cum;
    second += stop * cum * cum;
    const double c = w.cw[j] + 1.0;
    within += pj * s.t_B * s.t_B * (c * c - 1.0) / 12.0;
    pj *= p_c;
  }
  s.t_bar_serv = mean;
  s.var_serv = second - mean * mean + within;
  s.rho = p.lambda * s.t_bar_serv;
  if (s.rho >= 1.0) {
    throw RegimeError("UnstableQueue", "utilization " + std::to_string(s.rho) + " >= 1");
  }
  if (p.lambda > 0.0) {
    s.t_q = (s.rho * s.rho + p.lambda * p.lambda * s.var_serv) / (2.0 * p.lambda * (1.0 - s.rho));
  }
  return s;
}

CellularMetrics solve_metrics(const BackoffParams& p) {
  const Windows w = contention_windows(p);
  const FixedPoint fp = solve_collision_fixed_point(p);
  const ServiceMoments s = service_time_moments(p, fp.p_c, fp.p_a);
  CellularMetrics m;
  m.p_c = fp.p_c;
  m.p_a = fp.p_a;
  m.cw = w.cw;
  m.mu = w.mu;
  m.B_sum = w.B_sum;
  m.t_B = s.t_B;
  m.t_bar_serv = s.t_bar_serv;
  m.var_serv = s.var_serv;
  m.rho = s.rho;
  m.t_q = s.t_q;
  return m;
}

double binomial_entropy_bound(double q, double y, int L) {
  if (!(q > 0.0 && q < 1.0) || !(y > 0.0 && y < 1.0)) {
    throw DomainError("binomial entropy bound needs q, y in (0, 1)");
  }
  const double e = y * std::log(q / y) + (1.0 - y) * std::log((1.0 - q) / (1.0 - y));
  return std::exp(L * e);
}

ServiceCurve cellular_service_curve(const BackoffParams& p, const CellularMetrics& m) {
  const double denom = p.M * p.t_C + p.L * m.t_bar_serv + m.B_sum * p.t_s;
  const double q = (m.t_bar_serv + m.t_q - p.t_s) / denom;
  if (!(q > 0.0 && q < 1.0)) {
    throw RegimeError("InvalidRegime", "q = " + std::to_string(q) + " outside (0, 1)");
  }
  const snc::Curve beta = snc::minplus_convolve(snc::Curve::affine(m.t_bar_serv * p.lambda),
                                                snc::Curve::affine(m.t_q * p.lambda));
  const int L = p.L;
  const double t_s = p.t_s;
  snc::TailBound g(
      [q, L, t_s, denom](double x) {
        const double y = (x - L * t_s) / (L * denom);
        if (y <= q) return 1.0;
        if (y >= 1.0) return 0.0;
        return binomial_entropy_bound(q, y, L);
      },
      0.0);
  return ServiceCurve{beta, g, q, denom, beta.final_rate()};
}

double cellular_delay_ccdf(const ServiceCurve& sc, double x) {
  if (x <= 0.0) return 1.0;
  // With a zero-burst arrival at the service rate, the deviation of
  // alpha + v from beta is v / rate, so g is evaluated on the delay axis.
  if (!(sc.rate > 0.0)) return sc.g(x);
  const double r = sc.rate;
  const snc::TailBound g([&sc, r](double v) { return sc.g(v / r); }, 0.0);
  return snc::delay_bound(snc::Curve::affine(r), sc.beta, snc::TailBound::zero(), g, x);
}

double cellular_delay_ccdf(const BackoffParams& p, double x) {
  const CellularMetrics m = solve_metrics(p);
  return cellular_delay_ccdf(cellular_service_curve(p, m), x);
}

namespace {

const char* const mu_rule_names[] = {"half", "half_plus_one", "half_minus_one"};

template <class T>
void read(const nlohmann::json& j, const char* key, T& v) {
  if (j.contains(key)) v = j.at(key).get<T>();
}

}  // namespace

nlohmann::json to_json(const BackoffParams& p) {
  return {
      {"W", p.W},
      {"m", p.m},
      {"M", p.M},
      {"n", p.n},
      {"t_s", p.t_s},
      {"t_C", p.t_C},
      {"t_TX", p.t_TX},
      {"L", p.L},
      {"lambda", p.lambda},
      {"slot_duration", p.slot_duration},
      {"mu_rule", mu_rule_names[int(p.mu_rule)]},
  };
}

void update_from_json(BackoffParams& p, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("cellular parameters must be a JSON object");
  try {
    read(j, "W", p.W);
    read(j, "m", p.m);
    read(j, "M", p.M);
    read(j, "n", p.n);
    read(j, "t_s", p.t_s);
    read(j, "t_C", p.t_C);
    read(j, "t_TX", p.t_TX);
    read(j, "L", p.L);
    read(j, "lambda", p.lambda);
    read(j, "slot_duration", p.slot_duration);
    if (j.contains("mu_rule")) {
      const auto s = j.at("mu_rule").get<std::string>();
      const auto it = std::find(std::begin(mu_rule_names), std::end(mu_rule_names), s);
      if (it == std::end(mu_rule_names)) throw ConfigError("unknown mu_rule: " + s);
      p.mu_rule = MeanWindowRule(it - std::begin(mu_rule_names));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("cellular parameters: ") + e.what());
  }
}

}  // namespace v2v::cellular
