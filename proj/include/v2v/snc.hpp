#pragma once

// Stochastic network calculus primitives shared by every channel model:
// piecewise-linear curves, tail bounding functions, the min-plus and
// Stieltjes convolutions, horizontal deviation and the generic delay bound.
//
// Everything here is a pure function of its inputs; Curve and TailBound are
// immutable after construction.

#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace v2v::snc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Breakpoint {
  double t;
  double value;
};

// Non-decreasing piecewise-linear function on [0, inf). Between breakpoints
// the curve is interpolated linearly; past the last breakpoint the final
// segment's slope is extended (a single breakpoint means a constant curve).
class Curve {
 public:
  explicit Curve(std::vector<Breakpoint> points);

  // value(t) = burst + rate * t
  static Curve affine(double rate, double burst = 0.0);

  double operator()(double t) const;
  double final_rate() const noexcept { return tail_rate_; }
  std::span<const Breakpoint> breakpoints() const noexcept { return points_; }

  // Smallest t >= 0 with value(t) >= v; +inf if the curve never gets there.
  double lower_inverse(double v) const;
  // Largest t with value(t) <= v; +inf if the curve stays at or below v.
  double upper_inverse(double v) const;

 private:
  std::vector<Breakpoint> points_;
  double tail_rate_ = 0.0;
};

// Non-increasing bound x -> P{X > x}, clamped to [0, 1]. Arguments strictly
// below the support floor evaluate to 1.
class TailBound {
 public:
  using Fn = std::function<double(double)>;

  TailBound(Fn fn, double support_floor = -kInf);

  // 0 for x >= 0 and 1 below: the bound of a variable that is never positive.
  static TailBound zero();
  static TailBound exponential(double rate, double scale = 1.0);

  double operator()(double x) const;
  double support_floor() const noexcept { return floor_; }
  bool is_zero() const noexcept { return zero_; }

 private:
  Fn fn_;
  double floor_;
  bool zero_ = false;
};

// (theta, rho(theta), sigma(theta)) envelope of an arrival process:
// E[exp(theta * A(s, t))] <= exp(theta * (rho * (t - s) + sigma)).
struct StochasticArrival {
  std::function<double(double)> rho;
  std::function<double(double)> sigma;
  double theta = 1.0;

  double rate() const { return rho(theta); }
  double burst() const { return sigma(theta); }
};

// Poisson arrivals of `rate` unit-size packets per time unit: sigma = 0 and
// rho(theta) = rate * (e^theta - 1) / theta.
StochasticArrival poisson_arrival(double rate, double theta);

// Exact min-plus convolution (a (x) b)(t) = inf_{0<=tau<=t} a(tau) + b(t - tau).
Curve minplus_convolve(const Curve& a, const Curve& b);

struct GridOptions {
  int steps = 10000;             // uniform grid over the domain span
  double refine_tolerance = 1e-12;
};

// min(1, inf_{0<=u<=x} f(u) + g(x - u)); grid search plus golden-section
// refinement around the best grid cell.
double convolve_tailbounds(const TailBound& f, const TailBound& g, double x,
                           const GridOptions& opts = {});

// Where in each cell the integrand is sampled. With a(x - y) non-decreasing
// in y, `right` gives an upper Riemann-Stieltjes sum.
enum class StieltjesTag { midpoint, left, right };

struct StieltjesOptions {
  StieltjesTag tag = StieltjesTag::midpoint;
  double window_lo = 0.0;
  double window_hi = 1.0;
  int initial_steps = 1024;
  int max_halvings = 8;
  double tolerance = 1e-6;
  // When b is monotone the sum stops once the remaining variation of b falls
  // below `truncation` times the running sum.
  bool monotone_b = false;
  double truncation = 1e-12;
};

struct StieltjesResult {
  double value;
  int steps;         // grid size of the accepted estimate
  double last_diff;  // |S(h) - S(h/2)| at acceptance
};

// Riemann-Stieltjes approximation of int a(x - y) db(y) over the window,
// halving the step until successive estimates agree within the tolerance.
StieltjesResult stieltjes_convolve(const std::function<double(double)>& a,
                                   const std::function<double(double)>& b, double x,
                                   const StieltjesOptions& opts);

// h(alpha + x, beta) = sup_{t>=0} inf{tau >= 0 : alpha(t) + x <= beta(t + tau)}.
// Throws RegimeError("UnstableSystem") when the deviation is unbounded.
double horizontal_deviation(const Curve& alpha, const Curve& beta, double x);

// Sum of rho and sigma; all entries must share the same theta.
StochasticArrival aggregate_arrivals(std::span<const StochasticArrival> arrivals);

// P{d > w} <= (f (x) g)(x*) where x* is the largest offset with
// h(alpha + x*, beta) <= w. Returns 1 when no such offset exists.
double delay_bound(const Curve& alpha, const Curve& beta, const TailBound& f,
                   const TailBound& g, double w, const GridOptions& opts = {});

}  // namespace v2v::snc
