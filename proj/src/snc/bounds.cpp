#include "v2v/error.hpp"
#include "v2v/snc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace v2v::snc {
namespace {

constexpr double kGolden = 0.6180339887498949;

template <class F>
double golden_min(F&& fn, double lo, double hi, double tol) {
  double a = lo, b = hi;
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = fn(c), fd = fn(d);
  double best = std::min({fn(lo), fn(hi), fc, fd});
  for (int it = 0; it < 200 && (b - a) > tol * (1.0 + std::abs(a)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = fn(d);
    }
    best = std::min({best, fc, fd});
  }
  return best;
}

}  // namespace

double convolve_tailbounds(const TailBound& f, const TailBound& g, double x, const GridOptions& opts) {
  if (!std::isfinite(x)) throw DomainError("tail-bound convolution needs a finite argument");
  if (x < 0.0) return 1.0;
  // A zero bound puts the infimum at the end of the range where the other
  // (non-increasing) bound is smallest.
  if (f.is_zero()) return std::min(1.0, g(x));
  if (g.is_zero()) return std::min(1.0, f(x));
  if (x == 0.0) return std::min(1.0, f(0.0) + g(0.0));

  const int n = std::max(opts.steps, 2);
  const double h = x / n;
  auto value = [&](double u) { return f(u) + g(x - u); };
  int best_k = 0;
  double best = value(0.0);
  for (int k = 1; k <= n; ++k) {
    const double u = k == n ? x : k * h;
    const double v = value(u);
    if (v < best) {
      best = v;
      best_k = k;
    }
  }
  const double lo = std::max(0.0, (best_k - 1) * h);
  const double hi = std::min(x, (best_k + 1) * h);
  best = std::min(best, golden_min(value, lo, hi, opts.refine_tolerance));
  return std::min(1.0, best);
}

StieltjesResult stieltjes_convolve(const std::function<double(double)>& a,
                                   const std::function<double(double)>& b, double x,
                                   const StieltjesOptions& opts) {
  if (!(opts.window_hi > opts.window_lo)) throw DomainError("Stieltjes window is empty");
  if (opts.initial_steps < 1) throw DomainError("Stieltjes step count must be positive");

  const double lo = opts.window_lo;
  const double hi = opts.window_hi;
  const double b_hi = b(hi);
  auto sum_with = [&](long steps) {
    const double h = (hi - lo) / static_cast<double>(steps);
    double sum = 0.0;
    double y0 = lo;
    double b0 = b(lo);
    for (long k = 1; k <= steps; ++k) {
      const double y1 = k == steps ? hi : lo + k * h;
      const double b1 = b(y1);
      double y = 0.5 * (y0 + y1);
      if (opts.tag == StieltjesTag::left) y = y0;
      if (opts.tag == StieltjesTag::right) y = y1;
      sum += a(x - y) * (b1 - b0);
      if (opts.monotone_b && std::abs(b_hi - b1) <= opts.truncation * std::abs(sum)) break;
      y0 = y1;
      b0 = b1;
    }
    return sum;
  };

  long steps = opts.initial_steps;
  double prev = sum_with(steps);
  double diff = 0.0;
  for (int level = 0; level < opts.max_halvings; ++level) {
    const double next = sum_with(2 * steps);
    diff = std::abs(next - prev);
    steps *= 2;
    prev = next;
    if (diff <= opts.tolerance) return {prev, static_cast<int>(steps), diff};
  }
  throw ConvergenceError("NonConvergent",
                         "Stieltjes sum still moving by " + std::to_string(diff) + " after " +
                             std::to_string(opts.max_halvings) + " step halvings",
                         diff);
}

double horizontal_deviation(const Curve& alpha, const Curve& beta, double x) {
  const double ra = alpha.final_rate();
  const double rb = beta.final_rate();
  if (ra > rb) {
    throw RegimeError("UnstableSystem", "long-run service rate " + std::to_string(rb) +
                                            " below arrival rate " + std::to_string(ra));
  }

  // t -> beta^{-1}(alpha(t) + x) - t is piecewise linear; it kinks where
  // alpha kinks and where alpha(t) + x reaches a breakpoint value of beta.
  std::vector<double> ts{0.0};
  for (const auto& p : alpha.breakpoints()) ts.push_back(p.t);
  for (const auto& q : beta.breakpoints()) {
    const double t = alpha.lower_inverse(q.value - x);
    if (std::isfinite(t)) ts.push_back(t);
    const double t2 = alpha.upper_inverse(q.value - x);
    if (std::isfinite(t2)) ts.push_back(t2);
  }
  double last = 0.0;
  for (double t : ts) last = std::max(last, t);
  ts.push_back(last + 1.0);

  double sup = 0.0;
  for (double t : ts) {
    const double v = alpha(t) + x;
    // Where beta is flat at level v the deviation jumps; its supremum is the
    // right end of the flat run.
    const bool rises = ra > 0.0 || alpha(alpha.breakpoints().back().t) > alpha(t);
    const double lower = beta.lower_inverse(v);
    const double upper = rises ? beta.upper_inverse(v) : lower;
    if (!std::isfinite(lower) || !std::isfinite(upper)) {
      throw RegimeError("UnstableSystem", "service curve never reaches arrival curve plus offset");
    }
    sup = std::max(sup, std::max(lower, upper) - t);
  }
  // Past the last kink the slope is ra / rb - 1 <= 0, so the supremum is attained.
  return sup;
}

double delay_bound(const Curve& alpha, const Curve& beta, const TailBound& f, const TailBound& g,
                   double w, const GridOptions& opts) {
  if (w < 0.0) return 1.0;
  if (horizontal_deviation(alpha, beta, 0.0) > w) return 1.0;

  // Largest x with h(alpha + x, beta) <= w; h is non-decreasing in x.
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200 && horizontal_deviation(alpha, beta, hi) <= w; ++i) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (horizontal_deviation(alpha, beta, mid) <= w) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return convolve_tailbounds(f, g, lo, opts);
}

}  // namespace v2v::snc
