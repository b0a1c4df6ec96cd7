#include "v2v/snc.hpp"

#include <algorithm>
#include <cmath>

namespace v2v::snc {
namespace {

struct Segment {
  double t0, t1;  // domain
  double v0;      // value at t0
  double slope;
};

std::vector<Segment> segments(const Curve& c, double horizon) {
  std::vector<Segment> out;
  const auto pts = c.breakpoints();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    out.push_back({pts[i - 1].t, pts[i].t, pts[i - 1].value,
                   (pts[i].value - pts[i - 1].value) / (pts[i].t - pts[i - 1].t)});
  }
  const auto& last = pts.back();
  out.push_back({last.t, std::max(horizon, last.t + 1.0), last.value, c.final_rate()});
  return out;
}

// Value of the min-plus convolution at one point. For fixed t the function
// tau -> a(tau) + b(t - tau) is piecewise linear with kinks only at the
// breakpoints of a and at t minus the breakpoints of b, so the minimum sits
// on one of those.
double exact_at(const Curve& a, const Curve& b, double t) {
  double best = a(0.0) + b(t);
  best = std::min(best, a(t) + b(0.0));
  for (const auto& p : a.breakpoints()) {
    if (p.t <= t) best = std::min(best, p.value + b(t - p.t));
  }
  for (const auto& p : b.breakpoints()) {
    if (p.t <= t) best = std::min(best, a(t - p.t) + p.value);
  }
  return best;
}

}  // namespace

Curve minplus_convolve(const Curve& a, const Curve& b) {
  const double a_last = a.breakpoints().back().t;
  const double b_last = b.breakpoints().back().t;
  // Past a_last + b_last the result is affine with slope min(final rates).
  const double t_max = a_last + b_last;
  const double horizon = t_max + 1.0;

  // Linear pieces of the pairwise segment convolutions; the lower envelope of
  // these is the result, so its kinks are piece endpoints or piece crossings.
  std::vector<Segment> pieces;
  for (const auto& sa : segments(a, horizon)) {
    for (const auto& sb : segments(b, horizon)) {
      const Segment& lo = sa.slope <= sb.slope ? sa : sb;
      const Segment& hi = sa.slope <= sb.slope ? sb : sa;
      const double start = sa.t0 + sb.t0;
      const double v = sa.v0 + sb.v0;
      const double mid = start + (lo.t1 - lo.t0);
      pieces.push_back({start, mid, v, lo.slope});
      pieces.push_back({mid, mid + (hi.t1 - hi.t0), v + lo.slope * (lo.t1 - lo.t0), hi.slope});
    }
  }

  std::vector<double> cand{0.0, t_max, horizon};
  for (const auto& p : pieces) {
    if (p.t0 <= horizon) cand.push_back(p.t0);
    if (p.t1 <= horizon) cand.push_back(p.t1);
  }
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    for (std::size_t j = i + 1; j < pieces.size(); ++j) {
      const auto& p = pieces[i];
      const auto& q = pieces[j];
      if (p.slope == q.slope) continue;
      const double lo = std::max(p.t0, q.t0);
      const double hi = std::min({p.t1, q.t1, horizon});
      if (lo >= hi) continue;
      // p.v0 + p.slope (t - p.t0) = q.v0 + q.slope (t - q.t0)
      const double t = (q.v0 - p.v0 + p.slope * p.t0 - q.slope * q.t0) / (p.slope - q.slope);
      if (t > lo && t < hi) cand.push_back(t);
    }
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end(),
                         [](double x, double y) { return std::abs(x - y) <= 1e-12 * (1.0 + std::abs(x)); }),
             cand.end());

  std::vector<Breakpoint> pts;
  pts.reserve(cand.size());
  for (double t : cand) {
    double v = exact_at(a, b, t);
    if (!pts.empty()) v = std::max(v, pts.back().value);  // guard against rounding
    pts.push_back({t, v});
  }

  // Drop interior points that are collinear with their neighbours.
  std::vector<Breakpoint> simplified;
  for (const auto& p : pts) {
    while (simplified.size() >= 2) {
      const auto& x = simplified[simplified.size() - 2];
      const auto& y = simplified.back();
      const double interp = x.value + (p.value - x.value) * (y.t - x.t) / (p.t - x.t);
      if (std::abs(interp - y.value) <= 1e-12 * (1.0 + std::abs(y.value))) {
        simplified.pop_back();
      } else {
        break;
      }
    }
    simplified.push_back(p);
  }
  return Curve(std::move(simplified));
}

}  // namespace v2v::snc
