#include "v2v/error.hpp"
#include "v2v/snc.hpp"

#include <algorithm>
#include <cmath>

namespace v2v::snc {

Curve::Curve(std::vector<Breakpoint> points) : points_(std::move(points)) {
  if (points_.empty()) throw DomainError("curve needs at least one breakpoint");
  if (points_.front().t != 0.0) throw DomainError("curve must start at t = 0");
  if (!(points_.front().value >= 0.0)) throw DomainError("curve value at 0 must be >= 0");
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const auto& p = points_[i - 1];
    const auto& q = points_[i];
    if (!(q.t > p.t)) throw DomainError("curve breakpoints must be strictly increasing in t");
    if (!(q.value >= p.value)) throw DomainError("curve values must be non-decreasing");
    if (!std::isfinite(q.t) || !std::isfinite(q.value)) throw DomainError("non-finite breakpoint");
  }
  if (points_.size() >= 2) {
    const auto& p = points_[points_.size() - 2];
    const auto& q = points_.back();
    tail_rate_ = (q.value - p.value) / (q.t - p.t);
  }
}

Curve Curve::affine(double rate, double burst) {
  if (!(rate >= 0.0) || !(burst >= 0.0)) throw DomainError("affine curve needs rate, burst >= 0");
  return Curve({{0.0, burst}, {1.0, burst + rate}});
}

double Curve::operator()(double t) const {
  if (t <= 0.0) return points_.front().value;
  const auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                   [](double v, const Breakpoint& b) { return v < b.t; });
  if (it == points_.end()) {
    const auto& last = points_.back();
    return last.value + tail_rate_ * (t - last.t);
  }
  const auto& q = *it;
  const auto& p = *(it - 1);
  return p.value + (q.value - p.value) * (t - p.t) / (q.t - p.t);
}

double Curve::lower_inverse(double v) const {
  if (v <= points_.front().value) return 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const auto& p = points_[i - 1];
    const auto& q = points_[i];
    if (q.value >= v) return p.t + (v - p.value) * (q.t - p.t) / (q.value - p.value);
  }
  if (tail_rate_ <= 0.0) return kInf;
  const auto& last = points_.back();
  return last.t + (v - last.value) / tail_rate_;
}

double Curve::upper_inverse(double v) const {
  if (v < points_.front().value) return 0.0;
  // The first point whose value exceeds v bounds the flat run at v from the right.
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const auto& p = points_[i - 1];
    const auto& q = points_[i];
    if (q.value > v) return p.t + (v - p.value) * (q.t - p.t) / (q.value - p.value);
  }
  if (tail_rate_ <= 0.0) return kInf;
  const auto& last = points_.back();
  return last.t + (v - last.value) / tail_rate_;
}

TailBound::TailBound(Fn fn, double support_floor) : fn_(std::move(fn)), floor_(support_floor) {
  if (!fn_) throw DomainError("tail bound needs an evaluator");
}

TailBound TailBound::zero() {
  TailBound b([](double) { return 0.0; }, 0.0);
  b.zero_ = true;
  return b;
}

TailBound TailBound::exponential(double rate, double scale) {
  return TailBound([rate, scale](double x) { return scale * std::exp(-rate * x); }, 0.0);
}

double TailBound::operator()(double x) const {
  if (x < floor_) return 1.0;
  const double v = fn_(x);
  if (std::isnan(v)) return 1.0;
  return std::clamp(v, 0.0, 1.0);
}

StochasticArrival poisson_arrival(double rate, double theta) {
  if (!(rate >= 0.0)) throw DomainError("arrival rate must be >= 0");
  if (!(theta > 0.0)) throw DomainError("theta must be > 0");
  StochasticArrival a;
  a.rho = [rate](double th) { return rate * std::expm1(th) / th; };
  a.sigma = [](double) { return 0.0; };
  a.theta = theta;
  return a;
}

StochasticArrival aggregate_arrivals(std::span<const StochasticArrival> arrivals) {
  if (arrivals.empty()) throw DomainError("cannot aggregate an empty list of arrivals");
  const double theta = arrivals.front().theta;
  for (const auto& a : arrivals) {
    if (a.theta != theta) throw DomainError("arrivals use different theta", "MismatchedTheta");
  }
  std::vector<StochasticArrival> parts(arrivals.begin(), arrivals.end());
  StochasticArrival sum;
  sum.theta = theta;
  sum.rho = [parts](double th) {
    double r = 0.0;
    for (const auto& p : parts) r += p.rho(th);
    return r;
  };
  sum.sigma = [parts](double th) {
    double s = 0.0;
    for (const auto& p : parts) s += p.sigma(th);
    return s;
  };
  return sum;
}

}  // namespace v2v::snc
