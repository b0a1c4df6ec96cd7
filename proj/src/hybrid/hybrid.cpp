#include "v2v/hybrid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "v2v/error.hpp"

namespace v2v::hybrid {

void HybridConfig::validate() const {
  if (!(split >= 0.0 && split <= 1.0)) throw DomainError("split must lie in [0, 1]");
  if (!(lambda_total >= 0.0)) throw DomainError("lambda_total must be >= 0");
  cellular.validate();
  mmwave.validate();
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0 && hi > lo && points >= 2)) throw DomainError("log grid needs 0 < lo < hi, >= 2 points");
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = lo * std::pow(hi / lo, double(i) / (points - 1));
  g.back() = hi;
  return g;
}

HybridModel::HybridModel(HybridConfig cfg, HybridOptions opts)
    : cfg_(std::move(cfg)), opts_(opts) {
  cfg_.validate();
  const double lam_c = (1.0 - cfg_.split) * cfg_.lambda_total;
  const double lam_m = cfg_.split * cfg_.lambda_total;

  if (lam_c > 0.0) {
    cellular::BackoffParams p = cfg_.cellular;
    p.lambda = lam_c;
    cell_ = cellular::cellular_service_curve(p, cellular::solve_metrics(p));
    c1_ = cell_->rate;
  }

  if (lam_m > 0.0) {
    const mmwave::Model model(cfg_.mmwave);
    const auto arrival = mmwave::flow_arrival(cfg_.mmwave, lam_m);
    c2_ = cfg_.mmwave.n_vehicles * lam_m;  // mean rate, the theta -> 0 limit of rho
    // Grid-only theta per knot; the bound is a step function of the integer
    // delay and each knot value covers the interval up to the next knot.
    double w = 0.0;
    bool stable = false;
    while (true) {
      double best = std::numeric_limits<double>::infinity();
      for (double th : model.thetas()) best = std::min(best, model.log_bound(arrival, th, w));
      if (std::isfinite(best)) stable = true;
      if (!stable) {
        throw RegimeError("UnstableRegime", "mmWave branch has no stable theta at its load");
      }
      const double b = std::min(1.0, std::exp(best));
      knots_.push_back(w);
      b_mm_.push_back(b);
      if (b < opts_.tail_cutoff || w >= double(opts_.max_delay)) break;
      w = w < double(opts_.exact_knots) ? w + 1.0 : std::ceil(w * opts_.knot_ratio);
    }
  }
}

double HybridModel::cellular_ccdf(double x) const {
  if (!cell_) return x < 0.0 ? 1.0 : 0.0;
  return cellular::cellular_delay_ccdf(*cell_, x);
}

double HybridModel::mmwave_ccdf(double x) const {
  if (knots_.empty()) return x < 0.0 ? 1.0 : 0.0;
  if (x < 0.0) return 1.0;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), std::floor(x));
  if (it == knots_.end()) return b_mm_.back();
  return b_mm_[(it - knots_.begin()) - 1];
}

double HybridModel::g1(double v) const {
  if (v < 0.0) return 1.0;
  if (!cell_) return 0.0;
  return cell_->g(v / c1_);
}

double HybridModel::G2(double u) const {
  if (u < 0.0) return 0.0;
  if (knots_.empty()) return 1.0;
  return 1.0 - mmwave_ccdf(u / c2_);
}

double HybridModel::combined_bound(double y) const {
  if (knots_.empty()) return g1(y);
  // Atom of G2 at 0, the Stieltjes part over (0, U], and the mass beyond U
  // where g1 is bounded by 1.
  const double U = c2_ * knots_.back();
  double total = G2(0.0) * g1(y);
  if (U > 0.0) {
    snc::StieltjesOptions o;
    o.tag = snc::StieltjesTag::right;
    o.window_lo = 0.0;
    o.window_hi = U;
    o.initial_steps = opts_.stieltjes_steps;
    o.max_halvings = opts_.stieltjes_halvings;
    o.tolerance = opts_.stieltjes_tolerance;
    total += snc::stieltjes_convolve([this](double v) { return g1(v); },
                                     [this](double u) { return G2(u); }, y, o)
                 .value;
  }
  total += 1.0 - G2(U);
  return std::clamp(total, 0.0, 1.0);
}

double HybridModel::delay_ccdf(double x) const {
  if (x <= 0.0) return 1.0;
  const double r = c1_ + c2_;
  if (!(r > 0.0)) return 0.0;
  const snc::TailBound g([this](double v) { return combined_bound(v); }, 0.0);
  const snc::Curve line = snc::Curve::affine(r);
  return snc::delay_bound(line, line, snc::TailBound::zero(), g, x);
}

double hybrid_delay_ccdf(const HybridConfig& cfg, double x) { return HybridModel(cfg).delay_ccdf(x); }

MeanResult mean_from_ccdf(const std::function<double(double)>& ccdf,
                          const std::vector<double>& grid) {
  if (grid.empty() || !(grid.front() > 0.0)) throw DomainError("mean needs a positive grid");
  static constexpr std::array<double, 5> node{0.0, -0.5384693101056831, 0.5384693101056831,
                                              -0.9061798459386640, 0.9061798459386640};
  static constexpr std::array<double, 5> weight{0.5688888888888889, 0.4786286704993665,
                                                0.4786286704993665, 0.2369268850561891,
                                                0.2369268850561891};
  auto gl = [&](double a, double b) {
    const double h = 0.5 * (b - a), m = 0.5 * (a + b);
    double s = 0.0;
    for (int i = 0; i < 5; ++i) s += weight[i] * ccdf(m + h * node[i]);
    return s * h;
  };
  MeanResult r;
  r.mean = gl(0.0, grid.front());
  for (std::size_t i = 1; i < grid.size(); ++i) r.mean += gl(grid[i - 1], grid[i]);
  r.tail = ccdf(grid.back());
  r.truncated = r.tail > 1e-3;
  return r;
}

MeanResult average_delay(const HybridConfig& cfg, Mode mode, const std::vector<double>& grid) {
  HybridConfig c = cfg;
  if (mode == Mode::cellular) c.split = 0.0;
  if (mode == Mode::mmwave) c.split = 1.0;
  const HybridModel m(c);
  switch (mode) {
    case Mode::cellular: return mean_from_ccdf([&](double x) { return m.cellular_ccdf(x); }, grid);
    case Mode::mmwave: return mean_from_ccdf([&](double x) { return m.mmwave_ccdf(x); }, grid);
    case Mode::hybrid: break;
  }
  return mean_from_ccdf([&](double x) { return m.delay_ccdf(x); }, grid);
}

}  // namespace v2v::hybrid
