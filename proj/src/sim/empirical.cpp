#include "v2v/empirical.hpp"

#include <algorithm>
#include <boost/math/distributions/beta.hpp>
#include <cmath>
#include <numeric>

#include "v2v/error.hpp"

namespace v2v {

double clopper_pearson_upper(std::size_t k, std::size_t n, double level) {
  if (n == 0) return 1.0;
  if (k >= n) return 1.0;
  const double a = 0.5 * (1.0 - level);
  return boost::math::quantile(boost::math::beta_distribution<>(k + 1.0, double(n - k)), 1.0 - a);
}

double clopper_pearson_lower(std::size_t k, std::size_t n, double level) {
  if (n == 0 || k == 0) return 0.0;
  const double a = 0.5 * (1.0 - level);
  return boost::math::quantile(boost::math::beta_distribution<>(double(k), n - k + 1.0), a);
}

EmpiricalCcdf::EmpiricalCcdf(std::vector<double> samples) : sorted_(std::move(samples)) {
  std::sort(sorted_.begin(), sorted_.end());
}

std::size_t EmpiricalCcdf::exceedances(double x) const {
  return static_cast<std::size_t>(sorted_.end() -
                                  std::upper_bound(sorted_.begin(), sorted_.end(), x));
}

double EmpiricalCcdf::ccdf(double x) const {
  if (sorted_.empty()) return 0.0;
  return double(exceedances(x)) / double(sorted_.size());
}

double EmpiricalCcdf::mean() const {
  if (sorted_.empty()) return 0.0;
  return std::accumulate(sorted_.begin(), sorted_.end(), 0.0) / double(sorted_.size());
}

double EmpiricalCcdf::quantile(double prob) const {
  if (sorted_.empty()) throw DomainError("quantile of an empty sample");
  const auto n = sorted_.size();
  auto idx = static_cast<std::size_t>(std::ceil(prob * double(n)));
  idx = std::clamp<std::size_t>(idx, 1, n);
  return sorted_[idx - 1];
}

double EmpiricalCcdf::upper(double x, double level) const {
  return clopper_pearson_upper(exceedances(x), sorted_.size(), level);
}

double EmpiricalCcdf::lower(double x, double level) const {
  return clopper_pearson_lower(exceedances(x), sorted_.size(), level);
}

double EmpiricalCcdf::resolution_floor(double level) const {
  return clopper_pearson_upper(0, sorted_.size(), level);
}

}  // namespace v2v
