#pragma once

#include <cstddef>
#include <vector>

namespace v2v {

// Sample-based CCDF with Clopper-Pearson confidence limits.
class EmpiricalCcdf {
 public:
  EmpiricalCcdf() = default;
  explicit EmpiricalCcdf(std::vector<double> samples);

  std::size_t size() const noexcept { return sorted_.size(); }
  bool empty() const noexcept { return sorted_.empty(); }
  const std::vector<double>& samples() const noexcept { return sorted_; }

  std::size_t exceedances(double x) const;  // #{s > x}
  double ccdf(double x) const;
  double mean() const;
  double quantile(double prob) const;  // smallest sample s with ccdf(s) <= 1 - prob

  // Two-sided Clopper-Pearson interval for P{X > x} at the given level.
  double upper(double x, double level = 0.95) const;
  double lower(double x, double level = 0.95) const;

  // Upper limit when no sample exceeds x: below this no bound can be
  // confirmed with `size()` samples.
  double resolution_floor(double level = 0.95) const;

 private:
  std::vector<double> sorted_;
};

double clopper_pearson_upper(std::size_t k, std::size_t n, double level = 0.95);
double clopper_pearson_lower(std::size_t k, std::size_t n, double level = 0.95);

}  // namespace v2v
