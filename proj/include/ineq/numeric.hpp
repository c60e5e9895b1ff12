#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace ineq {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

double compensated_sum(std::span<const double> values);

// Weighted mean computed around the first value so that constant inputs
// return that constant exactly.
double weighted_mean(std::span<const double> values, std::span<const double> weights);

// Smallest value whose cumulative weight share reaches p (p in [0, 1]).
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double p);

// Type-5 empirical quantile on sorted data: plotting positions (i - 0.5) / n.
double sorted_quantile(std::span<const double> sorted, double p);

// Indices that sort values ascending; ties keep input order.
std::vector<std::size_t> stable_order(std::span<const double> values);

double normal_quantile(double p);
double normal_cdf(double x);

}  // namespace ineq
