#include "ineq/numeric.hpp"

#include <algorithm>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "ineq/errors.hpp"

namespace ineq {

double compensated_sum(std::span<const double> values) {
  CompensatedSum acc;
  for (double v : values) acc += v;
  return acc.value();
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size() || values.empty()) {
    throw DomainError("weighted_mean: values and weights must be non-empty and aligned");
  }
  const double anchor = values.front();
  CompensatedSum num;
  CompensatedSum den;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += weights[i] * (values[i] - anchor);
    den += weights[i];
  }
  if (!(den.value() > 0.0)) throw DomainError("weighted_mean: total weight is zero");
  return anchor + num.value() / den.value();
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double p) {
  if (values.size() != weights.size() || values.empty()) {
    throw DomainError("weighted_quantile: values and weights must be non-empty and aligned");
  }
  const auto order = stable_order(values);
  const double total = compensated_sum(weights);
  if (!(total > 0.0)) throw DomainError("weighted_quantile: total weight is zero");
  CompensatedSum cum;
  for (std::size_t idx : order) {
    cum += weights[idx];
    if (cum.value() >= p * total) return values[idx];
  }
  return values[order.back()];
}

double sorted_quantile(std::span<const double> sorted, double p) {
  const auto n = sorted.size();
  if (n == 0) throw DomainError("sorted_quantile: empty data");
  const double pos = p * static_cast<double>(n) + 0.5;  // 1-based fractional index
  if (pos <= 1.0) return sorted.front();
  if (pos >= static_cast<double>(n)) return sorted.back();
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

std::vector<std::size_t> stable_order(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  return order;
}

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

double normal_cdf(double x) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::cdf(standard, x);
}

}  // namespace ineq
