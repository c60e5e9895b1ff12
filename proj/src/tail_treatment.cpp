#include "ineq/tails.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "ineq/errors.hpp"
#include "ineq/numeric.hpp"

namespace ineq {

namespace {

constexpr double kPitseT = 0.5;
constexpr double kShapeLow = 0.1;
constexpr double kShapeHigh = 50.0;
constexpr double kShapeTolerance = 1e-8;

bool beyond(double v, double threshold, Tail tail) {
  return tail == Tail::kUpper ? v > threshold : v < threshold;
}

// Relative position in (0, 1) of every exceedance: u / x above, y / u below.
std::vector<double> relative_exceedances(std::span<const double> values, double threshold,
                                         Tail tail) {
  std::vector<double> out;
  for (double v : values) {
    if (beyond(v, threshold, tail)) out.push_back(tail == Tail::kUpper ? threshold / v : v / threshold);
  }
  return out;
}

const char* tail_name(Tail tail) { return tail == Tail::kUpper ? "upper" : "lower"; }

double pareto_replacement(const TailFit& fit, std::size_t j) {
  const double p = 1.0 - (static_cast<double>(j) - 0.5) / static_cast<double>(fit.k);
  const double z = std::pow(p, -1.0 / fit.shape);
  return fit.tail == Tail::kUpper ? fit.threshold * z : fit.threshold / z;
}

// Replaces the flagged members of `idx` (positions into `incomes`) in place.
std::size_t replace_tail(std::vector<double>& incomes, const std::vector<std::size_t>& idx,
                         const std::vector<bool>& flagged, const TailFit& fit, double fence) {
  const bool upper = fit.tail == Tail::kUpper;
  std::vector<std::size_t> exceed;
  double interior = upper ? -std::numeric_limits<double>::infinity()
                          : std::numeric_limits<double>::infinity();
  for (std::size_t pos = 0; pos < idx.size(); ++pos) {
    const double v = incomes[idx[pos]];
    const bool is_out = flagged[pos] && (upper ? v > fence : v < fence);
    if (!is_out) interior = upper ? std::max(interior, v) : std::min(interior, v);
    if (beyond(v, fit.threshold, fit.tail)) exceed.push_back(pos);
  }
  // Ascending in z = x / u (upper) or u / y (lower): the most extreme value last.
  std::stable_sort(exceed.begin(), exceed.end(), [&](std::size_t a, std::size_t b) {
    return upper ? incomes[idx[a]] < incomes[idx[b]] : incomes[idx[a]] > incomes[idx[b]];
  });
  if (exceed.size() != fit.k) {
    throw DomainError(fmt::format("{} tail fit expects {} exceedances, found {}",
                                  tail_name(fit.tail), fit.k, exceed.size()));
  }
  std::vector<std::pair<std::size_t, double>> updates;
  for (std::size_t j = 0; j < exceed.size(); ++j) {
    const std::size_t pos = exceed[j];
    const double v = incomes[idx[pos]];
    if (!flagged[pos] || !(upper ? v > fence : v < fence)) continue;
    double r = pareto_replacement(fit, j + 1);
    r = upper ? std::min(r, fence) : std::max(r, fence);
    if (upper ? r < interior : r > interior) {
      throw RankConsistencyError(fmt::format(
          "{} tail replacement {} for value {} crosses the untreated interior value {}",
          tail_name(fit.tail), r, v, interior));
    }
    updates.emplace_back(idx[pos], r);
  }
  for (const auto& [k, r] : updates) incomes[k] = r;
  return updates.size();
}

struct DomainOutcome {
  std::vector<TailFit> fits;
  std::size_t replaced = 0;
};

DomainOutcome treat_domain(std::vector<double>& incomes, std::span<const double> weights,
                           const std::vector<std::size_t>& idx, const std::string& label,
                           const TailTreatmentOptions& options,
                           std::vector<std::string>& warnings) {
  DomainOutcome out;
  std::vector<double> y(idx.size());
  std::vector<double> w(idx.size());
  for (std::size_t pos = 0; pos < idx.size(); ++pos) {
    y[pos] = incomes[idx[pos]];
    w[pos] = weights[idx[pos]];
  }
  auto flags = detect_outliers(y, options.boxplot);
  for (auto& msg : flags.warnings) warnings.push_back(label + msg);

  for (Tail tail : {Tail::kUpper, Tail::kLower}) {
    const bool upper = tail == Tail::kUpper;
    const double fence = upper ? flags.upper_fence : flags.lower_fence;
    bool any = false;
    for (std::size_t pos = 0; pos < y.size(); ++pos) {
      any = any || (flags.flags[pos] && (upper ? y[pos] > fence : y[pos] < fence));
    }
    if (!any) continue;
    const double q = weighted_quantile(y, w, upper ? options.upper_quantile : options.lower_quantile);
    const double threshold = upper ? std::min(fence, q) : std::max(fence, q);
    const auto k = static_cast<std::size_t>(std::count_if(
        y.begin(), y.end(), [&](double v) { return beyond(v, threshold, tail); }));
    if (k < options.k_min) {
      warnings.push_back(fmt::format("{}{} tail: {} exceedances below the minimum of {}; not treated",
                                     label, tail_name(tail), k, options.k_min));
      continue;
    }
    const auto fit = fit_pareto_tail(y, threshold, tail, options.k_min);
    out.replaced += replace_tail(incomes, idx, flags.flags, fit, fence);
    for (std::size_t pos = 0; pos < idx.size(); ++pos) y[pos] = incomes[idx[pos]];
    out.fits.push_back(fit);
  }
  return out;
}

}  // namespace

std::size_t OutlierFlags::count() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
}

double GAndH::quantile(double p) const {
  const double z = normal_quantile(p);
  const double skew = std::abs(g) < 1e-12 ? z : std::expm1(g * z) / g;
  return a + b * skew * std::exp(h * z * z / 2.0);
}

GAndH fit_g_and_h(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty() || sorted.front() == sorted.back()) {
    throw DegenerateError("g-and-h fit: data have no spread");
  }
  const auto q = [&](double p) { return sorted_quantile(sorted, p); };
  GAndH fit;
  fit.a = q(0.5);

  const double z8 = normal_quantile(7.0 / 8.0);
  const double up = q(7.0 / 8.0) - fit.a;
  const double down = fit.a - q(1.0 / 8.0);
  fit.g = (up > 0.0 && down > 0.0) ? std::log(up / down) / z8 : 0.0;

  std::vector<double> xs;
  std::vector<double> ys;
  for (double p : {1.0 / 8.0, 2.0 / 8.0, 3.0 / 8.0}) {
    const double z = normal_quantile(1.0 - p);
    const double spread = q(1.0 - p) - q(p);
    if (!(spread > 0.0)) continue;
    const double denom = std::abs(fit.g) < 1e-12 ? 2.0 * z : 2.0 * std::sinh(fit.g * z) / fit.g;
    xs.push_back(z * z / 2.0);
    ys.push_back(std::log(spread / denom));
  }
  if (xs.empty()) throw DegenerateError("g-and-h fit: octile spread is zero");
  if (xs.size() >= 2) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    fit.h = std::max(0.0, sxy / sxx);
  }
  double log_b = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) log_b += ys[i] - fit.h * xs[i];
  fit.b = std::exp(log_b / static_cast<double>(xs.size()));
  return fit;
}

OutlierFlags detect_outliers(std::span<const double> values, const BoxplotOptions& options) {
  OutlierFlags out;
  out.flags.assign(values.size(), false);
  if (!values.empty()) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo == *hi) throw DegenerateError("outlier detection: data have no spread");
  }
  if (values.size() < options.min_size) {
    out.lower_fence = -std::numeric_limits<double>::infinity();
    out.upper_fence = std::numeric_limits<double>::infinity();
    out.warnings.push_back(fmt::format("outlier detection skipped: n = {} is below {}",
                                       values.size(), options.min_size));
    return out;
  }
  const auto fit = fit_g_and_h(values);
  out.lower_fence = fit.quantile(options.lower_level);
  out.upper_fence = fit.quantile(options.upper_level);
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.flags[i] = values[i] < out.lower_fence || values[i] > out.upper_fence;
  }
  return out;
}

TailFit fit_pareto_tail(std::span<const double> values, double threshold, Tail tail,
                        std::size_t k_min) {
  if (values.empty()) throw InsufficientSampleError("tail fit: no data");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(threshold > 0.0) || !(threshold > *lo && threshold < *hi)) {
    throw DomainError(fmt::format("tail threshold {} is not strictly inside the data range", threshold));
  }
  const auto rel = relative_exceedances(values, threshold, tail);
  if (rel.size() < k_min) {
    throw InsufficientSampleError(fmt::format("{} tail: {} exceedances, at least {} needed",
                                              tail_name(tail), rel.size(), k_min));
  }
  const auto [rmin, rmax] = std::minmax_element(rel.begin(), rel.end());
  if (*rmax - *rmin <= 1e-12 * *rmax) {
    throw EstimationFailure(fmt::format("{} tail: all exceedances are equal", tail_name(tail)));
  }

  std::vector<double> logs(rel.size());
  std::transform(rel.begin(), rel.end(), logs.begin(), [](double r) { return std::log(r); });
  const double target = 1.0 / (1.0 + kPitseT);
  const auto f = [&](double shape) {
    CompensatedSum acc;
    for (double l : logs) acc += std::exp(shape * kPitseT * l);
    return acc.value() / static_cast<double>(logs.size()) - target;
  };
  const double f_lo = f(kShapeLow);
  const double f_hi = f(kShapeHigh);
  if (f_lo * f_hi > 0.0) {
    throw EstimationFailure(fmt::format("{} tail: PITSE root not bracketed in [{}, {}]",
                                        tail_name(tail), kShapeLow, kShapeHigh));
  }
  std::uintmax_t iterations = 200;
  const auto root = boost::math::tools::toms748_solve(
      f, kShapeLow, kShapeHigh, f_lo, f_hi,
      [](double a, double b) { return std::abs(b - a) < kShapeTolerance; }, iterations);
  if (iterations >= 200) {
    throw EstimationFailure(fmt::format("{} tail: PITSE root solve did not converge", tail_name(tail)));
  }
  TailFit fit;
  fit.tail = tail;
  fit.threshold = threshold;
  fit.shape = 0.5 * (root.first + root.second);
  fit.k = rel.size();
  return fit;
}

double hill_estimate(std::span<const double> values, double threshold, Tail tail) {
  const auto rel = relative_exceedances(values, threshold, tail);
  if (rel.empty()) throw InsufficientSampleError("Hill estimator: no exceedances");
  CompensatedSum acc;
  for (double r : rel) acc += -std::log(r);
  return static_cast<double>(rel.size()) / acc.value();
}

WeightedSample treat_tails(const WeightedSample& sample, const OutlierFlags& flags,
                           const std::optional<TailFit>& upper, const std::optional<TailFit>& lower) {
  if (flags.flags.size() != sample.size()) {
    throw DomainError("treat_tails: flags are not aligned with the sample");
  }
  auto incomes = sample.incomes();
  std::vector<std::size_t> idx(sample.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (upper) replace_tail(incomes, idx, flags.flags, *upper, flags.upper_fence);
  if (lower) replace_tail(incomes, idx, flags.flags, *lower, flags.lower_fence);
  return sample.with_incomes(incomes);
}

TailTreatmentResult treat_sample(const WeightedSample& sample, const TailTreatmentOptions& options) {
  TailTreatmentResult result;
  auto incomes = sample.incomes();
  const auto weights = sample.weights();

  std::map<std::string, std::vector<std::size_t>> domains;
  if (options.domain_column) {
    const auto& labels = sample.category(*options.domain_column);
    for (std::size_t k = 0; k < labels.size(); ++k) domains[labels[k]].push_back(k);
  } else {
    auto& all = domains[""];
    all.resize(sample.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
  }
  for (const auto& [name, idx] : domains) {
    const std::string label = name.empty() ? std::string() : fmt::format("domain {}: ", name);
    auto outcome = treat_domain(incomes, weights, idx, label, options, result.warnings);
    result.replaced += outcome.replaced;
    for (auto& f : outcome.fits) f.domain = name;
    result.fits.insert(result.fits.end(), outcome.fits.begin(), outcome.fits.end());
  }
  result.sample = sample.with_incomes(incomes);
  return result;
}

}  // namespace ineq
