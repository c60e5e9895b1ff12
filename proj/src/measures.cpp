#include "ineq/measures.hpp"

#include <cmath>

#include <fmt/format.h>

#include "ineq/errors.hpp"
#include "ineq/numeric.hpp"

namespace ineq {

namespace {

std::vector<double> transformed(std::span<const double> y, double (*g)(double, double),
                                double param) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = g(y[i], param);
  return out;
}

double g_square(double y, double) { return y * y; }
double g_log(double y, double) { return std::log(y); }
double g_ylogy(double y, double) { return y * std::log(y); }
double g_pow(double y, double p) { return std::pow(y, p); }

ThetaDecomposition compute(std::span<const double> y, std::span<const double> w,
                           const MeasureSpec& spec, double factor) {
  ThetaDecomposition out;
  out.factor = factor;
  out.mu = weighted_mean(y, w);
  const double mu = out.mu;

  switch (spec.family()) {
    case MeasureFamily::kCv: {
      out.gamma = weighted_mean(transformed(y, g_square, 0.0), w);
      std::vector<double> dev(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) dev[i] = (y[i] - mu) * (y[i] - mu);
      out.theta = factor * std::sqrt(weighted_mean(dev, w)) / mu;
      break;
    }
    case MeasureFamily::kGini: {
      const auto order = stable_order(y);
      const double total = compensated_sum(w);
      out.gamma = gini_gamma_unnormalized(y, w, order) / (total * total);
      out.theta = theta_from_components(spec, mu, out.gamma, factor);
      break;
    }
    case MeasureFamily::kGe: {
      const double alpha = *spec.parameter();
      if (spec.is_ge_zero()) {
        out.gamma = weighted_mean(transformed(y, g_log, 0.0), w);
      } else if (spec.is_ge_one()) {
        out.gamma = weighted_mean(transformed(y, g_ylogy, 0.0), w);
      } else {
        out.gamma = weighted_mean(transformed(y, g_pow, alpha), w);
      }
      out.theta = theta_from_components(spec, mu, out.gamma, factor);
      break;
    }
    case MeasureFamily::kAtkinson: {
      const double eps = *spec.parameter();
      if (spec.is_atkinson_one()) {
        out.gamma = weighted_mean(transformed(y, g_log, 0.0), w);
      } else {
        out.gamma = weighted_mean(transformed(y, g_pow, 1.0 - eps), w);
      }
      out.theta = theta_from_components(spec, mu, out.gamma, factor);
      break;
    }
  }
  return out;
}

}  // namespace

double theta_from_components(const MeasureSpec& spec, double mu, double gamma, double factor) {
  if (!(mu > 0.0)) throw DomainError(fmt::format("mean must be positive, got {}", mu));
  switch (spec.family()) {
    case MeasureFamily::kCv:
      return factor * std::sqrt(std::max(gamma - mu * mu, 0.0)) / mu;
    case MeasureFamily::kGini:
      return factor * (2.0 * gamma / mu - 1.0);
    case MeasureFamily::kGe: {
      if (spec.is_ge_zero()) return factor * (std::log(mu) - gamma);
      if (spec.is_ge_one()) return factor * (gamma / mu - std::log(mu));
      const double alpha = *spec.parameter();
      return factor * (gamma / std::pow(mu, alpha) - 1.0) / (alpha * (alpha - 1.0));
    }
    case MeasureFamily::kAtkinson: {
      if (spec.is_atkinson_one()) return factor * (1.0 - std::exp(gamma) / mu);
      const double eps = *spec.parameter();
      return factor * (1.0 - std::pow(gamma, 1.0 / (1.0 - eps)) / mu);
    }
  }
  return 0.0;
}

double finite_sample_factor(const MeasureSpec& spec, std::size_t n_prime) {
  const auto n = static_cast<double>(n_prime);
  if (spec.family() == MeasureFamily::kCv) return std::sqrt(n / (n - 1.0));
  if (spec.family() == MeasureFamily::kGe && !spec.is_ge_zero() && !spec.is_ge_one()) {
    return n / (n - 1.0);
  }
  return 1.0;
}

double gamma_integrand(const MeasureSpec& spec, double y) {
  switch (spec.family()) {
    case MeasureFamily::kCv:
      return y * y;
    case MeasureFamily::kGini:
      throw DomainError("the Gini gamma is not a weighted mean of a fixed function of income");
    case MeasureFamily::kGe:
      if (spec.is_ge_zero()) return std::log(y);
      if (spec.is_ge_one()) return y * std::log(y);
      return std::pow(y, *spec.parameter());
    case MeasureFamily::kAtkinson:
      if (spec.is_atkinson_one()) return std::log(y);
      return std::pow(y, 1.0 - *spec.parameter());
  }
  return 0.0;
}

double gini_gamma_unnormalized(std::span<const double> incomes, std::span<const double> weights,
                               std::span<const std::size_t> order) {
  CompensatedSum cumulative;
  CompensatedSum acc;
  for (std::size_t idx : order) {
    cumulative += weights[idx];
    acc += weights[idx] * incomes[idx] * (cumulative.value() - 0.5 * weights[idx]);
  }
  return acc.value();
}

ThetaDecomposition population_value(const IncomePopulation& population, const MeasureSpec& spec) {
  if (population.size() < 2) {
    throw DegenerateError(fmt::format("population of size {} is degenerate (need N >= 2)",
                                      population.size()));
  }
  const std::vector<double> ones(population.size(), 1.0);
  return compute(population.incomes(), ones, spec, 1.0);
}

ThetaDecomposition ht_estimate(std::span<const double> incomes, std::span<const double> weights,
                               const MeasureSpec& spec) {
  if (incomes.size() != weights.size()) {
    throw DomainError("ht_estimate: incomes and weights differ in length");
  }
  std::size_t n_prime = 0;
  for (std::size_t i = 0; i < incomes.size(); ++i) {
    if (!(incomes[i] > 0.0)) {
      throw DomainError(fmt::format("income at position {} is not positive ({})", i, incomes[i]));
    }
    if (weights[i] < 0.0) throw DomainError(fmt::format("negative weight at position {}", i));
    if (weights[i] > 0.0) ++n_prime;
  }
  if (!(compensated_sum(weights) > 0.0)) throw DomainError("sample has zero total weight");
  if (n_prime < 2) {
    throw InsufficientSampleError(
        fmt::format("{} needs at least 2 positive-weight observations, got {}", spec.label(),
                    n_prime));
  }
  return compute(incomes, weights, spec, finite_sample_factor(spec, n_prime));
}

ThetaDecomposition ht_estimate(const WeightedSample& sample, const MeasureSpec& spec) {
  const auto y = sample.incomes();
  const auto w = sample.weights();
  return ht_estimate(y, w, spec);
}

double atkinson_from_ge(double ge_value, double epsilon) {
  if (std::abs(epsilon - 1.0) < kSpecialParameterTolerance) {
    throw DomainError("atkinson_from_ge: epsilon = 1 is not supported by the transform");
  }
  const double base = epsilon * (epsilon - 1.0) * ge_value + 1.0;
  if (!(base > 0.0)) {
    throw DomainError(fmt::format("atkinson_from_ge: non-positive base {}", base));
  }
  return 1.0 - std::pow(base, 1.0 / (1.0 - epsilon));
}

double relative_entropy_transform(double ge_value, double alpha, std::size_t pop_size) {
  if (pop_size < 2) throw DomainError("relative entropy needs a population size >= 2");
  const auto n = static_cast<double>(pop_size);
  if (std::abs(alpha - 1.0) < kSpecialParameterTolerance) return ge_value / std::log(n);
  if (std::abs(alpha - 2.0) < kSpecialParameterTolerance) return ge_value / ((n - 1.0) / 2.0);
  throw DomainError(fmt::format("relative entropy is defined for alpha in {{1, 2}}, got {}",
                                alpha));
}

}  // namespace ineq
