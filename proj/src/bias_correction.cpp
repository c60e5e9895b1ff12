#include "ineq/bias.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ineq/errors.hpp"
#include "ineq/linearization.hpp"

namespace ineq {

namespace {

void check_inputs(const MeasureSpec& spec, const ThetaDecomposition& est, std::size_t n_prime) {
  if (!(est.mu > 0.0)) {
    throw DomainError(fmt::format("{}: mean estimate must be positive, got {}", spec.label(),
                                  est.mu));
  }
  const std::size_t needed = spec.family() == MeasureFamily::kGini ? 3 : 2;
  if (n_prime < needed) {
    throw InsufficientSampleError(fmt::format("{}: bias correction needs n' >= {}, got {}",
                                              spec.label(), needed, n_prime));
  }
}

double cv_bias(const ThetaDecomposition& est, const VariancePieces& v) {
  const double mu = est.mu;
  const double d = est.gamma - mu * mu;
  // Zero dispersion: the estimate is exactly zero and so are the variance pieces.
  if (d <= 1e-24 * mu * mu) return 0.0;
  const double d_half = std::sqrt(d);
  const double d_mhalf = 1.0 / d_half;
  const double d_m3half = d_mhalf / d;
  const double term_gg = -1.0 / (8.0 * mu) * d_m3half * v.v_gamma;
  const double term_gm = -0.5 * (d_mhalf / (mu * mu) - d_m3half) * v.cov_mu_gamma;
  const double term_mm =
      0.5 * (2.0 * d_half / (mu * mu * mu) + d_mhalf / mu - mu * d_m3half) * v.v_mu;
  return est.factor * (term_gg + term_gm + term_mm);
}

double gini_variance_part(const ThetaDecomposition& est, const VariancePieces& v) {
  const double mu = est.mu;
  return 2.0 * est.gamma / (mu * mu * mu) * v.v_mu - 2.0 / (mu * mu) * v.cov_mu_gamma;
}

}  // namespace

double approximate_bias(const MeasureSpec& spec, const ThetaDecomposition& est,
                        const VariancePieces& v, std::size_t n_prime) {
  check_inputs(spec, est, n_prime);
  const double mu = est.mu;
  const double gamma = est.gamma;
  switch (spec.family()) {
    case MeasureFamily::kCv:
      return cv_bias(est, v);
    case MeasureFamily::kGini:
      return -2.0 * est.theta / static_cast<double>(n_prime) + gini_variance_part(est, v);
    case MeasureFamily::kGe: {
      if (spec.is_ge_zero()) return -v.v_mu / (2.0 * mu * mu);
      if (spec.is_ge_one()) {
        return -v.cov_mu_gamma / (mu * mu) + (gamma / (mu * mu * mu) + 0.5 / (mu * mu)) * v.v_mu;
      }
      const double a = *spec.parameter();
      const double inner = -1.0 / ((a - 1.0) * std::pow(mu, a + 1.0)) * v.cov_mu_gamma +
                           (a + 1.0) / (2.0 * (a - 1.0)) * gamma / std::pow(mu, a + 2.0) * v.v_mu;
      return est.factor * inner;
    }
    case MeasureFamily::kAtkinson: {
      if (spec.is_atkinson_one()) {
        const double eg = std::exp(gamma);
        return -eg / (2.0 * mu) * v.v_gamma + eg / (mu * mu) * v.cov_mu_gamma -
               eg / (mu * mu * mu) * v.v_mu;
      }
      const double e = *spec.parameter();
      const double one_me = 1.0 - e;
      if (!(gamma > 0.0)) throw DomainError("Atkinson gamma must be positive");
      return -e / (2.0 * one_me * one_me) / mu * std::pow(gamma, (2.0 * e - 1.0) / one_me) *
                 v.v_gamma +
             1.0 / one_me * std::pow(gamma, e / one_me) / (mu * mu) * v.cov_mu_gamma -
             std::pow(gamma, 1.0 / one_me) / (mu * mu * mu) * v.v_mu;
    }
  }
  return 0.0;
}

double corrected_value(const MeasureSpec& spec, const ThetaDecomposition& est,
                       const VariancePieces& v, std::size_t n_prime) {
  if (spec.family() == MeasureFamily::kGini) {
    check_inputs(spec, est, n_prime);
    const double n = static_cast<double>(n_prime);
    return n / (n - 2.0) * (est.theta - gini_variance_part(est, v));
  }
  return est.theta - approximate_bias(spec, est, v, n_prime);
}

BiasReport make_bias_report(const MeasureSpec& spec, const ThetaDecomposition& est,
                            const VariancePieces& pieces, std::size_t n_prime) {
  BiasReport r;
  r.measure = spec;
  r.estimate = est;
  r.pieces = pieces;
  r.n_prime = n_prime;
  r.theta_hat = est.theta;
  r.bias_hat = approximate_bias(spec, est, pieces, n_prime);
  r.theta_corrected = corrected_value(spec, est, pieces, n_prime);
  return r;
}

BiasReport bias_estimate(const WeightedSample& sample, const DesignFrame& frame,
                         const MeasureSpec& spec, const BiasOptions& options) {
  const auto est = ht_estimate(sample, spec);
  const auto pieces = variance_pieces(sample, frame, spec, options.variance);
  return make_bias_report(spec, est, pieces, sample.n_prime());
}

BiasReport corrected_estimate(const WeightedSample& sample, const DesignFrame& frame,
                              const MeasureSpec& spec, const BiasOptions& options) {
  auto report = bias_estimate(sample, frame, spec, options);
  if (options.clamp_to_support) {
    const bool unit_support =
        spec.family() == MeasureFamily::kGini || spec.family() == MeasureFamily::kAtkinson;
    const double upper = unit_support ? 1.0 : std::numeric_limits<double>::infinity();
    report.theta_corrected = std::clamp(report.theta_corrected, 0.0, upper);
  }
  return report;
}

}  // namespace ineq
