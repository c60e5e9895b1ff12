#pragma once

#include <cstddef>

#include "ineq/design.hpp"
#include "ineq/measures.hpp"
#include "ineq/sample.hpp"

namespace ineq {

struct BiasReport {
  MeasureSpec measure = MeasureSpec::gini();
  double theta_hat = 0.0;
  double bias_hat = 0.0;
  double theta_corrected = 0.0;
  ThetaDecomposition estimate;
  VariancePieces pieces;
  std::size_t n_prime = 0;
};

// Second-order Taylor bias of the plug-in estimator, evaluated at the plug-in
// mu_hat and gamma_hat with the supplied variance pieces.  For Gini this is
//   -2 G_hat / n' + 2 gamma / mu^3 V(mu) - 2 / mu^2 Cov(mu, gamma).
double approximate_bias(const MeasureSpec& spec, const ThetaDecomposition& estimate,
                        const VariancePieces& pieces, std::size_t n_prime);

// Non-Gini measures: theta_hat - bias.  Gini: n'/(n'-2) (G_hat - a), where a is
// the variance part of the Gini bias.
double corrected_value(const MeasureSpec& spec, const ThetaDecomposition& estimate,
                       const VariancePieces& pieces, std::size_t n_prime);

BiasReport make_bias_report(const MeasureSpec& spec, const ThetaDecomposition& estimate,
                            const VariancePieces& pieces, std::size_t n_prime);

struct BiasOptions {
  VarianceOptions variance;
  // Clamp corrected values to the measure's support ([0, 1] for Gini and
  // Atkinson, [0, inf) otherwise).
  bool clamp_to_support = false;
};

BiasReport bias_estimate(const WeightedSample& sample, const DesignFrame& frame,
                         const MeasureSpec& spec, const BiasOptions& options = {});

// bias_estimate followed by the optional clamp.
BiasReport corrected_estimate(const WeightedSample& sample, const DesignFrame& frame,
                              const MeasureSpec& spec, const BiasOptions& options = {});

}  // namespace ineq
