#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ineq/sample.hpp"

namespace ineq {

// theta = factor * f(mu, gamma) for the measure's f; factor is the finite-sample
// adjustment of the survey estimator (1 for population values).
struct ThetaDecomposition {
  double mu = 0.0;
  double gamma = 0.0;
  double theta = 0.0;
  double factor = 1.0;
};

// Exact finite-population value.  Throws DegenerateError for N < 2.
ThetaDecomposition population_value(const IncomePopulation& population, const MeasureSpec& spec);

// Horvitz-Thompson plug-in estimate with the survey finite-sample factors:
// sqrt(n'/(n'-1)) for CV and n'/(n'-1) for GE(alpha != 0, 1).
ThetaDecomposition ht_estimate(const WeightedSample& sample, const MeasureSpec& spec);

// Same estimator on raw vectors; zero weights are allowed.
ThetaDecomposition ht_estimate(std::span<const double> incomes, std::span<const double> weights,
                               const MeasureSpec& spec);

// f(mu, gamma) scaled by factor.  CV requires gamma > mu^2 up to rounding.
double theta_from_components(const MeasureSpec& spec, double mu, double gamma,
                             double factor = 1.0);

// Finite-sample factor applied by the survey estimator for the given n'.
double finite_sample_factor(const MeasureSpec& spec, std::size_t n_prime);

// g(y) such that gamma is the weighted mean of g; not defined for Gini.
double gamma_integrand(const MeasureSpec& spec, double income);

// Gini gamma written in the weights without normalisation:
//   sum_i w_i y_i (C_i - w_i / 2),  C_i = cumulative weight up to i in income order.
// Dividing by (sum w)^2 gives the survey estimator of E[Y F(Y)].
double gini_gamma_unnormalized(std::span<const double> incomes, std::span<const double> weights,
                               std::span<const std::size_t> order);

// A(eps) = 1 - [eps(eps-1) GE(1-eps) + 1]^(1/(1-eps)), eps != 1.
double atkinson_from_ge(double ge_value, double epsilon);

// GE(alpha) divided by its maximum on a population of pop_size units (alpha in {1, 2}).
double relative_entropy_transform(double ge_value, double alpha, std::size_t pop_size);

}  // namespace ineq
