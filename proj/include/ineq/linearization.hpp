#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ineq/sample.hpp"

namespace ineq {

enum class LinearizationKind { kAnalytic, kNumeric };

// Linearized variable z_k for every observation of a sample, in sample order.
struct LinearizedSample {
  std::vector<double> z;
  std::optional<MeasureSpec> measure;
  LinearizationKind kind = LinearizationKind::kAnalytic;
};

// An estimator of gamma seen as a function of the normalised weights w~ of a
// fixed sample.  It is evaluated at perturbed weights that no longer sum to one
// and must not renormalise them.
using WeightFunctional = std::function<double(std::span<const double> normalized_weights)>;

// Weighted-mean functional sum_k w~_k g(y_k) for the measure, or the Gini
// functional sum_k w~_k y_k (C_k - w~_k / 2) with C_k the cumulative w~ in
// income order (ties by input order).
WeightFunctional gamma_functional(const WeightedSample& sample, const MeasureSpec& spec);

// z_k = g(y_k) for the mean-type measures; numeric derivative for Gini.
LinearizedSample linearize_gamma(const WeightedSample& sample, const MeasureSpec& spec);

// Central finite difference of the functional with respect to each w~_k,
// step 1e-6 * max(1, w~_k).
LinearizedSample linearize_numeric(const WeightedSample& sample, const WeightFunctional& functional);

}  // namespace ineq
