#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace ineq {

struct NelderMeadOptions {
  double tolerance = 1e-8;  // relative spread of simplex values
  std::size_t max_evaluations = 20000;
  double initial_step = 0.1;
};

struct OptimizationResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

// Derivative-free minimisation.  Non-finite objective values are treated as +inf.
// After convergence the simplex is rebuilt once around the optimum to guard
// against premature collapse.
OptimizationResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                               std::vector<double> start, const NelderMeadOptions& options = {});

// Runs nelder_mead from every start and keeps the best converged result.
// Throws EstimationFailure listing each start's outcome when none converges.
OptimizationResult multi_start_minimize(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::vector<std::vector<double>>& starts, const NelderMeadOptions& options = {});

}  // namespace ineq
