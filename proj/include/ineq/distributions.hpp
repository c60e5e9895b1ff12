#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ineq/random.hpp"
#include "ineq/sample.hpp"

namespace ineq {

enum class ModelFamily { kLogNormal, kGb2, kDagum, kSinghMaddala, kPareto };

// Parametric income model.  Parameters by family:
//   LogNormal (mu, sigma), GB2 (a, b, p, q), Dagum (a, b, p),
//   Singh-Maddala (a, b, q), Pareto (shape, scale).
class PopulationModel {
 public:
  static PopulationModel lognormal(double mu, double sigma);
  static PopulationModel gb2(double a, double b, double p, double q);
  static PopulationModel dagum(double a, double b, double p);
  static PopulationModel singh_maddala(double a, double b, double q);
  static PopulationModel pareto(double shape, double scale);
  static PopulationModel make(ModelFamily family, std::vector<double> params);

  ModelFamily family() const noexcept { return family_; }
  const std::vector<double>& params() const noexcept { return params_; }
  std::string name() const;

  double log_density(double y) const;
  double cdf(double y) const;
  double quantile(double p) const;
  double draw(Rng& rng) const;

 private:
  PopulationModel(ModelFamily family, std::vector<double> params);

  ModelFamily family_;
  std::vector<double> params_;
};

ModelFamily parse_model_family(std::string_view text);
std::string model_family_name(ModelFamily family);
std::size_t parameter_count(ModelFamily family);

struct IncomeModelFit {
  PopulationModel model;
  // Weighted pseudo log-likelihood with weights normalised to sum to n'.
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  std::size_t n = 0;
};

// Maximises sum_i w~_i log f(y_i) (LogNormal and Pareto in closed form, the
// Beta-type families by multi-start Nelder-Mead on log parameters).
IncomeModelFit fit_income_model(const WeightedSample& sample, ModelFamily family);

enum class UnitFamily { kBeta, kSimplex, kLLogistic };

std::string unit_family_name(UnitFamily family);

// Two-parameter laws on (0, 1): Beta (a, b); Simplex (mean, dispersion sigma^2);
// L-Logistic (median m, shape b) with F(y) = 1 / (1 + (m (1 - y) / ((1 - m) y))^b).
double unit_log_density(UnitFamily family, double p1, double p2, double y);

struct EstimatorDistributionFit {
  UnitFamily family = UnitFamily::kBeta;
  double param1 = 0.0;
  double param2 = 0.0;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  std::size_t n = 0;
};

// Maximum-likelihood fit.  Values must lie strictly inside (0, 1) unless
// shrink_boundary is set, in which case x <- (x (n - 1) + 1/2) / n first.
EstimatorDistributionFit fit_estimator_distribution(std::span<const double> values,
                                                    UnitFamily family, bool shrink_boundary = false);

}  // namespace ineq
