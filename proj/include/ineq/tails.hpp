#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ineq/sample.hpp"

namespace ineq {

enum class Tail { kUpper, kLower };

struct TailFit {
  Tail tail = Tail::kUpper;
  double threshold = 0.0;
  double shape = 0.0;
  std::size_t k = 0;
  std::string domain;  // set by treat_sample when treating per domain
};

struct OutlierFlags {
  std::vector<bool> flags;
  double lower_fence = 0.0;
  double upper_fence = 0.0;
  std::vector<std::string> warnings;

  std::size_t count() const;
};

struct BoxplotOptions {
  double lower_level = 0.0015;
  double upper_level = 0.9985;
  std::size_t min_size = 20;
};

// Tukey g-and-h quantile function A + B (e^{gz} - 1)/g e^{h z^2 / 2}.
struct GAndH {
  double a = 0.0;
  double b = 1.0;
  double g = 0.0;
  double h = 0.0;

  double quantile(double p) const;
};

// Octile matching on the type-5 empirical quantiles: g from octile skewness,
// log B and h from a least-squares line over the 1/8, 2/8, 3/8 score grid.
GAndH fit_g_and_h(std::span<const double> values);

// Generalized boxplot.  Below min_size observations nothing is flagged and a
// warning is recorded.  Constant data throws DegenerateError.
OutlierFlags detect_outliers(std::span<const double> values, const BoxplotOptions& options = {});

inline constexpr std::size_t kDefaultMinExceedances = 10;

// PITSE: solves mean((u / X)^(a t)) = 1 / (1 + t), t = 1/2, over the values
// beyond the threshold u.  The lower tail works on z = u / y for y < u.
TailFit fit_pareto_tail(std::span<const double> values, double threshold, Tail tail,
                        std::size_t k_min = kDefaultMinExceedances);

// Hill estimator k / sum log(x / u) on the same exceedances.
double hill_estimate(std::span<const double> values, double threshold, Tail tail);

// Replaces flagged values by the fitted Pareto quantile at their rank among the
// exceedances, u (1 - (j - 1/2) / k)^(-1/shape), capped at the fence so that a
// second pass flags nothing.  Weights and labels are untouched.
WeightedSample treat_tails(const WeightedSample& sample, const OutlierFlags& flags,
                           const std::optional<TailFit>& upper, const std::optional<TailFit>& lower);

struct TailTreatmentOptions {
  BoxplotOptions boxplot;
  std::size_t k_min = kDefaultMinExceedances;
  double upper_quantile = 0.975;
  double lower_quantile = 0.025;
  // Treat each category of this column separately when set.
  std::optional<std::string> domain_column;
};

struct TailTreatmentResult {
  WeightedSample sample;
  std::vector<TailFit> fits;
  std::size_t replaced = 0;
  std::vector<std::string> warnings;
};

// detect -> threshold -> fit -> replace, per domain.  A tail with fewer than
// k_min exceedances is left as is with a warning.
TailTreatmentResult treat_sample(const WeightedSample& sample,
                                 const TailTreatmentOptions& options = {});

}  // namespace ineq
