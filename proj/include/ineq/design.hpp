#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ineq/sample.hpp"

namespace ineq {

struct StratumInfo {
  std::string id;
  bool self_representing = false;
  // M_h: resident households in the stratum.
  double population_households = 0.0;
  // Observation indices grouped by sample household (m_h groups) and by PSU (n_h groups).
  std::vector<std::vector<std::size_t>> households;
  std::vector<std::string> psu_ids;
  std::vector<std::vector<std::size_t>> psus;

  std::size_t sample_households() const noexcept { return households.size(); }
  std::size_t psu_count() const noexcept { return psus.size(); }
};

// Stratum / PSU / household structure of a sample.
class DesignFrame {
 public:
  DesignFrame() = default;
  DesignFrame(std::vector<StratumInfo> strata, std::size_t sample_size);

  // Groups observations by stratum_id, psu_id and household_id.  M_h is taken
  // from population_households when present, otherwise estimated as the sum of
  // household weights in the stratum.
  static DesignFrame from_sample(const WeightedSample& sample,
                                 const std::map<std::string, double>& population_households = {});

  const std::vector<StratumInfo>& strata() const noexcept { return strata_; }
  std::size_t sample_size() const noexcept { return sample_size_; }
  bool has_singleton_nsr() const;

 private:
  std::vector<StratumInfo> strata_;
  std::size_t sample_size_ = 0;
};

struct VariancePieces {
  double v_mu = 0.0;
  double v_gamma = 0.0;
  double cov_mu_gamma = 0.0;
  // V(mu_hat + gamma_hat); equals v_mu + v_gamma + 2 cov.
  double v_sum = 0.0;
};

// Variance of the linear estimator sum_k w_k v_k: stratified SR term with
// finite population correction plus the ultimate-cluster NSR term,
//   sum_SR (1 - f_h) m_h / (m_h - 1) sum_i (e_hi - e_h)^2
//   + sum_NSR n_h / (n_h - 1) sum_d (t_hd - t_h)^2,
// with e_hi household and t_hd PSU weighted totals of v.  Under SRSWOR weights
// M_h / m_h the SR term is M_h (M_h - m_h) / (m_h (m_h - 1)) sum (y_hi - y_h)^2.
double variance_linear(std::span<const double> values, const WeightedSample& sample,
                       const DesignFrame& frame);

// 1/2 [V(a + b) - V(a) - V(b)].
double covariance_linear(std::span<const double> values_a, std::span<const double> values_b,
                         const WeightedSample& sample, const DesignFrame& frame);

using StratumKey = std::function<double(const StratumInfo&)>;

// Default collapsing key: weighted mean income of the stratum.
StratumKey mean_income_key(const WeightedSample& sample);

// Merges NSR strata with a single PSU into pseudo-strata of neighbours in key
// order, so that every NSR pseudo-stratum has at least two PSUs.
DesignFrame collapse_strata(const DesignFrame& frame, const StratumKey& key);

struct VarianceOptions {
  bool collapse_singletons = true;
};

// V(mu_hat), V(gamma_hat) and Cov(mu_hat, gamma_hat) of the ratio-type
// estimators sum_k w~_k y_k and sum_k w~_k z_k, using the residuals
// y_k - mu_hat and z_k - sum_i w~_i z_i as linearized variables.
VariancePieces variance_pieces(const WeightedSample& sample, const DesignFrame& frame,
                               const MeasureSpec& spec, const VarianceOptions& options = {});

// Same with an explicit linearized variable for gamma.
VariancePieces variance_pieces(const WeightedSample& sample, const DesignFrame& frame,
                               std::span<const double> z, const VarianceOptions& options = {});

}  // namespace ineq
