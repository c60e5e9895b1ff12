#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ineq/bias.hpp"
#include "ineq/design.hpp"
#include "ineq/sample.hpp"

namespace ineq {

// Raking targets: category variable -> category -> population total.
struct CalibrationSpec {
  std::map<std::string, std::map<std::string, double>> margins;
  double tolerance = 1e-6;  // relative gap
  std::size_t max_iterations = 50;

  // Targets positive, variables present in the sample, and every observed
  // category listed.  Throws InputError.
  void validate(const WeightedSample& sample) const;
};

// Largest relative gap |total - target| / target over all margin cells.
double worst_margin_gap(std::span<const double> weights, const WeightedSample& sample,
                        const CalibrationSpec& spec);

// Iterative proportional fitting.  Throws CalibrationError with the worst gap
// when the margins are not met within max_iterations.
std::vector<double> calibrate(std::span<const double> weights, const WeightedSample& sample,
                              const CalibrationSpec& spec);

struct ReplicateWeights {
  std::vector<std::vector<double>> weights;             // B x n, empty row for failed replicates
  std::vector<std::vector<std::uint32_t>> multiplicity;  // B x n, household draw count per person
  std::vector<std::string> macro_strata;                // per observation
  std::vector<std::optional<std::string>> failure;      // per replicate
  std::uint64_t seed = 0;

  std::size_t replicates() const noexcept { return weights.size(); }
  bool ok(std::size_t b) const { return !failure[b].has_value(); }
};

struct BootstrapOptions {
  std::size_t replicates = 500;
  std::uint64_t seed = 1;
  // Category column holding macro-strata; one macro-stratum when absent.
  std::optional<std::string> macro_strata;
  std::optional<CalibrationSpec> calibration;
  // Redraws allowed when a margin category comes out empty.
  std::size_t max_attempts = 10;
};

inline constexpr std::size_t kMinReplicates = 50;

// Households are drawn with replacement within each macro-stratum (m_h draws
// from m_h sample households); persons inherit the household multiplicity and
// the replicate weight is the design weight times the multiplicity, then
// calibrated when a CalibrationSpec is given.  Replicate b uses stream (seed, b + 1).
ReplicateWeights bootstrap_resample(const WeightedSample& sample, const BootstrapOptions& options);

// The replicate as a sample: every household draw becomes a separate copy
// (ids suffixed "#2", "#3", ...) carrying weight replicate_weight / multiplicity.
WeightedSample replicate_sample(const WeightedSample& sample, const ReplicateWeights& reps,
                                std::size_t b);

struct BootstrapResult {
  double point_estimate = 0.0;
  double variance = 0.0;
  double sd = 0.0;
  double cv = 0.0;  // sd / |point estimate|
  std::vector<double> replicate_estimates;  // successful replicates, in order
  std::vector<std::size_t> replicate_index;
  std::vector<std::pair<std::size_t, std::string>> failures;
};

using SampleStatistic = std::function<double(const WeightedSample&)>;

// Evaluates the statistic on the full sample and on every replicate sample.
// Failed replicates are dropped and reported; more than max_failure_rate of B
// failing raises RunQualityError.
BootstrapResult bootstrap_statistic(const WeightedSample& sample, const ReplicateWeights& reps,
                                    const SampleStatistic& statistic,
                                    double max_failure_rate = 0.05);

// Measure estimate (bias-corrected when requested) on each replicate.  The
// frame supplies M_h; replicate frames are rebuilt from the replicate samples.
BootstrapResult bootstrap_variance(const WeightedSample& sample, const DesignFrame& frame,
                                   const MeasureSpec& spec, const ReplicateWeights& reps,
                                   bool corrected, const BiasOptions& options = {});

}  // namespace ineq
