#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ineq/bias.hpp"
#include "ineq/distributions.hpp"
#include "ineq/random.hpp"
#include "ineq/sample.hpp"

namespace ineq {

IncomePopulation generate_population(const PopulationModel& model, std::size_t size,
                                     std::uint64_t seed);

// Pareto(2, min income): the default reference law for the probability weights.
PopulationModel default_reference_model(const IncomePopulation& population);

// p_i = 10 - 9 j / (s - 1), where j counts the cut points F^-1(k / s),
// k = 1..s-1, lying strictly below y_i.  So p = 10 at or below F^-1(1/s) and
// p = 1 above F^-1((s-1)/s).
std::vector<double> assign_probability_weights(const IncomePopulation& population, std::size_t bands,
                                               const PopulationModel& reference);

// pi_i = (n - 1)/(N - 1) + q_i (N - n)/(N - 1), q = p / sum p.
std::vector<double> midzuno_inclusion_probabilities(std::span<const double> p, std::size_t n);

// Unit indices: the first drawn with probability q_i, the rest by SRSWOR.
std::vector<std::size_t> midzuno_draw(std::span<const double> p, std::size_t n, Rng& rng);

// Midzuno sample with weights 1/pi_i.  Every unit is its own PSU in a single
// NSR stratum, so design_variance applies the with-replacement approximation.
WeightedSample midzuno_sample(const IncomePopulation& population, std::span<const double> p,
                              std::size_t n, Rng& rng);
WeightedSample midzuno_sample(const IncomePopulation& population, std::span<const double> p,
                              std::size_t n, std::uint64_t seed);

// SRSWOR with weights N/n in one SR stratum of N households.
WeightedSample srs_sample(const IncomePopulation& population, std::size_t n, Rng& rng);

struct SyntheticFrameOptions {
  std::size_t strata = 10;
  std::size_t sr_strata = 2;
  std::size_t psus_per_stratum = 5;
  std::size_t domains = 2;
  std::size_t min_persons = 1;
  std::size_t max_persons = 4;
};

struct SyntheticHousehold {
  double income = 0.0;
  std::size_t persons = 1;
  std::size_t stratum = 0;
  std::size_t psu = 0;
};

// Households with a shared (equivalised) income, grouped in strata and PSUs.
// Stratum h belongs to domain h mod domains; the first sr_strata strata are SR.
class SyntheticPopulation {
 public:
  SyntheticPopulation(std::vector<SyntheticHousehold> households, SyntheticFrameOptions options);

  const std::vector<SyntheticHousehold>& households() const noexcept { return households_; }
  const SyntheticFrameOptions& options() const noexcept { return options_; }
  bool self_representing(std::size_t stratum) const noexcept { return stratum < options_.sr_strata; }
  std::size_t domain_of(std::size_t stratum) const noexcept { return stratum % options_.domains; }

  std::string stratum_label(std::size_t stratum) const;
  std::string domain_label(std::size_t domain) const;
  // M_h keyed by stratum label.
  std::map<std::string, double> stratum_households() const;
  // Person-level incomes, optionally restricted to one domain.
  IncomePopulation persons(std::optional<std::size_t> domain = std::nullopt) const;
  std::size_t person_count() const;

 private:
  std::vector<SyntheticHousehold> households_;
  SyntheticFrameOptions options_;
};

SyntheticPopulation build_synthetic_population(const PopulationModel& model, std::size_t households,
                                               const SyntheticFrameOptions& options,
                                               std::uint64_t seed);

struct TwoStageOptions {
  double rate = 0.1;
  // PSUs drawn per NSR stratum; default max(2, round(rate D_h)) capped at D_h.
  std::optional<std::size_t> psus_sampled;
};

struct TwoStageDraw {
  WeightedSample sample;
  std::vector<std::string> warnings;
};

// SR strata: systematic household sample at the rate.  NSR strata: SRSWOR of
// d_h PSUs, then a systematic sample at rate D_h / d_h (capped at 1) inside
// each.  Weights are inverse inclusion probabilities; the sample carries a
// "domain" category column.
TwoStageDraw two_stage_sample(const SyntheticPopulation& population, const TwoStageOptions& options,
                              Rng& rng);
TwoStageDraw two_stage_sample(const SyntheticPopulation& population, const TwoStageOptions& options,
                              std::uint64_t seed);

struct RelativeErrorSummary {
  std::vector<double> arb;   // per domain, NaN when excluded
  std::vector<double> aare;  // per domain, NaN when excluded
  double mean_arb = 0.0;
  double mean_aare = 0.0;
  std::vector<std::string> warnings;
};

// estimates[d][r] for domain d and replicate r; domains with zero truth are excluded.
RelativeErrorSummary arb_aare(const std::vector<std::vector<double>>& estimates,
                              std::span<const double> truths);

struct Moments {
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

// Moment coefficients m3 / m2^1.5 and m4 / m2^2 - 3 with 1/n central moments.
Moments empirical_moments(std::span<const double> values);

enum class SamplerKind { kSrs, kMidzuno, kTwoStage };

std::string sampler_name(SamplerKind kind);
SamplerKind parse_sampler(std::string_view text);

struct ScenarioConfig {
  PopulationModel model = PopulationModel::lognormal(9.64, 0.43);
  // Units for SRS and Midzuno, households for the two-stage frame.
  std::size_t population_size = 10000;
  SamplerKind sampler = SamplerKind::kSrs;
  std::size_t sample_size = 30;
  double rate = 0.1;
  std::optional<std::size_t> psus_sampled;
  SyntheticFrameOptions frame;
  std::size_t probability_bands = 100;
  std::optional<PopulationModel> reference;
  std::size_t replications = 1000;
  std::uint64_t seed = 1;
  bool treat_tails = false;
  std::vector<MeasureSpec> measures{MeasureSpec::gini(), MeasureSpec::ge(0.0), MeasureSpec::ge(1.0),
                                    MeasureSpec::atkinson(0.5), MeasureSpec::atkinson(1.0)};
  bool fit_distributions = false;
  bool shrink_boundary = false;
  double max_failure_rate = 0.05;

  // Throws InputError on inconsistent settings.
  void validate() const;
};

struct ReplicateRecord {
  std::size_t replicate = 0;
  std::size_t domain = 0;
  std::size_t measure = 0;
  BiasReport report;
};

struct MetricRow {
  std::string domain;  // "all" for the domain average
  std::string measure;
  double truth = 0.0;
  double arb_uncorrected = 0.0;
  double aare_uncorrected = 0.0;
  double arb_corrected = 0.0;
  double aare_corrected = 0.0;
  std::size_t replicates = 0;
};

struct MomentRow {
  std::string domain;
  std::string measure;
  std::string estimator;  // "uncorrected" or "corrected"
  Moments moments;
};

struct FitRow {
  std::string domain;
  std::string measure;  // RE(1) and RE(2) appear as "re:1" and "re:2"
  EstimatorDistributionFit fit;
};

struct ScenarioReport {
  std::vector<std::string> domains;
  std::vector<std::string> measures;
  std::vector<std::vector<double>> truths;  // [domain][measure]
  std::vector<ReplicateRecord> records;     // successful replicates only
  std::vector<std::pair<std::size_t, std::string>> failures;
  std::vector<MetricRow> metrics;
  std::vector<MomentRow> moments;
  std::vector<FitRow> fits;
  std::vector<std::string> warnings;
  std::size_t replications = 0;

  const MetricRow& metric(std::string_view domain, std::string_view measure) const;
};

// generate -> sample -> (treat) -> estimate and correct -> metrics.  Throws
// RunQualityError when more than max_failure_rate of the replicates fail.
ScenarioReport run_scenario(const ScenarioConfig& config);

}  // namespace ineq
