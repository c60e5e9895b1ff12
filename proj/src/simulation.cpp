#include "ineq/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>

#include "ineq/design.hpp"
#include "ineq/errors.hpp"
#include "ineq/measures.hpp"
#include "ineq/numeric.hpp"
#include "ineq/tails.hpp"

namespace ineq {

namespace {

// First n entries of a partial Fisher-Yates shuffle of 0..N-1.
std::vector<std::size_t> draw_without_replacement(std::size_t population, std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    boost::random::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  return idx;
}

// Positions floor(u + i k) < size with k = 1 / rate and u ~ U[0, k).
std::vector<std::size_t> systematic_positions(std::size_t size, double rate, Rng& rng) {
  std::vector<std::size_t> out;
  if (rate >= 1.0) {
    out.resize(size);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  const double k = 1.0 / rate;
  boost::random::uniform_real_distribution<double> start(0.0, k);
  const double u = start(rng);
  for (std::size_t i = 0;; ++i) {
    const double t = u + static_cast<double>(i) * k;
    if (t >= static_cast<double>(size)) break;
    out.push_back(static_cast<std::size_t>(t));
  }
  return out;
}

WeightedSample domain_subset(const WeightedSample& sample, const std::string& domain) {
  if (!sample.has_category("domain")) return sample;
  const auto& labels = sample.category("domain");
  std::vector<WeightedObservation> obs;
  std::vector<std::string> kept;
  for (std::size_t k = 0; k < sample.size(); ++k) {
    if (labels[k] == domain) {
      obs.push_back(sample[k]);
      kept.push_back(labels[k]);
    }
  }
  return WeightedSample(std::move(obs), {{"domain", std::move(kept)}});
}

bool unit_support(const MeasureSpec& spec) {
  return spec.family() == MeasureFamily::kGini || spec.family() == MeasureFamily::kAtkinson;
}

}  // namespace

IncomePopulation generate_population(const PopulationModel& model, std::size_t size,
                                     std::uint64_t seed) {
  if (size < 2) throw DomainError("population size must be at least 2");
  auto rng = make_stream(seed, 0, 0);
  std::vector<double> y(size);
  for (auto& v : y) v = model.draw(rng);
  return IncomePopulation(std::move(y));
}

PopulationModel default_reference_model(const IncomePopulation& population) {
  return PopulationModel::pareto(2.0, population.min());
}

std::vector<double> assign_probability_weights(const IncomePopulation& population, std::size_t bands,
                                               const PopulationModel& reference) {
  if (bands < 2) throw DomainError("probability weights need at least 2 bands");
  std::vector<double> cuts(bands - 1);
  for (std::size_t k = 1; k < bands; ++k) {
    cuts[k - 1] = reference.quantile(static_cast<double>(k) / static_cast<double>(bands));
  }
  const double step = 9.0 / static_cast<double>(bands - 1);
  std::vector<double> p;
  p.reserve(population.size());
  for (double y : population.incomes()) {
    const auto j = static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), y) - cuts.begin());
    p.push_back(10.0 - step * static_cast<double>(j));
  }
  return p;
}

std::vector<double> midzuno_inclusion_probabilities(std::span<const double> p, std::size_t n) {
  const std::size_t N = p.size();
  if (n < 1 || n >= N) throw DomainError(fmt::format("Midzuno sampling needs 1 <= n < N, got n = {}, N = {}", n, N));
  const double total = compensated_sum(p);
  for (double v : p) {
    if (!(v > 0.0)) throw DomainError("Midzuno size measures must be positive");
  }
  const double a = static_cast<double>(n - 1) / static_cast<double>(N - 1);
  const double b = static_cast<double>(N - n) / static_cast<double>(N - 1);
  std::vector<double> pi(N);
  for (std::size_t i = 0; i < N; ++i) pi[i] = a + p[i] / total * b;
  return pi;
}

std::vector<std::size_t> midzuno_draw(std::span<const double> p, std::size_t n, Rng& rng) {
  const std::size_t N = p.size();
  midzuno_inclusion_probabilities(p, n);  // validates
  const double total = compensated_sum(p);
  boost::random::uniform_01<double> u01;
  const double u = u01(rng) * total;
  CompensatedSum cum;
  std::size_t first = N - 1;
  for (std::size_t i = 0; i < N; ++i) {
    cum += p[i];
    if (u < cum.value()) {
      first = i;
      break;
    }
  }
  std::vector<std::size_t> out{first};
  if (n > 1) {
    auto rest = draw_without_replacement(N - 1, n - 1, rng);
    for (auto r : rest) out.push_back(r >= first ? r + 1 : r);
  }
  return out;
}

WeightedSample midzuno_sample(const IncomePopulation& population, std::span<const double> p,
                              std::size_t n, Rng& rng) {
  if (p.size() != population.size()) throw DomainError("size measures not aligned with the population");
  const auto pi = midzuno_inclusion_probabilities(p, n);
  const auto units = midzuno_draw(p, n, rng);
  std::vector<WeightedObservation> obs;
  obs.reserve(n);
  for (std::size_t i : units) {
    WeightedObservation o;
    o.income = population.incomes()[i];
    o.weight = 1.0 / pi[i];
    o.household_id = fmt::format("U{}", i);
    o.person_id = o.household_id;
    o.psu_id = o.household_id;
    o.stratum_id = "1";
    o.sr_flag = false;
    obs.push_back(std::move(o));
  }
  return WeightedSample(std::move(obs));
}

WeightedSample midzuno_sample(const IncomePopulation& population, std::span<const double> p,
                              std::size_t n, std::uint64_t seed) {
  auto rng = make_stream(seed, 0, 0);
  return midzuno_sample(population, p, n, rng);
}

WeightedSample srs_sample(const IncomePopulation& population, std::size_t n, Rng& rng) {
  const std::size_t N = population.size();
  if (n < 2 || n > N) throw DomainError(fmt::format("SRS needs 2 <= n <= N, got n = {}, N = {}", n, N));
  const auto units = draw_without_replacement(N, n, rng);
  const double w = static_cast<double>(N) / static_cast<double>(n);
  std::vector<WeightedObservation> obs;
  obs.reserve(n);
  for (std::size_t i : units) {
    WeightedObservation o;
    o.income = population.incomes()[i];
    o.weight = w;
    o.household_id = fmt::format("U{}", i);
    o.person_id = o.household_id;
    o.psu_id = o.household_id;
    o.stratum_id = "1";
    o.sr_flag = true;
    obs.push_back(std::move(o));
  }
  return WeightedSample(std::move(obs));
}

SyntheticPopulation::SyntheticPopulation(std::vector<SyntheticHousehold> households,
                                         SyntheticFrameOptions options)
    : households_(std::move(households)), options_(options) {
  if (options_.strata == 0 || options_.psus_per_stratum == 0 || options_.domains == 0) {
    throw InputError("synthetic frame needs at least one stratum, PSU and domain");
  }
  if (options_.sr_strata > options_.strata) throw InputError("more SR strata than strata");
  if (options_.domains > options_.strata) throw InputError("more domains than strata");
  if (options_.min_persons == 0 || options_.min_persons > options_.max_persons) {
    throw InputError("invalid household size range");
  }
}

std::string SyntheticPopulation::stratum_label(std::size_t stratum) const {
  return fmt::format("S{:02}", stratum + 1);
}

std::string SyntheticPopulation::domain_label(std::size_t domain) const {
  return fmt::format("D{}", domain + 1);
}

std::map<std::string, double> SyntheticPopulation::stratum_households() const {
  std::map<std::string, double> out;
  for (const auto& h : households_) out[stratum_label(h.stratum)] += 1.0;
  return out;
}

IncomePopulation SyntheticPopulation::persons(std::optional<std::size_t> domain) const {
  std::vector<double> y;
  for (const auto& h : households_) {
    if (domain && domain_of(h.stratum) != *domain) continue;
    y.insert(y.end(), h.persons, h.income);
  }
  return IncomePopulation(std::move(y));
}

std::size_t SyntheticPopulation::person_count() const {
  std::size_t n = 0;
  for (const auto& h : households_) n += h.persons;
  return n;
}

SyntheticPopulation build_synthetic_population(const PopulationModel& model, std::size_t households,
                                               const SyntheticFrameOptions& options,
                                               std::uint64_t seed) {
  if (households < options.strata * options.psus_per_stratum) {
    throw InputError(fmt::format("{} households cannot fill {} strata of {} PSUs", households,
                                 options.strata, options.psus_per_stratum));
  }
  auto rng = make_stream(seed, 0, 0);
  boost::random::uniform_int_distribution<std::size_t> size(options.min_persons, options.max_persons);
  std::vector<SyntheticHousehold> out(households);
  for (std::size_t i = 0; i < households; ++i) {
    auto& h = out[i];
    h.income = model.draw(rng);
    h.persons = size(rng);
    h.stratum = i % options.strata;
    h.psu = (i / options.strata) % options.psus_per_stratum;
  }
  return SyntheticPopulation(std::move(out), options);
}

TwoStageDraw two_stage_sample(const SyntheticPopulation& population, const TwoStageOptions& options,
                              Rng& rng) {
  if (!(options.rate > 0.0 && options.rate <= 1.0)) {
    throw DomainError(fmt::format("sampling rate must be in (0, 1], got {}", options.rate));
  }
  const auto& opt = population.options();
  // households[stratum][psu] -> household indices
  std::vector<std::vector<std::vector<std::size_t>>> units(
      opt.strata, std::vector<std::vector<std::size_t>>(opt.psus_per_stratum));
  for (std::size_t i = 0; i < population.households().size(); ++i) {
    const auto& h = population.households()[i];
    units[h.stratum][h.psu].push_back(i);
  }

  TwoStageDraw draw;
  std::vector<WeightedObservation> obs;
  std::vector<std::string> domain;
  const auto add = [&](std::size_t hh, double weight) {
    const auto& h = population.households()[hh];
    for (std::size_t p = 0; p < h.persons; ++p) {
      WeightedObservation o;
      o.income = h.income;
      o.weight = weight;
      o.household_id = fmt::format("H{:06}", hh + 1);
      o.person_id = fmt::format("{}-{}", o.household_id, p + 1);
      o.stratum_id = population.stratum_label(h.stratum);
      o.psu_id = fmt::format("P{:02}", h.psu + 1);
      o.sr_flag = population.self_representing(h.stratum);
      obs.push_back(std::move(o));
      domain.push_back(population.domain_label(population.domain_of(h.stratum)));
    }
  };

  for (std::size_t s = 0; s < opt.strata; ++s) {
    std::size_t taken = 0;
    if (population.self_representing(s)) {
      std::vector<std::size_t> all;
      for (const auto& psu : units[s]) all.insert(all.end(), psu.begin(), psu.end());
      std::sort(all.begin(), all.end());
      for (std::size_t pos : systematic_positions(all.size(), options.rate, rng)) {
        add(all[pos], 1.0 / options.rate);
        ++taken;
      }
    } else {
      const std::size_t D = opt.psus_per_stratum;
      std::size_t d = options.psus_sampled.value_or(std::max<std::size_t>(
          2, static_cast<std::size_t>(std::llround(options.rate * static_cast<double>(D)))));
      d = std::min(d, D);
      const double within = std::min(1.0, options.rate * static_cast<double>(D) / static_cast<double>(d));
      auto chosen = draw_without_replacement(D, d, rng);
      std::sort(chosen.begin(), chosen.end());
      const double weight = static_cast<double>(D) / static_cast<double>(d) / within;
      for (std::size_t psu : chosen) {
        const auto& members = units[s][psu];
        for (std::size_t pos : systematic_positions(members.size(), within, rng)) {
          add(members[pos], weight);
          ++taken;
        }
      }
    }
    if (taken == 0) {
      draw.warnings.push_back(fmt::format("stratum {}: no household selected at rate {}; skipped",
                                          population.stratum_label(s), options.rate));
    }
  }
  draw.sample = WeightedSample(std::move(obs), {{"domain", std::move(domain)}});
  return draw;
}

TwoStageDraw two_stage_sample(const SyntheticPopulation& population, const TwoStageOptions& options,
                              std::uint64_t seed) {
  auto rng = make_stream(seed, 0, 0);
  return two_stage_sample(population, options, rng);
}

RelativeErrorSummary arb_aare(const std::vector<std::vector<double>>& estimates,
                              std::span<const double> truths) {
  if (estimates.size() != truths.size()) throw DomainError("arb_aare: one truth per domain expected");
  RelativeErrorSummary out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CompensatedSum arb_sum;
  CompensatedSum aare_sum;
  std::size_t used = 0;
  for (std::size_t d = 0; d < truths.size(); ++d) {
    if (truths[d] == 0.0 || estimates[d].empty()) {
      out.arb.push_back(nan);
      out.aare.push_back(nan);
      out.warnings.push_back(fmt::format("domain {} excluded: {}", d,
                                         truths[d] == 0.0 ? "zero true value" : "no estimates"));
      continue;
    }
    CompensatedSum rb;
    CompensatedSum are;
    for (double e : estimates[d]) {
      const double rel = e / truths[d] - 1.0;
      rb += rel;
      are += std::abs(rel);
    }
    const double r = static_cast<double>(estimates[d].size());
    out.arb.push_back(rb.value() / r);
    out.aare.push_back(are.value() / r);
    arb_sum += out.arb.back();
    aare_sum += out.aare.back();
    ++used;
  }
  out.mean_arb = used ? arb_sum.value() / static_cast<double>(used) : nan;
  out.mean_aare = used ? aare_sum.value() / static_cast<double>(used) : nan;
  return out;
}

Moments empirical_moments(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 4) throw InsufficientSampleError(fmt::format("moments need n >= 4, got {}", n));
  const double mean = compensated_sum(values) / static_cast<double>(n);
  CompensatedSum m2;
  CompensatedSum m3;
  CompensatedSum m4;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  const double nd = static_cast<double>(n);
  const double s2 = m2.value() / nd;
  if (!(s2 > 0.0)) throw DegenerateError("moments undefined: zero variance");
  return Moments{m3.value() / nd / std::pow(s2, 1.5), m4.value() / nd / (s2 * s2) - 3.0};
}

std::string sampler_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kSrs:
      return "srs";
    case SamplerKind::kMidzuno:
      return "midzuno";
    case SamplerKind::kTwoStage:
      return "two-stage";
  }
  return "?";
}

SamplerKind parse_sampler(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  std::erase_if(t, [](char c) { return c == '-' || c == '_'; });
  if (t == "srs") return SamplerKind::kSrs;
  if (t == "midzuno") return SamplerKind::kMidzuno;
  if (t == "twostage") return SamplerKind::kTwoStage;
  throw InputError(fmt::format("unknown sampler '{}'", text));
}

void ScenarioConfig::validate() const {
  if (replications < 1) throw InputError("replications must be at least 1");
  if (measures.empty()) throw InputError("no measures requested");
  if (!(max_failure_rate >= 0.0 && max_failure_rate < 1.0)) throw InputError("max_failure_rate must be in [0, 1)");
  if (sampler == SamplerKind::kTwoStage) {
    if (!(rate > 0.0 && rate <= 1.0)) throw InputError(fmt::format("rate must be in (0, 1], got {}", rate));
    if (population_size < frame.strata * frame.psus_per_stratum) {
      throw InputError("population too small for the synthetic frame");
    }
  } else {
    if (sample_size < 2 || sample_size > population_size) {
      throw InputError(fmt::format("need 2 <= n <= N, got n = {}, N = {}", sample_size, population_size));
    }
    if (sampler == SamplerKind::kMidzuno && sample_size >= population_size) {
      throw InputError("Midzuno sampling needs n < N");
    }
    if (sampler == SamplerKind::kMidzuno && probability_bands < 2) {
      throw InputError("probability_bands must be at least 2");
    }
  }
}

const MetricRow& ScenarioReport::metric(std::string_view domain, std::string_view measure) const {
  for (const auto& m : metrics) {
    if (m.domain == domain && m.measure == measure) return m;
  }
  throw InputError(fmt::format("no metric row for domain {} and measure {}", domain, measure));
}

ScenarioReport run_scenario(const ScenarioConfig& config) {
  config.validate();
  ScenarioReport report;
  report.replications = config.replications;
  for (const auto& m : config.measures) report.measures.push_back(m.label());

  // Population and per-domain truths.
  std::optional<SyntheticPopulation> frame_pop;
  std::optional<IncomePopulation> unit_pop;
  std::vector<double> size_measures;
  std::map<std::string, double> strata_sizes;
  std::vector<IncomePopulation> domain_pops;
  if (config.sampler == SamplerKind::kTwoStage) {
    frame_pop = build_synthetic_population(config.model, config.population_size, config.frame, config.seed);
    strata_sizes = frame_pop->stratum_households();
    for (std::size_t d = 0; d < config.frame.domains; ++d) {
      report.domains.push_back(frame_pop->domain_label(d));
      domain_pops.push_back(frame_pop->persons(d));
    }
  } else {
    unit_pop = generate_population(config.model, config.population_size, config.seed);
    report.domains.push_back("all");
    domain_pops.push_back(*unit_pop);
    if (config.sampler == SamplerKind::kMidzuno) {
      const auto reference = config.reference.value_or(default_reference_model(*unit_pop));
      size_measures = assign_probability_weights(*unit_pop, config.probability_bands, reference);
    } else {
      strata_sizes["1"] = static_cast<double>(config.population_size);
    }
  }
  const std::size_t n_dom = report.domains.size();
  const std::size_t n_meas = config.measures.size();
  report.truths.assign(n_dom, std::vector<double>(n_meas, 0.0));
  for (std::size_t d = 0; d < n_dom; ++d) {
    for (std::size_t m = 0; m < n_meas; ++m) {
      report.truths[d][m] = population_value(domain_pops[d], config.measures[m]).theta;
    }
  }

  // Replicates.
  for (std::size_t r = 0; r < config.replications; ++r) {
    auto rng = make_stream(config.seed, r + 1);
    std::vector<ReplicateRecord> rows;
    try {
      WeightedSample sample;
      switch (config.sampler) {
        case SamplerKind::kSrs:
          sample = srs_sample(*unit_pop, config.sample_size, rng);
          break;
        case SamplerKind::kMidzuno:
          sample = midzuno_sample(*unit_pop, size_measures, config.sample_size, rng);
          break;
        case SamplerKind::kTwoStage: {
          auto draw = two_stage_sample(*frame_pop, TwoStageOptions{config.rate, config.psus_sampled}, rng);
          for (auto& w : draw.warnings) report.warnings.push_back(fmt::format("replicate {}: {}", r + 1, w));
          sample = std::move(draw.sample);
          break;
        }
      }
      if (config.treat_tails) {
        TailTreatmentOptions topt;
        if (sample.has_category("domain")) topt.domain_column = "domain";
        auto treated = treat_sample(sample, topt);
        sample = std::move(treated.sample);
      }
      for (std::size_t d = 0; d < n_dom; ++d) {
        const auto sub = domain_subset(sample, report.domains[d]);
        const auto frame = DesignFrame::from_sample(sub, strata_sizes);
        for (std::size_t m = 0; m < n_meas; ++m) {
          rows.push_back(ReplicateRecord{r + 1, d, m, corrected_estimate(sub, frame, config.measures[m])});
        }
      }
    } catch (const Error& e) {
      report.failures.emplace_back(r + 1, e.what());
      continue;
    }
    report.records.insert(report.records.end(), rows.begin(), rows.end());
  }
  const double failure_rate =
      static_cast<double>(report.failures.size()) / static_cast<double>(config.replications);
  if (failure_rate > config.max_failure_rate) {
    throw RunQualityError(fmt::format("{} of {} replicates failed (first: {})", report.failures.size(),
                                      config.replications, report.failures.front().second));
  }

  // Metrics.
  // est[m][d] -> replicate series
  std::vector<std::vector<std::vector<double>>> raw(n_meas, std::vector<std::vector<double>>(n_dom));
  auto corr = raw;
  for (const auto& rec : report.records) {
    raw[rec.measure][rec.domain].push_back(rec.report.theta_hat);
    corr[rec.measure][rec.domain].push_back(rec.report.theta_corrected);
  }
  for (std::size_t m = 0; m < n_meas; ++m) {
    std::vector<double> truth(n_dom);
    for (std::size_t d = 0; d < n_dom; ++d) truth[d] = report.truths[d][m];
    const auto a = arb_aare(raw[m], truth);
    const auto b = arb_aare(corr[m], truth);
    for (const auto& w : a.warnings) report.warnings.push_back(report.measures[m] + ": " + w);
    for (std::size_t d = 0; d < n_dom; ++d) {
      report.metrics.push_back(MetricRow{report.domains[d], report.measures[m], truth[d], a.arb[d],
                                         a.aare[d], b.arb[d], b.aare[d], raw[m][d].size()});
    }
    if (n_dom > 1) {
      const double mean_truth = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(n_dom);
      report.metrics.push_back(MetricRow{"all", report.measures[m], mean_truth, a.mean_arb, a.mean_aare,
                                         b.mean_arb, b.mean_aare, raw[m][0].size()});
    }
  }

  // Moments of the estimator distributions.
  const bool enough = report.replications - report.failures.size() >= 4;
  if (!enough) report.warnings.push_back("moments skipped: fewer than 4 successful replicates");
  for (std::size_t m = 0; enough && m < n_meas; ++m) {
    for (std::size_t d = 0; d < n_dom; ++d) {
      for (const auto& [name, series] : {std::pair{"uncorrected", &raw[m][d]}, std::pair{"corrected", &corr[m][d]}}) {
        try {
          report.moments.push_back(MomentRow{report.domains[d], report.measures[m], name, empirical_moments(*series)});
        } catch (const Error& e) {
          report.warnings.push_back(fmt::format("moments {} {} {}: {}", report.domains[d], report.measures[m], name, e.what()));
        }
      }
    }
  }

  // Distribution fits on the bias-corrected estimates of unit-support measures.
  if (config.fit_distributions) {
    for (std::size_t m = 0; m < n_meas; ++m) {
      const auto& spec = config.measures[m];
      std::optional<double> re_alpha;
      if (spec.family() == MeasureFamily::kGe && !spec.is_ge_zero()) {
        const double a = *spec.parameter();
        if (spec.is_ge_one()) re_alpha = 1.0;
        else if (std::abs(a - 2.0) < kSpecialParameterTolerance) re_alpha = 2.0;
      }
      if (!unit_support(spec) && !re_alpha) continue;
      const std::string label = re_alpha ? fmt::format("re:{}", *re_alpha) : report.measures[m];
      for (std::size_t d = 0; d < n_dom; ++d) {
        std::vector<double> values = corr[m][d];
        if (re_alpha) {
          for (auto& v : values) v = relative_entropy_transform(v, *re_alpha, domain_pops[d].size());
        }
        for (UnitFamily fam : {UnitFamily::kBeta, UnitFamily::kSimplex, UnitFamily::kLLogistic}) {
          try {
            report.fits.push_back(FitRow{report.domains[d], label,
                                         fit_estimator_distribution(values, fam, config.shrink_boundary)});
          } catch (const Error& e) {
            report.warnings.push_back(fmt::format("fit {} {} {}: {}", report.domains[d], label,
                                                  unit_family_name(fam), e.what()));
          }
        }
      }
    }
  }
  return report;
}

}  // namespace ineq
