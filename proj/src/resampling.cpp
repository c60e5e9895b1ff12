#include "ineq/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>

#include "ineq/errors.hpp"
#include "ineq/numeric.hpp"
#include "ineq/random.hpp"

namespace ineq {

namespace {

// Category index of every observation, per margin variable.
struct MarginLayout {
  std::vector<std::vector<std::size_t>> cell;  // [variable][observation]
  std::vector<std::vector<double>> target;     // [variable][category]
  std::vector<std::vector<std::string>> names;
  std::vector<std::string> variables;
};

MarginLayout layout_margins(const WeightedSample& sample, const CalibrationSpec& spec) {
  MarginLayout m;
  for (const auto& [variable, cats] : spec.margins) {
    const auto& column = sample.category(variable);
    std::vector<std::string> names;
    std::vector<double> targets;
    for (const auto& [name, total] : cats) {
      names.push_back(name);
      targets.push_back(total);
    }
    std::vector<std::size_t> cell(column.size());
    for (std::size_t i = 0; i < column.size(); ++i) {
      const auto it = std::lower_bound(names.begin(), names.end(), column[i]);
      if (it == names.end() || *it != column[i]) {
        throw InputError(fmt::format("calibration: category '{}' of '{}' (row {}) has no target",
                                     column[i], variable, i + 1));
      }
      cell[i] = static_cast<std::size_t>(it - names.begin());
    }
    m.variables.push_back(variable);
    m.cell.push_back(std::move(cell));
    m.target.push_back(std::move(targets));
    m.names.push_back(std::move(names));
  }
  return m;
}

std::vector<double> cell_totals(std::span<const double> w, const std::vector<std::size_t>& cell,
                                std::size_t categories) {
  std::vector<CompensatedSum> acc(categories);
  for (std::size_t i = 0; i < w.size(); ++i) acc[cell[i]] += w[i];
  std::vector<double> out(categories);
  for (std::size_t c = 0; c < categories; ++c) out[c] = acc[c].value();
  return out;
}

double worst_gap(std::span<const double> w, const MarginLayout& m) {
  double worst = 0.0;
  for (std::size_t v = 0; v < m.variables.size(); ++v) {
    const auto totals = cell_totals(w, m.cell[v], m.target[v].size());
    for (std::size_t c = 0; c < totals.size(); ++c) {
      worst = std::max(worst, std::abs(totals[c] - m.target[v][c]) / m.target[v][c]);
    }
  }
  return worst;
}

// Empty margin cell in the given weights, if any.
std::optional<std::string> empty_cell(std::span<const double> w, const MarginLayout& m) {
  for (std::size_t v = 0; v < m.variables.size(); ++v) {
    const auto totals = cell_totals(w, m.cell[v], m.target[v].size());
    for (std::size_t c = 0; c < totals.size(); ++c) {
      if (!(totals[c] > 0.0)) return fmt::format("{}={}", m.variables[v], m.names[v][c]);
    }
  }
  return std::nullopt;
}

std::vector<double> rake(std::span<const double> weights, const MarginLayout& m,
                         const CalibrationSpec& spec) {
  std::vector<double> w(weights.begin(), weights.end());
  for (std::size_t it = 0; it < spec.max_iterations; ++it) {
    if (worst_gap(w, m) <= spec.tolerance) return w;
    for (std::size_t v = 0; v < m.variables.size(); ++v) {
      const auto totals = cell_totals(w, m.cell[v], m.target[v].size());
      for (std::size_t c = 0; c < totals.size(); ++c) {
        if (!(totals[c] > 0.0)) {
          throw CalibrationError(fmt::format("calibration: margin cell {}={} has zero weight",
                                             m.variables[v], m.names[v][c]),
                                 std::numeric_limits<double>::infinity());
        }
      }
      for (std::size_t i = 0; i < w.size(); ++i) {
        const std::size_t c = m.cell[v][i];
        w[i] *= m.target[v][c] / totals[c];
      }
    }
  }
  const double gap = worst_gap(w, m);
  if (gap <= spec.tolerance) return w;
  throw CalibrationError(
      fmt::format("calibration did not converge in {} iterations (worst relative gap {:.3g})",
                  spec.max_iterations, gap),
      gap);
}

struct Household {
  std::vector<std::size_t> members;
};

struct MacroStratum {
  std::string label;
  std::vector<std::size_t> households;
};

}  // namespace

void CalibrationSpec::validate(const WeightedSample& sample) const {
  if (margins.empty()) throw InputError("calibration: no margins given");
  if (!(tolerance > 0.0)) throw InputError("calibration: tolerance must be positive");
  if (max_iterations == 0) throw InputError("calibration: max_iterations must be positive");
  for (const auto& [variable, cats] : margins) {
    if (!sample.has_category(variable)) {
      throw InputError(fmt::format("calibration: sample has no column '{}'", variable));
    }
    if (cats.empty()) throw InputError(fmt::format("calibration: '{}' has no categories", variable));
    for (const auto& [name, total] : cats) {
      if (!(total > 0.0) || !std::isfinite(total)) {
        throw InputError(fmt::format("calibration: target for {}={} must be positive, got {}",
                                     variable, name, total));
      }
    }
  }
  const auto m = layout_margins(sample, *this);
  std::vector<double> ones(sample.size(), 1.0);
  if (auto cell = empty_cell(ones, m)) {
    throw InputError(fmt::format("calibration: margin cell {} has no sample observations", *cell));
  }
}

double worst_margin_gap(std::span<const double> weights, const WeightedSample& sample,
                        const CalibrationSpec& spec) {
  return worst_gap(weights, layout_margins(sample, spec));
}

std::vector<double> calibrate(std::span<const double> weights, const WeightedSample& sample,
                              const CalibrationSpec& spec) {
  if (weights.size() != sample.size()) {
    throw InputError(fmt::format("calibration: {} weights for {} observations", weights.size(),
                                 sample.size()));
  }
  spec.validate(sample);
  return rake(weights, layout_margins(sample, spec), spec);
}

ReplicateWeights bootstrap_resample(const WeightedSample& sample, const BootstrapOptions& options) {
  if (options.replicates < kMinReplicates) {
    throw InputError(fmt::format("bootstrap needs B >= {}, got {}", kMinReplicates,
                                 options.replicates));
  }
  if (sample.empty()) throw InsufficientSampleError("bootstrap: empty sample");
  const auto& obs = sample.observations();
  const std::vector<std::string>* macro_column = nullptr;
  if (options.macro_strata) macro_column = &sample.category(*options.macro_strata);

  // Households keyed by (stratum, household id), in order of first appearance.
  std::map<std::pair<std::string, std::string>, std::size_t> household_index;
  std::vector<Household> households;
  std::vector<std::string> household_macro;
  std::vector<std::string> macro_labels(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::string label = macro_column ? (*macro_column)[i] : std::string("all");
    macro_labels[i] = label;
    auto [it, fresh] =
        household_index.try_emplace({obs[i].stratum_id, obs[i].household_id}, households.size());
    if (fresh) {
      households.emplace_back();
      household_macro.push_back(label);
    } else if (household_macro[it->second] != label) {
      throw InputError(fmt::format("bootstrap: household '{}' spans macro-strata '{}' and '{}'",
                                   obs[i].household_id, household_macro[it->second], label));
    }
    households[it->second].members.push_back(i);
  }

  std::map<std::string, std::size_t> macro_index;
  std::vector<MacroStratum> macros;
  for (std::size_t h = 0; h < households.size(); ++h) {
    auto [it, fresh] = macro_index.try_emplace(household_macro[h], macros.size());
    if (fresh) macros.push_back({household_macro[h], {}});
    macros[it->second].households.push_back(h);
  }
  for (const auto& m : macros) {
    if (m.households.size() < 2) {
      throw DesignError(fmt::format(
          "bootstrap: macro-stratum '{}' has a single household; resampling is degenerate",
          m.label));
    }
  }

  std::optional<MarginLayout> layout;
  if (options.calibration) {
    options.calibration->validate(sample);
    layout = layout_margins(sample, *options.calibration);
  }

  const auto design_weights = sample.weights();
  ReplicateWeights reps;
  reps.seed = options.seed;
  reps.macro_strata = std::move(macro_labels);
  reps.weights.resize(options.replicates);
  reps.multiplicity.resize(options.replicates);
  reps.failure.resize(options.replicates);

  const std::size_t attempts = std::max<std::size_t>(1, options.max_attempts);
  for (std::size_t b = 0; b < options.replicates; ++b) {
    std::vector<std::uint32_t> mult;
    std::vector<double> w;
    std::optional<std::string> problem;
    for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
      auto rng = make_stream(options.seed, b + 1, attempt);
      std::vector<std::uint32_t> hh_mult(households.size(), 0);
      for (const auto& m : macros) {
        boost::random::uniform_int_distribution<std::size_t> pick(0, m.households.size() - 1);
        for (std::size_t d = 0; d < m.households.size(); ++d) ++hh_mult[m.households[pick(rng)]];
      }
      mult.assign(obs.size(), 0);
      for (std::size_t h = 0; h < households.size(); ++h) {
        for (std::size_t i : households[h].members) mult[i] = hh_mult[h];
      }
      w.resize(obs.size());
      for (std::size_t i = 0; i < obs.size(); ++i) w[i] = design_weights[i] * mult[i];
      problem.reset();
      if (layout) {
        if (auto cell = empty_cell(w, *layout)) {
          problem = fmt::format("margin cell {} empty after {} draws", *cell, attempt + 1);
          continue;
        }
      }
      break;
    }
    if (!problem && layout) {
      try {
        w = rake(w, *layout, *options.calibration);
      } catch (const CalibrationError& e) {
        problem = e.what();
      }
    }
    reps.multiplicity[b] = std::move(mult);
    if (problem) {
      reps.failure[b] = std::move(problem);
    } else {
      reps.weights[b] = std::move(w);
    }
  }
  return reps;
}

WeightedSample replicate_sample(const WeightedSample& sample, const ReplicateWeights& reps,
                                std::size_t b) {
  if (b >= reps.replicates()) throw InputError("replicate index out of range");
  if (!reps.ok(b)) throw EstimationFailure(fmt::format("replicate {} failed: {}", b, *reps.failure[b]));
  const auto& w = reps.weights[b];
  const auto& mult = reps.multiplicity[b];
  if (w.size() != sample.size()) throw InputError("replicate weights do not match the sample");
  std::vector<WeightedObservation> obs;
  WeightedSample::CategoryColumns categories;
  for (const auto& [name, column] : sample.categories()) categories[name];
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::uint32_t copy = 1; copy <= mult[i]; ++copy) {
      auto o = sample[i];
      o.weight = w[i] / mult[i];
      if (copy > 1) {
        o.household_id += fmt::format("#{}", copy);
        o.person_id += fmt::format("#{}", copy);
      }
      obs.push_back(std::move(o));
      for (const auto& [name, column] : sample.categories()) categories[name].push_back(column[i]);
    }
  }
  return WeightedSample(std::move(obs), std::move(categories));
}

BootstrapResult bootstrap_statistic(const WeightedSample& sample, const ReplicateWeights& reps,
                                    const SampleStatistic& statistic, double max_failure_rate) {
  BootstrapResult r;
  r.point_estimate = statistic(sample);
  for (std::size_t b = 0; b < reps.replicates(); ++b) {
    if (!reps.ok(b)) {
      r.failures.emplace_back(b, *reps.failure[b]);
      continue;
    }
    try {
      const double v = statistic(replicate_sample(sample, reps, b));
      if (!std::isfinite(v)) throw EstimationFailure("non-finite replicate estimate");
      r.replicate_estimates.push_back(v);
      r.replicate_index.push_back(b);
    } catch (const Error& e) {
      r.failures.emplace_back(b, e.what());
    }
  }
  const double rate = reps.replicates() == 0
                          ? 1.0
                          : static_cast<double>(r.failures.size()) / reps.replicates();
  if (rate > max_failure_rate) {
    throw RunQualityError(fmt::format(
        "bootstrap unstable: {} of {} replicates failed (first: replicate {}: {})",
        r.failures.size(), reps.replicates(), r.failures.front().first, r.failures.front().second));
  }
  const auto& est = r.replicate_estimates;
  if (est.size() < 2) throw InsufficientSampleError("bootstrap: fewer than two usable replicates");
  const double mean = compensated_sum(est) / static_cast<double>(est.size());
  CompensatedSum ss;
  for (double v : est) ss += (v - mean) * (v - mean);
  r.variance = ss.value() / static_cast<double>(est.size() - 1);
  r.sd = std::sqrt(r.variance);
  if (r.sd == 0.0) {
    r.cv = 0.0;
  } else {
    r.cv = r.point_estimate == 0.0 ? std::numeric_limits<double>::infinity()
                                   : r.sd / std::abs(r.point_estimate);
  }
  return r;
}

BootstrapResult bootstrap_variance(const WeightedSample& sample, const DesignFrame& frame,
                                   const MeasureSpec& spec, const ReplicateWeights& reps,
                                   bool corrected, const BiasOptions& options) {
  std::map<std::string, double> households;
  for (const auto& s : frame.strata()) households[s.id] = s.population_households;
  const auto statistic = [&](const WeightedSample& s) {
    if (!corrected) return ht_estimate(s, spec).theta;
    const auto f = &s == &sample ? frame : DesignFrame::from_sample(s, households);
    return corrected_estimate(s, f, spec, options).theta_corrected;
  };
  return bootstrap_statistic(sample, reps, statistic);
}

}  // namespace ineq
