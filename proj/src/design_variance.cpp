#include "ineq/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "ineq/errors.hpp"
#include "ineq/linearization.hpp"
#include "ineq/numeric.hpp"

namespace ineq {

namespace {

// Sum of squared deviations from the mean, compensated.
double centered_sum_of_squares(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double mean = compensated_sum(x) / static_cast<double>(x.size());
  CompensatedSum acc;
  for (double v : x) acc += (v - mean) * (v - mean);
  return acc.value();
}

std::vector<double> group_totals(const std::vector<std::vector<std::size_t>>& groups,
                                 std::span<const double> values, std::span<const double> weights) {
  std::vector<double> totals;
  totals.reserve(groups.size());
  for (const auto& members : groups) {
    CompensatedSum acc;
    for (std::size_t k : members) acc += weights[k] * values[k];
    totals.push_back(acc.value());
  }
  return totals;
}

bool is_census(const StratumInfo& s) {
  const double m = static_cast<double>(s.sample_households());
  return s.population_households - m <= 1e-9 * std::max(1.0, s.population_households);
}

}  // namespace

DesignFrame::DesignFrame(std::vector<StratumInfo> strata, std::size_t sample_size)
    : strata_(std::move(strata)), sample_size_(sample_size) {
  std::vector<int> seen(sample_size, 0);
  for (const auto& s : strata_) {
    if (s.households.empty()) {
      throw DesignError(fmt::format("stratum {} has no sample households", s.id));
    }
    if (s.self_representing) {
      const double m = static_cast<double>(s.sample_households());
      if (s.population_households + 1e-9 * std::max(1.0, m) < m) {
        throw DesignError(fmt::format("SR stratum {}: M_h = {} is smaller than m_h = {}", s.id,
                                      s.population_households, s.sample_households()));
      }
    }
    for (const auto& hh : s.households) {
      for (std::size_t k : hh) {
        if (k >= sample_size) throw DesignError("frame references an observation out of range");
        ++seen[k];
      }
    }
  }
  for (std::size_t k = 0; k < sample_size; ++k) {
    if (seen[k] != 1) {
      throw DesignError(fmt::format("observation {} maps to {} strata/households", k, seen[k]));
    }
  }
}

DesignFrame DesignFrame::from_sample(const WeightedSample& sample,
                                     const std::map<std::string, double>& population_households) {
  std::vector<StratumInfo> strata;
  std::unordered_map<std::string, std::size_t> stratum_index;
  std::vector<std::unordered_map<std::string, std::size_t>> psu_index;
  std::vector<std::unordered_map<std::string, std::size_t>> household_index;
  std::unordered_map<std::string, std::string> household_home;  // household -> stratum/psu

  for (std::size_t k = 0; k < sample.size(); ++k) {
    const auto& o = sample[k];
    auto [it, inserted] = stratum_index.try_emplace(o.stratum_id, strata.size());
    if (inserted) {
      StratumInfo info;
      info.id = o.stratum_id;
      info.self_representing = o.sr_flag;
      strata.push_back(std::move(info));
      psu_index.emplace_back();
      household_index.emplace_back();
    }
    const std::size_t h = it->second;
    auto& stratum = strata[h];
    if (stratum.self_representing != o.sr_flag) {
      throw InputError(fmt::format("stratum {} mixes SR and NSR flags (observation {})",
                                   o.stratum_id, k));
    }
    const std::string home = o.stratum_id + '\x1f' + o.psu_id;
    auto [home_it, fresh] = household_home.try_emplace(o.household_id, home);
    if (!fresh && home_it->second != home) {
      throw InputError(fmt::format("household {} spans several strata or PSUs (observation {})",
                                   o.household_id, k));
    }
    auto [p_it, new_psu] = psu_index[h].try_emplace(o.psu_id, stratum.psus.size());
    if (new_psu) {
      stratum.psu_ids.push_back(o.psu_id);
      stratum.psus.emplace_back();
    }
    stratum.psus[p_it->second].push_back(k);
    auto [hh_it, new_hh] = household_index[h].try_emplace(o.household_id,
                                                          stratum.households.size());
    if (new_hh) stratum.households.emplace_back();
    stratum.households[hh_it->second].push_back(k);
  }

  for (auto& s : strata) {
    if (const auto found = population_households.find(s.id);
        found != population_households.end()) {
      s.population_households = found->second;
      continue;
    }
    CompensatedSum acc;
    for (const auto& hh : s.households) {
      CompensatedSum w;
      for (std::size_t k : hh) w += sample[k].weight;
      acc += w.value() / static_cast<double>(hh.size());
    }
    s.population_households = acc.value();
  }
  return DesignFrame(std::move(strata), sample.size());
}

bool DesignFrame::has_singleton_nsr() const {
  return std::any_of(strata_.begin(), strata_.end(), [](const StratumInfo& s) {
    return !s.self_representing && s.psu_count() < 2;
  });
}

double variance_linear(std::span<const double> values, const WeightedSample& sample,
                       const DesignFrame& frame) {
  if (values.size() != sample.size() || frame.sample_size() != sample.size()) {
    throw DomainError("variance_linear: values, sample and frame are not aligned");
  }
  const auto weights = sample.weights();
  CompensatedSum total;
  for (const auto& s : frame.strata()) {
    if (s.self_representing) {
      if (is_census(s)) continue;
      const auto m = s.sample_households();
      if (m < 2) {
        throw DesignError(fmt::format("SR stratum {} has m_h = {} < 2 sampled households with "
                                      "M_h = {} > m_h",
                                      s.id, m, s.population_households));
      }
      const double md = static_cast<double>(m);
      const double f = md / s.population_households;
      const auto e = group_totals(s.households, values, weights);
      total += (1.0 - f) * md / (md - 1.0) * centered_sum_of_squares(e);
    } else {
      const auto n = s.psu_count();
      if (n < 2) {
        throw DesignError(fmt::format("NSR stratum {} has a single PSU; enable stratum collapsing",
                                      s.id));
      }
      const double nd = static_cast<double>(n);
      const auto t = group_totals(s.psus, values, weights);
      total += nd / (nd - 1.0) * centered_sum_of_squares(t);
    }
  }
  return total.value();
}

double covariance_linear(std::span<const double> values_a, std::span<const double> values_b,
                         const WeightedSample& sample, const DesignFrame& frame) {
  if (values_a.size() != values_b.size()) {
    throw DomainError("covariance_linear: value vectors differ in length");
  }
  std::vector<double> sum(values_a.size());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = values_a[i] + values_b[i];
  const double v_sum = variance_linear(sum, sample, frame);
  const double v_a = variance_linear(values_a, sample, frame);
  const double v_b = variance_linear(values_b, sample, frame);
  return 0.5 * (v_sum - v_a - v_b);
}

StratumKey mean_income_key(const WeightedSample& sample) {
  return [&sample](const StratumInfo& s) {
    CompensatedSum num;
    CompensatedSum den;
    for (const auto& hh : s.households) {
      for (std::size_t k : hh) {
        num += sample[k].weight * sample[k].income;
        den += sample[k].weight;
      }
    }
    return den.value() > 0.0 ? num.value() / den.value() : 0.0;
  };
}

DesignFrame collapse_strata(const DesignFrame& frame, const StratumKey& key) {
  const auto& strata = frame.strata();
  std::vector<std::size_t> nsr;
  for (std::size_t i = 0; i < strata.size(); ++i) {
    if (!strata[i].self_representing) nsr.push_back(i);
  }
  if (nsr.empty()) throw DesignError("collapse_strata: the frame has no NSR strata");

  std::vector<double> keys(strata.size(), 0.0);
  for (std::size_t i : nsr) keys[i] = key(strata[i]);
  std::stable_sort(nsr.begin(), nsr.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  // Pair adjacent singletons, keep multi-PSU strata alone, remember orphans.
  const std::size_t m = nsr.size();
  std::vector<std::vector<std::size_t>> groups;  // positions in sorted order
  std::vector<std::size_t> group_of(m, 0);
  std::vector<std::size_t> orphans;
  for (std::size_t p = 0; p < m;) {
    const bool single = strata[nsr[p]].psu_count() < 2;
    if (!single) {
      group_of[p] = groups.size();
      groups.push_back({p});
      ++p;
    } else if (p + 1 < m && strata[nsr[p + 1]].psu_count() < 2) {
      group_of[p] = group_of[p + 1] = groups.size();
      groups.push_back({p, p + 1});
      p += 2;
    } else {
      orphans.push_back(p);
      ++p;
    }
  }
  for (std::size_t p : orphans) {
    if (m == 1) {
      throw DesignError(fmt::format("stratum {} has a single PSU and no NSR stratum to merge with",
                                    strata[nsr[p]].id));
    }
    std::size_t target = 0;
    if (p == 0) {
      target = 1;
    } else if (p + 1 == m) {
      target = p - 1;
    } else {
      const double kp = keys[nsr[p]];
      target = std::abs(kp - keys[nsr[p - 1]]) <= std::abs(keys[nsr[p + 1]] - kp) ? p - 1 : p + 1;
    }
    group_of[p] = group_of[target];
    groups[group_of[target]].push_back(p);
  }

  std::vector<bool> emitted(groups.size(), false);
  std::vector<std::size_t> group_of_stratum(strata.size(), 0);
  for (std::size_t p = 0; p < m; ++p) group_of_stratum[nsr[p]] = group_of[p];

  std::vector<StratumInfo> out;
  for (std::size_t i = 0; i < strata.size(); ++i) {
    if (strata[i].self_representing) {
      out.push_back(strata[i]);
      continue;
    }
    const std::size_t g = group_of_stratum[i];
    if (emitted[g]) continue;
    emitted[g] = true;
    auto members = groups[g];
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return nsr[a] < nsr[b]; });
    if (members.size() == 1) {
      out.push_back(strata[nsr[members.front()]]);
      continue;
    }
    StratumInfo merged;
    merged.self_representing = false;
    for (std::size_t p : members) {
      const auto& s = strata[nsr[p]];
      merged.id += merged.id.empty() ? s.id : "+" + s.id;
      merged.population_households += s.population_households;
      merged.households.insert(merged.households.end(), s.households.begin(),
                               s.households.end());
      merged.psus.insert(merged.psus.end(), s.psus.begin(), s.psus.end());
      for (const auto& psu : s.psu_ids) merged.psu_ids.push_back(s.id + "/" + psu);
    }
    out.push_back(std::move(merged));
  }
  return DesignFrame(std::move(out), frame.sample_size());
}

VariancePieces variance_pieces(const WeightedSample& sample, const DesignFrame& frame,
                               std::span<const double> z, const VarianceOptions& options) {
  if (z.size() != sample.size()) throw DomainError("variance_pieces: z is not aligned");
  const auto y = sample.incomes();
  const auto w = sample.weights();
  const double total = compensated_sum(w);
  if (!(total > 0.0)) throw DomainError("sample has zero total weight");

  const DesignFrame* active = &frame;
  DesignFrame collapsed;
  if (options.collapse_singletons && frame.has_singleton_nsr()) {
    collapsed = collapse_strata(frame, mean_income_key(sample));
    active = &collapsed;
  }

  const double mu = weighted_mean(y, w);
  const double z_bar = weighted_mean(z, w);
  std::vector<double> u(y.size());
  std::vector<double> r(y.size());
  std::vector<double> s(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    u[k] = y[k] - mu;
    r[k] = z[k] - z_bar;
    s[k] = u[k] + r[k];
  }
  const double scale = 1.0 / (total * total);
  VariancePieces out;
  out.v_mu = variance_linear(u, sample, *active) * scale;
  out.v_gamma = variance_linear(r, sample, *active) * scale;
  out.v_sum = variance_linear(s, sample, *active) * scale;
  out.cov_mu_gamma = 0.5 * (out.v_sum - out.v_mu - out.v_gamma);
  return out;
}

VariancePieces variance_pieces(const WeightedSample& sample, const DesignFrame& frame,
                               const MeasureSpec& spec, const VarianceOptions& options) {
  const auto lin = linearize_gamma(sample, spec);
  return variance_pieces(sample, frame, lin.z, options);
}

}  // namespace ineq
