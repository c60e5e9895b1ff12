#include "ineq/linearization.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ineq/errors.hpp"
#include "ineq/measures.hpp"
#include "ineq/numeric.hpp"

namespace ineq {

WeightFunctional gamma_functional(const WeightedSample& sample, const MeasureSpec& spec) {
  auto incomes = sample.incomes();
  if (spec.family() == MeasureFamily::kGini) {
    auto order = stable_order(incomes);
    return [incomes = std::move(incomes), order = std::move(order)](std::span<const double> w) {
      return gini_gamma_unnormalized(incomes, w, order);
    };
  }
  std::vector<double> g(incomes.size());
  std::transform(incomes.begin(), incomes.end(), g.begin(),
                 [&](double y) { return gamma_integrand(spec, y); });
  return [g = std::move(g)](std::span<const double> w) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < g.size(); ++i) acc += w[i] * g[i];
    return acc.value();
  };
}

LinearizedSample linearize_gamma(const WeightedSample& sample, const MeasureSpec& spec) {
  if (spec.family() == MeasureFamily::kGini) {
    auto out = linearize_numeric(sample, gamma_functional(sample, spec));
    out.measure = spec;
    return out;
  }
  LinearizedSample out;
  out.measure = spec;
  out.kind = LinearizationKind::kAnalytic;
  out.z.reserve(sample.size());
  for (const auto& o : sample.observations()) out.z.push_back(gamma_integrand(spec, o.income));
  return out;
}

LinearizedSample linearize_numeric(const WeightedSample& sample,
                                   const WeightFunctional& functional) {
  auto w = sample.normalized_weights();
  LinearizedSample out;
  out.kind = LinearizationKind::kNumeric;
  out.z.resize(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double base = w[k];
    const double h = 1e-6 * std::max(1.0, base);
    w[k] = base + h;
    const double up = functional(w);
    w[k] = base - h;
    const double down = functional(w);
    w[k] = base;
    const double dz = (up - down) / (2.0 * h);
    if (!std::isfinite(dz)) {
      const auto& o = sample[k];
      throw EstimationFailure(
          fmt::format("non-finite functional derivative at observation {} (household {}, "
                      "person {})",
                      k, o.household_id, o.person_id));
    }
    out.z[k] = dz;
  }
  return out;
}

}  // namespace ineq
