#pragma once

#include <string>
#include <vector>

#include "ineq/sample.hpp"

namespace testing_support {

inline ineq::WeightedObservation obs(double income, double weight, std::string household,
                                     std::string stratum, std::string psu, bool sr) {
  ineq::WeightedObservation o;
  o.income = income;
  o.weight = weight;
  o.household_id = household;
  o.person_id = household + ".1";
  o.stratum_id = std::move(stratum);
  o.psu_id = std::move(psu);
  o.sr_flag = sr;
  return o;
}

// NSR strata with the given PSU counts; each PSU holds `per_psu` single-person
// households with incomes 1, 2, 3, ... and unit weights.
inline ineq::WeightedSample nsr_sample(const std::vector<int>& psu_counts, int per_psu = 2) {
  std::vector<ineq::WeightedObservation> out;
  int next = 0;
  for (std::size_t h = 0; h < psu_counts.size(); ++h) {
    for (int d = 0; d < psu_counts[h]; ++d) {
      for (int i = 0; i < per_psu; ++i) {
        ++next;
        out.push_back(obs(static_cast<double>(next), 1.0, "h" + std::to_string(next),
                          "S" + std::to_string(h), "P" + std::to_string(d), false));
      }
    }
  }
  return ineq::WeightedSample(std::move(out));
}

}  // namespace testing_support
