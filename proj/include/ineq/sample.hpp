#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ineq {

// A finite population of strictly positive incomes.
class IncomePopulation {
 public:
  IncomePopulation() = default;
  explicit IncomePopulation(std::vector<double> incomes);

  std::span<const double> incomes() const noexcept { return incomes_; }
  std::size_t size() const noexcept { return incomes_.size(); }
  double min() const;

 private:
  std::vector<double> incomes_;
};

struct WeightedObservation {
  double income = 0.0;
  double weight = 0.0;
  std::string household_id;
  std::string person_id;
  std::string stratum_id;
  std::string psu_id;
  bool sr_flag = false;
};

// Survey sample: observations plus optional per-observation category columns
// (gender, age class, macro-strata, ...) addressed by column name.
class WeightedSample {
 public:
  using CategoryColumns = std::map<std::string, std::vector<std::string>, std::less<>>;

  WeightedSample() = default;
  explicit WeightedSample(std::vector<WeightedObservation> observations,
                          CategoryColumns categories = {});

  // Single-stratum sample where every observation is its own household and PSU.
  static WeightedSample from_incomes(std::span<const double> incomes,
                                     std::span<const double> weights,
                                     bool self_representing = true);

  const std::vector<WeightedObservation>& observations() const noexcept { return obs_; }
  const WeightedObservation& operator[](std::size_t i) const { return obs_[i]; }
  std::size_t size() const noexcept { return obs_.size(); }
  bool empty() const noexcept { return obs_.empty(); }

  // Estimated population size: sum of weights.
  double total_weight() const;
  // Number of observations with strictly positive weight.
  std::size_t n_prime() const;

  std::vector<double> incomes() const;
  std::vector<double> weights() const;
  // w / sum(w); throws DomainError on zero total weight.
  std::vector<double> normalized_weights() const;

  const CategoryColumns& categories() const noexcept { return categories_; }
  const std::vector<std::string>& category(std::string_view name) const;
  bool has_category(std::string_view name) const;

  WeightedSample with_weights(std::span<const double> weights) const;
  WeightedSample with_incomes(std::span<const double> incomes) const;
  WeightedSample positive_weight_subset() const;

 private:
  std::vector<WeightedObservation> obs_;
  CategoryColumns categories_;
};

enum class MeasureFamily { kCv, kGini, kGe, kAtkinson };

// Inequality measure plus its parameter (alpha for GE, epsilon for Atkinson).
class MeasureSpec {
 public:
  static MeasureSpec cv();
  static MeasureSpec gini();
  static MeasureSpec ge(double alpha);
  static MeasureSpec atkinson(double epsilon);
  // Accepts "cv", "gini", "ge:ALPHA", "atkinson:EPS".
  static MeasureSpec parse(std::string_view text);

  MeasureFamily family() const noexcept { return family_; }
  std::optional<double> parameter() const noexcept { return parameter_; }
  double parameter_or_throw() const;

  // GE(0)/A(1) and GE(1) use dedicated closed forms.
  bool is_ge_zero() const noexcept;
  bool is_ge_one() const noexcept;
  bool is_atkinson_one() const noexcept;

  // Canonical textual form, parseable by parse().
  std::string label() const;

  friend bool operator==(const MeasureSpec&, const MeasureSpec&) = default;

 private:
  MeasureSpec(MeasureFamily family, std::optional<double> parameter)
      : family_(family), parameter_(parameter) {}

  MeasureFamily family_ = MeasureFamily::kGini;
  std::optional<double> parameter_;
};

// Parameters within this distance of 0 or 1 route to the closed forms.
inline constexpr double kSpecialParameterTolerance = 1e-9;

}  // namespace ineq
