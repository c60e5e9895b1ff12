#include "ineq/sample.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "ineq/errors.hpp"
#include "ineq/numeric.hpp"

namespace ineq {

IncomePopulation::IncomePopulation(std::vector<double> incomes) : incomes_(std::move(incomes)) {
  for (std::size_t i = 0; i < incomes_.size(); ++i) {
    if (!(incomes_[i] > 0.0) || !std::isfinite(incomes_[i])) {
      throw DomainError(fmt::format("population income at position {} is not a positive finite "
                                    "value ({})",
                                    i, incomes_[i]));
    }
  }
}

double IncomePopulation::min() const {
  if (incomes_.empty()) throw DegenerateError("empty population");
  return *std::min_element(incomes_.begin(), incomes_.end());
}

WeightedSample::WeightedSample(std::vector<WeightedObservation> observations,
                               CategoryColumns categories)
    : obs_(std::move(observations)), categories_(std::move(categories)) {
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    const auto& o = obs_[i];
    if (!(o.income > 0.0) || !std::isfinite(o.income)) {
      throw DomainError(fmt::format("observation {}: income must be positive and finite, got {}",
                                    i, o.income));
    }
    if (!(o.weight >= 0.0) || !std::isfinite(o.weight)) {
      throw DomainError(fmt::format("observation {}: weight must be non-negative and finite, "
                                    "got {}",
                                    i, o.weight));
    }
  }
  for (const auto& [name, column] : categories_) {
    if (column.size() != obs_.size()) {
      throw InputError(fmt::format("category column '{}' has {} entries for {} observations",
                                   name, column.size(), obs_.size()));
    }
  }
}

WeightedSample WeightedSample::from_incomes(std::span<const double> incomes,
                                            std::span<const double> weights,
                                            bool self_representing) {
  if (incomes.size() != weights.size()) {
    throw DomainError("from_incomes: incomes and weights differ in length");
  }
  std::vector<WeightedObservation> obs(incomes.size());
  for (std::size_t i = 0; i < incomes.size(); ++i) {
    auto& o = obs[i];
    o.income = incomes[i];
    o.weight = weights[i];
    o.household_id = std::to_string(i);
    o.person_id = std::to_string(i);
    o.psu_id = std::to_string(i);
    o.stratum_id = "1";
    o.sr_flag = self_representing;
  }
  return WeightedSample(std::move(obs));
}

double WeightedSample::total_weight() const {
  CompensatedSum acc;
  for (const auto& o : obs_) acc += o.weight;
  return acc.value();
}

std::size_t WeightedSample::n_prime() const {
  return static_cast<std::size_t>(
      std::count_if(obs_.begin(), obs_.end(), [](const auto& o) { return o.weight > 0.0; }));
}

std::vector<double> WeightedSample::incomes() const {
  std::vector<double> out;
  out.reserve(obs_.size());
  for (const auto& o : obs_) out.push_back(o.income);
  return out;
}

std::vector<double> WeightedSample::weights() const {
  std::vector<double> out;
  out.reserve(obs_.size());
  for (const auto& o : obs_) out.push_back(o.weight);
  return out;
}

std::vector<double> WeightedSample::normalized_weights() const {
  const double total = total_weight();
  if (!(total > 0.0)) throw DomainError("sample has zero total weight");
  auto w = weights();
  for (auto& x : w) x /= total;
  return w;
}

const std::vector<std::string>& WeightedSample::category(std::string_view name) const {
  const auto it = categories_.find(name);
  if (it == categories_.end()) {
    throw InputError(fmt::format("sample has no category column '{}'", name));
  }
  return it->second;
}

bool WeightedSample::has_category(std::string_view name) const {
  return categories_.find(name) != categories_.end();
}

WeightedSample WeightedSample::with_weights(std::span<const double> weights) const {
  if (weights.size() != obs_.size()) throw DomainError("with_weights: length mismatch");
  auto obs = obs_;
  for (std::size_t i = 0; i < obs.size(); ++i) obs[i].weight = weights[i];
  return WeightedSample(std::move(obs), categories_);
}

WeightedSample WeightedSample::with_incomes(std::span<const double> incomes) const {
  if (incomes.size() != obs_.size()) throw DomainError("with_incomes: length mismatch");
  auto obs = obs_;
  for (std::size_t i = 0; i < obs.size(); ++i) obs[i].income = incomes[i];
  return WeightedSample(std::move(obs), categories_);
}

WeightedSample WeightedSample::positive_weight_subset() const {
  std::vector<WeightedObservation> obs;
  CategoryColumns cats;
  for (const auto& [name, _] : categories_) cats[name];
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    if (!(obs_[i].weight > 0.0)) continue;
    obs.push_back(obs_[i]);
    for (const auto& [name, column] : categories_) cats[name].push_back(column[i]);
  }
  return WeightedSample(std::move(obs), std::move(cats));
}

// --- MeasureSpec ----------------------------------------------------------

MeasureSpec MeasureSpec::cv() { return MeasureSpec(MeasureFamily::kCv, std::nullopt); }

MeasureSpec MeasureSpec::gini() { return MeasureSpec(MeasureFamily::kGini, std::nullopt); }

MeasureSpec MeasureSpec::ge(double alpha) {
  if (!std::isfinite(alpha)) throw DomainError("GE parameter must be finite");
  return MeasureSpec(MeasureFamily::kGe, alpha);
}

MeasureSpec MeasureSpec::atkinson(double epsilon) {
  if (!std::isfinite(epsilon) || epsilon < 0.0) {
    throw DomainError(fmt::format("Atkinson parameter must be >= 0, got {}", epsilon));
  }
  return MeasureSpec(MeasureFamily::kAtkinson, epsilon);
}

namespace {

double parse_parameter(std::string_view text, std::string_view full) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc{} || ptr != last) {
    throw InputError(fmt::format("invalid measure parameter in '{}'", full));
  }
  return value;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

MeasureSpec MeasureSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string name = lowercase(text.substr(0, colon));
  const bool has_param = colon != std::string_view::npos;
  const auto param_text = has_param ? text.substr(colon + 1) : std::string_view{};

  if (name == "cv" || name == "gini") {
    if (has_param) {
      throw InputError(fmt::format("measure '{}' does not take a parameter", text));
    }
    return name == "cv" ? cv() : gini();
  }
  if (name == "ge" || name == "atkinson") {
    if (!has_param) throw InputError(fmt::format("measure '{}' requires a parameter", text));
    const double p = parse_parameter(param_text, text);
    try {
      return name == "ge" ? ge(p) : atkinson(p);
    } catch (const DomainError& e) {
      throw InputError(e.what());
    }
  }
  throw InputError(fmt::format("unknown measure '{}' (expected cv, gini, ge:ALPHA, atkinson:EPS)",
                               text));
}

double MeasureSpec::parameter_or_throw() const {
  if (!parameter_) throw DomainError(fmt::format("measure {} has no parameter", label()));
  return *parameter_;
}

bool MeasureSpec::is_ge_zero() const noexcept {
  return family_ == MeasureFamily::kGe && std::abs(*parameter_) < kSpecialParameterTolerance;
}

bool MeasureSpec::is_ge_one() const noexcept {
  return family_ == MeasureFamily::kGe &&
         std::abs(*parameter_ - 1.0) < kSpecialParameterTolerance;
}

bool MeasureSpec::is_atkinson_one() const noexcept {
  return family_ == MeasureFamily::kAtkinson &&
         std::abs(*parameter_ - 1.0) < kSpecialParameterTolerance;
}

std::string MeasureSpec::label() const {
  switch (family_) {
    case MeasureFamily::kCv:
      return "cv";
    case MeasureFamily::kGini:
      return "gini";
    case MeasureFamily::kGe:
      return fmt::format("ge:{}", *parameter_);
    case MeasureFamily::kAtkinson:
      return fmt::format("atkinson:{}", *parameter_);
  }
  return "unknown";
}

}  // namespace ineq
