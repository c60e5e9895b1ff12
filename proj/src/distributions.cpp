#include "ineq/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <fmt/format.h>

#include "ineq/errors.hpp"
#include "ineq/numeric.hpp"
#include "ineq/optimize.hpp"

namespace ineq {

namespace {

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double log_beta(double p, double q) {
  return boost::math::lgamma(p) + boost::math::lgamma(q) - boost::math::lgamma(p + q);
}

struct Gb2View {
  double a, b, p, q;
};

Gb2View as_gb2(ModelFamily family, const std::vector<double>& v) {
  switch (family) {
    case ModelFamily::kGb2:
      return {v[0], v[1], v[2], v[3]};
    case ModelFamily::kDagum:
      return {v[0], v[1], v[2], 1.0};
    case ModelFamily::kSinghMaddala:
      return {v[0], v[1], 1.0, v[2]};
    default:
      throw DomainError("not a GB2-type family");
  }
}

double gb2_log_density(const Gb2View& g, double y) {
  const double t = g.a * (std::log(y) - std::log(g.b));
  return std::log(g.a) - std::log(y) + g.p * t - log_beta(g.p, g.q) - (g.p + g.q) * softplus(t);
}

double check_positive_weights(const WeightedSample& s) {
  double total = 0.0;
  for (const auto& o : s.observations()) {
    if (!(o.income > 0.0)) throw DomainError("income model fit: incomes must be positive");
    if (!(o.weight >= 0.0)) throw DomainError("income model fit: weights must be non-negative");
    total += o.weight;
  }
  if (!(total > 0.0)) throw DomainError("income model fit: zero total weight");
  return total;
}

double logit(double x) { return std::log(x / (1.0 - x)); }
double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

PopulationModel::PopulationModel(ModelFamily family, std::vector<double> params)
    : family_(family), params_(std::move(params)) {
  if (params_.size() != parameter_count(family_)) {
    throw DomainError(fmt::format("{} expects {} parameters, got {}", model_family_name(family_),
                                  parameter_count(family_), params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const bool location = family_ == ModelFamily::kLogNormal && i == 0;
    if (!std::isfinite(params_[i]) || (!location && !(params_[i] > 0.0))) {
      throw DomainError(fmt::format("{} parameter {} must be positive and finite, got {}",
                                    model_family_name(family_), i + 1, params_[i]));
    }
  }
}

PopulationModel PopulationModel::lognormal(double mu, double sigma) {
  return PopulationModel(ModelFamily::kLogNormal, {mu, sigma});
}
PopulationModel PopulationModel::gb2(double a, double b, double p, double q) {
  return PopulationModel(ModelFamily::kGb2, {a, b, p, q});
}
PopulationModel PopulationModel::dagum(double a, double b, double p) {
  return PopulationModel(ModelFamily::kDagum, {a, b, p});
}
PopulationModel PopulationModel::singh_maddala(double a, double b, double q) {
  return PopulationModel(ModelFamily::kSinghMaddala, {a, b, q});
}
PopulationModel PopulationModel::pareto(double shape, double scale) {
  return PopulationModel(ModelFamily::kPareto, {shape, scale});
}
PopulationModel PopulationModel::make(ModelFamily family, std::vector<double> params) {
  return PopulationModel(family, std::move(params));
}

std::string PopulationModel::name() const {
  std::string out = model_family_name(family_) + "(";
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out += fmt::format("{}{}", i ? ", " : "", params_[i]);
  }
  return out + ")";
}

double PopulationModel::log_density(double y) const {
  if (!(y > 0.0)) return -std::numeric_limits<double>::infinity();
  switch (family_) {
    case ModelFamily::kLogNormal: {
      const double z = (std::log(y) - params_[0]) / params_[1];
      return -0.5 * z * z - std::log(y * params_[1]) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    case ModelFamily::kPareto: {
      const double a = params_[0];
      const double m = params_[1];
      if (y < m) return -std::numeric_limits<double>::infinity();
      return std::log(a) + a * std::log(m) - (a + 1.0) * std::log(y);
    }
    default:
      return gb2_log_density(as_gb2(family_, params_), y);
  }
}

double PopulationModel::cdf(double y) const {
  if (!(y > 0.0)) return 0.0;
  switch (family_) {
    case ModelFamily::kLogNormal:
      return normal_cdf((std::log(y) - params_[0]) / params_[1]);
    case ModelFamily::kPareto:
      return y <= params_[1] ? 0.0 : 1.0 - std::pow(params_[1] / y, params_[0]);
    default: {
      const auto g = as_gb2(family_, params_);
      const double t = std::pow(y / g.b, g.a);
      return boost::math::ibeta(g.p, g.q, t / (1.0 + t));
    }
  }
}

double PopulationModel::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError(fmt::format("quantile level {} outside (0, 1)", p));
  switch (family_) {
    case ModelFamily::kLogNormal:
      return std::exp(params_[0] + params_[1] * normal_quantile(p));
    case ModelFamily::kPareto:
      return params_[1] * std::pow(1.0 - p, -1.0 / params_[0]);
    default: {
      const auto g = as_gb2(family_, params_);
      const double z = boost::math::ibeta_inv(g.p, g.q, p);
      return g.b * std::pow(z / (1.0 - z), 1.0 / g.a);
    }
  }
}

double PopulationModel::draw(Rng& rng) const {
  switch (family_) {
    case ModelFamily::kLogNormal: {
      boost::random::normal_distribution<double> z(params_[0], params_[1]);
      return std::exp(z(rng));
    }
    case ModelFamily::kPareto: {
      boost::random::uniform_01<double> u;
      return params_[1] * std::pow(1.0 - u(rng), -1.0 / params_[0]);
    }
    default: {
      // Y = b (G1 / G2)^(1/a) with G1 ~ Gamma(p), G2 ~ Gamma(q).
      const auto g = as_gb2(family_, params_);
      boost::random::gamma_distribution<double> g1(g.p);
      boost::random::gamma_distribution<double> g2(g.q);
      const double x1 = g1(rng);
      const double x2 = g2(rng);
      return g.b * std::exp((std::log(x1) - std::log(x2)) / g.a);
    }
  }
}

ModelFamily parse_model_family(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  std::erase_if(t, [](char c) { return c == '-' || c == '_' || c == ' '; });
  if (t == "lognormal") return ModelFamily::kLogNormal;
  if (t == "gb2") return ModelFamily::kGb2;
  if (t == "dagum") return ModelFamily::kDagum;
  if (t == "singhmaddala") return ModelFamily::kSinghMaddala;
  if (t == "pareto") return ModelFamily::kPareto;
  throw InputError(fmt::format("unknown income model family '{}'", text));
}

std::string model_family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::kLogNormal:
      return "lognormal";
    case ModelFamily::kGb2:
      return "gb2";
    case ModelFamily::kDagum:
      return "dagum";
    case ModelFamily::kSinghMaddala:
      return "singh-maddala";
    case ModelFamily::kPareto:
      return "pareto";
  }
  return "?";
}

std::size_t parameter_count(ModelFamily family) {
  switch (family) {
    case ModelFamily::kGb2:
      return 4;
    case ModelFamily::kDagum:
    case ModelFamily::kSinghMaddala:
      return 3;
    default:
      return 2;
  }
}

IncomeModelFit fit_income_model(const WeightedSample& sample, ModelFamily family) {
  const double total = check_positive_weights(sample);
  std::vector<double> y;
  std::vector<double> w;
  for (const auto& o : sample.observations()) {
    if (o.weight > 0.0) {
      y.push_back(o.income);
      w.push_back(o.weight / total);
    }
  }
  const auto n = y.size();
  if (n < parameter_count(family) + 1) {
    throw InsufficientSampleError(fmt::format("{} fit needs more than {} observations",
                                              model_family_name(family), parameter_count(family)));
  }
  const auto pseudo_loglik = [&](const PopulationModel& m) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < n; ++i) acc += w[i] * m.log_density(y[i]);
    return acc.value() * static_cast<double>(n);
  };

  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) logs[i] = std::log(y[i]);
  const double mlog = weighted_mean(logs, w);
  CompensatedSum var;
  for (std::size_t i = 0; i < n; ++i) var += w[i] * (logs[i] - mlog) * (logs[i] - mlog);
  const double slog = std::sqrt(var.value());
  if (!(slog > 0.0)) throw DegenerateError("income model fit: incomes have no spread");

  std::optional<PopulationModel> best;
  switch (family) {
    case ModelFamily::kLogNormal:
      best = PopulationModel::lognormal(mlog, slog);
      break;
    case ModelFamily::kPareto: {
      const double scale = *std::min_element(y.begin(), y.end());
      CompensatedSum acc;
      for (std::size_t i = 0; i < n; ++i) acc += w[i] * (logs[i] - std::log(scale));
      if (!(acc.value() > 0.0)) throw DegenerateError("Pareto fit: incomes have no spread");
      best = PopulationModel::pareto(1.0 / acc.value(), scale);
      break;
    }
    default: {
      // Log-logistic start: a = pi / (sigma sqrt 3), b = geometric mean.
      const double a0 = std::numbers::pi / (slog * std::sqrt(3.0));
      const double lb0 = mlog;
      std::vector<std::vector<double>> starts;
      const std::size_t k = parameter_count(family);
      for (double shape : {1.0, 0.6, 1.8}) {
        std::vector<double> s{std::log(a0 * (shape == 1.0 ? 1.0 : 1.0 / shape)), lb0};
        for (std::size_t extra = 2; extra < k; ++extra) s.push_back(std::log(shape));
        starts.push_back(std::move(s));
      }
      const auto objective = [&](const std::vector<double>& theta) {
        std::vector<double> params(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) params[i] = std::exp(theta[i]);
        if (std::any_of(params.begin(), params.end(),
                        [](double v) { return !(v > 0.0) || !std::isfinite(v); })) {
          return std::numeric_limits<double>::infinity();
        }
        const auto model = PopulationModel::make(family, params);
        return -pseudo_loglik(model) / static_cast<double>(n);
      };
      const auto res = multi_start_minimize(objective, starts);
      std::vector<double> params(res.x.size());
      for (std::size_t i = 0; i < res.x.size(); ++i) params[i] = std::exp(res.x[i]);
      best = PopulationModel::make(family, params);
      break;
    }
  }
  const double ll = pseudo_loglik(*best);
  const double kp = static_cast<double>(parameter_count(family));
  return IncomeModelFit{*best, ll, -2.0 * ll + 2.0 * kp,
                        -2.0 * ll + kp * std::log(static_cast<double>(n)), n};
}

std::string unit_family_name(UnitFamily family) {
  switch (family) {
    case UnitFamily::kBeta:
      return "beta";
    case UnitFamily::kSimplex:
      return "simplex";
    case UnitFamily::kLLogistic:
      return "l-logistic";
  }
  return "?";
}

double unit_log_density(UnitFamily family, double p1, double p2, double y) {
  if (!(y > 0.0 && y < 1.0)) return -std::numeric_limits<double>::infinity();
  switch (family) {
    case UnitFamily::kBeta:
      return (p1 - 1.0) * std::log(y) + (p2 - 1.0) * std::log1p(-y) - log_beta(p1, p2);
    case UnitFamily::kSimplex: {
      const double mu = p1;
      const double s2 = p2;
      const double v = y * (1.0 - y);
      const double d = (y - mu) * (y - mu) / (v * mu * mu * (1.0 - mu) * (1.0 - mu));
      return -0.5 * std::log(2.0 * std::numbers::pi * s2 * v * v * v) - d / (2.0 * s2);
    }
    case UnitFamily::kLLogistic: {
      const double m = p1;
      const double b = p2;
      // log r = log(m (1 - y) / ((1 - m) y)); f = b r^b / (y (1 - y) (1 + r^b)^2)
      const double log_r = std::log(m) + std::log1p(-y) - std::log1p(-m) - std::log(y);
      return std::log(b) + b * log_r - std::log(y) - std::log1p(-y) - 2.0 * softplus(b * log_r);
    }
  }
  return 0.0;
}

EstimatorDistributionFit fit_estimator_distribution(std::span<const double> values,
                                                    UnitFamily family, bool shrink_boundary) {
  const std::size_t n = values.size();
  if (n < 30) {
    throw InsufficientSampleError(fmt::format("estimator distribution fit needs n >= 30, got {}", n));
  }
  std::vector<double> x(values.begin(), values.end());
  if (shrink_boundary) {
    const double nd = static_cast<double>(n);
    for (auto& v : x) v = (v * (nd - 1.0) + 0.5) / nd;
  }
  for (double v : x) {
    if (!(v > 0.0 && v < 1.0)) {
      throw DomainError(fmt::format("value {} is not strictly inside (0, 1); use the boundary shrink", v));
    }
  }
  const double nd = static_cast<double>(n);
  const double mean = compensated_sum(x) / nd;
  CompensatedSum ss;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double var = ss.value() / nd;
  if (!(var > 0.0)) throw DegenerateError("estimator distribution fit: values have no spread");

  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted_quantile(sorted, 0.5);

  // Unconstrained coordinates and starts.
  std::function<std::pair<double, double>(const std::vector<double>&)> to_params;
  std::vector<std::vector<double>> starts;
  switch (family) {
    case UnitFamily::kBeta: {
      const double common = std::max(mean * (1.0 - mean) / var - 1.0, 1e-3);
      to_params = [](const std::vector<double>& t) { return std::pair{std::exp(t[0]), std::exp(t[1])}; };
      const double la = std::log(mean * common);
      const double lb = std::log((1.0 - mean) * common);
      starts = {{la, lb}, {la - 1.0, lb - 1.0}, {la + 1.0, lb + 1.0}};
      break;
    }
    case UnitFamily::kSimplex: {
      to_params = [](const std::vector<double>& t) { return std::pair{expit(t[0]), std::exp(t[1])}; };
      CompensatedSum dsum;
      for (double v : x) {
        dsum += (v - mean) * (v - mean) / (v * (1.0 - v) * mean * mean * (1.0 - mean) * (1.0 - mean));
      }
      const double ls = std::log(std::max(dsum.value() / nd, 1e-12));
      starts = {{logit(mean), ls}, {logit(median), ls}, {logit(mean), ls + 1.0}};
      break;
    }
    case UnitFamily::kLLogistic: {
      to_params = [](const std::vector<double>& t) { return std::pair{expit(t[0]), std::exp(t[1])}; };
      // logit(Y) is logistic with scale 1/b: var = pi^2 / (3 b^2)
      CompensatedSum ls;
      CompensatedSum lss;
      for (double v : x) ls += logit(v);
      const double lm = ls.value() / nd;
      for (double v : x) lss += (logit(v) - lm) * (logit(v) - lm);
      const double b0 = std::numbers::pi / std::sqrt(3.0 * std::max(lss.value() / nd, 1e-12));
      starts = {{logit(median), std::log(b0)}, {lm, std::log(b0)}, {logit(median), std::log(b0) - 0.5}};
      break;
    }
  }
  const auto loglik = [&](const std::vector<double>& t) {
    const auto [p1, p2] = to_params(t);
    CompensatedSum acc;
    for (double v : x) acc += unit_log_density(family, p1, p2, v);
    return acc.value();
  };
  const auto res = multi_start_minimize([&](const std::vector<double>& t) { return -loglik(t) / nd; },
                                        starts);
  const auto [p1, p2] = to_params(res.x);
  EstimatorDistributionFit fit;
  fit.family = family;
  fit.param1 = p1;
  fit.param2 = p2;
  fit.loglik = loglik(res.x);
  fit.aic = -2.0 * fit.loglik + 4.0;
  fit.bic = -2.0 * fit.loglik + 2.0 * std::log(nd);
  fit.n = n;
  return fit;
}

}  // namespace ineq
