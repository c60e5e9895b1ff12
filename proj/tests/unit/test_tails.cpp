#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ineq/errors.hpp"
#include "ineq/measures.hpp"
#include "ineq/numeric.hpp"
#include "ineq/tails.hpp"
#include "oracles.hpp"

using namespace ineq;
using Catch::Approx;

namespace {

// k exact Pareto(shape) draws above u plus `body` values below it.
std::vector<double> pareto_fixture(std::size_t k, double shape, double u, std::size_t body,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(u * std::pow(1.0 - unif(rng), -1.0 / shape));
  for (std::size_t i = 0; i < body; ++i) out.push_back(u * (0.2 + 0.8 * unif(rng)));
  return out;
}

std::vector<double> lognormal_fixture(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> out(n);
  for (auto& v : out) v = std::exp(9.64 + 0.43 * z(rng));
  return out;
}

// Lognormal sample whose maximum is replaced by 100 times its 99th percentile.
struct OutlierFixture {
  std::vector<double> clean;
  std::vector<double> contaminated;
  std::size_t outlier = 0;
};

OutlierFixture outlier_fixture() {
  OutlierFixture f;
  f.clean = lognormal_fixture(400, 17);
  std::vector<double> sorted = f.clean;
  std::sort(sorted.begin(), sorted.end());
  const double p99 = sorted[static_cast<std::size_t>(0.99 * 400) - 1];
  f.outlier = static_cast<std::size_t>(std::max_element(f.clean.begin(), f.clean.end()) -
                                       f.clean.begin());
  f.contaminated = f.clean;
  f.contaminated[f.outlier] = 100.0 * p99;
  return f;
}

WeightedSample unit_weight_sample(const std::vector<double>& y) {
  return WeightedSample::from_incomes(y, std::vector<double>(y.size(), 1.0));
}

}  // namespace

TEST_CASE("generalized boxplot", "[tails]") {
  SECTION("null flag rate on normal data") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    std::vector<double> x(1000);
    for (auto& v : x) v = z(rng);
    const auto flags = detect_outliers(x);
    CHECK(flags.count() <= 10);
    const auto fit = fit_g_and_h(x);
    CHECK(std::abs(fit.g) < 0.1);
    CHECK(fit.h < 0.1);
  }
  SECTION("single 100x outlier is flagged") {
    const auto f = outlier_fixture();
    const auto flags = detect_outliers(f.contaminated);
    CHECK(flags.flags[f.outlier]);
    for (std::size_t i = 0; i < f.contaminated.size(); ++i) {
      if (flags.flags[i]) {
        CHECK((f.contaminated[i] < flags.lower_fence || f.contaminated[i] > flags.upper_fence));
      }
    }
  }
  SECTION("g-and-h recovers a g-and-h distribution") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    const GAndH truth{10.0, 2.0, 0.4, 0.1};
    std::vector<double> x(20000);
    for (auto& v : x) {
      const double s = z(rng);
      v = truth.a + truth.b * std::expm1(truth.g * s) / truth.g * std::exp(truth.h * s * s / 2);
    }
    const auto fit = fit_g_and_h(x);
    CHECK(fit.a == Approx(truth.a).margin(0.05));
    CHECK(fit.b == Approx(truth.b).epsilon(0.05));
    CHECK(fit.g == Approx(truth.g).margin(0.03));
    CHECK(fit.h == Approx(truth.h).margin(0.03));
  }
  SECTION("small samples and constant data") {
    const std::vector<double> small{1.0, 2.0, 3.0, 400.0};
    const auto flags = detect_outliers(small);
    CHECK(flags.count() == 0);
    CHECK(flags.warnings.size() == 1);
    CHECK_THROWS_AS(detect_outliers(std::vector<double>(50, 3.0)), DegenerateError);
  }
  SECTION("scale equivariance") {
    const auto f = outlier_fixture();
    auto scaled = f.contaminated;
    for (auto& v : scaled) v *= 0.01;
    const auto a = detect_outliers(f.contaminated);
    const auto b = detect_outliers(scaled);
    CHECK(a.flags == b.flags);
    CHECK(b.upper_fence == Approx(0.01 * a.upper_fence).epsilon(1e-12));
    CHECK(b.lower_fence == Approx(0.01 * a.lower_fence).epsilon(1e-12));
  }
}

TEST_CASE("PITSE tail index", "[tails]") {
  const auto x = pareto_fixture(1000, 2.0, 1.0, 200, 2024);
  const auto fit = fit_pareto_tail(x, 1.0, Tail::kUpper);
  CHECK(fit.k == 1000);
  CHECK(fit.shape > 1.85);
  CHECK(fit.shape < 2.15);
  CHECK(std::abs(fit.shape - hill_estimate(x, 1.0, Tail::kUpper)) <= 0.2);

  SECTION("moment condition holds at the root") {
    double acc = 0.0;
    for (double v : x) {
      if (v > 1.0) acc += std::pow(1.0 / v, 0.5 * fit.shape);
    }
    CHECK(acc / 1000.0 == Approx(1.0 / 1.5).epsilon(1e-7));
  }
  SECTION("lower tail through the inverse transform") {
    std::vector<double> inv;
    for (double v : x) inv.push_back(50.0 / v);
    const auto low = fit_pareto_tail(inv, 50.0, Tail::kLower);
    CHECK(low.shape == Approx(fit.shape).epsilon(1e-9));
    CHECK(low.k == 1000);
  }
  SECTION("scale invariance of the shape") {
    auto scaled = x;
    for (auto& v : scaled) v *= 1e4;
    CHECK(fit_pareto_tail(scaled, 1e4, Tail::kUpper).shape == Approx(fit.shape).epsilon(1e-9));
  }
  SECTION("errors") {
    std::vector<double> equal(30, 5.0);
    equal.push_back(1.0);
    CHECK_THROWS_AS(fit_pareto_tail(equal, 2.0, Tail::kUpper), EstimationFailure);
    const auto few = pareto_fixture(5, 2.0, 1.0, 20, 3);
    CHECK_THROWS_AS(fit_pareto_tail(few, 1.0, Tail::kUpper), InsufficientSampleError);
    CHECK_THROWS_AS(fit_pareto_tail(x, 1e9, Tail::kUpper), DomainError);
  }
}

TEST_CASE("tail replacement", "[tails]") {
  const auto f = outlier_fixture();
  const auto sample = unit_weight_sample(f.contaminated);

  SECTION("no flags leaves the sample unchanged") {
    OutlierFlags none;
    none.flags.assign(sample.size(), false);
    none.upper_fence = 1e300;
    auto x = sample.incomes();
    std::sort(x.begin(), x.end());
    const auto fit = fit_pareto_tail(x, x[x.size() / 2], Tail::kUpper, 1);
    CHECK(treat_tails(sample, none, fit, std::nullopt).incomes() == sample.incomes());
  }

  const auto result = treat_sample(sample);
  const auto treated = result.sample.incomes();
  CHECK(result.replaced >= 1);
  REQUIRE(treated.size() == f.contaminated.size());

  SECTION("only flagged values change; weights and labels do not") {
    const auto flags = detect_outliers(f.contaminated);
    for (std::size_t i = 0; i < treated.size(); ++i) {
      if (!flags.flags[i]) CHECK(treated[i] == f.contaminated[i]);
      CHECK(result.sample[i].weight == sample[i].weight);
      CHECK(result.sample[i].household_id == sample[i].household_id);
    }
    CHECK(treated[f.outlier] < f.contaminated[f.outlier]);
    CHECK(result.sample.n_prime() == sample.n_prime());
  }
  SECTION("rank preservation") {
    const auto before = stable_order(f.contaminated);
    std::vector<double> after;
    for (std::size_t i : before) after.push_back(treated[i]);
    CHECK(std::is_sorted(after.begin(), after.end()));
  }
  SECTION("idempotence") {
    const auto again = treat_sample(result.sample);
    CHECK(again.replaced == 0);
    CHECK(again.sample.incomes() == treated);
  }
  SECTION("Gini does not increase") {
    CHECK(ht_estimate(result.sample, MeasureSpec::gini()).theta <=
          ht_estimate(sample, MeasureSpec::gini()).theta);
  }
  SECTION("treated GE(2) and CV close at least half of the gap") {
    const auto clean = unit_weight_sample(f.clean);
    for (const auto& spec : {MeasureSpec::ge(2.0), MeasureSpec::cv()}) {
      const double target = ht_estimate(clean, spec).theta;
      const double raw = ht_estimate(sample, spec).theta;
      const double fixed = ht_estimate(result.sample, spec).theta;
      INFO(spec.label() << " clean=" << target << " raw=" << raw << " treated=" << fixed);
      CHECK(std::abs(fixed - target) <= 0.5 * std::abs(raw - target));
    }
  }
  SECTION("scale equivariance of the replacements") {
    auto scaled = f.contaminated;
    for (auto& v : scaled) v *= 3.0;
    const auto r2 = treat_sample(unit_weight_sample(scaled)).sample.incomes();
    for (std::size_t i = 0; i < r2.size(); ++i) CHECK(r2[i] == Approx(3.0 * treated[i]).epsilon(1e-9));
  }
}

TEST_CASE("per-domain treatment and skipped tails", "[tails]") {
  auto a = outlier_fixture().contaminated;
  auto b = lognormal_fixture(100, 99);
  std::vector<double> y = a;
  y.insert(y.end(), b.begin(), b.end());
  std::vector<std::string> domain(a.size(), "north");
  domain.insert(domain.end(), b.size(), "south");
  auto base = WeightedSample::from_incomes(y, std::vector<double>(y.size(), 2.0));
  const WeightedSample sample(base.observations(), {{"region", domain}});

  TailTreatmentOptions opts;
  opts.domain_column = "region";
  const auto r = treat_sample(sample, opts);
  const auto treated = r.sample.incomes();
  for (std::size_t i = a.size(); i < y.size(); ++i) {
    if (treated[i] != y[i]) {
      // a southern change can only come from the southern fences
      const auto flags = detect_outliers(b);
      CHECK(flags.flags[i - a.size()]);
    }
  }
  CHECK(treated[outlier_fixture().outlier] < y[outlier_fixture().outlier]);

  SECTION("too few exceedances: skipped with a warning") {
    TailTreatmentOptions strict;
    strict.k_min = 100000;
    const auto skipped = treat_sample(sample, strict);
    CHECK(skipped.replaced == 0);
    CHECK(skipped.sample.incomes() == y);
    CHECK_FALSE(skipped.warnings.empty());
  }
}
