#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "ineq/errors.hpp"
#include "ineq/measures.hpp"
#include "ineq/simulation.hpp"
#include "oracles.hpp"

using namespace ineq;
using Catch::Approx;

TEST_CASE("population generation", "[simulation]") {
  SECTION("log-normal location") {
    const auto pop = generate_population(PopulationModel::lognormal(9.64, 0.43), 10000, 1);
    double s = 0.0;
    for (double y : pop.incomes()) s += std::log(y);
    CHECK(std::abs(s / 10000.0 - 9.64) < 0.43 * 3.0 / 100.0);
  }
  SECTION("GB2 draws are positive") {
    const auto pop = generate_population(PopulationModel::gb2(4.11, 2.16e4, 0.47, 0.92), 10000, 2);
    CHECK(pop.min() > 0.0);
  }
  SECTION("near-degenerate log-normal has near-zero inequality") {
    const auto pop = generate_population(PopulationModel::lognormal(9.64, 1e-6), 2000, 3);
    for (const auto& spec : {MeasureSpec::gini(), MeasureSpec::cv(), MeasureSpec::ge(0.0),
                             MeasureSpec::ge(2.0), MeasureSpec::atkinson(1.0)}) {
      CHECK(std::abs(population_value(pop, spec).theta) < 1e-3);
    }
  }
  SECTION("seeded") {
    const auto a = generate_population(PopulationModel::dagum(3.0, 1e4, 0.8), 100, 9);
    const auto b = generate_population(PopulationModel::dagum(3.0, 1e4, 0.8), 100, 9);
    const auto c = generate_population(PopulationModel::dagum(3.0, 1e4, 0.8), 100, 10);
    CHECK(std::equal(a.incomes().begin(), a.incomes().end(), b.incomes().begin()));
    CHECK_FALSE(std::equal(a.incomes().begin(), a.incomes().end(), c.incomes().begin()));
  }
  CHECK_THROWS_AS(PopulationModel::lognormal(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(PopulationModel::gb2(1.0, 1.0, -1.0, 1.0), DomainError);
}

TEST_CASE("probability weights", "[simulation]") {
  // Pareto(2, 1): F^-1(k/s) = (1 - k/s)^(-1/2)
  const auto ref = PopulationModel::pareto(2.0, 1.0);
  const auto cut = [](double p) { return std::pow(1.0 - p, -0.5); };
  const IncomePopulation pop({0.5, 1.0, cut(0.01), cut(0.01) * 1.0001, 0.5 * (cut(0.5) + cut(0.51)),
                              cut(0.99) * 1.0001, 1e6});
  const auto p = assign_probability_weights(pop, 100, ref);
  CHECK(p[0] == 10.0);
  CHECK(p[1] == 10.0);
  CHECK(p[2] == 10.0);  // at the first cut point
  CHECK(p[3] == Approx(10.0 - 9.0 / 99.0));
  CHECK(p[4] == Approx(10.0 - 450.0 / 99.0).epsilon(1e-12));
  CHECK(p[4] == Approx(5.4545).margin(1e-4));
  CHECK(p[5] == Approx(1.0));
  CHECK(p[6] == Approx(1.0));
  CHECK(default_reference_model(pop).params() == std::vector<double>{2.0, 0.5});
}

TEST_CASE("Midzuno inclusion probabilities", "[simulation]") {
  SECTION("equal size measures") {
    const std::vector<double> p(20, 3.0);
    for (double pi : midzuno_inclusion_probabilities(p, 5)) CHECK(pi == Approx(0.25).epsilon(1e-15));
  }
  SECTION("sum to n") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(1.0, 10.0);
    std::vector<double> p(37);
    for (auto& v : p) v = u(rng);
    const auto pi = midzuno_inclusion_probabilities(p, 11);
    CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == Approx(11.0).epsilon(1e-14));
  }
  SECTION("exhaustive enumeration on N = 4, n = 2") {
    const std::vector<double> q{0.4, 0.3, 0.2, 0.1};
    // P(first = i, second = j) = q_i / 3
    std::vector<double> pi_enum(4, 0.0);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        if (i == j) continue;
        pi_enum[i] += q[i] / 3.0;
        pi_enum[j] += q[i] / 3.0;
      }
    }
    const auto pi = midzuno_inclusion_probabilities(q, 2);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(pi[i] - pi_enum[i]) < 1e-15);
  }
  SECTION("errors") {
    CHECK_THROWS_AS(midzuno_inclusion_probabilities(std::vector<double>{1.0, 2.0}, 2), DomainError);
    CHECK_THROWS_AS(midzuno_inclusion_probabilities(std::vector<double>{1.0, 0.0, 1.0}, 2), DomainError);
  }
}

TEST_CASE("Midzuno draws match the design", "[simulation][oracle]") {
  const std::vector<double> q{0.4, 0.3, 0.2, 0.1};
  const auto pi = midzuno_inclusion_probabilities(q, 2);
  const int reps = 200000;
  std::vector<double> freq(4, 0.0);
  std::map<std::pair<std::size_t, std::size_t>, int> pairs;
  for (int r = 0; r < reps; ++r) {
    auto rng = make_stream(99, static_cast<std::uint64_t>(r));
    auto units = midzuno_draw(q, 2, rng);
    REQUIRE(units.size() == 2);
    REQUIRE(units[0] != units[1]);
    for (auto u : units) freq[u] += 1.0 / reps;
    std::sort(units.begin(), units.end());
    ++pairs[{units[0], units[1]}];
  }
  for (int i = 0; i < 4; ++i) CHECK(std::abs(freq[i] - pi[i]) < 0.01);
  // chi-square over the six unordered pairs, P({i,j}) = (q_i + q_j) / 3; df 5, alpha 0.001
  double chi2 = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      const double expected = reps * (q[i] + q[j]) / 3.0;
      const double observed = pairs[{i, j}];
      chi2 += (observed - expected) * (observed - expected) / expected;
    }
  }
  CHECK(chi2 < 20.515);
}

TEST_CASE("Midzuno joint probabilities give the exact HT variance", "[simulation][oracle]") {
  // Enumerate ordered draws on N = 7, n = 3 and compare the variance of the HT
  // total with the Sen-Yates-Grundy form built from pi_i and
  // pi_ij = (q_i + q_j)(n-1)/(N-1) + (1 - q_i - q_j)(n-1)(n-2)/((N-1)(N-2)).
  const std::vector<double> p{1.0, 2.0, 3.0, 1.5, 4.0, 2.5, 6.0};
  const std::vector<double> y{3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0};
  const std::size_t N = p.size();
  const std::size_t n = 3;
  const double total_p = std::accumulate(p.begin(), p.end(), 0.0);
  const auto pi = midzuno_inclusion_probabilities(p, n);

  double e1 = 0.0;
  double e2 = 0.0;
  std::vector<double> pi_enum(N, 0.0);
  for (std::size_t f = 0; f < N; ++f) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < N; ++i) {
      if (i != f) rest.push_back(i);
    }
    const double pairs = static_cast<double>((N - 1) * (N - 2) / 2);
    for (std::size_t a = 0; a < rest.size(); ++a) {
      for (std::size_t b = a + 1; b < rest.size(); ++b) {
        const double prob = p[f] / total_p / pairs;
        double ht = 0.0;
        for (std::size_t u : {f, rest[a], rest[b]}) {
          ht += y[u] / pi[u];
          pi_enum[u] += prob;
        }
        e1 += prob * ht;
        e2 += prob * ht * ht;
      }
    }
  }
  const double var_enum = e2 - e1 * e1;
  double syg = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    CHECK(pi_enum[i] == Approx(pi[i]).epsilon(1e-12));
    for (std::size_t j = i + 1; j < N; ++j) {
      const double qi = p[i] / total_p;
      const double qj = p[j] / total_p;
      const double nn = static_cast<double>(n);
      const double NN = static_cast<double>(N);
      const double pij = (qi + qj) * (nn - 1.0) / (NN - 1.0) +
                         (1.0 - qi - qj) * (nn - 1.0) * (nn - 2.0) / ((NN - 1.0) * (NN - 2.0));
      syg += (pi[i] * pi[j] - pij) * std::pow(y[i] / pi[i] - y[j] / pi[j], 2);
    }
  }
  CHECK(e1 == Approx(std::accumulate(y.begin(), y.end(), 0.0)).epsilon(1e-12));
  CHECK(var_enum == Approx(syg).epsilon(1e-10));
}

TEST_CASE("Midzuno sample carries inverse-probability weights", "[simulation]") {
  const auto pop = generate_population(PopulationModel::lognormal(0.0, 1.0), 50, 4);
  const std::vector<double> p(50, 1.0);
  const auto s = midzuno_sample(pop, p, 10, std::uint64_t{5});
  CHECK(s.size() == 10);
  for (const auto& o : s.observations()) CHECK(o.weight == Approx(5.0));
  CHECK_THROWS_AS(midzuno_sample(pop, p, 50, std::uint64_t{5}), DomainError);
}

TEST_CASE("two-stage sampler", "[simulation]") {
  const auto pop = build_synthetic_population(PopulationModel::lognormal(9.64, 0.43), 2000, {}, 11);
  SECTION("census") {
    const auto draw = two_stage_sample(pop, {1.0, std::nullopt}, std::uint64_t{1});
    CHECK(draw.sample.size() == pop.person_count());
    for (const auto& o : draw.sample.observations()) CHECK(o.weight == 1.0);
  }
  SECTION("HT population size and take-all strata") {
    double acc = 0.0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
      const auto draw = two_stage_sample(pop, {0.1, std::nullopt}, static_cast<std::uint64_t>(r));
      const double nhat = draw.sample.total_weight();
      CHECK(std::abs(nhat / pop.person_count() - 1.0) < 0.1 * 3);
      acc += nhat;
      std::set<std::string> strata;
      for (const auto& o : draw.sample.observations()) strata.insert(o.stratum_id);
      CHECK(strata.count("S01") == 1);
      CHECK(strata.count("S02") == 1);
    }
    CHECK(std::abs(acc / reps / pop.person_count() - 1.0) < 0.1);
  }
  SECTION("households share income and weight; labels are consistent") {
    const auto draw = two_stage_sample(pop, {0.2, std::nullopt}, std::uint64_t{3});
    std::map<std::string, std::pair<double, double>> hh;
    for (const auto& o : draw.sample.observations()) {
      auto [it, fresh] = hh.try_emplace(o.household_id, o.income, o.weight);
      if (!fresh) {
        CHECK(it->second.first == o.income);
        CHECK(it->second.second == o.weight);
      }
    }
    CHECK(draw.sample.has_category("domain"));
  }
  SECTION("tiny rate skips strata with a warning") {
    const auto draw = two_stage_sample(pop, {0.0005, std::size_t{2}}, std::uint64_t{3});
    CHECK_FALSE(draw.warnings.empty());
  }
  CHECK_THROWS_AS(two_stage_sample(pop, {0.0, std::nullopt}, std::uint64_t{1}), DomainError);
}

TEST_CASE("ARB and AARE", "[simulation]") {
  const std::vector<double> truth{1.0};
  const auto a = arb_aare({{0.9, 1.1}}, truth);
  CHECK(std::abs(a.mean_arb) < 1e-15);
  CHECK(a.mean_aare == Approx(0.1));
  const auto perfect = arb_aare({{2.0, 2.0}, {0.5}}, std::vector<double>{2.0, 0.5});
  CHECK(perfect.mean_arb == 0.0);
  CHECK(perfect.mean_aare == 0.0);
  const auto zero = arb_aare({{1.0}, {2.0}}, std::vector<double>{0.0, 2.0});
  CHECK(std::isnan(zero.arb[0]));
  CHECK(zero.mean_arb == 0.0);
  CHECK(zero.warnings.size() == 1);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(1.0, 0.3);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<std::vector<double>> est(3, std::vector<double>(20));
    for (auto& row : est) {
      for (auto& v : row) v = z(rng);
    }
    const auto r = arb_aare(est, std::vector<double>{1.0, 0.8, 1.3});
    CHECK(r.mean_aare >= std::abs(r.mean_arb));
  }
}

TEST_CASE("empirical moments", "[simulation]") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z;
  std::exponential_distribution<double> ex;
  std::vector<double> normal(100000);
  std::vector<double> expo(100000);
  for (auto& v : normal) v = z(rng);
  for (auto& v : expo) v = ex(rng);
  const auto mn = empirical_moments(normal);
  CHECK(std::abs(mn.skewness) < 0.05);
  CHECK(std::abs(mn.excess_kurtosis) < 0.1);
  CHECK(empirical_moments(expo).skewness == Approx(2.0).margin(0.1));
  std::vector<double> two;
  for (int i = 0; i < 50; ++i) {
    two.push_back(-1.0);
    two.push_back(1.0);
  }
  const auto m2 = empirical_moments(two);
  CHECK(m2.skewness == 0.0);
  CHECK(m2.excess_kurtosis == Approx(-2.0).epsilon(1e-14));
  CHECK_THROWS_AS(empirical_moments(std::vector<double>(10, 1.0)), DegenerateError);
  CHECK_THROWS_AS(empirical_moments(std::vector<double>{1.0, 2.0, 3.0}), InsufficientSampleError);
}

TEST_CASE("scenario runner", "[simulation]") {
  SECTION("one-replicate census reproduces population values") {
    ScenarioConfig c;
    c.sampler = SamplerKind::kTwoStage;
    c.population_size = 1500;
    c.rate = 1.0;
    c.replications = 1;
    const auto r = run_scenario(c);
    REQUIRE(r.failures.empty());
    for (const auto& m : r.metrics) {
      INFO(m.domain << " " << m.measure);
      CHECK(std::abs(m.arb_uncorrected) < 1e-12);
      CHECK(std::abs(m.aare_uncorrected) < 1e-12);
    }
  }
  SECTION("deterministic under the seed") {
    ScenarioConfig c;
    c.sample_size = 25;
    c.replications = 40;
    c.seed = 5;
    c.fit_distributions = true;
    const auto a = run_scenario(c);
    const auto b = run_scenario(c);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].report.theta_hat == b.records[i].report.theta_hat);
      CHECK(a.records[i].report.theta_corrected == b.records[i].report.theta_corrected);
    }
    REQUIRE(a.fits.size() == b.fits.size());
    for (std::size_t i = 0; i < a.fits.size(); ++i) CHECK(a.fits[i].fit.aic == b.fits[i].fit.aic);
  }
  SECTION("failure accounting") {
    ScenarioConfig c;
    c.sample_size = 2;
    c.replications = 20;
    c.measures = {MeasureSpec::gini()};
    CHECK_THROWS_AS(run_scenario(c), RunQualityError);
  }
  SECTION("invalid configuration") {
    ScenarioConfig c;
    c.sample_size = 20000;
    CHECK_THROWS_AS(run_scenario(c), InputError);
  }
}

TEST_CASE("bias correction reduces ARB under SRS", "[simulation][montecarlo]") {
  for (std::size_t n : {20u, 50u}) {
    ScenarioConfig c;
    c.sample_size = n;
    c.replications = 2000;
    c.seed = 314 + n;
    c.measures = {MeasureSpec::gini(), MeasureSpec::ge(0.0), MeasureSpec::ge(1.0),
                  MeasureSpec::atkinson(0.5), MeasureSpec::atkinson(1.0)};
    const auto r = run_scenario(c);
    for (const auto* label : {"ge:0", "ge:1", "atkinson:0.5", "atkinson:1"}) {
      const auto& m = r.metric("all", label);
      INFO("n=" << n << " " << label << " arb=" << m.arb_uncorrected << " corrected=" << m.arb_corrected);
      CHECK(std::abs(m.arb_corrected) < std::abs(m.arb_uncorrected));
    }
    // The printed Gini correction removes 2G/n' while the plug-in estimator is
    // biased by about -G/n: the corrected ARB lands near +1/n.
    const auto& g = r.metric("all", "gini");
    const double inv_n = 1.0 / static_cast<double>(n);
    CHECK(g.arb_uncorrected < -0.5 * inv_n);
    CHECK(g.arb_corrected > 0.5 * inv_n);
    CHECK(g.arb_corrected < 2.0 * inv_n);
  }
}

TEST_CASE("Gini estimator skewness grows as n shrinks", "[simulation][montecarlo]") {
  double previous = -1.0;
  for (std::size_t n : {200u, 80u, 30u}) {
    ScenarioConfig c;
    c.sample_size = n;
    c.replications = 4000;
    c.seed = 77;
    c.measures = {MeasureSpec::gini()};
    const auto r = run_scenario(c);
    double skew = 0.0;
    for (const auto& m : r.moments) {
      if (m.estimator == "corrected") skew = m.moments.skewness;
    }
    INFO("n=" << n << " skewness=" << skew);
    CHECK(skew > 0.0);
    CHECK(skew > previous);
    previous = skew;
  }
}
