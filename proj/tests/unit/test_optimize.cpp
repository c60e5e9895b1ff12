#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "ineq/errors.hpp"
#include "ineq/optimize.hpp"

using namespace ineq;
using Catch::Approx;

TEST_CASE("Nelder-Mead minimises smooth functions", "[optimize]") {
  const auto quad = [](const std::vector<double>& x) {
    return (x[0] - 1.0) * (x[0] - 1.0) + 3.0 * (x[1] + 2.0) * (x[1] + 2.0) + 5.0;
  };
  const auto r = nelder_mead(quad, {0.0, 0.0});
  CHECK(r.converged);
  CHECK(r.x[0] == Approx(1.0).margin(1e-3));
  CHECK(r.x[1] == Approx(-2.0).margin(1e-3));
  CHECK(r.value == Approx(5.0).epsilon(1e-8));

  const auto rosen = [](const std::vector<double>& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  const auto rr = multi_start_minimize(rosen, {{-1.2, 1.0}, {2.0, 2.0}, {0.0, 0.0}});
  CHECK(rr.x[0] == Approx(1.0).margin(1e-2));
  CHECK(rr.x[1] == Approx(1.0).margin(2e-2));
}

TEST_CASE("Nelder-Mead treats non-finite values as infeasible", "[optimize]") {
  const auto f = [](const std::vector<double>& x) {
    return x[0] <= 0.0 ? std::numeric_limits<double>::quiet_NaN() : x[0] - std::log(x[0]);
  };
  const auto r = nelder_mead(f, {3.0});
  CHECK(r.x[0] == Approx(1.0).margin(1e-3));
}

TEST_CASE("multi-start failure carries a trace", "[optimize]") {
  const auto nan = [](const std::vector<double>&) { return std::numeric_limits<double>::quiet_NaN(); };
  try {
    multi_start_minimize(nan, {{0.0}, {1.0}}, {1e-8, 200, 0.1});
    FAIL("expected EstimationFailure");
  } catch (const EstimationFailure& e) {
    CHECK(std::string(e.what()).find("start") != std::string::npos);
  }
}
