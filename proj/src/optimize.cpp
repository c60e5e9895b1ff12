#include "ineq/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ineq/errors.hpp"

namespace ineq {

namespace {

struct Counted {
  const std::function<double(const std::vector<double>&)>& f;
  std::size_t calls = 0;

  double operator()(const std::vector<double>& x) {
    ++calls;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }
};

bool run_simplex(Counted& f, std::vector<std::vector<double>>& pts, std::vector<double>& vals,
                 const NelderMeadOptions& opt) {
  const std::size_t n = pts.size() - 1;
  std::vector<std::size_t> order(n + 1);
  while (f.calls < opt.max_evaluations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const double best = vals[order.front()];
    const double worst = vals[order.back()];
    if (std::isfinite(worst) &&
        std::abs(worst - best) <= opt.tolerance * (std::abs(best) + std::abs(worst)) * 0.5 + 1e-300) {
      return true;
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[order[i]][d] / static_cast<double>(n);
    }
    const std::size_t w = order.back();
    const auto along = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t d = 0; d < n; ++d) x[d] = centroid[d] + t * (pts[w][d] - centroid[d]);
      return x;
    };
    auto xr = along(-1.0);
    const double fr = f(xr);
    const double second_worst = vals[order[n - 1]];
    if (fr < best) {
      auto xe = along(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        pts[w] = std::move(xe);
        vals[w] = fe;
      } else {
        pts[w] = std::move(xr);
        vals[w] = fr;
      }
      continue;
    }
    if (fr < second_worst) {
      pts[w] = std::move(xr);
      vals[w] = fr;
      continue;
    }
    const bool outside = fr < vals[w];
    auto xc = along(outside ? -0.5 : 0.5);
    const double fc = f(xc);
    if (fc < (outside ? fr : vals[w])) {
      pts[w] = std::move(xc);
      vals[w] = fc;
      continue;
    }
    const auto& xb = pts[order.front()];
    for (std::size_t i = 1; i <= n; ++i) {
      auto& p = pts[order[i]];
      for (std::size_t d = 0; d < n; ++d) p[d] = xb[d] + 0.5 * (p[d] - xb[d]);
      vals[order[i]] = f(p);
    }
  }
  return false;
}

void build_simplex(Counted& f, const std::vector<double>& x0, double step,
                   std::vector<std::vector<double>>& pts, std::vector<double>& vals) {
  const std::size_t n = x0.size();
  pts.assign(n + 1, x0);
  for (std::size_t d = 0; d < n; ++d) {
    pts[d + 1][d] += step * std::max(1.0, std::abs(x0[d]));
  }
  vals.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);
}

}  // namespace

OptimizationResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                               std::vector<double> start, const NelderMeadOptions& options) {
  if (start.empty()) throw DomainError("nelder_mead: empty start vector");
  Counted f{objective};
  std::vector<std::vector<double>> pts;
  std::vector<double> vals;
  build_simplex(f, start, options.initial_step, pts, vals);
  bool ok = run_simplex(f, pts, vals, options);
  if (ok) {
    const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    const auto x = pts[best];
    build_simplex(f, x, options.initial_step * 0.1, pts, vals);
    ok = run_simplex(f, pts, vals, options);
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return OptimizationResult{pts[best], vals[best], f.calls, ok && std::isfinite(vals[best])};
}

OptimizationResult multi_start_minimize(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::vector<std::vector<double>>& starts, const NelderMeadOptions& options) {
  OptimizationResult best;
  best.value = std::numeric_limits<double>::infinity();
  std::vector<std::string> trace;
  for (const auto& s : starts) {
    auto r = nelder_mead(objective, s, options);
    trace.push_back(fmt::format("start {} -> value {} after {} evaluations ({})", s, r.value,
                                r.evaluations, r.converged ? "converged" : "not converged"));
    if (r.converged && r.value < best.value) best = std::move(r);
  }
  if (!best.converged) {
    throw EstimationFailure(fmt::format("optimizer did not converge: {}", fmt::join(trace, "; ")));
  }
  return best;
}

}  // namespace ineq
