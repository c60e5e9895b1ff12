#include <map>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ineq/bias.hpp"
#include "ineq/errors.hpp"
#include "ineq/io.hpp"
#include "ineq/measures.hpp"
#include "ineq/resampling.hpp"
#include "ineq/simulation.hpp"
#include "ineq/tails.hpp"

namespace py = pybind11;

namespace {

py::dict to_dict(const ineq::BiasReport& r) {
  py::dict d;
  d["measure"] = r.measure.label();
  d["theta_hat"] = r.theta_hat;
  d["bias_hat"] = r.bias_hat;
  d["theta_corrected"] = r.theta_corrected;
  d["mu"] = r.estimate.mu;
  d["gamma"] = r.estimate.gamma;
  d["v_mu"] = r.pieces.v_mu;
  d["v_gamma"] = r.pieces.v_gamma;
  d["cov"] = r.pieces.cov_mu_gamma;
  d["n_prime"] = r.n_prime;
  return d;
}

ineq::MeasureSpec measure(const std::string& text) { return ineq::MeasureSpec::parse(text); }

ineq::WeightedSample make_sample(const std::vector<double>& incomes,
                                 const std::optional<std::vector<double>>& weights) {
  return ineq::WeightedSample::from_incomes(
      incomes, weights ? *weights : std::vector<double>(incomes.size(), 1.0));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Inequality measures for survey data with design-based bias correction";
  m.attr("__version__") = INEQ_VERSION;

  auto base = py::register_exception<ineq::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ineq::InputError>(m, "InputError", base.ptr());
  py::register_exception<ineq::DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ineq::InsufficientSampleError>(m, "InsufficientSampleError", base.ptr());
  py::register_exception<ineq::DegenerateError>(m, "DegenerateError", base.ptr());
  py::register_exception<ineq::DesignError>(m, "DesignError", base.ptr());
  py::register_exception<ineq::EstimationFailure>(m, "EstimationFailure", base.ptr());
  py::register_exception<ineq::RankConsistencyError>(m, "RankConsistencyError", base.ptr());
  py::register_exception<ineq::CalibrationError>(m, "CalibrationError", base.ptr());
  py::register_exception<ineq::RunQualityError>(m, "RunQualityError", base.ptr());

  py::class_<ineq::WeightedSample>(m, "Sample")
      .def(py::init(&make_sample), py::arg("incomes"), py::arg("weights") = py::none(),
           "Single-stratum sample; every row is its own household")
      .def_static("read_csv", &ineq::io::read_sample, py::arg("path"))
      .def("__len__", &ineq::WeightedSample::size)
      .def_property_readonly("n_prime", &ineq::WeightedSample::n_prime)
      .def_property_readonly("total_weight", &ineq::WeightedSample::total_weight)
      .def_property_readonly("incomes", &ineq::WeightedSample::incomes)
      .def_property_readonly("weights", &ineq::WeightedSample::weights)
      .def("category", [](const ineq::WeightedSample& s, const std::string& name) {
        return s.category(name);
      });

  m.def(
      "population_value",
      [](const std::vector<double>& incomes, const std::string& spec) {
        return ineq::population_value(ineq::IncomePopulation(incomes), measure(spec)).theta;
      },
      py::arg("incomes"), py::arg("measure"), "Measure of a finite population");

  m.def(
      "estimate",
      [](const ineq::WeightedSample& sample, const std::string& spec) {
        return ineq::ht_estimate(sample, measure(spec)).theta;
      },
      py::arg("sample"), py::arg("measure"), "Plug-in estimate from design weights");

  m.def(
      "bias_correct",
      [](const ineq::WeightedSample& sample, const std::string& spec,
         const std::map<std::string, double>& strata_households, bool collapse, bool clamp) {
        const auto frame = ineq::DesignFrame::from_sample(sample, strata_households);
        ineq::BiasOptions options;
        options.variance.collapse_singletons = collapse;
        options.clamp_to_support = clamp;
        return to_dict(ineq::corrected_estimate(sample, frame, measure(spec), options));
      },
      py::arg("sample"), py::arg("measure"), py::arg("strata_households") = std::map<std::string, double>{},
      py::arg("collapse") = true, py::arg("clamp") = false,
      "Estimate, approximate bias, corrected estimate and variance pieces");

  m.def(
      "detect_outliers",
      [](const std::vector<double>& values) {
        const auto f = ineq::detect_outliers(values);
        py::dict d;
        d["flags"] = f.flags;
        d["lower_fence"] = f.lower_fence;
        d["upper_fence"] = f.upper_fence;
        d["warnings"] = f.warnings;
        return d;
      },
      py::arg("values"), "Generalized-boxplot outlier flags");

  m.def(
      "pareto_tail_index",
      [](const std::vector<double>& values, double threshold, bool upper) {
        return ineq::fit_pareto_tail(values, threshold, upper ? ineq::Tail::kUpper : ineq::Tail::kLower)
            .shape;
      },
      py::arg("values"), py::arg("threshold"), py::arg("upper") = true,
      "PITSE estimate of the Pareto tail index beyond the threshold");

  m.def(
      "treat_tails",
      [](const ineq::WeightedSample& sample, std::optional<std::string> domain) {
        ineq::TailTreatmentOptions options;
        options.domain_column = std::move(domain);
        auto r = ineq::treat_sample(sample, options);
        return py::make_tuple(std::move(r.sample), r.replaced, r.warnings);
      },
      py::arg("sample"), py::arg("domain") = py::none(),
      "Returns (treated sample, number replaced, warnings)");

  m.def(
      "bootstrap",
      [](const ineq::WeightedSample& sample, const std::string& spec, std::size_t replicates,
         std::uint64_t seed, std::optional<std::string> macro_strata,
         std::optional<std::map<std::string, std::map<std::string, double>>> margins, bool corrected,
         const std::map<std::string, double>& strata_households) {
        ineq::BootstrapOptions options;
        options.replicates = replicates;
        options.seed = seed;
        options.macro_strata = std::move(macro_strata);
        if (margins) {
          ineq::CalibrationSpec c;
          c.margins = *margins;
          options.calibration = c;
        }
        const auto reps = ineq::bootstrap_resample(sample, options);
        const auto frame = ineq::DesignFrame::from_sample(sample, strata_households);
        const auto r = ineq::bootstrap_variance(sample, frame, measure(spec), reps, corrected);
        py::dict d;
        d["estimate"] = r.point_estimate;
        d["variance"] = r.variance;
        d["sd"] = r.sd;
        d["cv"] = r.cv;
        d["replicates"] = r.replicate_estimates;
        d["failed"] = r.failures.size();
        return d;
      },
      py::arg("sample"), py::arg("measure"), py::arg("replicates") = 500, py::arg("seed") = 1,
      py::arg("macro_strata") = py::none(), py::arg("margins") = py::none(),
      py::arg("corrected") = true, py::arg("strata_households") = std::map<std::string, double>{});

  m.def(
      "calibrate",
      [](const ineq::WeightedSample& sample, const std::vector<double>& weights,
         const std::map<std::string, std::map<std::string, double>>& margins) {
        ineq::CalibrationSpec spec;
        spec.margins = margins;
        return ineq::calibrate(weights, sample, spec);
      },
      py::arg("sample"), py::arg("weights"), py::arg("margins"), "Raking to margin totals");

  m.def("midzuno_inclusion_probabilities",
        [](const std::vector<double>& p, std::size_t n) {
          return ineq::midzuno_inclusion_probabilities(p, n);
        },
        py::arg("sizes"), py::arg("n"));

  m.def(
      "simulate",
      [](const std::string& config_path) {
        const auto report = ineq::run_scenario(ineq::io::read_scenario(config_path));
        py::list rows;
        for (const auto& r : report.metrics) {
          py::dict d;
          d["domain"] = r.domain;
          d["measure"] = r.measure;
          d["truth"] = r.truth;
          d["arb"] = r.arb_uncorrected;
          d["aare"] = r.aare_uncorrected;
          d["arb_corrected"] = r.arb_corrected;
          d["aare_corrected"] = r.aare_corrected;
          rows.append(d);
        }
        return rows;
      },
      py::arg("config"), "Runs an INI scenario and returns its metrics rows");
}
