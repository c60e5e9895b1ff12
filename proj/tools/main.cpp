#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "ineq/bias.hpp"
#include "ineq/errors.hpp"
#include "ineq/io.hpp"
#include "ineq/resampling.hpp"
#include "ineq/simulation.hpp"
#include "ineq/tails.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kInputError = 2, kEstimationError = 3, kRunQuality = 4 };

const std::vector<std::string> kDefaultMeasures{"gini", "ge:0", "ge:1", "atkinson:0.5", "atkinson:1"};

// Estimation errors are reported with the measure that raised them.
class MeasureError : public ineq::Error {
 public:
  using ineq::Error::Error;
};

std::vector<ineq::MeasureSpec> parse_measures(const std::vector<std::string>& texts) {
  std::vector<ineq::MeasureSpec> out;
  for (const auto& t : texts.empty() ? kDefaultMeasures : texts) {
    try {
      out.push_back(ineq::MeasureSpec::parse(t));
    } catch (const ineq::Error& e) {
      throw ineq::InputError(fmt::format("--measure {}: {}", t, e.what()));
    }
  }
  return out;
}

// Writes to the file when a path is given, else to stdout.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty()) {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ineq::InputError(fmt::format("cannot write '{}'", path));
  write(out);
  if (!out) throw ineq::Error(fmt::format("error writing '{}'", path));
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

struct SampleOptions {
  std::string input;
  std::string strata;
  bool treat = false;
  std::string domain;
  bool no_collapse = false;
};

void add_sample_options(CLI::App& cmd, SampleOptions& o) {
  cmd.add_option("-i,--input", o.input, "Survey microdata CSV")->required();
  cmd.add_option("--strata", o.strata, "CSV of stratum_id,households giving M_h");
  cmd.add_flag("--treat", o.treat, "Detect and replace tail outliers before estimating");
  cmd.add_option("--domain", o.domain, "Category column whose groups are treated separately");
  cmd.add_flag("--no-collapse", o.no_collapse, "Fail on single-PSU strata instead of collapsing");
}

struct LoadedSample {
  ineq::WeightedSample sample;
  ineq::DesignFrame frame;
};

LoadedSample load(const SampleOptions& o) {
  auto sample = ineq::io::read_sample(o.input);
  if (o.treat) {
    ineq::TailTreatmentOptions t;
    if (!o.domain.empty()) t.domain_column = o.domain;
    auto treated = ineq::treat_sample(sample, t);
    print_warnings(treated.warnings);
    sample = std::move(treated.sample);
  }
  std::map<std::string, double> households;
  if (!o.strata.empty()) households = ineq::io::read_strata(o.strata);
  auto frame = ineq::DesignFrame::from_sample(sample, households);
  return {std::move(sample), std::move(frame)};
}

int cmd_estimate(const SampleOptions& so, const std::vector<std::string>& measure_texts,
                 bool correct, bool clamp, const std::string& out) {
  const auto measures = parse_measures(measure_texts);
  const auto data = load(so);
  ineq::BiasOptions options;
  options.variance.collapse_singletons = !so.no_collapse;
  options.clamp_to_support = clamp;
  std::vector<ineq::BiasReport> reports;
  for (const auto& m : measures) {
    try {
      if (correct) {
        reports.push_back(ineq::corrected_estimate(data.sample, data.frame, m, options));
      } else {
        ineq::BiasReport r;
        r.measure = m;
        r.estimate = ineq::ht_estimate(data.sample, m);
        r.theta_hat = r.estimate.theta;
        r.pieces = ineq::variance_pieces(data.sample, data.frame, m, options.variance);
        r.n_prime = data.sample.n_prime();
        reports.push_back(r);
      }
    } catch (const ineq::InputError&) {
      throw;
    } catch (const ineq::Error& e) {
      throw MeasureError(fmt::format("measure {}: {}", m.label(), e.what()));
    }
  }
  emit(out, [&](std::ostream& os) { ineq::io::write_estimates(os, reports, correct); });
  return kOk;
}

struct BootstrapArgs {
  std::vector<std::string> measures;
  std::size_t replicates = 500;
  std::uint64_t seed = 1;
  std::string macro_strata;
  std::string margins;
  bool uncorrected = false;
  bool clamp = false;
  std::string out;
  std::string summary;
};

int cmd_bootstrap(const SampleOptions& so, const BootstrapArgs& a) {
  const auto measures = parse_measures(a.measures);
  const auto data = load(so);
  ineq::BootstrapOptions opts;
  opts.replicates = a.replicates;
  opts.seed = a.seed;
  if (!a.macro_strata.empty()) opts.macro_strata = a.macro_strata;
  if (!a.margins.empty()) opts.calibration = ineq::io::read_margins(a.margins);
  const auto reps = ineq::bootstrap_resample(data.sample, opts);

  ineq::BiasOptions bias;
  bias.variance.collapse_singletons = !so.no_collapse;
  bias.clamp_to_support = a.clamp;
  std::vector<std::string> labels;
  std::vector<ineq::BootstrapResult> results;
  for (const auto& m : measures) {
    labels.push_back(m.label());
    try {
      results.push_back(ineq::bootstrap_variance(data.sample, data.frame, m, reps, !a.uncorrected, bias));
    } catch (const ineq::RunQualityError& e) {
      throw ineq::RunQualityError(fmt::format("measure {}: {}", m.label(), e.what()));
    } catch (const ineq::InputError&) {
      throw;
    } catch (const ineq::Error& e) {
      throw MeasureError(fmt::format("measure {}: {}", m.label(), e.what()));
    }
    for (const auto& [b, why] : results.back().failures) {
      std::cerr << fmt::format("warning: {}: replicate {} dropped: {}\n", m.label(), b + 1, why);
    }
  }
  if (!a.out.empty()) {
    emit(a.out, [&](std::ostream& os) {
      ineq::io::write_replicates(os, labels, results, reps.replicates());
    });
  }
  emit(a.summary, [&](std::ostream& os) {
    ineq::io::write_bootstrap_summary(os, labels, results, reps.replicates());
  });
  return kOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const auto config = ineq::io::read_scenario(config_path);
  const auto digest = ineq::cli::sha256_file(config_path);
  const auto report = ineq::run_scenario(config);
  print_warnings(report.warnings);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ineq::InputError(fmt::format("cannot create '{}': {}", out_dir, ec.message()));
  const auto file = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
  std::vector<std::string> outputs{"estimates.csv", "metrics.csv", "moments.csv"};
  emit(file("estimates.csv"), [&](std::ostream& os) { ineq::io::write_scenario_estimates(os, report); });
  emit(file("metrics.csv"), [&](std::ostream& os) { ineq::io::write_metrics(os, report); });
  emit(file("moments.csv"), [&](std::ostream& os) { ineq::io::write_moments(os, report); });
  if (config.fit_distributions) {
    emit(file("fits.csv"), [&](std::ostream& os) { ineq::io::write_fits(os, report); });
    outputs.push_back("fits.csv");
  }

  nlohmann::ordered_json manifest;
  manifest["tool"] = "ineq";
  manifest["version"] = INEQ_VERSION;
  manifest["config"] = fs::path(config_path).filename().string();
  manifest["config_sha256"] = digest;
  manifest["seed"] = config.seed;
  manifest["model"] = config.model.name();
  manifest["sampler"] = ineq::sampler_name(config.sampler);
  manifest["replications"] = report.replications;
  manifest["failed_replications"] = report.failures.size();
  manifest["warnings"] = report.warnings;
  manifest["outputs"] = outputs;
  manifest["libraries"] = ineq::cli::library_versions();
  emit(file("manifest.json"), [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
  return kOk;
}

int cmd_treat(const std::string& input, const std::string& domain, const std::string& out,
              const std::string& fits_path) {
  const auto sample = ineq::io::read_sample(input);
  ineq::TailTreatmentOptions t;
  if (!domain.empty()) t.domain_column = domain;
  const auto result = ineq::treat_sample(sample, t);
  print_warnings(result.warnings);
  emit(out, [&](std::ostream& os) { ineq::io::write_sample(os, result.sample); });
  if (!fits_path.empty()) {
    emit(fits_path, [&](std::ostream& os) {
      os << "domain,tail,threshold,shape,k\n";
      for (const auto& f : result.fits) {
        os << f.domain << ',' << (f.tail == ineq::Tail::kUpper ? "upper" : "lower") << ','
           << ineq::io::format_general(f.threshold) << ',' << ineq::io::format_general(f.shape)
           << ',' << f.k << '\n';
      }
    });
  }
  std::cerr << fmt::format("replaced {} value(s)\n", result.replaced);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inequality measures with survey-design bias correction"};
  app.set_version_flag("--version", std::string(INEQ_VERSION));
  app.require_subcommand(1);

  SampleOptions sample_opts;
  std::vector<std::string> measures;
  bool correct = false;
  bool clamp = false;
  std::string out;

  auto* estimate = app.add_subcommand("estimate", "Point estimates, bias and variance pieces per measure");
  add_sample_options(*estimate, sample_opts);
  estimate->add_option("-m,--measure", measures, "gini, cv, ge:ALPHA or atkinson:EPS (repeatable)");
  estimate->add_flag("--correct", correct, "Report bias and bias-corrected estimates");
  estimate->add_flag("--clamp", clamp, "Clamp corrected values to the measure's support");
  estimate->add_option("-o,--out", out, "Output CSV (stdout when omitted)");

  BootstrapArgs boot;
  auto* bootstrap = app.add_subcommand("bootstrap", "Bootstrap variance of (corrected) estimates");
  add_sample_options(*bootstrap, sample_opts);
  bootstrap->add_option("-m,--measure", boot.measures, "Measure spec (repeatable)");
  bootstrap->add_option("-B,--B", boot.replicates, "Number of replicates")->capture_default_str();
  bootstrap->add_option("--seed", boot.seed, "Random seed")->capture_default_str();
  bootstrap->add_option("--macro-strata", boot.macro_strata, "Category column of macro-strata");
  bootstrap->add_option("--calibrate", boot.margins, "Margins CSV (variable,category,total)");
  bootstrap->add_flag("--uncorrected", boot.uncorrected, "Bootstrap the plug-in estimator instead");
  bootstrap->add_flag("--clamp", boot.clamp, "Clamp corrected values to the measure's support");
  bootstrap->add_option("-o,--out", boot.out, "Replicate estimates CSV");
  bootstrap->add_option("--summary", boot.summary, "Summary CSV (stdout when omitted)");

  std::string config;
  std::string out_dir;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo scenario from an INI file");
  simulate->add_option("-c,--config", config, "Scenario INI file")->required();
  simulate->add_option("-o,--out", out_dir, "Report directory")->required();

  std::string treat_input;
  std::string treat_domain;
  std::string treat_out;
  std::string treat_fits;
  auto* treat = app.add_subcommand("treat", "Replace tail outliers with fitted Pareto quantiles");
  treat->add_option("-i,--input", treat_input, "Survey microdata CSV")->required();
  treat->add_option("--domain", treat_domain, "Category column whose groups are treated separately");
  treat->add_option("-o,--out", treat_out, "Treated CSV (stdout when omitted)");
  treat->add_option("--fits", treat_fits, "CSV of fitted tails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*estimate) return cmd_estimate(sample_opts, measures, correct, clamp, out);
    if (*bootstrap) return cmd_bootstrap(sample_opts, boot);
    if (*simulate) return cmd_simulate(config, out_dir);
    if (*treat) return cmd_treat(treat_input, treat_domain, treat_out, treat_fits);
  } catch (const ineq::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const ineq::RunQualityError& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kRunQuality;
  } catch (const ineq::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEstimationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEstimationError;
  }
  return kOk;
}
