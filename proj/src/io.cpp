#include "ineq/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "ineq/errors.hpp"

namespace ineq::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path));
  return in;
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::size_t column_index(const CsvTable& t, std::string_view name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  return it == t.header.end() ? t.header.size() : static_cast<std::size_t>(it - t.header.begin());
}

std::vector<std::size_t> require_columns(const CsvTable& t, std::string_view source,
                                         std::initializer_list<std::string_view> names) {
  std::vector<std::size_t> idx;
  for (auto name : names) {
    const auto i = column_index(t, name);
    if (i == t.header.size()) {
      throw InputError(fmt::format("{}: missing required column '{}'", source, name));
    }
    idx.push_back(i);
  }
  return idx;
}

std::string cell_name(std::string_view source, std::size_t line, std::string_view column) {
  return fmt::format("{}: line {}, column '{}'", source, line, column);
}

}  // namespace

CsvTable parse_csv(std::istream& in, std::string_view source) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);

  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  const auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) {
      if (table.header.empty()) {
        table.header = std::move(record);
      } else {
        if (record.size() != table.header.size()) {
          throw InputError(fmt::format("{}: line {}: expected {} fields, found {}", source,
                                       record_line, table.header.size(), record.size()));
        }
        table.rows.push_back(std::move(record));
        table.line.push_back(record_line);
      }
    }
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw InputError(fmt::format("{}: line {}: stray quote", source, line));
        }
        quoted = true;
        field_was_quoted = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        field += c;
        break;
      case '\n':
        end_record();
        record_line = ++line;
        break;
      default:
        field += c;
    }
  }
  if (quoted) throw InputError(fmt::format("{}: unterminated quoted field", source));
  if (!field.empty() || !record.empty() || field_was_quoted) end_record();
  if (table.header.empty()) throw InputError(fmt::format("{}: missing header row", source));
  for (auto& h : table.header) h = std::string(trim(h));
  std::set<std::string> seen;
  for (const auto& h : table.header) {
    if (h.empty()) throw InputError(fmt::format("{}: empty column name in header", source));
    if (!seen.insert(h).second) throw InputError(fmt::format("{}: duplicate column '{}'", source, h));
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  auto in = open_input(path);
  return parse_csv(in, path);
}

double parse_double(std::string_view text, std::string_view where) {
  const auto t = trim(text);
  if (t.empty()) throw InputError(fmt::format("{}: empty value", where));
  // from_chars rejects a leading '+', which is harmless to accept
  const auto body = t.front() == '+' ? t.substr(1) : t;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
  if (ec != std::errc() || ptr != body.data() + body.size() || !std::isfinite(v)) {
    throw InputError(fmt::format("{}: '{}' is not a finite number", where, text));
  }
  return v;
}

long long parse_integer(std::string_view text, std::string_view where) {
  const auto t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw InputError(fmt::format("{}: '{}' is not an integer", where, text));
  }
  return v;
}

bool parse_bool(std::string_view text, std::string_view where) {
  std::string t(trim(text));
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw InputError(fmt::format("{}: '{}' is not a boolean", where, text));
}

WeightedSample parse_sample(const CsvTable& table, std::string_view source) {
  const auto idx = require_columns(table, source,
                                   {"household_id", "person_id", "stratum_id", "psu_id", "sr_flag",
                                    "weight", "income"});
  std::vector<std::size_t> extra;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (std::find(idx.begin(), idx.end(), c) == idx.end()) extra.push_back(c);
  }
  if (table.rows.empty()) throw InputError(fmt::format("{}: no data rows", source));

  std::vector<WeightedObservation> obs;
  obs.reserve(table.rows.size());
  WeightedSample::CategoryColumns categories;
  std::set<std::pair<std::string, std::string>> persons;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line[r];
    const auto text = [&](std::size_t k) {
      const auto v = trim(row[idx[k]]);
      if (v.empty()) {
        throw InputError(fmt::format("{}: empty mandatory cell", cell_name(source, line, kSampleColumns[k])));
      }
      return std::string(v);
    };
    WeightedObservation o;
    o.household_id = text(0);
    o.person_id = text(1);
    o.stratum_id = text(2);
    o.psu_id = text(3);
    const auto sr = text(4);
    if (sr != "0" && sr != "1") {
      throw InputError(fmt::format("{}: sr_flag must be 0 or 1, got '{}'",
                                   cell_name(source, line, "sr_flag"), sr));
    }
    o.sr_flag = sr == "1";
    o.weight = parse_double(text(5), cell_name(source, line, "weight"));
    if (o.weight < 0.0) {
      throw InputError(fmt::format("{}: weight must be non-negative, got {}",
                                   cell_name(source, line, "weight"), o.weight));
    }
    o.income = parse_double(text(6), cell_name(source, line, "income"));
    if (!(o.income > 0.0)) {
      throw InputError(fmt::format("{}: income must be positive, got {}",
                                   cell_name(source, line, "income"), o.income));
    }
    if (!persons.emplace(o.household_id, o.person_id).second) {
      throw InputError(fmt::format("{}: line {}: duplicate person '{}' in household '{}'", source,
                                   line, o.person_id, o.household_id));
    }
    for (std::size_t c : extra) categories[table.header[c]].push_back(std::string(trim(row[c])));
    obs.push_back(std::move(o));
  }
  try {
    return WeightedSample(std::move(obs), std::move(categories));
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError(fmt::format("{}: {}", source, e.what()));
  }
}

WeightedSample read_sample(const std::string& path) { return parse_sample(read_csv(path), path); }

void write_sample(std::ostream& out, const WeightedSample& sample) {
  out << "household_id,person_id,stratum_id,psu_id,sr_flag,weight,income";
  for (const auto& [name, column] : sample.categories()) out << ',' << quote(name);
  out << '\n';
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto& o = sample[i];
    out << quote(o.household_id) << ',' << quote(o.person_id) << ',' << quote(o.stratum_id) << ','
        << quote(o.psu_id) << ',' << (o.sr_flag ? '1' : '0') << ',' << format_exact(o.weight) << ','
        << format_exact(o.income);
    for (const auto& [name, column] : sample.categories()) out << ',' << quote(column[i]);
    out << '\n';
  }
}

std::map<std::string, double> read_strata(const std::string& path) {
  const auto t = read_csv(path);
  const auto idx = require_columns(t, path, {"stratum_id", "households"});
  std::map<std::string, double> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string id(trim(t.rows[r][idx[0]]));
    const double m = parse_double(t.rows[r][idx[1]], cell_name(path, t.line[r], "households"));
    if (!(m > 0.0)) {
      throw InputError(fmt::format("{}: households must be positive", cell_name(path, t.line[r], "households")));
    }
    if (!out.emplace(id, m).second) {
      throw InputError(fmt::format("{}: line {}: stratum '{}' listed twice", path, t.line[r], id));
    }
  }
  return out;
}

CalibrationSpec read_margins(const std::string& path) {
  const auto t = read_csv(path);
  const auto idx = require_columns(t, path, {"variable", "category", "total"});
  CalibrationSpec spec;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string variable(trim(t.rows[r][idx[0]]));
    const std::string category(trim(t.rows[r][idx[1]]));
    const double total = parse_double(t.rows[r][idx[2]], cell_name(path, t.line[r], "total"));
    if (!(total > 0.0)) {
      throw InputError(fmt::format("{}: total must be positive", cell_name(path, t.line[r], "total")));
    }
    if (!spec.margins[variable].emplace(category, total).second) {
      throw InputError(fmt::format("{}: line {}: margin {}={} listed twice", path, t.line[r],
                                   variable, category));
    }
  }
  if (spec.margins.empty()) throw InputError(fmt::format("{}: no margins", path));
  return spec;
}

namespace {

std::vector<double> parse_list(std::string_view text, std::string_view where) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto stop = std::min(text.find(',', start), text.size());
    out.push_back(parse_double(text.substr(start, stop - start), where));
    start = stop + 1;
  }
  return out;
}

PopulationModel parse_model(std::string_view family, std::string_view params, std::string_view where) {
  try {
    return PopulationModel::make(parse_model_family(trim(family)), parse_list(params, where));
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError(fmt::format("{}: {}", where, e.what()));
  }
}

}  // namespace

ScenarioConfig parse_scenario(std::istream& in, std::string_view source) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(fmt::format("{}: line {}: {}", source, e.line(), e.message()));
  }

  static const std::map<std::string, std::set<std::string>> known{
      {"population", {"model", "params", "size"}},
      {"sampling",
       {"design", "n", "rate", "psus_sampled", "probability_bands", "reference_model",
        "reference_params"}},
      {"frame", {"strata", "sr_strata", "psus_per_stratum", "domains", "min_persons", "max_persons"}},
      {"run",
       {"replications", "seed", "treat_tails", "measures", "fit_distributions", "shrink_boundary",
        "max_failure_rate"}}};
  for (const auto& [section, body] : tree) {
    const auto s = known.find(section);
    if (s == known.end()) throw InputError(fmt::format("{}: unknown section [{}]", source, section));
    if (body.empty()) throw InputError(fmt::format("{}: '{}' is outside any section", source, section));
    for (const auto& [key, value] : body) {
      if (!s->second.count(key)) {
        throw InputError(fmt::format("{}: unknown key '{}' in [{}]", source, key, section));
      }
    }
  }

  const auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(path)) return std::string(trim(*v));
    return std::nullopt;
  };
  const auto where = [&](const std::string& path) { return fmt::format("{}: {}", source, path); };
  const auto count = [&](const std::string& path) -> std::optional<std::size_t> {
    auto v = get(path);
    if (!v) return std::nullopt;
    const long long n = parse_integer(*v, where(path));
    if (n < 0) throw InputError(fmt::format("{}: must be non-negative", where(path)));
    return static_cast<std::size_t>(n);
  };

  ScenarioConfig c;
  if (auto model = get("population.model")) {
    const auto params = get("population.params");
    if (!params) throw InputError(fmt::format("{}: population.params is required with population.model", source));
    c.model = parse_model(*model, *params, where("population"));
  }
  if (auto v = count("population.size")) c.population_size = *v;
  if (auto v = get("sampling.design")) {
    try {
      c.sampler = parse_sampler(*v);
    } catch (const Error& e) {
      throw InputError(fmt::format("{}: {}", where("sampling.design"), e.what()));
    }
  }
  if (auto v = count("sampling.n")) c.sample_size = *v;
  if (auto v = get("sampling.rate")) c.rate = parse_double(*v, where("sampling.rate"));
  if (auto v = count("sampling.psus_sampled")) c.psus_sampled = *v;
  if (auto v = count("sampling.probability_bands")) c.probability_bands = *v;
  if (auto v = get("sampling.reference_model")) {
    const auto params = get("sampling.reference_params");
    if (!params) throw InputError(fmt::format("{}: sampling.reference_params is required", source));
    c.reference = parse_model(*v, *params, where("sampling.reference"));
  }
  if (auto v = count("frame.strata")) c.frame.strata = *v;
  if (auto v = count("frame.sr_strata")) c.frame.sr_strata = *v;
  if (auto v = count("frame.psus_per_stratum")) c.frame.psus_per_stratum = *v;
  if (auto v = count("frame.domains")) c.frame.domains = *v;
  if (auto v = count("frame.min_persons")) c.frame.min_persons = *v;
  if (auto v = count("frame.max_persons")) c.frame.max_persons = *v;
  if (auto v = count("run.replications")) c.replications = *v;
  if (auto v = get("run.seed")) {
    const auto seed = parse_integer(*v, where("run.seed"));
    if (seed < 0) throw InputError(fmt::format("{}: must be non-negative", where("run.seed")));
    c.seed = static_cast<std::uint64_t>(seed);
  }
  if (auto v = get("run.treat_tails")) c.treat_tails = parse_bool(*v, where("run.treat_tails"));
  if (auto v = get("run.fit_distributions")) c.fit_distributions = parse_bool(*v, where("run.fit_distributions"));
  if (auto v = get("run.shrink_boundary")) c.shrink_boundary = parse_bool(*v, where("run.shrink_boundary"));
  if (auto v = get("run.max_failure_rate")) c.max_failure_rate = parse_double(*v, where("run.max_failure_rate"));
  if (auto v = get("run.measures")) {
    c.measures.clear();
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        c.measures.push_back(MeasureSpec::parse(trim(item)));
      } catch (const Error& e) {
        throw InputError(fmt::format("{}: {}", where("run.measures"), e.what()));
      }
    }
  }
  c.validate();
  return c;
}

ScenarioConfig read_scenario(const std::string& path) {
  auto in = open_input(path);
  return parse_scenario(in, path);
}

std::string format_fixed(double value) {
  if (std::isnan(value)) return "NA";
  auto s = fmt::format("{:.12f}", value);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string format_exact(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value == 0.0 ? 0.0 : value);
  return std::string(buf, ptr);
}

std::string format_general(double value) {
  if (std::isnan(value)) return "NA";
  return fmt::format("{:.12g}", value == 0.0 ? 0.0 : value);
}

void write_estimates(std::ostream& out, const std::vector<BiasReport>& reports, bool corrected) {
  out << "measure,theta_hat,bias_hat,theta_corrected,v_mu,v_gamma,cov,n_prime\n";
  for (const auto& r : reports) {
    out << r.measure.label() << ',' << format_fixed(r.theta_hat) << ','
        << (corrected ? format_fixed(r.bias_hat) : "NA") << ','
        << (corrected ? format_fixed(r.theta_corrected) : "NA") << ','
        << format_general(r.pieces.v_mu) << ',' << format_general(r.pieces.v_gamma) << ','
        << format_general(r.pieces.cov_mu_gamma) << ',' << r.n_prime << '\n';
  }
}

void write_replicates(std::ostream& out, const std::vector<std::string>& measures,
                      const std::vector<BootstrapResult>& results, std::size_t replicates) {
  out << "replicate";
  for (const auto& m : measures) out << ',' << m;
  out << '\n';
  std::vector<std::vector<double>> grid(replicates, std::vector<double>(results.size(), NAN));
  for (std::size_t j = 0; j < results.size(); ++j) {
    for (std::size_t k = 0; k < results[j].replicate_index.size(); ++k) {
      grid[results[j].replicate_index[k]][j] = results[j].replicate_estimates[k];
    }
  }
  for (std::size_t b = 0; b < replicates; ++b) {
    out << b + 1;
    for (double v : grid[b]) out << ',' << format_exact(v);
    out << '\n';
  }
}

void write_bootstrap_summary(std::ostream& out, const std::vector<std::string>& measures,
                             const std::vector<BootstrapResult>& results, std::size_t replicates) {
  out << "measure,estimate,variance,sd,cv,replicates,failed\n";
  for (std::size_t j = 0; j < results.size(); ++j) {
    const auto& r = results[j];
    out << measures[j] << ',' << format_fixed(r.point_estimate) << ',' << format_general(r.variance)
        << ',' << format_general(r.sd) << ',' << format_general(r.cv) << ','
        << r.replicate_estimates.size() << ',' << replicates - r.replicate_estimates.size() << '\n';
  }
}

void write_scenario_estimates(std::ostream& out, const ScenarioReport& report) {
  out << "replicate,domain,measure,theta_hat,bias_hat,theta_corrected\n";
  for (const auto& r : report.records) {
    out << r.replicate + 1 << ',' << report.domains[r.domain] << ',' << report.measures[r.measure]
        << ',' << format_fixed(r.report.theta_hat) << ',' << format_fixed(r.report.bias_hat) << ','
        << format_fixed(r.report.theta_corrected) << '\n';
  }
}

void write_metrics(std::ostream& out, const ScenarioReport& report) {
  out << "domain,measure,truth,arb,aare,arb_corrected,aare_corrected,replicates\n";
  for (const auto& m : report.metrics) {
    out << m.domain << ',' << m.measure << ',' << format_fixed(m.truth) << ','
        << format_fixed(m.arb_uncorrected) << ',' << format_fixed(m.aare_uncorrected) << ','
        << format_fixed(m.arb_corrected) << ',' << format_fixed(m.aare_corrected) << ','
        << m.replicates << '\n';
  }
}

void write_moments(std::ostream& out, const ScenarioReport& report) {
  out << "domain,measure,estimator,skewness,excess_kurtosis\n";
  for (const auto& m : report.moments) {
    out << m.domain << ',' << m.measure << ',' << m.estimator << ','
        << format_fixed(m.moments.skewness) << ',' << format_fixed(m.moments.excess_kurtosis) << '\n';
  }
}

void write_fits(std::ostream& out, const ScenarioReport& report) {
  out << "domain,measure,family,param1,param2,loglik,aic,bic,n\n";
  for (const auto& f : report.fits) {
    out << f.domain << ',' << f.measure << ',' << unit_family_name(f.fit.family) << ','
        << format_general(f.fit.param1) << ',' << format_general(f.fit.param2) << ','
        << format_general(f.fit.loglik) << ',' << format_general(f.fit.aic) << ','
        << format_general(f.fit.bic) << ',' << f.fit.n << '\n';
  }
}

}  // namespace ineq::io
