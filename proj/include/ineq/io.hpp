#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ineq/bias.hpp"
#include "ineq/resampling.hpp"
#include "ineq/sample.hpp"
#include "ineq/simulation.hpp"

namespace ineq::io {

// Comma-separated, RFC 4180 quoting, optional UTF-8 BOM, LF or CRLF endings.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line;  // source line of each row
};

CsvTable parse_csv(std::istream& in, std::string_view source);
CsvTable read_csv(const std::string& path);

// Locale-independent number parsing; throws InputError naming the cell.
double parse_double(std::string_view text, std::string_view where);
long long parse_integer(std::string_view text, std::string_view where);
bool parse_bool(std::string_view text, std::string_view where);

inline constexpr const char* kSampleColumns[] = {"household_id", "person_id", "stratum_id", "psu_id",
                                                 "sr_flag",      "weight",    "income"};

// Survey microdata.  Columns beyond the mandatory ones become category columns.
WeightedSample parse_sample(const CsvTable& table, std::string_view source);
WeightedSample read_sample(const std::string& path);
void write_sample(std::ostream& out, const WeightedSample& sample);

// stratum_id,households
std::map<std::string, double> read_strata(const std::string& path);
// variable,category,total
CalibrationSpec read_margins(const std::string& path);

// INI scenario description; unknown sections or keys are rejected.
ScenarioConfig parse_scenario(std::istream& in, std::string_view source);
ScenarioConfig read_scenario(const std::string& path);

// Fixed 12 decimals with negative zero printed as 0.
std::string format_fixed(double value);
// Shortest round-trip text for replicate columns.
std::string format_exact(double value);
// %.12g
std::string format_general(double value);

void write_estimates(std::ostream& out, const std::vector<BiasReport>& reports, bool corrected);
void write_replicates(std::ostream& out, const std::vector<std::string>& measures,
                      const std::vector<BootstrapResult>& results, std::size_t replicates);
void write_bootstrap_summary(std::ostream& out, const std::vector<std::string>& measures,
                             const std::vector<BootstrapResult>& results, std::size_t replicates);
void write_scenario_estimates(std::ostream& out, const ScenarioReport& report);
void write_metrics(std::ostream& out, const ScenarioReport& report);
void write_moments(std::ostream& out, const ScenarioReport& report);
void write_fits(std::ostream& out, const ScenarioReport& report);

}  // namespace ineq::io
