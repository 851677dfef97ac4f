#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "bsp/belief.hpp"
#include "bsp/scenario.hpp"
#include "bsp/session.hpp"

namespace bsp {

/// Version of the CSV column contract written by write_session_csv and
/// write_candidates_csv.
inline constexpr int kCsvSchemaVersion = 1;

std::string scenario_to_json(const Scenario& s);
/// Parses and assembles a scenario. Throws SchemaError on malformed input.
Scenario scenario_from_json(const std::string& text);

void save_scenario(const std::filesystem::path& path, const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

/// JSON header (layout, mean) with the root factor as a Matrix Market string.
std::string belief_to_json(const GaussianBelief& b);
GaussianBelief belief_from_json(const std::string& text);

struct CsvOptions {
  bool timings = true;  // false writes 0 for wall-clock columns
};

/// One row per candidate and mode.
void write_session_csv(std::ostream& os, const std::vector<SessionReport>& reports, const CsvOptions& opts = {});

/// One row per candidate with every mode's objective side by side.
void write_candidates_csv(std::ostream& os, const SessionReport& report, const CsvOptions& opts = {});

std::string session_summary_json(const SessionReport& report, const CsvOptions& opts = {});

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);
/// Fixed-width human-readable table.
void write_bench_table(std::ostream& os, const std::vector<BenchRow>& rows);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace bsp
