#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace shelab::output {

inline constexpr int kSchemaVersion = 1;

// CSV body under a single "# {json}" header line.
struct Table {
  nlohmann::json header;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_csv(std::ostream& os, const Table& t);
Table read_csv(std::istream& is);

// Loads a CSV (header line) or JSON output file and returns its JSON document;
// for CSV the rows are attached under "rows".
nlohmann::json load_output(const std::string& path);

// Merges prior run outputs into one bundle with a status summary. Throws
// ValidationError when schema versions disagree.
nlohmann::json merge_bundle(const std::vector<nlohmann::json>& docs, const std::vector<std::string>& names);

}  // namespace shelab::output
