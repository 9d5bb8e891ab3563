#include "shelab/output.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "shelab/error.hpp"

namespace shelab::output {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  return out;
}

}  // namespace

void write_csv(std::ostream& os, const Table& t) {
  os << "# " << t.header.dump() << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
}

Table read_csv(std::istream& is) {
  Table t;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw ValidationError("CSV output is missing its '# {json}' header");
  try {
    t.header = nlohmann::json::parse(line.substr(2));
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("CSV header is not valid JSON");
  }
  if (std::getline(is, line)) t.columns = split(line, ',');
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split(line, ',')) row.push_back(std::stod(cell));
    t.rows.push_back(std::move(row));
  }
  return t;
}

nlohmann::json load_output(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open " + path);
  if (is.peek() == '#') {
    const Table t = read_csv(is);
    nlohmann::json doc = t.header;
    doc["columns"] = t.columns;
    doc["rows"] = t.rows;
    return doc;
  }
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(path + " is neither a CSV output nor JSON");
  }
}

nlohmann::json merge_bundle(const std::vector<nlohmann::json>& docs, const std::vector<std::string>& names) {
  nlohmann::json items = nlohmann::json::array();
  nlohmann::json summary = nlohmann::json::array();
  int n_pass = 0, n_fail = 0, n_inconclusive = 0;
  auto tally = [&](const std::string& s) {
    if (s == "pass") ++n_pass;
    if (s == "fail") ++n_fail;
    if (s == "inconclusive") ++n_inconclusive;
  };
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto& d = docs[i];
    const std::string name = i < names.size() ? names[i] : "input" + std::to_string(i);
    if (!d.is_object() || !d.contains("schema_version")) throw ValidationError(name + ": missing schema_version");
    if (d["schema_version"] != kSchemaVersion) {
      throw ValidationError(name + ": schema_version " + d["schema_version"].dump() + " does not match " +
                            std::to_string(kSchemaVersion));
    }
    items.push_back({{"source", name}, {"document", d}});
    const std::string kind = d.value("schema", d.value("kind", std::string("unknown")));
    if (d.contains("criteria")) {
      for (const auto& c : d["criteria"]) {
        const std::string st = c.value("status", std::string("unknown"));
        tally(st);
        summary.push_back({{"source", name}, {"item", c.value("name", std::string())}, {"status", st}});
      }
    } else if (d.contains("status") && d["status"].is_string()) {
      const std::string st = d["status"].get<std::string>();
      tally(st);
      summary.push_back({{"source", name}, {"item", kind}, {"status", st}});
    } else {
      summary.push_back({{"source", name}, {"item", kind}, {"status", "n/a"}});
    }
  }
  return {{"schema", "shelab.bundle"},
          {"schema_version", kSchemaVersion},
          {"items", items},
          {"summary", summary},
          {"counts", {{"pass", n_pass}, {"fail", n_fail}, {"inconclusive", n_inconclusive}}}};
}

}  // namespace shelab::output
