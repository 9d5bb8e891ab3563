#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "shelab/error.hpp"
#include "shelab/output.hpp"

using namespace shelab;

TEST_CASE("csv round trip is exact") {
  output::Table t;
  t.header = {{"schema_version", output::kSchemaVersion}, {"command", "test"}, {"seed", 7}};
  t.columns = {"a", "b"};
  t.rows = {{0.1, 1.0 / 3.0}, {-2.5e-300, 123456789.123456789}, {INFINITY, 0.0}};
  std::stringstream ss;
  output::write_csv(ss, t);
  CHECK(ss.str().rfind("# {", 0) == 0);
  const output::Table r = output::read_csv(ss);
  CHECK(r.header == t.header);
  CHECK(r.columns == t.columns);
  REQUIRE(r.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) CHECK(r.rows[i] == t.rows[i]);
}

TEST_CASE("csv without a header line is rejected") {
  std::stringstream ss("a,b\n1,2\n");
  CHECK_THROWS_AS(output::read_csv(ss), ValidationError);
}

TEST_CASE("load_output and merge_bundle") {
  const std::string csv = "bundle_a.csv", js = "bundle_b.json";
  {
    output::Table t;
    t.header = {{"schema_version", 1}, {"schema", "shelab.rate"}};
    t.columns = {"s", "rate"};
    t.rows = {{1.0, 2.0}};
    std::ofstream os(csv);
    output::write_csv(os, t);
    std::ofstream oj(js);
    oj << nlohmann::json{{"schema_version", 1},
                         {"schema", "shelab.acceptance"},
                         {"criteria", {{{"name", "1"}, {"status", "pass"}}, {{"name", "2"}, {"status", "fail"}}}}}
              .dump();
  }
  const auto a = output::load_output(csv);
  CHECK(a["rows"][0][1] == 2.0);
  const auto b = output::load_output(js);
  const auto bundle = output::merge_bundle({a, b}, {csv, js});
  CHECK(bundle["schema_version"] == output::kSchemaVersion);
  CHECK(bundle["items"].size() == 2);
  CHECK(bundle["summary"].size() == 3);
  CHECK(bundle["counts"]["pass"] == 1);
  CHECK(bundle["counts"]["fail"] == 1);

  const auto empty = output::merge_bundle({}, {});
  CHECK(empty["items"].empty());
  CHECK(empty["counts"]["pass"] == 0);

  auto other = b;
  other["schema_version"] = 2;
  CHECK_THROWS_AS(output::merge_bundle({a, other}, {csv, js}), ValidationError);
  CHECK_THROWS_AS(output::load_output("does_not_exist.csv"), ValidationError);
  std::remove(csv.c_str());
  std::remove(js.c_str());
}
