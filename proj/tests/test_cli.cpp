#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "pipeline.hpp"

using pipeline::run;
using nlohmann::json;

namespace {

std::filesystem::path workdir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("replan_cli_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("full pipeline through the command line") {
  const auto dir = std::filesystem::temp_directory_path() / "replan_cli_pipeline";
  const pipeline::Result r = pipeline::run_all(dir);
  INFO(r.first_failure());
  REQUIRE(r.all_ok());
  const json eval = json::parse(r.steps[4].second.out);
  CHECK(eval["total"].get<double>() ==
        doctest::Approx(eval["obj_score"].get<double>() + eval["satisfaction"].get<double>()));
  const json summary = json::parse(r.steps[2].second.out);
  CHECK(summary["episodes"] == 50);
  CHECK(std::filesystem::exists(dir / "run" / "train_log.jsonl"));
  CHECK(std::filesystem::exists(dir / "run" / "evaluation.json"));
  CHECK(golden::matches("pipeline_scheme.svg", r.svg));
  std::filesystem::remove_all(dir);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({"render", "--scheme", "x.geojson"}).code == 1);
  CHECK(run({"baseline", "--method", "tabu", "--region", "a", "--demands", "b"}).code == 1);
  const auto c = run({"--json-errors", "render"});
  CHECK(c.code == 1);
  CHECK(json::parse(c.err)["error"] == "usage");
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("missing and malformed inputs exit 2") {
  const auto dir = workdir("errors");
  const auto c = run({"--json-errors", "render", "--scheme", (dir / "nope.geojson").string(), "--out",
                      (dir / "x.svg").string()});
  CHECK(c.code == 2);
  const json e = json::parse(c.err);
  CHECK(e["error"] == "io");

  pipeline::write(dir / "bad.geojson", R"({"type": "FeatureCollection", "features": [
    {"type": "Feature", "geometry": {"type": "Polygon", "coordinates": [[[0,0],[1,0],[1,1],[0,0]]]},
     "properties": {"id": "a", "status": "fixed", "type": "Park"}}]})");
  const auto v = run({"render", "--scheme", (dir / "bad.geojson").string(), "--out", (dir / "x.svg").string()});
  CHECK(v.code == 2);
  CHECK(v.err.find("feature 'a'") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("evaluate rejects incomplete schemes") {
  const auto dir = workdir("incomplete");
  pipeline::write(dir / "spec.json", pipeline::kSpec);
  REQUIRE(run({"gen-scenario", "--spec", (dir / "spec.json").string(), "--out", (dir / "r.geojson").string()}).code == 0);
  pipeline::write(dir / "config.json", pipeline::kConfig);
  REQUIRE(run({"objectives", "--region", (dir / "r.geojson").string(), "--config", (dir / "config.json").string(),
               "--out", (dir / "d.json").string()}).code == 0);
  const auto c = run({"evaluate", "--scheme", (dir / "r.geojson").string(), "--demands", (dir / "d.json").string()});
  CHECK(c.code == 2);
  CHECK(c.err.find("still vacant") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("remote advisor without a key exits 3") {
  const auto dir = workdir("remote");
  pipeline::write(dir / "spec.json", pipeline::kSpec);
  REQUIRE(run({"gen-scenario", "--spec", (dir / "spec.json").string(), "--out", (dir / "r.geojson").string()}).code == 0);
  ::unsetenv("REPLAN_API_KEY");
  const auto c = run({"--json-errors", "objectives", "--region", (dir / "r.geojson").string(), "--advisor", "remote",
                      "--out", (dir / "d.json").string()});
  CHECK(c.code == 3);
  CHECK(json::parse(c.err)["error"] == "advisor");
  std::filesystem::remove_all(dir);
}

TEST_CASE("objectives need a planning style") {
  const auto dir = workdir("style");
  pipeline::write(dir / "spec.json", pipeline::kSpec);
  REQUIRE(run({"gen-scenario", "--spec", (dir / "spec.json").string(), "--out", (dir / "r.geojson").string()}).code == 0);
  const auto c = run({"objectives", "--region", (dir / "r.geojson").string(), "--out", (dir / "d.json").string()});
  CHECK(c.code == 2);
  CHECK(c.err.find("style") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("gen-scenario seed override and determinism") {
  const auto dir = workdir("gen");
  pipeline::write(dir / "spec.json", pipeline::kSpec);
  const auto spec = (dir / "spec.json").string();
  run({"gen-scenario", "--spec", spec, "--out", (dir / "a.geojson").string()});
  run({"gen-scenario", "--spec", spec, "--out", (dir / "b.geojson").string()});
  run({"--seed", "5", "gen-scenario", "--spec", spec, "--out", (dir / "c.geojson").string()});
  CHECK(golden::read(dir / "a.geojson") == golden::read(dir / "b.geojson"));
  CHECK(golden::read(dir / "a.geojson") != golden::read(dir / "c.geojson"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("baselines append one record per run") {
  const auto dir = workdir("baseline");
  pipeline::write(dir / "spec.json", pipeline::kSpec);
  const auto region = (dir / "r.geojson").string();
  const auto demands = (dir / "d.json").string();
  const auto results = (dir / "results.jsonl").string();
  REQUIRE(run({"gen-scenario", "--spec", (dir / "spec.json").string(), "--out", region}).code == 0);
  pipeline::write(dir / "config.json", pipeline::kConfig);
  REQUIRE(run({"objectives", "--region", region, "--config", (dir / "config.json").string(), "--out", demands}).code == 0);
  for (const char* m : {"random", "sa", "llm"}) {
    const auto c = run({"baseline", "--method", m, "--region", region, "--demands", demands, "--runs", "2",
                        "--results", results, "--budget-seconds", "2"});
    CHECK(c.code == 0);
  }
  std::ifstream in(results);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    CHECK(j["run"] == n % 2);
    ++n;
  }
  CHECK(n == 6);
  std::filesystem::remove_all(dir);
}

TEST_CASE("evaluate scores a perfect scheme at 4.0") {
  const auto dir = workdir("perfect");
  // One home surrounded by every service within 500 m, with enough area of each
  // coverage type to meet the demands below.
  struct Cell {
    const char* id;
    const char* type;
    double x, y, w;
  };
  const Cell cells[] = {{"home", "residential", 110, 110, 100}, {"biz", "business", 0, 0, 100},
                        {"off", "office", 110, 0, 100},         {"rec", "recreation", 220, 0, 100},
                        {"hos", "hospital", 0, 110, 100},       {"sch", "school", 220, 110, 100},
                        {"park", "park", 0, 220, 200},          {"open", "open_space", 220, 220, 100}};
  json fc = {{"type", "FeatureCollection"}, {"features", json::array()}};
  for (const Cell& c : cells) {
    fc["features"].push_back(
        {{"type", "Feature"},
         {"geometry",
          {{"type", "Polygon"},
           {"coordinates", {{{c.x, c.y}, {c.x + c.w, c.y}, {c.x + c.w, c.y + 100}, {c.x, c.y + 100}, {c.x, c.y}}}}}},
         {"properties", {{"id", c.id}, {"status", "fixed"}, {"type", c.type}}}});
  }
  pipeline::write(dir / "perfect.geojson", fc.dump());
  pipeline::write(dir / "demands.json", R"({
    "coverage": {"business": 0.05, "office": 0.05, "recreation": 0.10, "park": 0.15, "open_space": 0.10},
    "facilities": {"kindergarten": 1, "primary_school": 1, "secondary_school": 0, "clinic": 1, "large_hospital": 0}})");
  const auto c = run({"evaluate", "--scheme", (dir / "perfect.geojson").string(), "--demands",
                      (dir / "demands.json").string()});
  REQUIRE(c.code == 0);
  const json r = json::parse(c.out);
  CHECK(r["schema"] == 1);
  CHECK(r["obj_score"].get<double>() == doctest::Approx(4.0).epsilon(1e-12));
  std::filesystem::remove_all(dir);
}
