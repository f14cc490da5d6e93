#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "edue/error.hpp"
#include "edue/scenario.hpp"

using namespace edue;
using nlohmann::json;

namespace {

json base() {
  return json::parse(R"({
    "units": {"time": "hours", "flow": "vehicles/hour", "demand": "vehicles"},
    "horizon": {"t0": 0.0, "tf": 1.5, "desired_arrival": 1.0},
    "network": {
      "nodes": ["A", "B"],
      "links": [{"id": "ab", "from": "A", "to": "B", "free_flow_time": 0.1, "capacity": 60}],
      "od_pairs": [{"id": "AB", "origin": "A", "destination": "B"}],
      "paths": [{"id": "p1", "od": "AB", "links": ["ab"]}]
    },
    "penalty": {"early": 0.5, "late": 2.0},
    "demand": {"mode": "elastic", "od": [{"od": "AB", "theta0": 1.0, "theta1": 0.01}]},
    "solver": {"n": 6, "alpha": 10, "max_iters": 100, "gap_tol": 1e-9}
  })");
}

std::string error_of(const json& doc) {
  try {
    parse_scenario(doc.dump());
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("well-formed scenario") {
  const Scenario sc = parse_scenario(base().dump());
  CHECK(sc.instance.t0 == 0.0);
  CHECK(sc.instance.tf == 1.5);
  CHECK(sc.instance.network.desired_arrival() == 1.0);
  CHECK(sc.instance.network.links()[0].capacity == 60.0);
  CHECK(sc.instance.mode == DemandMode::Elastic);
  CHECK(sc.instance.demand.curve(0).cap == doctest::Approx(95.0));
  CHECK(sc.solver.cells == 6);
  CHECK(sc.solver.alpha == 10.0);
  CHECK(sc.solver.scheme == Scheme::Extragradient);
  CHECK_FALSE(sc.solver.flow_threshold.has_value());
}

TEST_CASE("optional fields") {
  json doc = base();
  doc["demand"]["od"][0]["cap"] = 50.0;
  doc["solver"]["scheme"] = "projection";
  doc["solver"]["halving_stall"] = 500;
  doc["solver"]["flow_threshold"] = 1e-3;
  const Scenario sc = parse_scenario(doc.dump());
  CHECK(sc.instance.demand.curve(0).cap == 50.0);
  CHECK(sc.solver.scheme == Scheme::Projection);
  CHECK(sc.solver.halving_stall == 500);
  CHECK(*sc.solver.flow_threshold == 1e-3);

  json fixed = base();
  fixed["demand"] = json::parse(R"({"mode": "fixed", "od": [{"od": "AB", "volume": 40}]})");
  const Scenario f = parse_scenario(fixed.dump());
  CHECK(f.instance.mode == DemandMode::Fixed);
  CHECK(f.instance.fixed_demand == std::vector<double>{40.0});
}

TEST_CASE("diagnostics name the offending field") {
  json doc = base();
  doc["units"]["time"] = "minutes";
  CHECK(error_of(doc).find("units.time") != std::string::npos);

  doc = base();
  doc.erase("penalty");
  CHECK(error_of(doc).find("penalty") != std::string::npos);

  doc = base();
  doc["network"]["links"][0]["capacity"] = "lots";
  CHECK(error_of(doc).find("network.links[0].capacity") != std::string::npos);

  doc = base();
  doc["network"]["links"][0]["capacity"] = 0;
  CHECK(error_of(doc).find("nonpositive capacity") != std::string::npos);

  doc = base();
  doc["network"]["paths"][0]["links"] = {"zz"};
  CHECK(error_of(doc).find("network.paths[0]") != std::string::npos);

  doc = base();
  doc["demand"]["od"][0]["od"] = "XY";
  CHECK(error_of(doc).find("demand.od[0].od") != std::string::npos);

  doc = base();
  doc["demand"]["od"][0]["theta1"] = -1.0;
  CHECK(error_of(doc).find("demand.od[0]") != std::string::npos);

  doc = base();
  doc["penalty"]["early"] = 1.0;
  CHECK(error_of(doc).find("A1") != std::string::npos);

  doc = base();
  doc["horizon"]["desired_arrival"] = 1.5;
  CHECK(error_of(doc).find("T_A must precede t_f") != std::string::npos);

  doc = base();
  doc["solver"]["n"] = 0;
  CHECK(error_of(doc).find("solver.n") != std::string::npos);

  doc = base();
  doc["solver"]["scheme"] = "newton";
  CHECK(error_of(doc).find("solver.scheme") != std::string::npos);
}

TEST_CASE("syntax errors report the line") {
  try {
    parse_scenario("{\n  \"units\": {\n    \"time\": ,\n  }\n}");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 61.66666666413806, 1e-300, 123456789.0, 0.0}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.5) == "0.5");
}

TEST_CASE("flow files round-trip and are checked against the horizon") {
  const Scenario sc = parse_scenario(base().dump());
  const TimeGrid g = sc.instance.grid(6);
  const ExtendedPoint x{{Profile(g, {0, 1.0 / 3.0, 2.5, 1e-7, 0, 7})}, {0.0}};
  std::stringstream out;
  write_flows_csv(out, sc.instance.network, x);
  CHECK(out.str().rfind("path_id,cell_index,t_start,t_end,flow\np1,0,0,0.25,0\n", 0) == 0);

  std::stringstream in(out.str());
  const auto h = read_flows_csv(in, sc.instance.network, 0.0, 1.5);
  REQUIRE(h.size() == 1);
  CHECK(h[0].grid() == g);
  for (int j = 0; j < 6; ++j) CHECK(h[0][j] == x.h[0][j]);

  std::stringstream wrong_horizon(out.str());
  CHECK_THROWS_AS(read_flows_csv(wrong_horizon, sc.instance.network, 0.0, 2.0), InputError);

  std::string missing = out.str();
  missing.erase(missing.rfind("p1,5"));
  std::stringstream short_file(missing);
  CHECK_THROWS_AS(read_flows_csv(short_file, sc.instance.network, 0.0, 1.5), InputError);

  std::stringstream bad_header("path,cell\n");
  CHECK_THROWS_AS(read_flows_csv(bad_header, sc.instance.network, 0.0, 1.5), InputError);

  std::stringstream negative("path_id,cell_index,t_start,t_end,flow\np1,0,0,1.5,-1\n");
  CHECK_THROWS_AS(read_flows_csv(negative, sc.instance.network, 0.0, 1.5), InputError);

  std::stringstream unknown("path_id,cell_index,t_start,t_end,flow\nq9,0,0,1.5,1\n");
  CHECK_THROWS_AS(read_flows_csv(unknown, sc.instance.network, 0.0, 1.5), InputError);
}

TEST_CASE("gap and residual writers") {
  std::stringstream gap;
  write_gap_csv(gap, {{1, 0.5, 0.25, 0.125, 2.0}});
  CHECK(gap.str() == "iter,gap,max_r1,max_r2,alpha\n1,0.5,0.25,0.125,2\n");
}
