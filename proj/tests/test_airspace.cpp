#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "support.hpp"
#include "uam/airspace.hpp"
#include "uam/scenario.hpp"

using namespace uam;

namespace {

Airspace line(const std::vector<double>& xs) {
  std::vector<Node> nodes;
  Route r{"L", {}};
  for (std::size_t k = 0; k < xs.size(); ++k) {
    nodes.push_back({fmt::format("P{}", k), Eigen::Vector2d(xs[k], 0.0)});
    r.nodes.push_back(nodes.back().id);
  }
  return Airspace(nodes, {r});
}

AircraftPerformance cruise(double v) {
  AircraftPerformance p;
  p.v_min = std::min(p.v_min, v);
  p.v_cruise = v;
  p.v_max = std::max(p.v_max, v);
  return p;
}

}  // namespace

TEST_CASE("transit time examples") {
  const Airspace a = line({0, 6000});
  CHECK(estimate_transit_time(a, "L", "P0", "P1", cruise(60)) == 100.0);
  CHECK(estimate_transit_time(a, "L", "P1", "P1", cruise(60)) == 0.0);

  // Bent two-leg route: per-leg sums computed independently of the airspace.
  std::vector<Node> nodes{{"A", {0, 0}}, {"B", {3000, 0}}, {"C", {3000, 4500}}};
  const Airspace bent(nodes, {Route{"R", {"A", "B", "C"}}});
  const double per_leg = (nodes[1].position - nodes[0].position).norm() / 50.0 +
                         (nodes[2].position - nodes[1].position).norm() / 50.0;
  CHECK(estimate_transit_time(bent, "R", "A", "C", cruise(50)) == doctest::Approx(150.0).epsilon(1e-15));
  CHECK(estimate_transit_time(bent, "R", "A", "C", cruise(50)) == doctest::Approx(per_leg).epsilon(1e-15));
}

TEST_CASE("transit time is additive along a route") {
  Rng rng(11);
  boost::random::uniform_real_distribution<double> coord(-9000, 9000);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Node> nodes;
    Route r{"R", {}};
    for (int k = 0; k < 5; ++k) {
      nodes.push_back({fmt::format("N{}", k), Eigen::Vector2d(coord(rng), coord(rng))});
      r.nodes.push_back(nodes.back().id);
    }
    const Airspace a(nodes, {r});
    const auto perf = cruise(50);
    for (int k = 0; k + 2 < 5; ++k) {
      const auto &x = r.nodes[k], &y = r.nodes[k + 1], &z = r.nodes[k + 2];
      const double whole = estimate_transit_time(a, "R", x, z, perf);
      const double parts = estimate_transit_time(a, "R", x, y, perf) + estimate_transit_time(a, "R", y, z, perf);
      CHECK(whole == doctest::Approx(parts).epsilon(1e-14));
    }
  }
}

TEST_CASE("transit time errors name route and node") {
  const Airspace a = line({0, 1000, 2000});
  try {
    estimate_transit_time(a, "L", "P0", "Q9", cruise(50));
    FAIL("expected an error");
  } catch (const AirspaceError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("'Q9'") != std::string::npos);
    CHECK(msg.find("'L'") != std::string::npos);
  }
  CHECK_THROWS_AS(estimate_transit_time(a, "L", "P2", "P0", cruise(50)), AirspaceError);
}

TEST_CASE("schedule generation") {
  const std::vector<Route> routes{{"A", {"x", "y"}}, {"B", {"x", "y"}}};
  DemandSpec spec;

  SUBCASE("no flights") {
    spec.flights_per_route = 0;
    CHECK(generate_schedule(spec, routes, 1).empty());
  }

  SUBCASE("constant intervals") {
    spec.flights_per_route = 3;
    spec.interval_range = {30.0, 30.0};
    spec.first_departure_window = 0.0;
    const auto plans = generate_schedule(spec, {routes.data(), 1}, 5);
    REQUIRE(plans.size() == 3);
    CHECK(plans[0].scheduled_departure == 0.0);
    CHECK(plans[1].scheduled_departure == 30.0);
    CHECK(plans[2].scheduled_departure == 60.0);
  }

  SUBCASE("mean interval within 5 percent") {
    spec.flights_per_route = 1001;
    const auto plans = generate_schedule(spec, {routes.data(), 1}, 17);
    const double mean = (plans.back().scheduled_departure - plans.front().scheduled_departure) / 1000.0;
    CHECK(std::abs(mean - 30.0) < 0.05 * 30.0);
  }

  SUBCASE("pure, increasing, required equals scheduled") {
    spec.flights_per_route = 40;
    const auto a = generate_schedule(spec, routes, 99);
    const auto b = generate_schedule(spec, routes, 99);
    const auto c = generate_schedule(spec, routes, 100);
    REQUIRE(a.size() == 80);
    bool same = true, differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      same = same && a[i].flight_id == b[i].flight_id && a[i].scheduled_departure == b[i].scheduled_departure;
      differs = differs || a[i].scheduled_departure != c[i].scheduled_departure;
      CHECK(a[i].required_departure == a[i].scheduled_departure);
      if (i > 0 && a[i].route_id == a[i - 1].route_id) CHECK(a[i].scheduled_departure > a[i - 1].scheduled_departure);
    }
    CHECK(same);
    CHECK(differs);
  }
}

TEST_CASE("re-centred demand keeps the mapped mean equal to the target") {
  DemandSpec spec;
  for (double lambda : {30.0, 60.0, 120.0, 45.5}) {
    const DemandSpec d = spec.with_mean_interval(lambda);
    CHECK(d.mapped_mean() == doctest::Approx(lambda).epsilon(1e-12));
    CHECK(d.interval_range[0] > 0.0);
  }
}

TEST_CASE("scenario validation") {
  ScenarioConfig cfg = load_scenario(default_data_dir() / "default_scenario.json");
  CHECK(validate_scenario(cfg).empty());

  SUBCASE("zero capacity names the resource") {
    cfg.resources.at(1).capacity = 0;
    const auto v = validate_scenario(cfg);
    REQUIRE(v.size() == 1);
    CHECK(v[0].path == "resources[1]");
    CHECK(v[0].message.find("'N-2'") != std::string::npos);
  }

  SUBCASE("unknown node names the route") {
    cfg.routes.at(2).nodes.at(1) = "Z-9";
    const auto v = validate_scenario(cfg);
    REQUIRE(!v.empty());
    CHECK(v[0].path == "routes[2]");
    CHECK(v[0].message.find("'R3'") != std::string::npos);
    CHECK_THROWS_AS(Scenario{cfg}, ScenarioError);
  }
}

TEST_CASE("scenario JSON rejects unknown keys and round-trips") {
  const auto path = default_data_dir() / "default_scenario.json";
  const ScenarioConfig cfg = load_scenario(path);
  const nlohmann::json doc = to_json(cfg);
  CHECK(to_json(parse_scenario(doc)) == doc);

  nlohmann::json bad = doc;
  bad["performance"]["warp"] = 9;
  try {
    parse_scenario(bad);
    FAIL("expected rejection");
  } catch (const ScenarioError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("performance") != std::string::npos);
    CHECK(msg.find("'warp'") != std::string::npos);
  }
}
