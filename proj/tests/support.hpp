#pragma once

#include <string>
#include <vector>

#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>

#include "uam/dcb.hpp"
#include "uam/rng.hpp"
#include "uam/scenario.hpp"

namespace uam::test {

inline Scenario load(const std::string& name) { return Scenario(load_scenario(default_data_dir() / name)); }

inline Scenario default_scenario() { return load("default_scenario.json"); }

/// Straight-line network: one route through the given x coordinates, an
/// optional resource at node index `resource_at`, C = capacity.
inline ScenarioConfig line_config(const std::vector<double>& xs, int resource_at = -1, int capacity = 1) {
  ScenarioConfig cfg = load_scenario(default_data_dir() / "default_scenario.json");
  cfg.nodes.clear();
  cfg.routes.clear();
  cfg.resources.clear();
  Route r{"L", {}};
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const std::string id = fmt::format("P{}", k);
    cfg.nodes.push_back({id, Eigen::Vector2d(xs[k], 0.0)});
    r.nodes.push_back(id);
  }
  cfg.routes.push_back(r);
  if (resource_at >= 0) cfg.resources.push_back({r.nodes.at(static_cast<std::size_t>(resource_at)), capacity});
  cfg.risk.calibrate = false;
  return cfg;
}

struct InstanceShape {
  int max_flights = 6;
  int max_resources = 2;
  std::vector<int> capacities{1, 2};
  std::vector<double> separations{0.0, 30.0};
  double window = 200.0;
};

/// Small random balancing problem. Times sit on a 10 s grid so ties and
/// window boundaries are hit often.
inline DcbInstance random_instance(Rng& rng, const InstanceShape& shape = {}) {
  auto pick = [&](int lo, int hi) { return boost::random::uniform_int_distribution<int>(lo, hi)(rng); };
  DcbInstance inst;
  inst.config.window_length = shape.window;
  inst.config.departure_separation = shape.separations[static_cast<std::size_t>(pick(0, static_cast<int>(shape.separations.size()) - 1))];
  const int resources = pick(1, shape.max_resources);
  for (int p = 0; p < resources; ++p) {
    inst.config.capacities.push_back(shape.capacities[static_cast<std::size_t>(pick(0, static_cast<int>(shape.capacities.size()) - 1))]);
    inst.config.resource_names.push_back(fmt::format("X{}", p));
  }
  const int n = pick(1, shape.max_flights);
  for (int i = 0; i < n; ++i) {
    DcbFlight f;
    f.id = fmt::format("F{}", i);
    f.origin = fmt::format("O{}", pick(0, 2));
    f.scheduled = 10.0 * pick(0, 40);
    double transit = 10.0 * pick(3, 15);
    for (int p = 0; p < resources; ++p) {
      if (pick(0, 3) == 0 && !(p == resources - 1 && f.visits.empty())) continue;
      f.visits.push_back({p, transit});
      transit += 10.0 * pick(3, 15);
    }
    inst.flights.push_back(std::move(f));
  }
  return inst;
}

}  // namespace uam::test
