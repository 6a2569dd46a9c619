#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace uam {

struct Node {
  std::string id;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();  // local planar frame, meters
};

/// Ordered node list, origin first and destination last.
struct Route {
  std::string id;
  std::vector<std::string> nodes;
};

/// Capacity-constrained merge or crossing node.
struct Resource {
  std::string node_id;
  int capacity = 1;  // operations per window
};

struct AircraftPerformance {
  double v_min = 20.0;
  double v_cruise = 50.0;
  double v_max = 70.0;
  double dv = 2.5;
  double accel = 2.0;
};

struct FlightPlan {
  std::string flight_id;
  std::string route_id;
  double scheduled_departure = 0.0;
  double required_departure = 0.0;
  std::map<std::string, double> eta_at_resource;

  double ground_delay() const {
    return required_departure > scheduled_departure ? required_departure - scheduled_departure : 0.0;
  }
};

/// Departure demand. Intervals between successive departures on a route are
/// min + b * (max - min) with b ~ Beta(shape).
struct DemandSpec {
  double mean_interval = 30.0;
  int flights_per_route = 10;
  std::array<double, 2> beta_shape{2.0, 2.0};
  std::array<double, 2> interval_range{6.0, 54.0};
  /// First departure on each route is uniform in [0, first_departure_window).
  double first_departure_window = 0.0;
  /// Relative tolerance between the mapped distribution mean and mean_interval.
  double mean_tolerance = 0.01;

  double mapped_mean() const {
    const double m = beta_shape[0] / (beta_shape[0] + beta_shape[1]);
    return interval_range[0] + m * (interval_range[1] - interval_range[0]);
  }

  /// Same shape and relative spread, re-centred on a new mean interval.
  DemandSpec with_mean_interval(double lambda) const;
};

class AirspaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compiled route network: node lookup, per-route arc lengths and geometry.
class Airspace {
 public:
  struct SharedNode {
    double arc_self;   // arc position of the node on the first route
    double arc_other;  // arc position of the node on the second route
  };

  Airspace(std::vector<Node> nodes, std::vector<Route> routes);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Route>& routes() const { return routes_; }

  const Node& node(std::string_view id) const;
  bool has_node(std::string_view id) const;
  std::size_t route_index(std::string_view id) const;
  const Route& route(std::size_t r) const { return routes_.at(r); }

  double route_length(std::size_t r) const { return cumulative_.at(r).back(); }
  /// Arc position of the first occurrence of `node` on route r.
  std::optional<double> arc_of(std::size_t r, std::string_view node) const;
  /// Sum of leg lengths of route r.
  const std::vector<double>& cumulative(std::size_t r) const { return cumulative_.at(r); }

  Eigen::Vector2d position_at(std::size_t r, double arc) const;
  /// Heading of the leg containing `arc`, radians counter-clockwise from +x.
  double heading_at(std::size_t r, double arc) const;

  /// Nodes common to routes a and b, in the order they appear on route a.
  std::span<const SharedNode> shared_nodes(std::size_t a, std::size_t b) const {
    return shared_[a * routes_.size() + b];
  }

 private:
  std::size_t leg_at(std::size_t r, double arc) const;

  std::vector<Node> nodes_;
  std::vector<Route> routes_;
  std::map<std::string, std::size_t, std::less<>> node_index_;
  std::vector<std::vector<Eigen::Vector2d>> points_;
  std::vector<std::vector<double>> cumulative_;
  std::vector<std::vector<SharedNode>> shared_;
};

/// Path distance between two nodes of a route divided by cruise speed.
double estimate_transit_time(const Airspace& airspace, std::string_view route_id, std::string_view from_node,
                             std::string_view to_node, const AircraftPerformance& perf);

/// Departure schedule for every route; required departures start equal to
/// scheduled ones. A pure function of its arguments.
std::vector<FlightPlan> generate_schedule(const DemandSpec& spec, std::span<const Route> routes, std::uint64_t seed);

}  // namespace uam
