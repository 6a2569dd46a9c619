#include "uam/airspace.hpp"

#include <algorithm>
#include <cmath>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/core.h>

#include "uam/rng.hpp"

namespace uam {

DemandSpec DemandSpec::with_mean_interval(double lambda) const {
  DemandSpec out = *this;
  const double m = beta_shape[0] / (beta_shape[0] + beta_shape[1]);
  const double spread = mean_interval > 0 ? (interval_range[1] - interval_range[0]) / mean_interval : 0.0;
  const double width = spread * lambda;
  out.mean_interval = lambda;
  out.interval_range = {lambda - m * width, lambda - m * width + width};
  return out;
}

Airspace::Airspace(std::vector<Node> nodes, std::vector<Route> routes)
    : nodes_(std::move(nodes)), routes_(std::move(routes)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!node_index_.emplace(nodes_[i].id, i).second) {
      throw AirspaceError(fmt::format("duplicate node id '{}'", nodes_[i].id));
    }
  }
  for (const Route& route : routes_) {
    if (route.nodes.size() < 2) {
      throw AirspaceError(fmt::format("route '{}' needs at least two nodes", route.id));
    }
    std::vector<Eigen::Vector2d> pts;
    std::vector<double> cum{0.0};
    for (std::size_t k = 0; k < route.nodes.size(); ++k) {
      if (!has_node(route.nodes[k])) {
        throw AirspaceError(fmt::format("route '{}' references unknown node '{}'", route.id, route.nodes[k]));
      }
      pts.push_back(node(route.nodes[k]).position);
      if (k > 0) {
        if (route.nodes[k] == route.nodes[k - 1]) {
          throw AirspaceError(fmt::format("route '{}' repeats node '{}' consecutively", route.id, route.nodes[k]));
        }
        cum.push_back(cum.back() + (pts[k] - pts[k - 1]).norm());
      }
    }
    if (!(cum.back() > 0.0)) {
      throw AirspaceError(fmt::format("route '{}' has zero length", route.id));
    }
    points_.push_back(std::move(pts));
    cumulative_.push_back(std::move(cum));
  }

  const std::size_t n = routes_.size();
  shared_.resize(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      auto& out = shared_[a * n + b];
      for (std::size_t k = 0; k < routes_[a].nodes.size(); ++k) {
        if (auto other = arc_of(b, routes_[a].nodes[k])) {
          out.push_back({cumulative_[a][k], *other});
        }
      }
    }
  }
}

const Node& Airspace::node(std::string_view id) const {
  auto it = node_index_.find(id);
  if (it == node_index_.end()) throw AirspaceError(fmt::format("unknown node '{}'", id));
  return nodes_[it->second];
}

bool Airspace::has_node(std::string_view id) const { return node_index_.find(id) != node_index_.end(); }

std::size_t Airspace::route_index(std::string_view id) const {
  for (std::size_t r = 0; r < routes_.size(); ++r) {
    if (routes_[r].id == id) return r;
  }
  throw AirspaceError(fmt::format("unknown route '{}'", id));
}

std::optional<double> Airspace::arc_of(std::size_t r, std::string_view node_id) const {
  const auto& ids = routes_.at(r).nodes;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] == node_id) return cumulative_[r][k];
  }
  return std::nullopt;
}

std::size_t Airspace::leg_at(std::size_t r, double arc) const {
  const auto& cum = cumulative_[r];
  auto it = std::upper_bound(cum.begin(), cum.end(), arc);
  std::size_t k = static_cast<std::size_t>(std::distance(cum.begin(), it));
  if (k == 0) return 0;
  return std::min(k - 1, cum.size() - 2);
}

Eigen::Vector2d Airspace::position_at(std::size_t r, double arc) const {
  const auto& cum = cumulative_[r];
  arc = std::clamp(arc, 0.0, cum.back());
  const std::size_t k = leg_at(r, arc);
  const double len = cum[k + 1] - cum[k];
  const double frac = len > 0 ? (arc - cum[k]) / len : 0.0;
  return points_[r][k] + frac * (points_[r][k + 1] - points_[r][k]);
}

double Airspace::heading_at(std::size_t r, double arc) const {
  const std::size_t k = leg_at(r, std::clamp(arc, 0.0, cumulative_[r].back()));
  const Eigen::Vector2d d = points_[r][k + 1] - points_[r][k];
  return std::atan2(d.y(), d.x());
}

double estimate_transit_time(const Airspace& airspace, std::string_view route_id, std::string_view from_node,
                             std::string_view to_node, const AircraftPerformance& perf) {
  const std::size_t r = airspace.route_index(route_id);
  const auto& ids = airspace.route(r).nodes;
  const auto& cum = airspace.cumulative(r);
  auto from = std::find(ids.begin(), ids.end(), from_node);
  if (from == ids.end()) {
    throw AirspaceError(fmt::format("node '{}' is not on route '{}'", from_node, route_id));
  }
  auto to = std::find(from, ids.end(), to_node);
  if (to == ids.end()) {
    throw AirspaceError(fmt::format("node '{}' is not on route '{}' downstream of '{}'", to_node, route_id, from_node));
  }
  const double dist = cum[static_cast<std::size_t>(to - ids.begin())] - cum[static_cast<std::size_t>(from - ids.begin())];
  return dist / perf.v_cruise;
}

std::vector<FlightPlan> generate_schedule(const DemandSpec& spec, std::span<const Route> routes, std::uint64_t seed) {
  std::vector<FlightPlan> plans;
  if (spec.flights_per_route <= 0) return plans;
  Rng rng(derive_seed(seed, kDemandStream));
  boost::random::beta_distribution<double> beta(spec.beta_shape[0], spec.beta_shape[1]);
  boost::random::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lo = spec.interval_range[0];
  const double width = spec.interval_range[1] - spec.interval_range[0];

  for (const Route& route : routes) {
    double t = spec.first_departure_window > 0 ? spec.first_departure_window * unit(rng) : 0.0;
    for (int k = 0; k < spec.flights_per_route; ++k) {
      if (k > 0) t += lo + (width > 0 ? beta(rng) * width : 0.0);
      FlightPlan p;
      p.flight_id = fmt::format("{}-{:03d}", route.id, k);
      p.route_id = route.id;
      p.scheduled_departure = t;
      p.required_departure = t;
      plans.push_back(std::move(p));
    }
  }
  return plans;
}

}  // namespace uam
