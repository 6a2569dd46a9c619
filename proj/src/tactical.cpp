#include "uam/tactical.hpp"

#include <algorithm>
#include <cmath>

namespace uam {

bool is_leading(const Airspace& airspace, const TrafficEntry& own, const TrafficEntry& intruder, bool wins_ties) {
  for (const auto& node : airspace.shared_nodes(own.route, intruder.route)) {
    if (node.arc_self < own.arc) continue;
    // Negative when the intruder is already past the node.
    const double d_int = node.arc_other - intruder.arc;
    const double d_own = node.arc_self - own.arc;
    return d_int < d_own || (d_int == d_own && wins_ties);
  }
  return false;
}

ObservationVector observe(std::size_t ownship, std::span<const TrafficEntry> traffic, const Airspace& airspace,
                          DetectionMode mode, const SafetyThresholds& thresholds) {
  const TrafficEntry& own = traffic[ownship];
  ObservationVector obs;
  obs.d_goal = std::max(0.0, airspace.route_length(own.route) - own.arc);
  obs.speed = own.speed;
  obs.heading = airspace.heading_at(own.route, own.arc);
  obs.d_nmac = thresholds.d_nmac;
  for (std::size_t i = 0; i < traffic.size(); ++i) {
    const TrafficEntry& other = traffic[i];
    if (i == ownship || !other.airborne) continue;
    const double d = (other.position - own.position).norm();
    if (d > thresholds.observation_range) continue;
    if (mode == DetectionMode::forward && !is_leading(airspace, own, other, i < ownship)) continue;
    const double heading = airspace.heading_at(other.route, other.arc);
    const Eigen::Vector2d rel_v = other.speed * Eigen::Vector2d(std::cos(heading), std::sin(heading)) -
                                  own.speed * Eigen::Vector2d(std::cos(obs.heading), std::sin(obs.heading));
    const double rate = d > 0.0 ? (other.position - own.position).dot(rel_v) / d : 0.0;
    obs.intruders.push_back(
        {i, std::max(0.0, airspace.route_length(other.route) - other.arc), other.speed, heading, d, rate});
  }
  std::stable_sort(obs.intruders.begin(), obs.intruders.end(),
                   [](const IntruderState& a, const IntruderState& b) { return a.distance < b.distance; });
  return obs;
}

double apply_action(double target_speed, SpeedAction action, const AircraftPerformance& perf) {
  double v = target_speed;
  if (action == SpeedAction::decrease) v -= perf.dv;
  if (action == SpeedAction::increase) v += perf.dv;
  return std::clamp(v, perf.v_min, perf.v_max);
}

const char* to_string(SpeedAction a) {
  switch (a) {
    case SpeedAction::decrease: return "decrease";
    case SpeedAction::hold: return "hold";
    case SpeedAction::increase: return "increase";
  }
  return "?";
}

const char* to_string(Advisory a) {
  switch (a) {
    case Advisory::decrease: return "decrease";
    case Advisory::hold: return "hold";
    case Advisory::increase: return "increase";
    case Advisory::minimum_speed: return "minimum_speed";
  }
  return "?";
}

double safety_penalty(double distance, const RewardParams& params, const SafetyThresholds& thresholds) {
  if (distance < 0 || std::isnan(distance)) throw std::invalid_argument("separation distance must be >= 0");
  if (distance < thresholds.d_nmac) return -1.0;
  if (distance <= thresholds.d_lowc) return -params.alpha + params.delta * distance;
  return 0.0;
}

RewardBreakdown reward(const Transition& tr, const RewardParams& params, const SafetyThresholds& thresholds) {
  RewardBreakdown r;
  r.safety = safety_penalty(tr.min_distance, params, thresholds);
  r.time = tr.elapsed > tr.max_flight_time ? -1.0 : -params.eta;
  r.action = tr.action == SpeedAction::hold ? 0.0 : -params.psi;
  r.total = r.safety + r.time + r.action;
  return r;
}

Advisory rule_based_policy(const ObservationVector& obs, const RulePolicyParams& params,
                           const SafetyThresholds& thresholds) {
  const IntruderState* leader = obs.nearest();
  if (!leader) return Advisory::increase;
  const double d = leader->distance;
  if (d < thresholds.d_nmac) return Advisory::minimum_speed;
  if (params.open_band) {
    if (d <= params.d_ls) return Advisory::decrease;
    if (d >= params.d_hs) return Advisory::increase;
    return Advisory::hold;
  }
  if (d < params.d_ls) return Advisory::decrease;
  if (d > params.d_hs) return Advisory::increase;
  return Advisory::hold;
}

}  // namespace uam
