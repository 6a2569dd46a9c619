#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "uam/airspace.hpp"
#include "uam/params.hpp"

namespace uam {

/// Snapshot of one aircraft as seen by the surveillance picture.
struct TrafficEntry {
  std::size_t route = 0;
  double arc = 0.0;
  double speed = 0.0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  bool airborne = false;
};

struct IntruderState {
  std::size_t aircraft = 0;  // index into the traffic picture
  double d_goal = 0.0;
  double speed = 0.0;
  double heading = 0.0;
  double distance = 0.0;  // ownship to intruder
  double range_rate = 0.0;  // d(distance)/dt, negative while closing
};

/// Ownship features followed by intruders sorted by ascending distance.
struct ObservationVector {
  double d_goal = 0.0;
  double speed = 0.0;
  double heading = 0.0;
  double d_nmac = 0.0;
  std::vector<IntruderState> intruders;

  const IntruderState* nearest() const { return intruders.empty() ? nullptr : &intruders.front(); }
};

/// True when `intruder` is nearer than `own` to the first shared node still
/// ahead of `own`, or already past it. Without a shared node ahead nobody
/// leads. An exact tie goes to the intruder iff `wins_ties`; observe() passes
/// true for intruders earlier in the traffic picture, which keeps the
/// relation a strict order.
bool is_leading(const Airspace& airspace, const TrafficEntry& own, const TrafficEntry& intruder,
                bool wins_ties = false);

ObservationVector observe(std::size_t ownship, std::span<const TrafficEntry> traffic, const Airspace& airspace,
                          DetectionMode mode, const SafetyThresholds& thresholds);

enum class SpeedAction { decrease = 0, hold = 1, increase = 2 };

inline constexpr int kActionCount = 3;

/// Target speed after applying an action, clamped to the envelope.
double apply_action(double target_speed, SpeedAction action, const AircraftPerformance& perf);

/// Tactical advisory: a speed action or the minimum-speed hover directive.
enum class Advisory { decrease, hold, increase, minimum_speed };

const char* to_string(SpeedAction a);
const char* to_string(Advisory a);

struct RewardBreakdown {
  double total = 0.0;
  double safety = 0.0;
  double time = 0.0;
  double action = 0.0;

  RewardBreakdown& operator+=(const RewardBreakdown& o) {
    total += o.total;
    safety += o.safety;
    time += o.time;
    action += o.action;
    return *this;
  }
};

struct Transition {
  double min_distance = 0.0;  // to the nearest observed intruder; +inf if none
  double elapsed = 0.0;       // airborne time
  double max_flight_time = 0.0;
  SpeedAction action = SpeedAction::hold;
};

/// Safety, time and action penalties; total is their sum.
RewardBreakdown reward(const Transition& transition, const RewardParams& params, const SafetyThresholds& thresholds);

/// Safety component alone, as a function of separation.
double safety_penalty(double distance, const RewardParams& params, const SafetyThresholds& thresholds);

/// Distance-band rule on the nearest leading aircraft. Expects a
/// forward-mode observation.
Advisory rule_based_policy(const ObservationVector& obs, const RulePolicyParams& params,
                           const SafetyThresholds& thresholds);

}  // namespace uam
