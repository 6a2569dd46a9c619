#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "uam/params.hpp"
#include "uam/rng.hpp"
#include "uam/tactical.hpp"

namespace uam {

/// Bin edges for the tabular state: own distance to goal, own speed,
/// distance to the nearest observed intruder (plus a "none" bin) and that
/// intruder's speed relative to ownship.
struct Discretization {
  double dgoal_max = 18000.0;
  int dgoal_bins = 10;
  double v_min = 20.0;
  double v_max = 70.0;
  int speed_bins = 5;
  std::vector<double> distance_edges{0, 100, 150, 200, 300, 400, 500, 650, 800, 1000, 1250, 1500};
  std::vector<double> range_rate_edges{-10.0, -2.5, 2.5, 10.0};

  int distance_bins() const { return static_cast<int>(distance_edges.size()); }  // edge bins + none
  int range_rate_bins() const { return static_cast<int>(range_rate_edges.size()) + 1; }
  int state_count() const { return dgoal_bins * speed_bins * distance_bins() * range_rate_bins(); }

  int state_index(const ObservationVector& obs) const;
};

class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PolicyDecision {
  SpeedAction action = SpeedAction::hold;
  bool unseen = false;  // greedy readout hit a never-visited state
};

/// Shared action-value table, one row per discretized state with columns
/// ordered as SpeedAction.
class PolicyTable {
 public:
  using Values = Eigen::Matrix<double, Eigen::Dynamic, kActionCount, Eigen::RowMajor>;
  using Counts = Eigen::Matrix<std::uint32_t, Eigen::Dynamic, kActionCount, Eigen::RowMajor>;

  PolicyTable() = default;
  PolicyTable(Discretization disc, LearningParams params);

  const Discretization& discretization() const { return disc_; }
  const LearningParams& params() const { return params_; }
  DetectionMode mode() const { return params_.mode; }

  const Values& values() const { return q_; }
  Values& values() { return q_; }
  std::uint32_t visits(int state) const { return visits_.row(state).sum(); }
  std::uint32_t visits(int state, SpeedAction a) const { return visits_(state, static_cast<int>(a)); }

  /// Exploration probability after `episode` completed episodes.
  double epsilon(int episode) const;

  /// Greedy action among the actions tried in a state (all three when none
  /// were); ties prefer hold, then decrease.
  SpeedAction greedy(int state) const;

  /// Best value over tried actions, 0 for a never-visited state.
  double state_value(int state) const;

  /// One temporal-difference step; `next_state` < 0 marks a terminal step.
  void update(int state, SpeedAction action, double reward, int next_state);
  /// Moves Q(state, action) toward an externally computed return.
  void update_toward(int state, SpeedAction action, double target);

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static PolicyTable load(std::istream& in);
  static PolicyTable load(const std::filesystem::path& path);

 private:
  Discretization disc_;
  LearningParams params_;
  Values q_;
  Counts visits_;
};

/// Readout of the table. With explore set, a uniformly random action is
/// taken with probability epsilon. Unseen states fall back to hold.
PolicyDecision policy_act(const PolicyTable& policy, const ObservationVector& obs, bool explore = false,
                          double epsilon = 0.0, Rng* rng = nullptr);

}  // namespace uam
