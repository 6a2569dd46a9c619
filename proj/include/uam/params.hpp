#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace uam {

/// Horizontal separation thresholds in meters. Co-altitude traffic only.
struct SafetyThresholds {
  double d_mac = 10.0;
  double d_nmac = 150.0;
  double d_lowc = 500.0;
  double observation_range = 1500.0;
};

/// Coefficients of the per-decision reward. The defaults for alpha and delta
/// make the safety term continuous at d_nmac (value -1) and d_lowc (value 0).
struct RewardParams {
  double alpha = 500.0 / 350.0;
  double delta = 1.0 / 350.0;
  double eta = 0.001;
  double psi = 0.01;
  /// Maximum flying time as a multiple of the unobstructed route time.
  double max_flight_time_factor = 3.0;

  static RewardParams continuous_for(const SafetyThresholds& t) {
    RewardParams p;
    p.delta = 1.0 / (t.d_lowc - t.d_nmac);
    p.alpha = t.d_lowc / (t.d_lowc - t.d_nmac);
    return p;
  }
};

struct RulePolicyParams {
  double d_ls = 1200.0;
  double d_hs = 1500.0;
  /// When set, the hold band is the open interval (d_ls, d_hs) and the two
  /// boundaries fall into the decrease/increase bands.
  bool open_band = false;
};

struct EngineConfig {
  double step_dt = 1.0;
  double decision_dt = 5.0;
  double max_sim_time = 7200.0;
};

struct DcbSettings {
  double window_length = 200.0;
  double departure_separation = 20.0;
  /// End of the last usable window (seconds). Unset: derived from demand.
  std::optional<double> horizon;
  std::size_t node_limit = 2'000'000;
};

struct RiskModelParams {
  double p_mac_given_nmac = 5.038e-3;
  double acasx_risk_ratio = 0.005;
  /// Target level of safety, estimated MACs per 100,000 flight hours.
  double tls = 0.94;
  /// Replace p_mac_given_nmac by a value calibrated on unmitigated runs.
  bool calibrate = true;
  int calibration_runs = 200;
};

enum class DetectionMode { all, forward };

inline const char* to_string(DetectionMode m) { return m == DetectionMode::all ? "all" : "forward"; }

inline std::optional<DetectionMode> parse_detection_mode(std::string_view s) {
  if (s == "all") return DetectionMode::all;
  if (s == "forward") return DetectionMode::forward;
  return std::nullopt;
}

struct LearningParams {
  DetectionMode mode = DetectionMode::forward;
  int episodes = 6000;
  int update_period = 30;
  /// Step size for the n-th update of a state-action pair is
  /// max(learning_rate_floor, learning_rate / (1 + learning_rate * n)).
  double learning_rate = 0.2;
  double learning_rate_floor = 0.002;
  /// Rewards summed before bootstrapping; 1 is one-step Q-learning.
  int n_step = 6;
  double discount = 0.98;
  double epsilon_start = 0.3;
  double epsilon_end = 0.02;
  /// Episodes over which exploration decays linearly to epsilon_end.
  int epsilon_decay_episodes = 4000;
  int pool_size = 100;
  /// DCB capacity used to precondition the training pool; unset means
  /// departure separation only.
  std::optional<int> pool_capacity = 10;

  int dgoal_bins = 10;
  int speed_bins = 5;
  std::vector<double> distance_edges{0, 100, 150, 200, 300, 400, 500, 650, 800, 1000, 1250, 1500};
  std::vector<double> range_rate_edges{-10.0, -2.5, 2.5, 10.0};
};

}  // namespace uam
