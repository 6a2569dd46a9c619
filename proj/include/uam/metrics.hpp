#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "uam/engine.hpp"
#include "uam/params.hpp"

namespace uam {

class MetricsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MacEstimate {
  double expected = 0.0;         // E = p * beta * n_nmac
  double rate_per_100k_fh = 0.0;
};

/// Expected mid-air collisions implied by a count of near misses.
MacEstimate estimate_mac(double n_nmac, double flight_hours, const RiskModelParams& params);

struct Calibration {
  std::size_t mac = 0;
  std::size_t nmac = 0;
  std::optional<double> p;  // undefined without any NMAC
  double ci_low = 0.0;
  double ci_high = 1.0;
};

/// Pooled MAC/NMAC ratio over unmitigated runs with a Clopper-Pearson
/// interval at the given confidence.
Calibration calibrate_p_mac_given_nmac(std::span<const EpisodeLog> logs, double confidence = 0.95);

/// Method rate over baseline rate; undefined for a zero baseline.
std::optional<double> risk_ratio(double method_rate, double baseline_rate);

/// Mean with a Student-t interval over run-level values.
struct Estimate {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

Estimate summarize(std::vector<double> values, double confidence = 0.95);

struct MetricsReport {
  std::size_t runs = 0;
  std::size_t flights = 0;
  double flight_hours = 0.0;
  std::size_t lowc = 0;
  std::size_t nmac = 0;
  std::size_t mac = 0;
  std::size_t truncated_runs = 0;
  Estimate lowc_per_fh;
  Estimate nmac_per_fh;
  Estimate est_mac_per_100k_fh;
  double mean_ground_delay = 0.0;
  double mean_airborne_delay = 0.0;
  double mean_alerts = 0.0;
  std::optional<double> risk_ratio;
  double p_mac_given_nmac = 0.0;
  bool pooled = false;
};

struct AggregateOptions {
  /// Pool counts and flight hours over runs instead of averaging run rates.
  bool pooled = false;
  double confidence = 0.95;
};

/// Safety rates per run then averaged; efficiency metrics per flight over
/// all runs. Independent of the order of `logs`.
MetricsReport aggregate(std::span<const EpisodeLog> logs, const RiskModelParams& params,
                        const AggregateOptions& options = {});

/// Sets report.risk_ratio against a baseline report.
void attach_risk_ratio(MetricsReport& report, const MetricsReport& baseline);

/// Spearman rank correlation with average ranks for ties; undefined when
/// either side is constant.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

}  // namespace uam
