#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "uam/engine.hpp"
#include "uam/metrics.hpp"
#include "uam/policy.hpp"
#include "uam/scenario.hpp"

namespace uam {

struct RunModes {
  StrategicMode strategic = StrategicMode::none;
  TacticalMode tactical = TacticalMode::none;
  const PolicyTable* policy = nullptr;
};

/// Copy of a scenario with every resource capacity set to c.
Scenario with_capacity(const Scenario& scenario, int c);

/// Copy of a scenario with a different mean departure interval.
Scenario with_demand(const Scenario& scenario, double mean_interval);

/// One episode on the demand drawn from `seed`.
EpisodeLog simulate_run(const Scenario& scenario, const RunModes& modes, std::uint64_t seed);

/// Episodes with seeds base_seed + i, i < runs. The returned logs are in
/// seed order regardless of the worker count.
std::vector<EpisodeLog> monte_carlo(const Scenario& scenario, const RunModes& modes, int runs, std::uint64_t base_seed,
                                    int workers = 1);

/// Unmitigated runs used to calibrate P(MAC | NMAC); seeds are derived from
/// `seed` on their own stream.
Calibration calibrate(const Scenario& scenario, std::uint64_t seed, int workers = 1);

/// Risk parameters for reporting: the configured values, with
/// P(MAC | NMAC) replaced by the calibrated ratio when calibration is
/// enabled and defined.
RiskModelParams resolve_risk(const Scenario& scenario, std::uint64_t seed, int workers = 1,
                             Calibration* calibration = nullptr);

struct SweepRow {
  int capacity = 0;
  MetricsReport report;
  bool compliant = false;  // CI upper bound of the estimated MAC rate within the TLS
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Largest capacity whose row and every smaller swept row are compliant.
  std::optional<int> max_compliant;
};

SweepResult capacity_sweep(const Scenario& scenario, TacticalMode tactical, const PolicyTable* policy,
                           const std::vector<int>& capacities, int runs, std::uint64_t seed,
                           const RiskModelParams& risk, int workers = 1);

}  // namespace uam
