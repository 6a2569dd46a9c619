#include "uam/experiment.hpp"

#include <algorithm>
#include <stdexcept>

#include "uam/parallel.hpp"
#include "uam/rng.hpp"

namespace uam {

Scenario with_capacity(const Scenario& scenario, int c) {
  ScenarioConfig cfg = scenario.config();
  cfg.set_capacity(c);
  return Scenario(std::move(cfg));
}

Scenario with_demand(const Scenario& scenario, double mean_interval) {
  ScenarioConfig cfg = scenario.config();
  cfg.demand = cfg.demand.with_mean_interval(mean_interval);
  return Scenario(std::move(cfg));
}

EpisodeLog simulate_run(const Scenario& scenario, const RunModes& modes, std::uint64_t seed) {
  auto plans = generate_schedule(scenario.config().demand, scenario.config().routes, seed);
  EpisodeOptions opt;
  opt.strategic = modes.strategic;
  opt.tactical = modes.tactical;
  opt.policy = modes.policy;
  opt.exploration_seed = derive_seed(seed, kExplorationStream);
  return run_episode(scenario, std::move(plans), opt);
}

std::vector<EpisodeLog> monte_carlo(const Scenario& scenario, const RunModes& modes, int runs, std::uint64_t base_seed,
                                    int workers) {
  if (runs < 1) throw std::invalid_argument("monte carlo needs at least one run");
  std::vector<EpisodeLog> logs(static_cast<std::size_t>(runs));
  parallel_for(logs.size(), workers, [&](std::size_t i) { logs[i] = simulate_run(scenario, modes, base_seed + i); });
  return logs;
}

Calibration calibrate(const Scenario& scenario, std::uint64_t seed, int workers) {
  const auto logs = monte_carlo(scenario, RunModes{}, scenario.config().risk.calibration_runs,
                                derive_seed(seed, kCalibrationStream), workers);
  return calibrate_p_mac_given_nmac(logs);
}

RiskModelParams resolve_risk(const Scenario& scenario, std::uint64_t seed, int workers, Calibration* calibration) {
  RiskModelParams risk = scenario.config().risk;
  if (!risk.calibrate) return risk;
  const Calibration c = calibrate(scenario, seed, workers);
  if (c.p) risk.p_mac_given_nmac = *c.p;
  if (calibration) *calibration = c;
  return risk;
}

SweepResult capacity_sweep(const Scenario& scenario, TacticalMode tactical, const PolicyTable* policy,
                           const std::vector<int>& capacities, int runs, std::uint64_t seed,
                           const RiskModelParams& risk, int workers) {
  SweepResult out;
  std::vector<int> caps = capacities;
  std::sort(caps.begin(), caps.end());
  bool contiguous = true;
  for (int c : caps) {
    if (c < 1) throw std::invalid_argument("capacities must be >= 1");
    const Scenario s = with_capacity(scenario, c);
    const auto logs = monte_carlo(s, RunModes{StrategicMode::exact_plan, tactical, policy}, runs, seed, workers);
    SweepRow row;
    row.capacity = c;
    row.report = aggregate(logs, risk);
    row.compliant = row.report.est_mac_per_100k_fh.ci_high <= risk.tls;
    contiguous = contiguous && row.compliant;
    if (contiguous) out.max_compliant = c;
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace uam
