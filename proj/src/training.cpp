#include "uam/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/core.h>

#include "uam/parallel.hpp"
#include "uam/rng.hpp"

namespace uam {

std::vector<PoolEntry> build_training_pool(const Scenario& scenario, int size, std::optional<int> capacity,
                                           std::uint64_t seed) {
  if (size < 1) throw std::invalid_argument("training pool needs at least one schedule");
  std::optional<Scenario> capped;
  if (capacity) {
    ScenarioConfig cfg = scenario.config();
    cfg.set_capacity(*capacity);
    capped.emplace(std::move(cfg));
  }
  const Scenario& s = capped ? *capped : scenario;
  const std::uint64_t base = derive_seed(seed, kPoolStream);
  std::vector<PoolEntry> pool(static_cast<std::size_t>(size));
  for (int k = 0; k < size; ++k) {
    auto& e = pool[static_cast<std::size_t>(k)];
    e.plans = generate_schedule(s.config().demand, s.config().routes, derive_seed(base, static_cast<std::uint64_t>(k)));
    const DcbInstance inst = make_dcb_instance(e.plans, s);
    if (capacity) {
      e.release = solve_exact(inst);
      if (e.release.status == DcbStatus::infeasible) {
        throw std::runtime_error(fmt::format("training pool schedule {} infeasible at capacity {}", k, *capacity));
      }
    } else {
      e.release.required_departures = separated_departures(inst);
      e.release.status = DcbStatus::feasible;
    }
    apply_solution(e.plans, e.release, s);
  }
  return pool;
}

void apply_n_step(PolicyTable& policy, const std::vector<LearningSample>& samples) {
  const int n = policy.params().n_step;
  const double gamma = policy.params().discount;
  // Samples of one flight are emitted in decision order.
  std::map<std::size_t, std::vector<const LearningSample*>> by_flight;
  for (const auto& s : samples) by_flight[s.flight].push_back(&s);
  // Targets use the table as it stood before this episode.
  std::vector<std::tuple<int, SpeedAction, double>> updates;
  updates.reserve(samples.size());
  for (const auto& [flight, traj] : by_flight) {
    for (std::size_t t = 0; t < traj.size(); ++t) {
      double g = 0.0, discount = 1.0;
      bool terminal = false;
      std::size_t k = t;
      for (; k < traj.size() && k < t + static_cast<std::size_t>(n) && !terminal; ++k) {
        g += discount * traj[k]->reward.total;
        discount *= gamma;
        terminal = traj[k]->next_state < 0;
      }
      if (!terminal) g += discount * policy.state_value(traj[k - 1]->next_state);
      updates.emplace_back(traj[t]->state, traj[t]->action, g);
    }
  }
  for (const auto& [state, action, target] : updates) policy.update_toward(state, action, target);
}

Discretization discretization_for(const Scenario& scenario, const LearningParams& params) {
  Discretization d;
  d.dgoal_max = 0.0;
  for (std::size_t r = 0; r < scenario.airspace().routes().size(); ++r) {
    d.dgoal_max = std::max(d.dgoal_max, scenario.airspace().route_length(r));
  }
  d.dgoal_bins = params.dgoal_bins;
  d.v_min = scenario.config().performance.v_min;
  d.v_max = scenario.config().performance.v_max;
  d.speed_bins = params.speed_bins;
  d.distance_edges = params.distance_edges;
  d.range_rate_edges = params.range_rate_edges;
  return d;
}

TrainingResult train_policy(const Scenario& scenario, const std::vector<PoolEntry>& pool, const LearningParams& params,
                            std::uint64_t seed, int workers, const TrainingProgress& progress) {
  if (pool.empty()) throw std::invalid_argument("training pool is empty");
  if (params.episodes < 0 || params.update_period < 1) throw std::invalid_argument("bad episode configuration");
  TrainingResult out{PolicyTable(discretization_for(scenario, params), params), {}, 0};
  out.curve.reserve(static_cast<std::size_t>(params.episodes));
  const std::uint64_t pick_base = derive_seed(seed, kPoolStream);
  const std::uint64_t explore_base = derive_seed(seed, kExplorationStream);

  for (int first = 0; first < params.episodes; first += params.update_period) {
    const int count = std::min(params.update_period, params.episodes - first);
    std::vector<std::vector<LearningSample>> samples(static_cast<std::size_t>(count));
    std::vector<EpisodeLog> logs(static_cast<std::size_t>(count));
    const PolicyTable& frozen = out.policy;
    parallel_for(static_cast<std::size_t>(count), workers, [&](std::size_t k) {
      const int e = first + static_cast<int>(k);
      Rng pick(derive_seed(pick_base, static_cast<std::uint64_t>(e)));
      boost::random::uniform_int_distribution<std::size_t> which(0, pool.size() - 1);
      const PoolEntry& entry = pool[which(pick)];
      EpisodeOptions opt;
      opt.strategic = StrategicMode::exact_plan;
      opt.plan = &entry.release;
      opt.tactical = TacticalMode::policy;
      opt.policy = &frozen;
      opt.explore = true;
      opt.epsilon = frozen.epsilon(e);
      opt.exploration_seed = derive_seed(explore_base, static_cast<std::uint64_t>(e));
      opt.samples = &samples[k];
      logs[k] = run_episode(scenario, entry.plans, opt);
    });
    for (int k = 0; k < count; ++k) {
      const int e = first + k;
      try {
        apply_n_step(out.policy, samples[static_cast<std::size_t>(k)]);
      } catch (const PolicyError& err) {
        throw PolicyError(fmt::format("training diverged in episode {}: {}", e, err.what()));
      }
      const auto& log = logs[static_cast<std::size_t>(k)];
      out.unseen_states += log.unseen_states;
      out.curve.push_back(log.reward);
      if (progress) progress(e, log.reward);
    }
  }
  return out;
}

std::optional<int> episodes_to_threshold(const std::vector<RewardBreakdown>& curve, int window, double threshold) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  double sum = 0.0;
  for (std::size_t e = 0; e < curve.size(); ++e) {
    sum += curve[e].total;
    if (e >= static_cast<std::size_t>(window)) sum -= curve[e - static_cast<std::size_t>(window)].total;
    if (e + 1 >= static_cast<std::size_t>(window) && sum / window >= threshold) return static_cast<int>(e);
  }
  return std::nullopt;
}

}  // namespace uam
