#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "uam/airspace.hpp"
#include "uam/dcb.hpp"
#include "uam/engine.hpp"
#include "uam/params.hpp"
#include "uam/policy.hpp"
#include "uam/scenario.hpp"

namespace uam {

/// A flight schedule table with the departures it will be flown with.
struct PoolEntry {
  std::vector<FlightPlan> plans;
  DcbSolution release;
};

/// Schedules drawn from the scenario's demand. With a capacity, each one is
/// balanced by the exact solver at that capacity; otherwise only departure
/// separation is applied.
std::vector<PoolEntry> build_training_pool(const Scenario& scenario, int size, std::optional<int> capacity,
                                           std::uint64_t seed);

struct TrainingResult {
  PolicyTable policy;
  std::vector<RewardBreakdown> curve;  // one entry per episode
  std::size_t unseen_states = 0;
};

/// Episode-level callback: (episode index, reward of that episode).
using TrainingProgress = std::function<void(int, const RewardBreakdown&)>;

/// Shared-policy n-step Q-learning. Episodes run in batches of
/// update_period with the table frozen; the batch's transitions are then
/// applied in episode order. The result depends on (scenario, pool, params,
/// seed) only.
TrainingResult train_policy(const Scenario& scenario, const std::vector<PoolEntry>& pool, const LearningParams& params,
                            std::uint64_t seed, int workers = 1, const TrainingProgress& progress = {});

/// Discretization matching a scenario's routes and speed envelope.
Discretization discretization_for(const Scenario& scenario, const LearningParams& params);

/// Applies one episode's samples with n-step targets along each flight's
/// decision sequence, n = policy.params().n_step.
void apply_n_step(PolicyTable& policy, const std::vector<LearningSample>& samples);

/// Trailing-mean reward threshold crossing: first episode index e such that
/// the mean total reward over episodes (e - window, e] reaches `threshold`.
std::optional<int> episodes_to_threshold(const std::vector<RewardBreakdown>& curve, int window, double threshold);

}  // namespace uam
