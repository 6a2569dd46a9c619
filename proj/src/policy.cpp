#include "uam/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

namespace uam {

namespace {

int uniform_bin(double x, double lo, double hi, int bins) {
  if (!(hi > lo)) return 0;
  const int b = static_cast<int>(std::floor((x - lo) / (hi - lo) * bins));
  return std::clamp(b, 0, bins - 1);
}

// Index of the bin [edges[k], edges[k+1]) containing x; values past either
// end land in the outermost bins.
int edge_bin(double x, const std::vector<double>& edges) {
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  const int b = static_cast<int>(it - edges.begin()) - 1;
  return std::clamp(b, 0, static_cast<int>(edges.size()) - 2);
}

std::string expect_key(std::istream& in, const char* key) {
  std::string k;
  if (!(in >> k) || k != key) throw PolicyError(fmt::format("policy file: expected '{}', got '{}'", key, k));
  return k;
}

template <typename T>
T read_value(std::istream& in, const char* key) {
  T v{};
  if (!(in >> v)) throw PolicyError(fmt::format("policy file: bad value for '{}'", key));
  return v;
}

std::vector<double> read_edges(std::istream& in, const char* key) {
  expect_key(in, key);
  const auto n = read_value<std::size_t>(in, key);
  std::vector<double> e(n);
  for (auto& x : e) x = read_value<double>(in, key);
  return e;
}

}  // namespace

int Discretization::state_index(const ObservationVector& obs) const {
  const int g = uniform_bin(obs.d_goal, 0.0, dgoal_max, dgoal_bins);
  const int v = uniform_bin(obs.speed, v_min, v_max, speed_bins);
  int d = distance_bins() - 1;
  double rel = 0.0;
  if (const auto* n = obs.nearest()) {
    d = edge_bin(n->distance, distance_edges);
    rel = n->range_rate;
  }
  const auto r = static_cast<int>(std::upper_bound(range_rate_edges.begin(), range_rate_edges.end(), rel) -
                                  range_rate_edges.begin());
  return ((g * speed_bins + v) * distance_bins() + d) * range_rate_bins() + r;
}

PolicyTable::PolicyTable(Discretization disc, LearningParams params)
    : disc_(std::move(disc)), params_(std::move(params)) {
  if (disc_.distance_edges.size() < 2) throw PolicyError("distance discretization needs at least two edges");
  if (disc_.dgoal_bins < 1 || disc_.speed_bins < 1) throw PolicyError("bin counts must be positive");
  q_ = Values::Zero(disc_.state_count(), kActionCount);
  visits_ = Counts::Zero(disc_.state_count(), kActionCount);
}

double PolicyTable::epsilon(int episode) const {
  if (params_.epsilon_decay_episodes <= 0 || episode >= params_.epsilon_decay_episodes) return params_.epsilon_end;
  const double f = static_cast<double>(episode) / params_.epsilon_decay_episodes;
  return params_.epsilon_start + f * (params_.epsilon_end - params_.epsilon_start);
}

SpeedAction PolicyTable::greedy(int state) const {
  const bool any = visits(state) > 0;
  auto tried = [&](SpeedAction a) { return !any || visits(state, a) > 0; };
  std::optional<SpeedAction> best;
  for (SpeedAction a : {SpeedAction::hold, SpeedAction::decrease, SpeedAction::increase}) {
    if (tried(a) && (!best || q_(state, static_cast<int>(a)) > q_(state, static_cast<int>(*best)))) best = a;
  }
  return *best;
}

double PolicyTable::state_value(int state) const {
  if (visits(state) == 0) return 0.0;
  return q_(state, static_cast<int>(greedy(state)));
}

void PolicyTable::update(int state, SpeedAction action, double reward, int next_state) {
  const double future = next_state < 0 ? 0.0 : state_value(next_state);
  update_toward(state, action, reward + params_.discount * future);
}

void PolicyTable::update_toward(int state, SpeedAction action, double target) {
  const int a = static_cast<int>(action);
  double& q = q_(state, a);
  const double lr = params_.learning_rate;
  const double step = std::max(params_.learning_rate_floor, lr / (1.0 + lr * visits_(state, a)));
  q += step * (target - q);
  if (!std::isfinite(q)) {
    throw PolicyError(fmt::format("non-finite value at state {} action {} (target {})", state, to_string(action), target));
  }
  ++visits_(state, a);
}

void PolicyTable::save(std::ostream& out) const {
  fmt::print(out, "uam-policy v1\n");
  fmt::print(out, "mode {}\n", to_string(params_.mode));
  fmt::print(out, "dgoal_max {}\ndgoal_bins {}\n", disc_.dgoal_max, disc_.dgoal_bins);
  fmt::print(out, "speed_range {} {}\nspeed_bins {}\n", disc_.v_min, disc_.v_max, disc_.speed_bins);
  fmt::print(out, "distance_edges {} {}\n", disc_.distance_edges.size(), fmt::join(disc_.distance_edges, " "));
  fmt::print(out, "range_rate_edges {} {}\n", disc_.range_rate_edges.size(), fmt::join(disc_.range_rate_edges, " "));
  fmt::print(out, "learning_rate {} {}\ndiscount {}\n", params_.learning_rate, params_.learning_rate_floor, params_.discount);
  fmt::print(out, "epsilon {} {} {}\n", params_.epsilon_start, params_.epsilon_end, params_.epsilon_decay_episodes);
  fmt::print(out, "episodes {}\nupdate_period {}\nn_step {}\n", params_.episodes, params_.update_period, params_.n_step);
  fmt::print(out, "states {}\n", q_.rows());
  for (Eigen::Index s = 0; s < q_.rows(); ++s) {
    fmt::print(out, "{} {} {} {} {} {} {}\n", s, visits_(s, 0), visits_(s, 1), visits_(s, 2), q_(s, 0), q_(s, 1),
               q_(s, 2));
  }
}

void PolicyTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw PolicyError(fmt::format("cannot write policy file {}", path.string()));
  save(out);
}

PolicyTable PolicyTable::load(std::istream& in) {
  std::string magic, version;
  in >> magic >> version;
  if (magic != "uam-policy" || version != "v1") throw PolicyError("not a uam-policy v1 file");
  Discretization d;
  LearningParams p;
  expect_key(in, "mode");
  const auto mode = parse_detection_mode(read_value<std::string>(in, "mode"));
  if (!mode) throw PolicyError("policy file: unknown detection mode");
  p.mode = *mode;
  expect_key(in, "dgoal_max");
  d.dgoal_max = read_value<double>(in, "dgoal_max");
  expect_key(in, "dgoal_bins");
  d.dgoal_bins = read_value<int>(in, "dgoal_bins");
  expect_key(in, "speed_range");
  d.v_min = read_value<double>(in, "speed_range");
  d.v_max = read_value<double>(in, "speed_range");
  expect_key(in, "speed_bins");
  d.speed_bins = read_value<int>(in, "speed_bins");
  d.distance_edges = read_edges(in, "distance_edges");
  d.range_rate_edges = read_edges(in, "range_rate_edges");
  p.distance_edges = d.distance_edges;
  p.range_rate_edges = d.range_rate_edges;
  p.dgoal_bins = d.dgoal_bins;
  p.speed_bins = d.speed_bins;
  expect_key(in, "learning_rate");
  p.learning_rate = read_value<double>(in, "learning_rate");
  p.learning_rate_floor = read_value<double>(in, "learning_rate");
  expect_key(in, "discount");
  p.discount = read_value<double>(in, "discount");
  expect_key(in, "epsilon");
  p.epsilon_start = read_value<double>(in, "epsilon");
  p.epsilon_end = read_value<double>(in, "epsilon");
  p.epsilon_decay_episodes = read_value<int>(in, "epsilon");
  expect_key(in, "episodes");
  p.episodes = read_value<int>(in, "episodes");
  expect_key(in, "update_period");
  p.update_period = read_value<int>(in, "update_period");
  expect_key(in, "n_step");
  p.n_step = read_value<int>(in, "n_step");

  PolicyTable t(d, p);
  expect_key(in, "states");
  const auto n = read_value<Eigen::Index>(in, "states");
  if (n != t.q_.rows()) throw PolicyError(fmt::format("policy file: {} states, discretization implies {}", n, t.q_.rows()));
  for (Eigen::Index s = 0; s < n; ++s) {
    if (read_value<Eigen::Index>(in, "row") != s) throw PolicyError(fmt::format("policy file: row {} out of order", s));
    for (int a = 0; a < kActionCount; ++a) t.visits_(s, a) = read_value<std::uint32_t>(in, "visits");
    for (int a = 0; a < kActionCount; ++a) {
      t.q_(s, a) = read_value<double>(in, "value");
      if (!std::isfinite(t.q_(s, a))) throw PolicyError(fmt::format("policy file: non-finite value in row {}", s));
    }
  }
  return t;
}

PolicyTable PolicyTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PolicyError(fmt::format("cannot read policy file {}", path.string()));
  return load(in);
}

PolicyDecision policy_act(const PolicyTable& policy, const ObservationVector& obs, bool explore, double epsilon,
                          Rng* rng) {
  const int s = policy.discretization().state_index(obs);
  if (explore && rng && epsilon > 0.0) {
    boost::random::uniform_01<double> u;
    if (u(*rng) < epsilon) {
      boost::random::uniform_int_distribution<int> pick(0, kActionCount - 1);
      return {static_cast<SpeedAction>(pick(*rng)), false};
    }
  }
  if (policy.visits(s) == 0) return {SpeedAction::hold, true};
  return {policy.greedy(s), false};
}

}  // namespace uam
