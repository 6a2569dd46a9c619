#include "uam/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/core.h>

namespace uam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-9;

// Minimum distance between two points moving linearly from (a0, b0) to
// (a1, b1) over one step.
double segment_min_distance(const Eigen::Vector2d& a0, const Eigen::Vector2d& a1, const Eigen::Vector2d& b0,
                            const Eigen::Vector2d& b1) {
  const Eigen::Vector2d r0 = b0 - a0;
  const Eigen::Vector2d dr = (b1 - a1) - r0;
  const double dd = dr.squaredNorm();
  if (dd == 0.0) return r0.norm();
  const double s = std::clamp(-r0.dot(dr) / dd, 0.0, 1.0);
  return (r0 + s * dr).norm();
}

}  // namespace

const char* to_string(StrategicMode m) {
  switch (m) {
    case StrategicMode::none: return "none";
    case StrategicMode::exact_plan: return "exact";
    case StrategicMode::heuristic: return "heuristic";
  }
  return "?";
}

const char* to_string(TacticalMode m) {
  switch (m) {
    case TacticalMode::none: return "none";
    case TacticalMode::rule: return "rule";
    case TacticalMode::policy: return "policy";
  }
  return "?";
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::lowc: return "LoWC";
    case EventKind::nmac: return "NMAC";
    case EventKind::mac: return "MAC";
  }
  return "?";
}

const char* to_string(Phase p) {
  switch (p) {
    case Phase::pre_departure: return "pre_departure";
    case Phase::airborne: return "airborne";
    case Phase::landed: return "landed";
    case Phase::removed: return "removed";
  }
  return "?";
}

std::optional<StrategicMode> parse_strategic_mode(std::string_view s) {
  if (s == "none") return StrategicMode::none;
  if (s == "exact") return StrategicMode::exact_plan;
  if (s == "heuristic") return StrategicMode::heuristic;
  return std::nullopt;
}

std::optional<TacticalMode> parse_tactical_mode(std::string_view s) {
  if (s == "none") return TacticalMode::none;
  if (s == "rule") return TacticalMode::rule;
  if (s == "policy") return TacticalMode::policy;
  return std::nullopt;
}

double EpisodeLog::flight_hours() const {
  double s = 0.0;
  for (const auto& f : flights) {
    if (f.final_phase != Phase::pre_departure) s += f.actual;
  }
  return s / 3600.0;
}

std::size_t EpisodeLog::count(EventKind k) const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [k](const auto& e) { return e.kind == k; }));
}

std::size_t EpisodeLog::count(Phase p) const {
  return static_cast<std::size_t>(
      std::count_if(flights.begin(), flights.end(), [p](const auto& f) { return f.final_phase == p; }));
}

double EventDetector::threshold(EventKind k) const {
  switch (k) {
    case EventKind::lowc: return thresholds_.d_lowc;
    case EventKind::nmac: return thresholds_.d_nmac;
    case EventKind::mac: return thresholds_.d_mac;
  }
  return 0.0;
}

void EventDetector::update(std::size_t a, std::size_t b, double t0, double t1, double d_min, double d_end) {
  if (a > b) std::swap(a, b);
  const auto key = std::make_pair(a, b);
  auto it = open_.find(key);
  if (it == open_.end()) {
    if (!(d_min < thresholds_.d_lowc)) return;
    it = open_.emplace(key, std::array<std::optional<SeparationEvent>, 3>{}).first;
  }
  bool any_open = false;
  for (int k = 0; k < 3; ++k) {
    const auto kind = static_cast<EventKind>(k);
    const double thr = threshold(kind);
    auto& slot = it->second[k];
    if (!slot && d_min < thr) slot = SeparationEvent{kind, a, b, t0, t1, d_min};
    if (!slot) continue;
    slot->min_distance = std::min(slot->min_distance, d_min);
    if (d_end >= thr) {
      slot->t_end = t1;
      closed_.push_back(*slot);
      slot.reset();
    } else {
      any_open = true;
    }
  }
  if (!any_open) open_.erase(it);
}

void EventDetector::close(
    std::map<std::pair<std::size_t, std::size_t>, std::array<std::optional<SeparationEvent>, 3>>::iterator it,
    double t) {
  for (auto& slot : it->second) {
    if (!slot) continue;
    slot->t_end = t;
    closed_.push_back(*slot);
    slot.reset();
  }
}

void EventDetector::release(std::size_t f, double t) {
  for (auto it = open_.begin(); it != open_.end();) {
    if (it->first.first == f || it->first.second == f) {
      close(it, t);
      it = open_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<SeparationEvent> EventDetector::finish(double t) {
  for (auto it = open_.begin(); it != open_.end(); ++it) close(it, t);
  open_.clear();
  std::vector<SeparationEvent> out = std::move(closed_);
  closed_.clear();
  std::stable_sort(out.begin(), out.end(), [](const SeparationEvent& x, const SeparationEvent& y) {
    if (x.t_start != y.t_start) return x.t_start < y.t_start;
    if (x.flight_a != y.flight_a) return x.flight_a < y.flight_a;
    if (x.flight_b != y.flight_b) return x.flight_b < y.flight_b;
    return x.kind < y.kind;
  });
  return out;
}

std::vector<double> separated_departures(const DcbInstance& instance) {
  std::vector<double> r(instance.flights.size(), 0.0);
  std::map<std::string, double> last;
  for (std::size_t idx : release_order(instance)) {
    const auto& f = instance.flights[idx];
    double t = f.scheduled;
    if (auto it = last.find(f.origin); it != last.end()) {
      t = std::max(t, it->second + instance.config.departure_separation);
    }
    r[idx] = t;
    last[f.origin] = t;
  }
  return r;
}

World::World(const Scenario& scenario, std::vector<FlightPlan> plans, EpisodeOptions options)
    : scenario_(scenario),
      cfg_(scenario.config().engine),
      opt_(options),
      plans_(std::move(plans)),
      detector_(scenario.config().thresholds),
      explore_rng_(options.exploration_seed) {
  const auto& air = scenario_.airspace();
  const auto& perf = scenario_.config().performance;
  const std::size_t n = plans_.size();
  if (!(cfg_.step_dt > 0) || cfg_.decision_dt < cfg_.step_dt) throw std::invalid_argument("need 0 < step_dt <= decision_dt");
  decision_every_ = std::max(1, static_cast<int>(std::lround(cfg_.decision_dt / cfg_.step_dt)));
  if (opt_.tactical == TacticalMode::policy && !opt_.policy) throw std::invalid_argument("policy mode needs a policy table");

  aircraft_.resize(n);
  log_.flights.resize(n);
  release_time_.assign(n, kInf);
  landing_time_.assign(n, kInf);
  alerts_.assign(n, 0);
  prev_pos_.assign(n, Eigen::Vector2d::Zero());
  pending_.assign(n, Pending{});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = plans_[i];
    auto& a = aircraft_[i];
    a.flight_id = p.flight_id;
    a.route = air.route_index(p.route_id);
    a.speed = a.target_speed = perf.v_cruise;
    auto& rec = log_.flights[i];
    rec.flight_id = p.flight_id;
    rec.route_id = p.route_id;
    rec.scheduled = p.scheduled_departure;
    rec.estimated = scenario_.nominal_flight_time(a.route);
  }

  dcb_ = make_dcb_instance(plans_, scenario_);
  switch (opt_.strategic) {
    case StrategicMode::none:
      release_time_ = separated_departures(dcb_);
      break;
    case StrategicMode::exact_plan: {
      DcbSolution solved;
      const DcbSolution* plan = opt_.plan;
      if (!plan) {
        solved = solve_exact(dcb_);
        plan = &solved;
      }
      if (plan->status == DcbStatus::infeasible || plan->required_departures.size() != n) {
        const std::string res = plan->binding_resource ? dcb_.config.resource_names.at(*plan->binding_resource) : "?";
        throw std::runtime_error(fmt::format("no feasible balancing plan (binding resource {})", res));
      }
      release_time_ = plan->required_departures;
      break;
    }
    case StrategicMode::heuristic: {
      DcbConfig c = dcb_.config;
      c.horizon = dcb_.horizon();
      heuristic_.emplace(std::move(c));
      const auto order = release_order(dcb_);
      rank_.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        rank_[order[k]] = k;
        queues_[dcb_.flights[order[k]].origin].push_back(order[k]);
      }
      break;
    }
  }
}

std::vector<TrafficEntry> World::traffic() const {
  const auto& air = scenario_.airspace();
  std::vector<TrafficEntry> t(aircraft_.size());
  for (std::size_t i = 0; i < aircraft_.size(); ++i) {
    const auto& a = aircraft_[i];
    t[i].route = a.route;
    t[i].arc = a.arc;
    t[i].speed = a.speed;
    t[i].airborne = a.phase == Phase::airborne;
    if (t[i].airborne) t[i].position = air.position_at(a.route, a.arc);
  }
  return t;
}

void World::release_departures(double t0, double t1) {
  const auto& air = scenario_.airspace();
  const double v = scenario_.config().performance.v_cruise;
  if (heuristic_) {
    std::vector<std::size_t> ready;
    for (auto& [origin, q] : queues_) {
      const std::size_t h = queue_head_[origin];
      if (h < q.size() && dcb_.flights[q[h]].scheduled <= t0 + kEps) ready.push_back(q[h]);
    }
    std::sort(ready.begin(), ready.end(), [&](std::size_t a, std::size_t b) { return rank_[a] < rank_[b]; });
    for (std::size_t idx : ready) {
      if (heuristic_->try_release(dcb_.flights[idx], t0)) {
        release_time_[idx] = t0;
        ++queue_head_[dcb_.flights[idx].origin];
      }
    }
  }
  for (std::size_t i = 0; i < aircraft_.size(); ++i) {
    auto& a = aircraft_[i];
    if (a.phase != Phase::pre_departure || !(release_time_[i] < t1 - kEps)) continue;
    const double r = release_time_[i];
    a.phase = Phase::airborne;
    a.speed = a.target_speed = v;
    a.arc = 0.0;
    a.airborne_elapsed = 0.0;
    prev_pos_[i] = air.position_at(a.route, 0.0);
    log_.flights[i].required = r;
    // Flown during the remainder of this step.
    const double dt = t1 - std::max(r, t0);
    a.arc = v * dt;
    a.airborne_elapsed = dt;
    const double length = air.route_length(a.route);
    if (a.arc >= length) {
      a.arc = length;
      finalize_flight(i, Phase::landed, r + length / v, length / v);
    }
  }
}

void World::decide() {
  if (opt_.tactical == TacticalMode::none && !opt_.track) return;
  const auto& cfg = scenario_.config();
  const auto& air = scenario_.airspace();
  const auto picture = traffic();
  const DetectionMode mode = opt_.tactical == TacticalMode::policy ? opt_.policy->mode() : DetectionMode::forward;
  for (std::size_t i = 0; i < aircraft_.size(); ++i) {
    auto& a = aircraft_[i];
    if (a.phase != Phase::airborne) continue;
    const ObservationVector obs = observe(i, picture, air, mode, cfg.thresholds);
    Advisory adv = Advisory::hold;
    if (opt_.tactical == TacticalMode::rule) {
      adv = rule_based_policy(obs, cfg.rule, cfg.thresholds);
    } else if (opt_.tactical == TacticalMode::policy) {
      const int state = opt_.policy->discretization().state_index(obs);
      close_sample(i, state);
      const PolicyDecision d = policy_act(*opt_.policy, obs, opt_.explore, opt_.epsilon, &explore_rng_);
      if (d.unseen) ++log_.unseen_states;
      pending_[i] = Pending{true, state, d.action, kInf};
      adv = d.action == SpeedAction::decrease   ? Advisory::decrease
            : d.action == SpeedAction::increase ? Advisory::increase
                                                : Advisory::hold;
    }
    switch (adv) {
      case Advisory::hold: break;
      case Advisory::decrease: a.target_speed = apply_action(a.target_speed, SpeedAction::decrease, cfg.performance); break;
      case Advisory::increase: a.target_speed = apply_action(a.target_speed, SpeedAction::increase, cfg.performance); break;
      case Advisory::minimum_speed: a.target_speed = cfg.performance.v_min; break;
    }
    if (adv != Advisory::hold) ++alerts_[i];
    if (opt_.track) {
      const auto* n = obs.nearest();
      opt_.track->push_back({static_cast<double>(clock_) * cfg_.step_dt, i, picture[i].position.x(),
                             picture[i].position.y(), a.arc, a.speed, a.target_speed, adv, n ? n->distance : kInf});
    }
  }
}

void World::close_sample(std::size_t i, int next_state) {
  auto& p = pending_[i];
  if (!p.open) return;
  const auto& cfg = scenario_.config();
  const auto& a = aircraft_[i];
  Transition tr;
  tr.min_distance = p.min_distance;
  tr.elapsed = a.airborne_elapsed;
  tr.max_flight_time = scenario_.max_flight_time(a.route);
  tr.action = p.action;
  const RewardBreakdown r = reward(tr, cfg.reward, cfg.thresholds);
  log_.reward += r;
  if (opt_.samples) opt_.samples->push_back({i, p.state, p.action, r, next_state});
  p.open = false;
}

void World::finalize_flight(std::size_t i, Phase phase, double t, double actual) {
  auto& a = aircraft_[i];
  // Step-wise arc accumulation leaves round-off of a few ulps.
  const double nominal = log_.flights[i].estimated;
  if (std::abs(actual - nominal) <= 1e-9 * nominal) actual = nominal;
  a.phase = phase;
  landing_time_[i] = t;
  log_.flights[i].actual = actual;
  close_sample(i, -1);
  detector_.release(i, t);
}

void World::move(double t0, double dt) {
  const auto& perf = scenario_.config().performance;
  const auto& air = scenario_.airspace();
  const double t1 = t0 + dt;
  for (std::size_t i = 0; i < aircraft_.size(); ++i) {
    auto& a = aircraft_[i];
    if (a.phase != Phase::airborne) continue;
    const double length = air.route_length(a.route);
    const double dv = std::clamp(a.target_speed - a.speed, -perf.accel * dt, perf.accel * dt);
    a.speed = std::clamp(a.speed + dv, perf.v_min, perf.v_max);
    const double before = a.arc;
    a.arc += a.speed * dt;
    a.airborne_elapsed += dt;
    if (a.arc >= length) {
      const double t_land = t0 + (length - before) / a.speed;
      a.arc = length;
      finalize_flight(i, Phase::landed, t_land, t_land - release_time_[i]);
    } else if (a.airborne_elapsed > scenario_.max_flight_time(a.route)) {
      finalize_flight(i, Phase::removed, t1, a.airborne_elapsed);
    }
  }
}

void World::detect(double t0, double t1) {
  const auto& air = scenario_.airspace();
  std::vector<std::size_t> live;
  std::vector<Eigen::Vector2d> now;
  for (std::size_t i = 0; i < aircraft_.size(); ++i) {
    if (aircraft_[i].phase != Phase::airborne) continue;
    live.push_back(i);
    now.push_back(air.position_at(aircraft_[i].route, aircraft_[i].arc));
  }
  double step_min = kInf;
  for (std::size_t x = 0; x < live.size(); ++x) {
    for (std::size_t y = x + 1; y < live.size(); ++y) {
      const std::size_t i = live[x], j = live[y];
      const double d_end = (now[y] - now[x]).norm();
      const double d_min = std::min(d_end, segment_min_distance(prev_pos_[i], now[x], prev_pos_[j], now[y]));
      step_min = std::min(step_min, d_min);
      detector_.update(i, j, t0, t1, d_min, d_end);
    }
  }
  log_.step_min_distance.push_back(step_min);
  for (std::size_t x = 0; x < live.size(); ++x) prev_pos_[live[x]] = now[x];
}

void World::observe_rewards() {
  if (opt_.tactical != TacticalMode::policy) return;
  const auto& cfg = scenario_.config();
  const auto picture = traffic();
  for (std::size_t i = 0; i < aircraft_.size(); ++i) {
    if (!pending_[i].open || aircraft_[i].phase != Phase::airborne) continue;
    const ObservationVector obs = observe(i, picture, scenario_.airspace(), opt_.policy->mode(), cfg.thresholds);
    if (const auto* n = obs.nearest()) pending_[i].min_distance = std::min(pending_[i].min_distance, n->distance);
  }
}

void World::step() {
  const double dt = cfg_.step_dt;
  const double t0 = time();
  const double t1 = static_cast<double>(clock_ + 1) * dt;
  if (clock_ % decision_every_ == 0) decide();
  move(t0, dt);
  release_departures(t0, t1);
  detect(t0, t1);
  observe_rewards();
  ++clock_;
}

bool World::done() const {
  if (time() >= cfg_.max_sim_time - kEps) return true;
  return std::all_of(aircraft_.begin(), aircraft_.end(),
                     [](const AircraftState& a) { return a.phase == Phase::landed || a.phase == Phase::removed; });
}

EpisodeLog World::finish() {
  const double t = time();
  log_.end_time = t;
  for (std::size_t i = 0; i < aircraft_.size(); ++i) {
    auto& rec = log_.flights[i];
    const auto& a = aircraft_[i];
    rec.final_phase = a.phase;
    rec.alerts = alerts_[i];
    if (a.phase == Phase::airborne) {
      log_.truncated = true;
      rec.actual = a.airborne_elapsed;
    } else if (a.phase == Phase::pre_departure) {
      log_.truncated = true;
      rec.required = std::isfinite(release_time_[i]) ? release_time_[i] : t;
    }
    pending_[i].open = false;
  }
  log_.events = detector_.finish(t);
  return std::move(log_);
}

EpisodeLog run_episode(const Scenario& scenario, std::vector<FlightPlan> plans, const EpisodeOptions& options) {
  World w(scenario, std::move(plans), options);
  while (!w.done()) w.step();
  return w.finish();
}

}  // namespace uam
