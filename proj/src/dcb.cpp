#include "uam/dcb.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "uam/scenario.hpp"

namespace uam {

namespace {

constexpr double kEps = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

// For each position in `order`, the position of the previous flight from the
// same origin, or -1.
std::vector<int> previous_same_origin(const DcbInstance& inst, const std::vector<std::size_t>& order) {
  std::vector<int> prev(order.size(), -1);
  std::map<std::string, int> last;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& origin = inst.flights[order[k]].origin;
    if (auto it = last.find(origin); it != last.end()) prev[k] = it->second;
    last[origin] = static_cast<int>(k);
  }
  return prev;
}

void check_instance(const DcbInstance& inst) {
  const auto& c = inst.config;
  if (!(c.window_length > 0)) throw std::invalid_argument("window length must be positive");
  if (c.departure_separation < 0) throw std::invalid_argument("departure separation must be >= 0");
  for (int cap : c.capacities) {
    if (cap < 1) throw std::invalid_argument("capacities must be >= 1");
  }
  for (const auto& f : inst.flights) {
    if (f.scheduled < 0) throw std::invalid_argument(fmt::format("flight '{}' has negative scheduled time", f.id));
    for (const auto& v : f.visits) {
      if (v.resource < 0 || static_cast<std::size_t>(v.resource) >= c.capacities.size()) {
        throw std::invalid_argument(fmt::format("flight '{}' visits unknown resource {}", f.id, v.resource));
      }
      if (v.transit < 0) throw std::invalid_argument(fmt::format("flight '{}' has negative transit", f.id));
    }
  }
}

double sum_delay(const DcbInstance& inst, const std::vector<double>& required) {
  double total = 0.0;
  for (std::size_t i = 0; i < required.size(); ++i) total += std::max(0.0, required[i] - inst.flights[i].scheduled);
  return total;
}

WindowAssignment assignment_for(const DcbInstance& inst, const std::vector<double>& required) {
  WindowAssignment a;
  a.windows.resize(inst.flights.size());
  for (std::size_t i = 0; i < inst.flights.size(); ++i) {
    for (const auto& v : inst.flights[i].visits) {
      a.windows[i].push_back(window_of(required[i] + v.transit, inst.config.window_length));
    }
  }
  return a;
}

class BranchAndBound {
 public:
  explicit BranchAndBound(const DcbInstance& inst)
      : inst_(inst),
        order_(release_order(inst)),
        prev_(previous_same_origin(inst, order_)),
        n_(inst.flights.size()),
        resources_(inst.config.capacities.size()),
        windows_(inst.window_count()),
        W_(inst.config.window_length),
        H_(inst.horizon()),
        delta_(inst.config.departure_separation),
        occupancy_(resources_ * static_cast<std::size_t>(std::max(windows_, 0)), 0),
        required_(n_, 0.0),
        rmin_(n_, 0.0),
        blocked_(resources_, 0) {}

  DcbSolution run() {
    DcbSolution sol;
    if (n_ == 0) {
      sol.status = DcbStatus::optimal;
      return sol;
    }
    search(0, 0.0);
    sol.nodes = nodes_;
    if (best_required_.empty()) {
      sol.status = DcbStatus::infeasible;
      auto it = std::max_element(blocked_.begin(), blocked_.end());
      if (it != blocked_.end() && *it > 0) sol.binding_resource = static_cast<int>(it - blocked_.begin());
      return sol;
    }
    sol.required_departures.assign(n_, 0.0);
    for (std::size_t k = 0; k < n_; ++k) sol.required_departures[order_[k]] = best_required_[k];
    sol.assignment = assignment_for(inst_, sol.required_departures);
    sol.total_delay = sum_delay(inst_, sol.required_departures);
    sol.status = aborted_ ? DcbStatus::feasible : DcbStatus::optimal;
    return sol;
  }

 private:
  const DcbFlight& flight(std::size_t k) const { return inst_.flights[order_[k]]; }

  int& occ(std::size_t p, int n) { return occupancy_[p * static_cast<std::size_t>(windows_) + static_cast<std::size_t>(n)]; }

  double earliest(std::size_t k) const {
    double lo = flight(k).scheduled;
    if (prev_[k] >= 0) lo = std::max(lo, required_[static_cast<std::size_t>(prev_[k])] + delta_);
    return lo;
  }

  // Lower bound on the delay of flights k..n-1 given departures of 0..k-1.
  // Relaxes everything except one resource at a time; the single-resource
  // problem is solved exactly by assigning flights in order of earliest
  // arrival to the earliest window with spare capacity.
  double lower_bound(std::size_t k) {
    double base = 0.0;
    for (std::size_t j = k; j < n_; ++j) {
      double lo = flight(j).scheduled;
      if (prev_[j] >= 0) {
        const auto p = static_cast<std::size_t>(prev_[j]);
        lo = std::max(lo, (p < k ? required_[p] : rmin_[p]) + delta_);
      }
      rmin_[j] = lo;
      base += lo - flight(j).scheduled;
    }
    double worst_extra = 0.0;
    for (std::size_t p = 0; p < resources_; ++p) {
      arrivals_.clear();
      for (std::size_t j = k; j < n_; ++j) {
        for (const auto& v : flight(j).visits) {
          if (static_cast<std::size_t>(v.resource) == p) arrivals_.push_back(rmin_[j] + v.transit);
        }
      }
      if (arrivals_.empty()) continue;
      std::sort(arrivals_.begin(), arrivals_.end());
      used_.assign(static_cast<std::size_t>(windows_), 0);
      const int cap = inst_.config.capacities[p];
      double extra = 0.0;
      for (double a : arrivals_) {
        int w = window_of(a, W_);
        while (w < windows_ && occ(p, w) + used_[static_cast<std::size_t>(w)] >= cap) ++w;
        if (w >= windows_ || std::max(a, w * W_) >= H_) {
          ++blocked_[p];
          return kInf;
        }
        ++used_[static_cast<std::size_t>(w)];
        extra += std::max(0.0, w * W_ - a);
      }
      worst_extra = std::max(worst_extra, extra);
    }
    return base + worst_extra;
  }

  void search(std::size_t k, double acc) {
    if (aborted_) return;
    if (k == n_) {
      if (acc < best_ - kEps) {
        best_ = acc;
        best_required_ = required_;
      }
      return;
    }
    if (++nodes_ > inst_.config.node_limit && !best_required_.empty()) {
      aborted_ = true;
      return;
    }
    if (acc + lower_bound(k) >= best_ - kEps) return;

    const DcbFlight& f = flight(k);
    double r = earliest(k);
    const std::size_t nv = f.visits.size();
    std::vector<int> wins(nv);
    while (true) {
      const double delay = r - f.scheduled;
      if (acc + delay >= best_ - kEps) return;
      bool beyond = false;
      bool fits = true;
      double next = kInf;
      for (std::size_t i = 0; i < nv; ++i) {
        const auto& v = f.visits[i];
        const double arrival = r + v.transit;
        if (arrival >= H_) {
          beyond = true;
          ++blocked_[static_cast<std::size_t>(v.resource)];
          break;
        }
        wins[i] = window_of(arrival, W_);
        if (occ(static_cast<std::size_t>(v.resource), wins[i]) >= inst_.config.capacities[static_cast<std::size_t>(v.resource)]) {
          fits = false;
          ++blocked_[static_cast<std::size_t>(v.resource)];
        }
        next = std::min(next, (wins[i] + 1) * W_ - v.transit);
      }
      if (beyond) return;
      if (fits) {
        for (std::size_t i = 0; i < nv; ++i) ++occ(static_cast<std::size_t>(f.visits[i].resource), wins[i]);
        required_[k] = r;
        search(k + 1, acc + delay);
        for (std::size_t i = 0; i < nv; ++i) --occ(static_cast<std::size_t>(f.visits[i].resource), wins[i]);
        if (aborted_) return;
      }
      if (nv == 0) return;
      r = next;
    }
  }

  const DcbInstance& inst_;
  std::vector<std::size_t> order_;
  std::vector<int> prev_;
  std::size_t n_;
  std::size_t resources_;
  int windows_;
  double W_;
  double H_;
  double delta_;
  std::vector<int> occupancy_;
  std::vector<double> required_;
  std::vector<double> rmin_;
  std::vector<std::size_t> blocked_;
  std::vector<double> arrivals_;
  std::vector<int> used_;
  std::vector<double> best_required_;
  double best_ = kInf;
  std::size_t nodes_ = 0;
  bool aborted_ = false;
};

}  // namespace

std::vector<std::size_t> release_order(const DcbInstance& inst) {
  std::vector<std::size_t> order(inst.flights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& fa = inst.flights[a];
    const auto& fb = inst.flights[b];
    if (fa.scheduled != fb.scheduled) return fa.scheduled < fb.scheduled;
    return fa.id < fb.id;
  });
  return order;
}

const char* to_string(DcbStatus s) {
  switch (s) {
    case DcbStatus::optimal: return "optimal";
    case DcbStatus::feasible: return "feasible";
    case DcbStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

double DcbInstance::horizon() const {
  if (config.horizon) return *config.horizon;
  double latest = 0.0;
  for (const auto& f : flights) {
    double t = f.scheduled;
    for (const auto& v : f.visits) t = std::max(t, f.scheduled + v.transit);
    latest = std::max(latest, t);
  }
  const double n = static_cast<double>(flights.size());
  const double pairs = n * static_cast<double>(config.capacities.size());
  return latest + (pairs + 1.0) * config.window_length + n * config.departure_separation;
}

int DcbInstance::window_count() const {
  return static_cast<int>(std::ceil(horizon() / config.window_length - kEps));
}

DcbSolution solve_exact(const DcbInstance& instance) {
  check_instance(instance);
  return BranchAndBound(instance).run();
}

HeuristicDcb::HeuristicDcb(DcbConfig config) : config_(std::move(config)), occupancy_(config_.capacities.size()) {}

bool HeuristicDcb::try_release(const DcbFlight& flight, double t) {
  if (auto it = last_release_.find(flight.origin); it != last_release_.end()) {
    if (t - it->second < config_.departure_separation - kEps) return false;
  }
  for (const auto& v : flight.visits) {
    const double arrival = t + v.transit;
    if (config_.horizon && arrival >= *config_.horizon) return false;
    const auto p = static_cast<std::size_t>(v.resource);
    if (occupancy(v.resource, window_of(arrival, config_.window_length)) >= config_.capacities[p]) return false;
  }
  for (const auto& v : flight.visits) {
    ++occupancy_[static_cast<std::size_t>(v.resource)][window_of(t + v.transit, config_.window_length)];
  }
  last_release_[flight.origin] = t;
  return true;
}

int HeuristicDcb::occupancy(int resource, int window) const {
  const auto& m = occupancy_.at(static_cast<std::size_t>(resource));
  auto it = m.find(window);
  return it == m.end() ? 0 : it->second;
}

std::optional<double> HeuristicDcb::last_release(const std::string& origin) const {
  auto it = last_release_.find(origin);
  if (it == last_release_.end()) return std::nullopt;
  return it->second;
}

DcbSolution solve_heuristic(const DcbInstance& instance, double sim_dt) {
  check_instance(instance);
  if (!(sim_dt > 0)) throw std::invalid_argument("sim_dt must be positive");
  DcbSolution sol;
  const std::size_t n = instance.flights.size();
  sol.required_departures.assign(n, 0.0);
  if (n == 0) {
    sol.status = DcbStatus::feasible;
    return sol;
  }
  const double H = instance.horizon();
  DcbConfig cfg = instance.config;
  cfg.horizon = H;
  HeuristicDcb rule(cfg);

  const auto order = release_order(instance);
  std::vector<std::size_t> rank(n);
  for (std::size_t k = 0; k < n; ++k) rank[order[k]] = k;
  std::map<std::string, std::vector<std::size_t>> queues;
  for (std::size_t idx : order) queues[instance.flights[idx].origin].push_back(idx);
  std::map<std::string, std::size_t> head;
  std::size_t remaining = n;

  for (long step = 0; remaining > 0; ++step) {
    const double t = static_cast<double>(step) * sim_dt;
    if (t >= H) {
      sol.status = DcbStatus::infeasible;
      std::vector<std::size_t> blocked(instance.config.capacities.size(), 0);
      for (auto& [origin, q] : queues) {
        if (head[origin] < q.size()) {
          for (const auto& v : instance.flights[q[head[origin]]].visits) ++blocked[static_cast<std::size_t>(v.resource)];
        }
      }
      auto it = std::max_element(blocked.begin(), blocked.end());
      if (it != blocked.end() && *it > 0) sol.binding_resource = static_cast<int>(it - blocked.begin());
      return sol;
    }
    // Origin heads that have reached their scheduled time, in release order.
    std::vector<std::size_t> ready;
    for (auto& [origin, q] : queues) {
      if (head[origin] < q.size() && instance.flights[q[head[origin]]].scheduled <= t + kEps) {
        ready.push_back(q[head[origin]]);
      }
    }
    std::sort(ready.begin(), ready.end(), [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
    for (std::size_t idx : ready) {
      const auto& f = instance.flights[idx];
      if (rule.try_release(f, t)) {
        sol.required_departures[idx] = t;
        ++head[f.origin];
        --remaining;
      }
    }
  }
  sol.assignment = assignment_for(instance, sol.required_departures);
  sol.total_delay = sum_delay(instance, sol.required_departures);
  sol.status = DcbStatus::feasible;
  return sol;
}

DcbSolution brute_force_oracle(const DcbInstance& instance) {
  check_instance(instance);
  const std::size_t n = instance.flights.size();
  if (n > kOracleMaxFlights) throw OracleRefused(fmt::format("oracle accepts at most {} flights (got {})", kOracleMaxFlights, n));
  if (instance.config.capacities.size() > kOracleMaxResources) {
    throw OracleRefused(fmt::format("oracle accepts at most {} resources", kOracleMaxResources));
  }
  const int N = instance.window_count();
  if (N > kOracleMaxWindows) throw OracleRefused(fmt::format("oracle accepts at most {} windows (got {})", kOracleMaxWindows, N));

  const double W = instance.config.window_length;
  const double H = instance.horizon();
  const double delta = instance.config.departure_separation;
  const auto order = release_order(instance);
  const auto prev = previous_same_origin(instance, order);

  // Every window tuple of every flight, kept when some departure time puts
  // each arrival in its window before the horizon.
  struct Cell {
    std::vector<int> windows;
    double lo;
    double hi;
  };
  std::vector<std::vector<Cell>> cells(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& f = instance.flights[order[k]];
    std::vector<int> tuple(f.visits.size(), 0);
    while (true) {
      double lo = -kInf;
      double hi = kInf;
      for (std::size_t i = 0; i < f.visits.size(); ++i) {
        lo = std::max(lo, tuple[i] * W - f.visits[i].transit);
        hi = std::min(hi, std::min((tuple[i] + 1) * W, H) - f.visits[i].transit);
      }
      if (lo < hi) cells[k].push_back({tuple, lo, hi});
      std::size_t i = 0;
      while (i < tuple.size() && ++tuple[i] == N) tuple[i++] = 0;
      if (i == tuple.size()) break;
    }
  }

  std::vector<std::vector<int>> occ(instance.config.capacities.size(), std::vector<int>(static_cast<std::size_t>(N), 0));
  std::vector<double> required(n, 0.0);
  std::vector<double> best_required;
  double best = kInf;
  std::size_t leaves = 0;

  auto recurse = [&](auto&& self, std::size_t k) -> void {
    if (k == n) {
      ++leaves;
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) total += required[j] - instance.flights[order[j]].scheduled;
      const bool better = total < best - kEps ||
                          (total <= best + kEps && std::lexicographical_compare(required.begin(), required.end(),
                                                                               best_required.begin(), best_required.end()));
      if (best_required.empty() || better) {
        best = total;
        best_required = required;
      }
      return;
    }
    const auto& f = instance.flights[order[k]];
    double lo = f.scheduled;
    if (prev[k] >= 0) lo = std::max(lo, required[static_cast<std::size_t>(prev[k])] + delta);
    for (const Cell& c : cells[k]) {
      const double r = std::max(lo, c.lo);
      if (!(r < c.hi)) continue;
      bool fits = true;
      for (std::size_t i = 0; i < f.visits.size(); ++i) {
        const auto p = static_cast<std::size_t>(f.visits[i].resource);
        if (occ[p][static_cast<std::size_t>(c.windows[i])] >= instance.config.capacities[p]) fits = false;
      }
      if (!fits) continue;
      for (std::size_t i = 0; i < f.visits.size(); ++i) ++occ[static_cast<std::size_t>(f.visits[i].resource)][static_cast<std::size_t>(c.windows[i])];
      required[k] = r;
      self(self, k + 1);
      for (std::size_t i = 0; i < f.visits.size(); ++i) --occ[static_cast<std::size_t>(f.visits[i].resource)][static_cast<std::size_t>(c.windows[i])];
    }
  };
  recurse(recurse, 0);

  DcbSolution sol;
  sol.nodes = leaves;
  if (n == 0) {
    sol.status = DcbStatus::optimal;
    return sol;
  }
  if (best_required.empty()) {
    sol.status = DcbStatus::infeasible;
    return sol;
  }
  sol.required_departures.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) sol.required_departures[order[k]] = best_required[k];
  sol.assignment = assignment_for(instance, sol.required_departures);
  sol.total_delay = sum_delay(instance, sol.required_departures);
  sol.status = DcbStatus::optimal;
  return sol;
}

std::vector<DcbViolation> validate_solution(const DcbSolution& solution, const DcbInstance& instance) {
  using Kind = DcbViolation::Kind;
  std::vector<DcbViolation> out;
  if (solution.status == DcbStatus::infeasible) return out;
  const std::size_t n = instance.flights.size();
  if (solution.required_departures.size() != n) {
    out.push_back({Kind::shape, fmt::format("expected {} departures, got {}", n, solution.required_departures.size()), {}, {}, {}});
    return out;
  }
  const auto& cfg = instance.config;
  const auto& R = solution.required_departures;

  for (std::size_t i = 0; i < n; ++i) {
    if (R[i] < instance.flights[i].scheduled - kEps) {
      out.push_back({Kind::non_anticipation,
                     fmt::format("flight '{}' departs at {} before its scheduled {}", instance.flights[i].id, R[i],
                                 instance.flights[i].scheduled),
                     {}, {}, i});
    }
  }

  std::map<std::string, std::vector<std::size_t>> by_origin;
  for (std::size_t i = 0; i < n; ++i) by_origin[instance.flights[i].origin].push_back(i);
  for (auto& [origin, ids] : by_origin) {
    std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) { return R[a] < R[b]; });
    for (std::size_t k = 1; k < ids.size(); ++k) {
      const double gap = R[ids[k]] - R[ids[k - 1]];
      if (gap < cfg.departure_separation - kEps) {
        out.push_back({Kind::separation,
                       fmt::format("flights '{}' and '{}' leave '{}' {} s apart (< {})", instance.flights[ids[k - 1]].id,
                                   instance.flights[ids[k]].id, origin, gap, cfg.departure_separation),
                       {}, {}, ids[k]});
      }
    }
  }

  std::vector<std::map<int, int>> occ(cfg.capacities.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = instance.flights[i];
    for (std::size_t v = 0; v < f.visits.size(); ++v) {
      const int w = window_of(R[i] + f.visits[v].transit, cfg.window_length);
      ++occ[static_cast<std::size_t>(f.visits[v].resource)][w];
      if (!solution.assignment.windows.empty()) {
        const auto& aw = solution.assignment.windows;
        if (i >= aw.size() || v >= aw[i].size() || aw[i][v] != w) {
          out.push_back({Kind::assignment,
                         fmt::format("flight '{}' is assigned a window that does not contain its arrival ({})", f.id, w),
                         f.visits[v].resource, w, i});
        }
      }
    }
  }
  for (std::size_t p = 0; p < occ.size(); ++p) {
    for (const auto& [w, count] : occ[p]) {
      if (count > cfg.capacities[p]) {
        const std::string name = p < cfg.resource_names.size() ? cfg.resource_names[p] : fmt::format("#{}", p);
        out.push_back({Kind::capacity,
                       fmt::format("resource '{}' window {} holds {} flights (capacity {})", name, w, count, cfg.capacities[p]),
                       static_cast<int>(p), w, {}});
      }
    }
  }

  const double expected = sum_delay(instance, R);
  if (std::abs(expected - solution.total_delay) > 1e-6 * std::max(1.0, expected)) {
    out.push_back({Kind::objective, fmt::format("total delay {} differs from recomputed {}", solution.total_delay, expected),
                   {}, {}, {}});
  }
  return out;
}

DcbInstance make_dcb_instance(std::span<const FlightPlan> plans, const Scenario& scenario) {
  const auto& cfg = scenario.config();
  const auto& air = scenario.airspace();
  DcbInstance inst;
  inst.config.window_length = cfg.dcb.window_length;
  inst.config.departure_separation = cfg.dcb.departure_separation;
  inst.config.horizon = cfg.dcb.horizon;
  inst.config.node_limit = cfg.dcb.node_limit;
  for (const auto& r : cfg.resources) {
    inst.config.capacities.push_back(r.capacity);
    inst.config.resource_names.push_back(r.node_id);
  }
  for (const auto& p : plans) {
    const std::size_t r = air.route_index(p.route_id);
    DcbFlight f;
    f.id = p.flight_id;
    f.origin = air.route(r).nodes.front();
    f.scheduled = p.scheduled_departure;
    for (std::size_t i = 0; i < cfg.resources.size(); ++i) {
      if (auto arc = air.arc_of(r, cfg.resources[i].node_id)) {
        f.visits.push_back({static_cast<int>(i), *arc / cfg.performance.v_cruise});
      }
    }
    inst.flights.push_back(std::move(f));
  }
  return inst;
}

void apply_solution(std::vector<FlightPlan>& plans, const DcbSolution& solution, const Scenario& scenario) {
  if (solution.required_departures.size() != plans.size()) {
    throw std::invalid_argument("solution does not match the flight plans");
  }
  for (std::size_t i = 0; i < plans.size(); ++i) {
    plans[i].required_departure = solution.required_departures[i];
    scenario.annotate_etas(plans[i]);
  }
}

std::vector<OccupancyRow> occupancy_histogram(const DcbSolution& solution, const DcbInstance& instance) {
  const auto& cfg = instance.config;
  const std::size_t P = cfg.capacities.size();
  std::vector<std::map<int, std::pair<int, int>>> counts(P);
  for (std::size_t i = 0; i < instance.flights.size(); ++i) {
    const auto& f = instance.flights[i];
    for (const auto& v : f.visits) {
      auto& m = counts[static_cast<std::size_t>(v.resource)];
      ++m[window_of(f.scheduled + v.transit, cfg.window_length)].first;
      if (i < solution.required_departures.size()) {
        ++m[window_of(solution.required_departures[i] + v.transit, cfg.window_length)].second;
      }
    }
  }
  std::vector<OccupancyRow> rows;
  for (std::size_t p = 0; p < P; ++p) {
    if (counts[p].empty()) continue;
    const int last = counts[p].rbegin()->first;
    for (int w = 0; w <= last; ++w) {
      auto it = counts[p].find(w);
      const auto c = it == counts[p].end() ? std::pair<int, int>{0, 0} : it->second;
      rows.push_back({p < cfg.resource_names.size() ? cfg.resource_names[p] : fmt::format("#{}", p), w,
                      WindowAssignment::window_start(w, cfg.window_length), c.first, c.second});
    }
  }
  return rows;
}

}  // namespace uam
