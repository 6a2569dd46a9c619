#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uam/airspace.hpp"
#include "uam/params.hpp"

namespace uam {

class Scenario;

/// One capacity-constrained resource on a flight's route and the estimated
/// flying time from the origin to it.
struct ResourceVisit {
  int resource = 0;
  double transit = 0.0;
};

struct DcbFlight {
  std::string id;
  std::string origin;  // departure separation applies among flights sharing it
  double scheduled = 0.0;
  std::vector<ResourceVisit> visits;
};

struct DcbConfig {
  double window_length = 200.0;
  double departure_separation = 0.0;
  std::vector<int> capacities;
  std::vector<std::string> resource_names;
  /// End of the last usable window; arrivals must fall strictly before it.
  std::optional<double> horizon;
  std::size_t node_limit = 2'000'000;
};

/// Self-contained demand-capacity balancing problem.
struct DcbInstance {
  std::vector<DcbFlight> flights;
  DcbConfig config;

  /// Configured horizon, or latest unconstrained arrival plus one window per
  /// (flight, resource) pair plus one separation per flight.
  double horizon() const;
  int window_count() const;
};

enum class DcbStatus { optimal, feasible, infeasible };

const char* to_string(DcbStatus s);

/// Window index per (flight, visited resource), aligned with DcbFlight::visits.
struct WindowAssignment {
  std::vector<std::vector<int>> windows;

  /// B_n, the start of window n.
  static double window_start(int n, double window_length) { return n * window_length; }
};

struct DcbSolution {
  std::vector<double> required_departures;  // aligned with DcbInstance::flights
  WindowAssignment assignment;
  double total_delay = 0.0;
  DcbStatus status = DcbStatus::infeasible;
  /// Resource that blocked a feasible assignment (infeasible status only).
  std::optional<int> binding_resource;
  std::size_t nodes = 0;
};

/// Flight indices ordered by (scheduled, id); the release order of every solver.
std::vector<std::size_t> release_order(const DcbInstance& instance);

/// Window index containing time t under half-open windows [B_n, B_n + W).
inline int window_of(double t, double window_length) {
  return static_cast<int>(std::floor(t / window_length));
}

/// Branch-and-bound over per-flight window choices. Minimises total ground
/// delay subject to per-origin FIFO separation, no early departures and
/// per-window capacity; ties resolve to the lexicographically earliest
/// departures in (scheduled, id) order.
DcbSolution solve_exact(const DcbInstance& instance);

/// Online release rule. Holds live window occupancy and the last release
/// time per origin; mutated by a single thread.
class HeuristicDcb {
 public:
  explicit HeuristicDcb(DcbConfig config);

  /// Releases the flight at time t if the origin separation holds and every
  /// window it would arrive in has spare capacity; occupancy is updated on
  /// release.
  bool try_release(const DcbFlight& flight, double t);

  int occupancy(int resource, int window) const;
  std::optional<double> last_release(const std::string& origin) const;

 private:
  DcbConfig config_;
  std::vector<std::map<int, int>> occupancy_;
  std::map<std::string, double> last_release_;
};

/// Runs the online rule on a clock advancing by `sim_dt`, each origin
/// releasing its flights in (scheduled, id) order.
DcbSolution solve_heuristic(const DcbInstance& instance, double sim_dt = 1.0);

class OracleRefused : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kOracleMaxFlights = 8;
inline constexpr std::size_t kOracleMaxResources = 2;
inline constexpr int kOracleMaxWindows = 40;

/// Exhaustive enumeration of window assignments. Test-only reference.
DcbSolution brute_force_oracle(const DcbInstance& instance);

struct DcbViolation {
  enum class Kind { separation, non_anticipation, capacity, assignment, objective, shape };
  Kind kind;
  std::string message;
  std::optional<int> resource;
  std::optional<int> window;
  std::optional<std::size_t> flight;
};

/// Recomputes arrival windows and occupancy from the departures alone and
/// reports every broken constraint.
std::vector<DcbViolation> validate_solution(const DcbSolution& solution, const DcbInstance& instance);

/// Builds the balancing problem for a schedule on a scenario's network.
DcbInstance make_dcb_instance(std::span<const FlightPlan> plans, const Scenario& scenario);

/// Copies required departures (and ETAs) from a solution into the plans.
void apply_solution(std::vector<FlightPlan>& plans, const DcbSolution& solution, const Scenario& scenario);

/// Per-resource, per-window counts of scheduled and required arrivals.
struct OccupancyRow {
  std::string resource;
  int window;
  double window_start;
  int scheduled_demand;
  int balanced_demand;
};
std::vector<OccupancyRow> occupancy_histogram(const DcbSolution& solution, const DcbInstance& instance);

}  // namespace uam
