#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "uam/engine.hpp"
#include "uam/experiment.hpp"

using namespace uam;

namespace {

const SafetyThresholds kThr{};

FlightPlan plan(const std::string& id, const std::string& route, double s) { return {id, route, s, s, {}}; }

// Maximal runs of consecutive steps below `thr`, as (first step, last step).
std::vector<std::pair<int, int>> runs_below(const std::vector<double>& d, double thr) {
  std::vector<std::pair<int, int>> out;
  for (int k = 0; k < static_cast<int>(d.size()); ++k) {
    if (d[static_cast<std::size_t>(k)] >= thr) continue;
    if (!out.empty() && out.back().second == k - 1) {
      out.back().second = k;
    } else {
      out.emplace_back(k, k);
    }
  }
  return out;
}

// Feeds a per-step distance trace (same value for the step minimum and the
// end-of-step distance) through the detector.
std::vector<SeparationEvent> trace(const std::vector<double>& d) {
  EventDetector det(kThr);
  for (std::size_t k = 0; k < d.size(); ++k) det.update(0, 1, static_cast<double>(k), k + 1.0, d[k], d[k]);
  return det.finish(static_cast<double>(d.size()));
}

std::vector<SeparationEvent> of_kind(const std::vector<SeparationEvent>& ev, EventKind k) {
  std::vector<SeparationEvent> out;
  for (const auto& e : ev)
    if (e.kind == k) out.push_back(e);
  return out;
}

}  // namespace

TEST_CASE("kinematics on a straight route") {
  const Scenario s(test::line_config({0, 6000}));
  World w(s, {plan("F1", "L", 0.0)}, EpisodeOptions{});
  w.step();
  CHECK(w.aircraft()[0].arc == doctest::Approx(50.0));
  w.step();
  CHECK(w.aircraft()[0].arc == doctest::Approx(100.0));
  while (!w.done()) w.step();
  const EpisodeLog log = w.finish();
  CHECK(log.flights[0].final_phase == Phase::landed);
  CHECK(log.flights[0].actual == log.flights[0].estimated);
  CHECK(log.flights[0].estimated == 120.0);
  CHECK(log.flights[0].airborne_delay() == 0.0);
  CHECK(log.events.empty());
  CHECK_FALSE(log.truncated);
}

TEST_CASE("speed ramps by the acceleration limit") {
  ScenarioConfig cfg = test::line_config({0, 20000});
  const Scenario s(cfg);
  std::vector<TrackPoint> track;
  EpisodeOptions opt;
  opt.tactical = TacticalMode::rule;
  opt.track = &track;
  World w(s, {plan("F1", "L", 0.0)}, opt);
  // Released during the first step; the first decision is at t = 5, where
  // nobody is ahead, so the target becomes 52.5.
  for (int k = 0; k < 5; ++k) w.step();
  CHECK(track.empty());
  CHECK(w.aircraft()[0].speed == 50.0);
  w.step();
  REQUIRE(track.size() == 1);
  CHECK(track[0].advisory == Advisory::increase);
  CHECK(track[0].target_speed == 52.5);
  CHECK(w.aircraft()[0].speed == doctest::Approx(52.0));
  w.step();
  CHECK(w.aircraft()[0].speed == doctest::Approx(52.5));
}

TEST_CASE("event intervals") {
  SUBCASE("single low-separation dip") {
    const auto ev = trace({600, 480, 600});
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].kind == EventKind::lowc);
    CHECK(ev[0].t_start == 1.0);
    CHECK(ev[0].t_end == 3.0);
    CHECK(ev[0].min_distance == 480.0);
  }
  SUBCASE("near miss nests inside a low-separation event") {
    const auto ev = trace({600, 400, 140, 400, 600});
    REQUIRE(of_kind(ev, EventKind::lowc).size() == 1);
    REQUIRE(of_kind(ev, EventKind::nmac).size() == 1);
    CHECK(of_kind(ev, EventKind::mac).empty());
    const auto l = of_kind(ev, EventKind::lowc)[0];
    const auto n = of_kind(ev, EventKind::nmac)[0];
    CHECK(l.t_start <= n.t_start);
    CHECK(n.t_end <= l.t_end);
    CHECK(n.min_distance == 140.0);
  }
  SUBCASE("two dips are two events") {
    CHECK(trace({600, 480, 600, 480, 600}).size() == 2);
  }
  SUBCASE("open at the end of the run") {
    const auto ev = trace({600, 480, 300});
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].t_end == 3.0);
  }
}

TEST_CASE("events are maximal intervals on random traces") {
  Rng rng(31);
  boost::random::uniform_real_distribution<double> step(-120, 120);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> d{700.0};
    for (int k = 0; k < 60; ++k) d.push_back(std::clamp(d.back() + step(rng), 0.0, 900.0));
    const auto ev = trace(d);
    for (EventKind kind : {EventKind::lowc, EventKind::nmac, EventKind::mac}) {
      const double thr = kind == EventKind::lowc ? kThr.d_lowc : kind == EventKind::nmac ? kThr.d_nmac : kThr.d_mac;
      const auto expect = runs_below(d, thr);
      const auto got = of_kind(ev, kind);
      REQUIRE(got.size() == expect.size());
      for (std::size_t k = 0; k < got.size(); ++k) {
        CHECK(got[k].t_start == expect[k].first);
        // Closes at the end of the first step back at or above the threshold.
        CHECK(got[k].t_end == std::min(expect[k].second + 2.0, static_cast<double>(d.size())));
        double m = 1e9;
        for (int x = expect[k].first; x <= expect[k].second; ++x) m = std::min(m, d[static_cast<std::size_t>(x)]);
        CHECK(got[k].min_distance == m);
      }
    }
  }
}

TEST_CASE("episode conservation and nesting") {
  const Scenario s = test::default_scenario();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (auto tac : {TacticalMode::none, TacticalMode::rule}) {
      const EpisodeLog log = simulate_run(s, {StrategicMode::none, tac, nullptr}, seed);
      CHECK(log.count(Phase::landed) + log.count(Phase::removed) + log.count(Phase::airborne) +
                log.count(Phase::pre_departure) ==
            log.flights.size());
      CHECK_FALSE(log.truncated);
      for (const auto& f : log.flights) {
        CHECK(f.required >= f.scheduled);
        if (f.final_phase == Phase::landed && tac == TacticalMode::none) CHECK(f.actual == f.estimated);
      }
      for (const auto& e : log.events) {
        CHECK(e.flight_a < e.flight_b);
        CHECK(e.t_start < e.t_end);
        if (e.kind == EventKind::lowc) continue;
        // Every near miss sits inside a low-separation event of the same pair.
        const bool nested = std::any_of(log.events.begin(), log.events.end(), [&](const SeparationEvent& o) {
          return o.kind == EventKind::lowc && o.flight_a == e.flight_a && o.flight_b == e.flight_b &&
                 o.t_start <= e.t_start && e.t_end <= o.t_end;
        });
        CHECK(nested);
      }
    }
  }
}

TEST_CASE("finer steps do not change unmitigated outcomes much") {
  ScenarioConfig coarse = test::default_scenario().config();
  ScenarioConfig fine = coarse;
  fine.engine.step_dt = 0.25;
  const Scenario a(coarse), b(fine);
  const RunModes modes{StrategicMode::none, TacticalMode::none, nullptr};
  for (std::uint64_t seed : {4u, 5u}) {
    const EpisodeLog x = simulate_run(a, modes, seed);
    const EpisodeLog y = simulate_run(b, modes, seed);
    REQUIRE(x.flights.size() == y.flights.size());
    for (std::size_t i = 0; i < x.flights.size(); ++i) {
      CHECK(x.flights[i].required == y.flights[i].required);
      CHECK(x.flights[i].actual == doctest::Approx(y.flights[i].actual).epsilon(1e-9));
    }
    // Closest approach is interpolated within a step, so counts agree.
    CHECK(x.count(EventKind::nmac) == y.count(EventKind::nmac));
  }
}

TEST_CASE("engine heuristic release matches the offline heuristic") {
  ScenarioConfig cfg = test::default_scenario().config();
  cfg.set_capacity(2);
  const Scenario s(cfg);
  for (std::uint64_t seed : {7u, 8u}) {
    const auto plans = generate_schedule(cfg.demand, cfg.routes, seed);
    const DcbInstance inst = make_dcb_instance(plans, s);
    const DcbSolution offline = solve_heuristic(inst, cfg.engine.step_dt);
    EpisodeOptions opt;
    opt.strategic = StrategicMode::heuristic;
    const EpisodeLog log = run_episode(s, plans, opt);
    for (std::size_t i = 0; i < plans.size(); ++i) CHECK(log.flights[i].required == offline.required_departures[i]);
  }
}

TEST_CASE("unit capacity with exact balancing avoids near misses") {
  ScenarioConfig cfg = test::default_scenario().config();
  cfg.set_capacity(1);
  const Scenario s(cfg);
  const auto logs = monte_carlo(s, {StrategicMode::exact_plan, TacticalMode::none, nullptr}, 5, 100);
  for (const auto& l : logs) CHECK(l.count(EventKind::nmac) == 0);
}

TEST_CASE("episodes are deterministic") {
  const Scenario s = test::default_scenario();
  const RunModes modes{StrategicMode::heuristic, TacticalMode::rule, nullptr};
  const EpisodeLog a = simulate_run(s, modes, 42);
  const EpisodeLog b = simulate_run(s, modes, 42);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t k = 0; k < a.events.size(); ++k) {
    CHECK(a.events[k].t_start == b.events[k].t_start);
    CHECK(a.events[k].min_distance == b.events[k].min_distance);
  }
  CHECK(a.step_min_distance == b.step_min_distance);
  const auto serial = monte_carlo(s, modes, 4, 9, 1);
  const auto threaded = monte_carlo(s, modes, 4, 9, 4);
  for (std::size_t k = 0; k < serial.size(); ++k) CHECK(serial[k].step_min_distance == threaded[k].step_min_distance);
}
