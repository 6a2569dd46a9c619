// uamcm: batch experiment runner for the conflict-management toolkit.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "uam/dcb.hpp"
#include "uam/engine.hpp"
#include "uam/experiment.hpp"
#include "uam/game.hpp"
#include "uam/io.hpp"
#include "uam/metrics.hpp"
#include "uam/parallel.hpp"
#include "uam/policy.hpp"
#include "uam/scenario.hpp"
#include "uam/training.hpp"
#include "uam/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace uam;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Args {
  std::string scenario;
  std::string config;
  std::string out = "out";
  std::string strategic = "none";
  std::string tactical = "none";
  std::string demand;
  std::string policy_file;
  std::string schedule;
  std::string game;
  std::string solver = "exact";
  std::string mode;
  std::string capacities = "1-8";
  int capacity = 0;  // 0: keep the scenario's capacities
  int runs = 30;
  int episodes = 0;  // 0: scenario default
  std::uint64_t seed = 1;
  int workers = default_workers();
  bool baseline = true;
};

// Arguments that define an experiment are recorded in manifests; --out,
// --config and --workers do not affect results and are left out.
json args_json(const Args& a, const std::vector<std::string>& used) {
  json j = json::object();
  for (const auto& k : used) {
    if (k == "scenario") j[k] = a.scenario;
    if (k == "strategic") j[k] = a.strategic;
    if (k == "tactical") j[k] = a.tactical;
    if (k == "demand") j[k] = a.demand;
    if (k == "policy-file") j[k] = a.policy_file;
    if (k == "schedule") j[k] = a.schedule;
    if (k == "game") j[k] = a.game;
    if (k == "solver") j[k] = a.solver;
    if (k == "mode") j[k] = a.mode;
    if (k == "capacities") j[k] = a.capacities;
    if (k == "capacity") j[k] = a.capacity;
    if (k == "runs") j[k] = a.runs;
    if (k == "episodes") j[k] = a.episodes;
    if (k == "seed") j[k] = a.seed;
    if (k == "baseline") j[k] = a.baseline;
  }
  return j;
}

void apply_default(Args& a, const std::string& k, const json& v) {
  try {
    if (k == "scenario") a.scenario = v.get<std::string>();
    else if (k == "strategic") a.strategic = v.get<std::string>();
    else if (k == "tactical") a.tactical = v.get<std::string>();
    else if (k == "demand") a.demand = v.get<std::string>();
    else if (k == "policy-file") a.policy_file = v.get<std::string>();
    else if (k == "schedule") a.schedule = v.get<std::string>();
    else if (k == "game") a.game = v.get<std::string>();
    else if (k == "solver") a.solver = v.get<std::string>();
    else if (k == "mode") a.mode = v.get<std::string>();
    else if (k == "capacities") a.capacities = v.get<std::string>();
    else if (k == "capacity") a.capacity = v.get<int>();
    else if (k == "runs") a.runs = v.get<int>();
    else if (k == "episodes") a.episodes = v.get<int>();
    else if (k == "seed") a.seed = v.get<std::uint64_t>();
    else if (k == "baseline") a.baseline = v.get<bool>();
    else throw UsageError(fmt::format("config: unknown default '{}'", k));
  } catch (const json::exception&) {
    throw UsageError(fmt::format("config: wrong type for default '{}'", k));
  }
}

struct Context {
  std::string command;
  Args args;
  std::vector<std::string> used;  // options this subcommand understands
  json base_scenario;             // scenario document before flag transforms
  std::optional<Scenario> scenario;
};

double demand_interval(const std::string& d) {
  if (d == "high") return 30.0;
  if (d == "medium") return 60.0;
  if (d == "low") return 120.0;
  try {
    std::size_t pos = 0;
    const double v = std::stod(d, &pos);
    if (pos == d.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(fmt::format("--demand: expected high, medium, low or seconds > 0 (got '{}')", d));
}

std::vector<int> parse_capacities(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoi(item));
      } else {
        const int lo = std::stoi(item.substr(0, dash)), hi = std::stoi(item.substr(dash + 1));
        for (int c = lo; c <= hi; ++c) out.push_back(c);
      }
    } catch (const std::exception&) {
      throw UsageError(fmt::format("--capacities: cannot parse '{}'", item));
    }
  }
  if (out.empty()) throw UsageError("--capacities: empty list");
  for (int c : out) {
    if (c < 1) throw UsageError("--capacities: values must be >= 1");
  }
  return out;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw UsageError(fmt::format("cannot open {}", p.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(fmt::format("{}: {}", p.string(), e.what()));
  }
}

// Resolves config layering and builds the scenario. Precedence, lowest
// first: built-in defaults, config "defaults", command-line flags. The
// scenario is the config's inline "scenario" or the --scenario file, with
// the config's "override" merged on top.
void resolve(Context& ctx, CLI::App& sub) {
  json inline_scenario, override_patch;
  if (!ctx.args.config.empty()) {
    const json cfg = read_json(ctx.args.config);
    if (!cfg.is_object()) throw UsageError("config: expected an object");
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
      const auto& k = it.key();
      if (k == "defaults") {
        if (!it->is_object()) throw UsageError("config.defaults: expected an object");
        for (auto d = it->begin(); d != it->end(); ++d) {
          if (std::find(ctx.used.begin(), ctx.used.end(), d.key()) == ctx.used.end()) {
            throw UsageError(fmt::format("config.defaults: '{}' does not apply to '{}'", d.key(), ctx.command));
          }
          if (sub.count("--" + d.key()) == 0) apply_default(ctx.args, d.key(), d.value());
        }
      } else if (k == "scenario") {
        inline_scenario = *it;
      } else if (k == "override") {
        override_patch = *it;
      } else if (k != "subcommand" && k != "version") {
        throw UsageError(fmt::format("config: unknown key '{}'", k));
      }
    }
    if (cfg.contains("subcommand") && cfg["subcommand"] != ctx.command) {
      throw UsageError(fmt::format("config was written by '{}', not '{}'", cfg["subcommand"].get<std::string>(), ctx.command));
    }
  }
  if (std::find(ctx.used.begin(), ctx.used.end(), "scenario") == ctx.used.end()) return;
  if (!inline_scenario.is_null()) {
    ctx.base_scenario = inline_scenario;
  } else {
    if (ctx.args.scenario.empty()) ctx.args.scenario = (default_data_dir() / "default_scenario.json").string();
    ctx.base_scenario = read_json(ctx.args.scenario);
  }
  if (!override_patch.is_null()) ctx.base_scenario.merge_patch(override_patch);
  // Normalize so the manifest holds every resolved value.
  ScenarioConfig cfg = parse_scenario(ctx.base_scenario);
  ctx.base_scenario = to_json(cfg);
  if (ctx.args.capacity > 0) cfg.set_capacity(ctx.args.capacity);
  if (!ctx.args.demand.empty()) cfg.demand = cfg.demand.with_mean_interval(demand_interval(ctx.args.demand));
  ctx.scenario.emplace(std::move(cfg));
}

void write_manifest(const Context& ctx, const fs::path& out) {
  json m = {{"subcommand", ctx.command}, {"version", kVersion}, {"defaults", args_json(ctx.args, ctx.used)}};
  if (!ctx.base_scenario.is_null()) m["scenario"] = ctx.base_scenario;
  write_text(out / "manifest.json", m.dump(2) + "\n");
}

StrategicMode strategic_of(const Args& a) {
  auto m = parse_strategic_mode(a.strategic);
  if (!m) throw UsageError(fmt::format("--strategic: expected none, exact or heuristic (got '{}')", a.strategic));
  return *m;
}

TacticalMode tactical_of(const Args& a) {
  auto m = parse_tactical_mode(a.tactical);
  if (!m) throw UsageError(fmt::format("--tactical: expected none, rule or policy (got '{}')", a.tactical));
  return *m;
}

std::optional<PolicyTable> policy_of(const Args& a, TacticalMode t) {
  if (t != TacticalMode::policy) return std::nullopt;
  if (a.policy_file.empty()) throw UsageError("--tactical policy needs --policy-file");
  return PolicyTable::load(fs::path(a.policy_file));
}

std::vector<FlightPlan> schedule_of(const Context& ctx) {
  if (ctx.args.schedule.empty()) {
    const auto& c = ctx.scenario->config();
    return generate_schedule(c.demand, c.routes, ctx.args.seed);
  }
  std::ifstream in(ctx.args.schedule);
  if (!in) throw UsageError(fmt::format("cannot open schedule {}", ctx.args.schedule));
  auto plans = read_schedule_csv(in);
  for (auto& p : plans) ctx.scenario->airspace().route_index(p.route_id);
  return plans;
}

std::string num(double v, int prec = 2) { return fmt::format("{:.{}f}", v, prec); }

// ---------------------------------------------------------------- commands

int cmd_schedule(Context& ctx, const fs::path& out) {
  const auto plans = schedule_of(ctx);
  std::ostringstream csv;
  write_schedule_csv(csv, plans);
  write_text(out / "schedule.csv", csv.str());
  write_manifest(ctx, out);
  fmt::print("{} flights written to {}\n", plans.size(), (out / "schedule.csv").string());
  return 0;
}

int cmd_dcb(Context& ctx, const fs::path& out) {
  const auto plans = schedule_of(ctx);
  const DcbInstance inst = make_dcb_instance(plans, *ctx.scenario);
  DcbSolution sol;
  if (ctx.args.solver == "exact") sol = solve_exact(inst);
  else if (ctx.args.solver == "heuristic") sol = solve_heuristic(inst, ctx.scenario->config().engine.step_dt);
  else if (ctx.args.solver == "oracle") sol = brute_force_oracle(inst);
  else throw UsageError(fmt::format("--solver: expected exact, heuristic or oracle (got '{}')", ctx.args.solver));

  json summary = to_json(sol, inst);
  write_manifest(ctx, out);
  if (sol.status == DcbStatus::infeasible) {
    write_text(out / "dcb.json", summary.dump(2) + "\n");
    fmt::print(stderr, "{}\n", json({{"error", "infeasible"}, {"binding_resource", summary.value("binding_resource", "")}}).dump());
    return 3;
  }
  const auto violations = validate_solution(sol, inst);
  summary["violations"] = violations.size();
  std::ostringstream table, occ;
  write_dcb_table_csv(table, sol, inst);
  write_occupancy_csv(occ, occupancy_histogram(sol, inst));
  write_text(out / "dcb_table.csv", table.str());
  write_text(out / "occupancy.csv", occ.str());
  write_text(out / "dcb.json", summary.dump(2) + "\n");

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < inst.flights.size(); ++i) {
    const auto& f = inst.flights[i];
    rows.push_back({f.id, num(f.scheduled, 1), num(sol.required_departures[i], 1),
                    num(std::max(0.0, sol.required_departures[i] - f.scheduled), 1)});
  }
  fmt::print("{}", text_table({"flight_id", "scheduled", "required", "delay"}, rows));
  fmt::print("status {}  total delay {} s  violations {}\n", to_string(sol.status), num(sol.total_delay, 1),
             violations.size());
  return violations.empty() ? 0 : 4;
}

int cmd_simulate(Context& ctx, const fs::path& out) {
  const TacticalMode tac = tactical_of(ctx.args);
  const auto policy = policy_of(ctx.args, tac);
  EpisodeOptions opt;
  opt.strategic = strategic_of(ctx.args);
  opt.tactical = tac;
  opt.policy = policy ? &*policy : nullptr;
  opt.exploration_seed = derive_seed(ctx.args.seed, kExplorationStream);
  std::vector<TrackPoint> track;
  opt.track = &track;
  const EpisodeLog log = run_episode(*ctx.scenario, schedule_of(ctx), opt);
  std::ostringstream ev, fl, tr;
  write_events_csv(ev, log);
  write_flights_csv(fl, log);
  write_track_csv(tr, log, track);
  write_text(out / "events.csv", ev.str());
  write_text(out / "flights.csv", fl.str());
  write_text(out / "track.csv", tr.str());
  const json summary = run_summary(log);
  write_text(out / "summary.json", summary.dump(2) + "\n");
  write_manifest(ctx, out);
  fmt::print("{}\n", summary.dump(2));
  return 0;
}

std::vector<std::string> report_row(const std::string& label, const MetricsReport& r) {
  return {label,
          num(r.lowc_per_fh.mean),
          num(r.nmac_per_fh.mean),
          num(r.est_mac_per_100k_fh.mean),
          num(r.est_mac_per_100k_fh.ci_high),
          r.risk_ratio ? num(*r.risk_ratio, 4) : "n/a",
          num(r.mean_ground_delay),
          num(r.mean_airborne_delay),
          num(r.mean_alerts)};
}

const std::vector<std::string> kReportHeader = {"method",       "LoWC/fh",      "NMAC/fh",         "estMAC/100kfh", "estMAC CI+",
                                                "risk ratio", "ground delay", "airborne delay", "alerts/flight"};

int cmd_montecarlo(Context& ctx, const fs::path& out) {
  const TacticalMode tac = tactical_of(ctx.args);
  const auto policy = policy_of(ctx.args, tac);
  const RunModes modes{strategic_of(ctx.args), tac, policy ? &*policy : nullptr};
  Calibration cal;
  const RiskModelParams risk = resolve_risk(*ctx.scenario, ctx.args.seed, ctx.args.workers, &cal);
  const auto logs = monte_carlo(*ctx.scenario, modes, ctx.args.runs, ctx.args.seed, ctx.args.workers);
  MetricsReport rep = aggregate(logs, risk);
  json doc = {{"method", {{"strategic", to_string(modes.strategic)}, {"tactical", to_string(tac)}}}};
  if (ctx.args.baseline) {
    const auto base = monte_carlo(*ctx.scenario, RunModes{}, ctx.args.runs, ctx.args.seed, ctx.args.workers);
    const MetricsReport b = aggregate(base, risk);
    attach_risk_ratio(rep, b);
    doc["baseline"] = to_json(b);
  }
  doc["report"] = to_json(rep);
  if (risk.calibrate) doc["calibration"] = to_json(cal);

  std::ostringstream runs;
  fmt::print(runs, "run,seed,flights,flight_hours,LoWC,NMAC,MAC,truncated\n");
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto& l = logs[i];
    fmt::print(runs, "{},{},{},{},{},{},{},{}\n", i, ctx.args.seed + i, l.flights.size(), l.flight_hours(),
               l.count(EventKind::lowc), l.count(EventKind::nmac), l.count(EventKind::mac), l.truncated ? 1 : 0);
  }
  const std::string label = fmt::format("{}/{}", to_string(modes.strategic), to_string(tac));
  const std::string text = text_table(kReportHeader, {report_row(label, rep)});
  write_text(out / "runs.csv", runs.str());
  write_text(out / "report.json", doc.dump(2) + "\n");
  write_text(out / "report.txt", text);
  write_manifest(ctx, out);
  fmt::print("{}", text);
  return 0;
}

int cmd_sweep(Context& ctx, const fs::path& out) {
  const TacticalMode tac = tactical_of(ctx.args);
  const auto policy = policy_of(ctx.args, tac);
  const RiskModelParams risk = resolve_risk(*ctx.scenario, ctx.args.seed, ctx.args.workers);
  const auto sweep = capacity_sweep(*ctx.scenario, tac, policy ? &*policy : nullptr, parse_capacities(ctx.args.capacities),
                                    ctx.args.runs, ctx.args.seed, risk, ctx.args.workers);
  std::ostringstream csv;
  write_sweep_csv(csv, sweep, to_string(tac));
  json doc = {{"tactical", to_string(tac)}, {"tls", risk.tls}, {"p_mac_given_nmac", risk.p_mac_given_nmac}};
  doc["max_compliant_capacity"] = sweep.max_compliant ? json(*sweep.max_compliant) : json();
  for (const auto& r : sweep.rows) doc["rows"].push_back({{"capacity", r.capacity}, {"compliant", r.compliant}, {"report", to_json(r.report)}});
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : sweep.rows) {
    rows.push_back({std::to_string(r.capacity), num(r.report.est_mac_per_100k_fh.mean), num(r.report.est_mac_per_100k_fh.ci_high),
                    num(r.report.mean_ground_delay), r.compliant ? "yes" : "no"});
  }
  std::string text = text_table({"capacity", "estMAC/100kfh", "CI+", "ground delay", "TLS"}, rows);
  text += fmt::format("max compliant capacity: {}\n", sweep.max_compliant ? std::to_string(*sweep.max_compliant) : "none");
  write_text(out / "sweep.csv", csv.str());
  write_text(out / "sweep.json", doc.dump(2) + "\n");
  write_text(out / "sweep.txt", text);
  write_manifest(ctx, out);
  fmt::print("{}", text);
  return 0;
}

int cmd_train(Context& ctx, const fs::path& out) {
  LearningParams params = ctx.scenario->config().learning;
  if (!ctx.args.mode.empty()) {
    auto m = parse_detection_mode(ctx.args.mode);
    if (!m) throw UsageError("--mode: expected forward or all");
    params.mode = *m;
  }
  if (ctx.args.episodes > 0) params.episodes = ctx.args.episodes;
  std::optional<int> pool_cap = params.pool_capacity;
  if (ctx.args.capacity > 0) pool_cap = ctx.args.capacity;
  const auto pool = build_training_pool(*ctx.scenario, params.pool_size, pool_cap, ctx.args.seed);
  const auto result = train_policy(*ctx.scenario, pool, params, ctx.args.seed, ctx.args.workers);
  std::ostringstream pol, curve;
  result.policy.save(pol);
  write_learning_curve_csv(curve, result.curve);
  write_text(out / "policy.txt", pol.str());
  write_text(out / "learning_curve.csv", curve.str());
  const int window = std::min<int>(100, std::max<int>(1, static_cast<int>(result.curve.size())));
  double tail = 0.0;
  for (std::size_t e = result.curve.size() - static_cast<std::size_t>(window); e < result.curve.size(); ++e) tail += result.curve[e].total;
  const json doc = {{"episodes", params.episodes}, {"mode", to_string(params.mode)}, {"pool_size", pool.size()},
                    {"pool_capacity", pool_cap ? json(*pool_cap) : json()}, {"final_mean_reward", tail / window},
                    {"unseen_states", result.unseen_states}};
  write_text(out / "train.json", doc.dump(2) + "\n");
  write_manifest(ctx, out);
  fmt::print("{}\n", doc.dump(2));
  return 0;
}

int cmd_equilibria(Context& ctx, const fs::path& out) {
  BimatrixGame g = merge_game();
  if (!ctx.args.game.empty()) {
    const json doc = read_json(ctx.args.game);
    try {
      g.actions = doc.at("actions").get<std::vector<std::string>>();
      const auto p1 = doc.at("p1").get<std::vector<std::vector<double>>>();
      const auto p2 = doc.at("p2").get<std::vector<std::vector<double>>>();
      const auto n = static_cast<Eigen::Index>(p1.size());
      if (n == 0 || p2.size() != p1.size()) throw UsageError("game: p1 and p2 must have the same non-zero row count");
      const auto m = static_cast<Eigen::Index>(p1[0].size());
      g.p1.resize(n, m);
      g.p2.resize(n, m);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(p1[i].size()) != m || static_cast<Eigen::Index>(p2[i].size()) != m) {
          throw UsageError("game: ragged payoff matrix");
        }
        for (Eigen::Index j = 0; j < m; ++j) {
          g.p1(i, j) = p1[i][j];
          g.p2(i, j) = p2[i][j];
        }
      }
      if (static_cast<Eigen::Index>(g.actions.size()) != std::max(n, m)) throw UsageError("game: one action name per row/column");
    } catch (const json::exception& e) {
      throw UsageError(fmt::format("game: {}", e.what()));
    }
  }
  const auto rep = enumerate_equilibria(g.p1, g.p2);
  auto name = [&](const Profile& p) { return json::array({g.actions.at(p.first), g.actions.at(p.second)}); };
  json doc = {{"strict_nash", json::array()}, {"weak_nash_count", rep.weak_nash.size()}};
  for (const auto& p : rep.strict_nash) doc["strict_nash"].push_back(name(p));
  doc["stackelberg"] = {{"leader", "aircraft 1"}, {"profile", name(rep.stackelberg)}, {"leader_payoff", rep.stackelberg_leader_payoff}};
  write_text(out / "equilibria.json", doc.dump(2) + "\n");
  write_manifest(ctx, out);
  fmt::print("strict Nash equilibria:\n");
  for (const auto& p : rep.strict_nash) fmt::print("  ({}, {})\n", g.actions[p.first], g.actions[p.second]);
  fmt::print("weak Nash profiles: {}\n", rep.weak_nash.size());
  fmt::print("Stackelberg (aircraft 1 leads): ({}, {})\n", g.actions[rep.stackelberg.first], g.actions[rep.stackelberg.second]);
  return 0;
}

int cmd_report(Context& ctx, const fs::path& out) {
  const auto policy = ctx.args.policy_file.empty() ? std::optional<PolicyTable>{}
                                                   : std::optional<PolicyTable>{PolicyTable::load(fs::path(ctx.args.policy_file))};
  const Scenario& s = *ctx.scenario;
  const int runs = ctx.args.runs;
  const std::uint64_t seed = ctx.args.seed;
  const int w = ctx.args.workers;
  Calibration cal;
  const RiskModelParams risk = resolve_risk(s, seed, w, &cal);
  const auto caps = parse_capacities(ctx.args.capacities);

  auto run = [&](const Scenario& sc, RunModes m) { return aggregate(monte_carlo(sc, m, runs, seed, w), risk); };
  const MetricsReport base = run(s, RunModes{});
  std::vector<std::pair<std::string, MetricsReport>> methods;
  methods.emplace_back("No intervention", base);
  methods.emplace_back("Rule-based", run(s, RunModes{StrategicMode::none, TacticalMode::rule, nullptr}));
  methods.emplace_back("DCB, C=1", run(with_capacity(s, 1), RunModes{StrategicMode::exact_plan, TacticalMode::none, nullptr}));

  json doc = {{"runs", runs}, {"tls", risk.tls}, {"p_mac_given_nmac", risk.p_mac_given_nmac}, {"calibration", to_json(cal)}};
  std::ostringstream sweep_csv;
  auto selected = [&](TacticalMode tac, const PolicyTable* pol, const std::string& label) {
    const auto sweep = capacity_sweep(s, tac, pol, caps, runs, seed, risk, w);
    write_sweep_csv(sweep_csv, sweep, to_string(tac));
    doc["max_compliant_capacity"][to_string(tac)] = sweep.max_compliant ? json(*sweep.max_compliant) : json();
    if (!sweep.max_compliant) return;
    for (const auto& r : sweep.rows) {
      if (r.capacity == *sweep.max_compliant) methods.emplace_back(fmt::format("{} + DCB, C={}", label, r.capacity), r.report);
    }
  };
  selected(TacticalMode::rule, nullptr, "Rule-based");
  if (policy) selected(TacticalMode::policy, &*policy, "Learned policy");

  std::vector<std::vector<std::string>> rows;
  for (auto& [label, rep] : methods) {
    attach_risk_ratio(rep, base);
    doc["methods"].push_back({{"method", label}, {"report", to_json(rep)}});
    rows.push_back(report_row(label, rep));
  }
  const std::string text = text_table(kReportHeader, rows);
  write_text(out / "report.json", doc.dump(2) + "\n");
  write_text(out / "report.txt", text);
  write_text(out / "sweep.csv", sweep_csv.str());
  write_manifest(ctx, out);
  fmt::print("{}", text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strategic and tactical conflict management experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  struct Command {
    const char* name;
    const char* help;
    std::vector<std::string> options;
    int (*run)(Context&, const fs::path&);
  };
  const std::vector<Command> commands = {
      {"schedule", "generate a departure schedule", {"scenario", "demand", "seed"}, cmd_schedule},
      {"dcb", "balance demand and capacity for one schedule", {"scenario", "demand", "capacity", "seed", "schedule", "solver"}, cmd_dcb},
      {"simulate", "run one episode", {"scenario", "strategic", "tactical", "demand", "capacity", "seed", "schedule", "policy-file"}, cmd_simulate},
      {"montecarlo", "run repeated episodes and aggregate metrics", {"scenario", "strategic", "tactical", "demand", "capacity", "runs", "seed", "policy-file", "baseline"}, cmd_montecarlo},
      {"sweep", "estimated MAC rate over resource capacities", {"scenario", "tactical", "demand", "capacities", "runs", "seed", "policy-file"}, cmd_sweep},
      {"train", "learn a shared speed-advisory policy", {"scenario", "demand", "capacity", "episodes", "mode", "seed"}, cmd_train},
      {"equilibria", "pure equilibria of a two-aircraft merge game", {"game"}, cmd_equilibria},
      {"report", "method comparison table", {"scenario", "demand", "capacities", "runs", "seed", "policy-file"}, cmd_report},
  };

  Args args;
  std::vector<std::pair<const Command*, CLI::App*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    auto has = [&](const char* o) { return std::find(c.options.begin(), c.options.end(), o) != c.options.end(); };
    sub->add_option("--out", args.out, "output directory")->capture_default_str();
    sub->add_option("--config", args.config, "JSON config or manifest to rerun");
    if (c.run != cmd_equilibria && c.run != cmd_schedule && c.run != cmd_dcb && c.run != cmd_simulate) {
      sub->add_option("--workers", args.workers, "parallel workers (results do not depend on it)")->capture_default_str();
    }
    if (has("scenario")) sub->add_option("--scenario", args.scenario, "scenario JSON (default: bundled)");
    if (has("strategic")) sub->add_option("--strategic", args.strategic, "none | exact | heuristic")->capture_default_str();
    if (has("tactical")) sub->add_option("--tactical", args.tactical, "none | rule | policy")->capture_default_str();
    if (has("demand")) sub->add_option("--demand", args.demand, "high | medium | low | mean interval in seconds");
    if (has("capacity")) sub->add_option("--capacity", args.capacity, "capacity applied to every resource");
    if (has("capacities")) sub->add_option("--capacities", args.capacities, "e.g. 1-8 or 1,2,4")->capture_default_str();
    if (has("runs")) sub->add_option("--runs", args.runs, "Monte Carlo runs")->capture_default_str();
    if (has("seed")) sub->add_option("--seed", args.seed, "base seed")->capture_default_str();
    if (has("schedule")) sub->add_option("--schedule", args.schedule, "schedule CSV instead of generated demand");
    if (has("policy-file")) sub->add_option("--policy-file", args.policy_file, "policy written by train");
    if (has("solver")) sub->add_option("--solver", args.solver, "exact | heuristic | oracle")->capture_default_str();
    if (has("episodes")) sub->add_option("--episodes", args.episodes, "training episodes (default: scenario)");
    if (has("mode")) sub->add_option("--mode", args.mode, "intruder detection: forward | all");
    if (has("baseline")) sub->add_flag("--baseline,!--no-baseline", args.baseline, "also run the unmitigated baseline (default on)");
    if (has("game")) sub->add_option("--game", args.game, "game JSON with actions, p1, p2 (default: merge game)");
    subs.emplace_back(&c, sub);
  }

  CLI11_PARSE(app, argc, argv);

  for (auto& [cmd, sub] : subs) {
    if (!sub->parsed()) continue;
    Context ctx;
    ctx.command = cmd->name;
    ctx.args = args;
    ctx.used = cmd->options;
    try {
      resolve(ctx, *sub);
      if (ctx.args.runs < 1) throw UsageError("--runs must be >= 1");
      if (ctx.args.capacity < 0) throw UsageError("--capacity must be >= 1");
      const fs::path out(ctx.args.out);
      fs::create_directories(out);
      return cmd->run(ctx, out);
    } catch (const ScenarioError& e) {
      fmt::print(stderr, "{}\n", json({{"error", "invalid scenario"}, {"message", e.what()}}).dump());
      return 2;
    } catch (const UsageError& e) {
      fmt::print(stderr, "{}\n", json({{"error", "usage"}, {"message", e.what()}}).dump());
      return 2;
    } catch (const std::exception& e) {
      fmt::print(stderr, "{}\n", json({{"error", "failed"}, {"message", e.what()}}).dump());
      return 1;
    }
  }
  return 1;
}
