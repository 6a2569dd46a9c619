// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "support.hpp"
#include "uam/dcb.hpp"
#include "uam/experiment.hpp"
#include "uam/game.hpp"
#include "uam/io.hpp"
#include "uam/metrics.hpp"
#include "uam/tactical.hpp"
#include "uam/training.hpp"

using namespace uam;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kOptimalityBudgetS = 60.0;
constexpr double kContinuityTol = 1e-12;
constexpr double kRiskRatioTol = 1e-3;
constexpr double kLearningBudgetS = 600.0;
constexpr double kSweepBudgetS = 900.0;
constexpr double kMinSpearman = 0.7;
constexpr double kRewardThreshold = -1.0;
constexpr int kRewardWindow = 100;
constexpr int kLearningSeeds = 10;
constexpr int kRuns = 20;
constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string opt_str(const std::optional<int>& v) { return v ? std::to_string(*v) : "none"; }

Outcome dcb_optimality() {
  const auto t0 = Clock::now();
  Rng rng(kSeed);
  int mismatches = 0;
  for (int k = 0; k < 200; ++k) {
    const DcbInstance inst = test::random_instance(rng);
    const DcbSolution exact = solve_exact(inst);
    const DcbSolution oracle = brute_force_oracle(inst);
    if (exact.status != oracle.status || exact.total_delay != oracle.total_delay) ++mismatches;
  }
  const double s = seconds_since(t0);
  return {mismatches == 0 && s < kOptimalityBudgetS, fmt::format("200 instances, {} mismatches, {:.2f} s", mismatches, s)};
}

Outcome dcb_feasibility() {
  Rng rng(kSeed + 1);
  int invalid = 0, worse = 0;
  for (int k = 0; k < 1000; ++k) {
    const DcbInstance inst = test::random_instance(rng);
    const DcbSolution exact = solve_exact(inst);
    const DcbSolution heur = solve_heuristic(inst);
    if (!validate_solution(exact, inst).empty()) ++invalid;
    if (!validate_solution(heur, inst).empty()) ++invalid;
    if (heur.total_delay < exact.total_delay) ++worse;
  }
  return {invalid == 0 && worse == 0,
          fmt::format("1000 instances, {} invalid solutions, {} with heuristic below exact", invalid, worse)};
}

Outcome worked_instance() {
  const Scenario s = test::load("three_flight.json");
  std::ifstream in(default_data_dir() / "three_flight_schedule.csv");
  const DcbInstance inst = make_dcb_instance(read_schedule_csv(in), s);
  const DcbSolution exact = solve_exact(inst);
  const DcbSolution oracle = brute_force_oracle(inst);
  const std::vector<double> expect{0, 100, 300};
  const bool ok = exact.required_departures == expect && exact.total_delay == 370.0 &&
                  oracle.required_departures == expect && oracle.total_delay == 370.0;
  return {ok, fmt::format("departures {}, total delay {}", fmt::join(exact.required_departures, "/"), exact.total_delay)};
}

Outcome reward_algebra() {
  const SafetyThresholds thr;
  const RewardParams p;
  Rng rng(kSeed + 2);
  boost::random::uniform_real_distribution<double> dist(0, 2000), el(0, 1200), tmax(100, 1000);
  boost::random::uniform_int_distribution<int> act(0, 2);
  int sum_errors = 0;
  for (int k = 0; k < 10000; ++k) {
    const Transition tr{dist(rng), el(rng), tmax(rng), static_cast<SpeedAction>(act(rng))};
    const RewardBreakdown r = reward(tr, p, thr);
    if (r.total != r.safety + r.time + r.action) ++sum_errors;
  }
  const double gap_nmac = std::abs(safety_penalty(thr.d_nmac, p, thr) - (-1.0));
  const double gap_lowc = std::abs(safety_penalty(thr.d_lowc, p, thr) - 0.0);
  bool monotone = true;
  double prev = safety_penalty(thr.d_nmac, p, thr);
  for (int k = 1; k <= 35000; ++k) {
    const double v = safety_penalty(thr.d_nmac + 0.01 * k, p, thr);
    monotone = monotone && v >= prev;
    prev = v;
  }
  const bool ok = sum_errors == 0 && gap_nmac <= kContinuityTol && gap_lowc <= kContinuityTol && monotone;
  return {ok, fmt::format("10000 transitions, {} sum errors, jumps {:.1e}/{:.1e}, monotone {}", sum_errors, gap_nmac,
                          gap_lowc, monotone)};
}

Outcome game_analysis() {
  std::ifstream in(default_data_dir() / "table2_game.json");
  const auto doc = nlohmann::json::parse(in);
  const auto p1 = doc.at("p1").get<std::vector<std::vector<double>>>();
  const auto p2 = doc.at("p2").get<std::vector<std::vector<double>>>();
  Eigen::Matrix3d a, b;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      a(i, j) = p1.at(i).at(j);
      b(i, j) = p2.at(i).at(j);
    }
  }
  const auto rep = enumerate_equilibria(a, b);
  const auto actions = doc.at("actions").get<std::vector<std::string>>();
  auto name = [&](const Profile& p) { return fmt::format("({}, {})", actions[p.first], actions[p.second]); };
  const std::vector<Profile> expect{{0, 2}, {2, 0}};
  std::vector<std::string> strict;
  for (const auto& p : rep.strict_nash) strict.push_back(name(p));
  const bool ok = rep.strict_nash == expect && rep.stackelberg == Profile{0, 2};
  return {ok, fmt::format("strict Nash {{{}}}, Stackelberg {}", fmt::join(strict, ", "), name(rep.stackelberg))};
}

Outcome learning_ordering() {
  const auto t0 = Clock::now();
  const Scenario s = test::load("merge_scenario.json");
  const LearningParams base = s.config().learning;
  auto median_for = [&](DetectionMode mode, std::vector<int>& hits) {
    std::vector<double> episodes;
    for (int seed = 1; seed <= kLearningSeeds; ++seed) {
      LearningParams p = base;
      p.mode = mode;
      const auto pool = build_training_pool(s, p.pool_size, p.pool_capacity, static_cast<std::uint64_t>(seed));
      const auto r = train_policy(s, pool, p, static_cast<std::uint64_t>(seed));
      // Runs that never reach the threshold count as the full budget.
      const auto e = episodes_to_threshold(r.curve, kRewardWindow, kRewardThreshold);
      hits.push_back(e ? *e : -1);
      episodes.push_back(e ? *e : p.episodes);
    }
    std::sort(episodes.begin(), episodes.end());
    return (episodes[kLearningSeeds / 2 - 1] + episodes[kLearningSeeds / 2]) / 2.0;
  };
  std::vector<int> fw_hits, all_hits;
  const double fw = median_for(DetectionMode::forward, fw_hits);
  const double all = median_for(DetectionMode::all, all_hits);
  const double secs = seconds_since(t0);
  auto reached = [](const std::vector<int>& h) { return std::count_if(h.begin(), h.end(), [](int e) { return e >= 0; }); };
  return {fw < all && secs < kLearningBudgetS,
          fmt::format("median episodes forward {} ({}/{} reached), all {} ({}/{} reached), {:.0f} s", fw,
                      reached(fw_hits), kLearningSeeds, all, reached(all_hits), kLearningSeeds, secs)};
}

struct Shared {
  std::optional<Scenario> scenario;
  RiskModelParams risk;
  SweepResult rule_sweep;
};

Outcome capacity_monotonicity(Shared& sh) {
  const auto t0 = Clock::now();
  sh.scenario.emplace(test::default_scenario());
  const Scenario& s = *sh.scenario;
  sh.risk = resolve_risk(s, kSeed);
  std::vector<int> caps{1, 2, 3, 4, 5, 6, 7, 8};
  sh.rule_sweep = capacity_sweep(s, TacticalMode::rule, nullptr, caps, kRuns, kSeed, sh.risk);
  std::vector<double> c, rate;
  for (const auto& r : sh.rule_sweep.rows) {
    c.push_back(r.capacity);
    rate.push_back(r.report.est_mac_per_100k_fh.mean);
  }
  const auto rho = spearman(c, rate);
  const auto unit = monte_carlo(with_capacity(s, 1), {StrategicMode::exact_plan, TacticalMode::none, nullptr}, kRuns, kSeed);
  std::size_t nmac = 0;
  for (const auto& l : unit) nmac += l.count(EventKind::nmac);
  const double secs = seconds_since(t0);
  std::vector<std::string> shown;
  for (double v : rate) shown.push_back(fmt::format("{:.2f}", v));
  return {rho && *rho >= kMinSpearman && nmac == 0 && secs < kSweepBudgetS,
          fmt::format("rule sweep estMAC/100kfh [{}], Spearman {}, C=1 none NMACs {}, {:.0f} s", fmt::join(shown, " "),
                      rho ? fmt::format("{:.3f}", *rho) : "undefined", nmac, secs)};
}

Outcome method_ordering(Shared& sh) {
  const Scenario& s = *sh.scenario;
  auto run = [&](const Scenario& sc, RunModes m) { return aggregate(monte_carlo(sc, m, kRuns, kSeed), sh.risk); };
  const MetricsReport base = run(s, RunModes{});
  MetricsReport rule = run(s, RunModes{StrategicMode::none, TacticalMode::rule, nullptr});
  attach_risk_ratio(rule, base);
  const MetricsReport dcb1 = run(with_capacity(s, 1), RunModes{StrategicMode::exact_plan, TacticalMode::none, nullptr});

  const LearningParams lp = s.config().learning;
  const auto pool = build_training_pool(s, lp.pool_size, lp.pool_capacity, kSeed);
  const auto trained = train_policy(s, pool, lp, kSeed);
  const std::vector<int> caps{1, 2, 3, 4, 5, 6, 7, 8};
  const SweepResult learned = capacity_sweep(s, TacticalMode::policy, &trained.policy, caps, kRuns, kSeed, sh.risk);

  auto at = [](const SweepResult& sw) -> const MetricsReport* {
    if (!sw.max_compliant) return nullptr;
    for (const auto& r : sw.rows)
      if (r.capacity == *sw.max_compliant) return &r.report;
    return nullptr;
  };
  const MetricsReport* rule_c = at(sh.rule_sweep);
  const MetricsReport* learned_c = at(learned);

  const bool a = rule.risk_ratio && *rule.risk_ratio > 1.0;
  const bool b = rule_c && learned_c && *learned.max_compliant > *sh.rule_sweep.max_compliant &&
                 learned_c->mean_ground_delay < rule_c->mean_ground_delay &&
                 rule_c->mean_ground_delay < dcb1.mean_ground_delay;
  const bool c = rule_c && learned_c && rule_c->est_mac_per_100k_fh.ci_high <= sh.risk.tls &&
                 learned_c->est_mac_per_100k_fh.ci_high <= sh.risk.tls &&
                 dcb1.est_mac_per_100k_fh.ci_high <= sh.risk.tls;
  auto gd = [](const MetricsReport* r) { return r ? fmt::format("{:.1f}", r->mean_ground_delay) : std::string("n/a"); };
  return {a && b && c,
          fmt::format("(a) rule risk ratio {} {}; (b) ground delay learned C={} {} < rule C={} {} < DCB C=1 {:.1f} {}; (c) {}",
                      rule.risk_ratio ? fmt::format("{:.2f}", *rule.risk_ratio) : "undefined", a ? "ok" : "no",
                      opt_str(learned.max_compliant), gd(learned_c), opt_str(sh.rule_sweep.max_compliant), gd(rule_c),
                      dcb1.mean_ground_delay, b ? "ok" : "no", c ? "all within TLS" : "TLS exceeded")};
}

Outcome metric_identities() {
  const RiskModelParams p;
  bool exact = p.p_mac_given_nmac == 5.038e-3 && p.acasx_risk_ratio == 0.005;
  for (double n : {0.0, 1.0, 4.0, 1000.0}) exact = exact && estimate_mac(n, 1.0, p).expected == 5.038e-3 * 0.005 * n;
  const double rr = *risk_ratio(908.25, 205.53);
  return {exact && std::abs(rr - 4.419) <= kRiskRatioTol,
          fmt::format("estimate_mac exact {}, risk_ratio(908.25, 205.53) = {:.4f}", exact, rr)};
}

int run_cli(const std::string& args) {
  const std::string cmd = fmt::format("\"{}\" {} > /dev/null 2>&1", UAMCM_PATH, args);
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const fs::path other = b / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) return false;
    ++n;
  }
  return static_cast<std::size_t>(std::distance(fs::directory_iterator(b), fs::directory_iterator{})) == n;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "uamcm_acceptance";
  fs::remove_all(root);
  struct Case {
    std::string sub;
    std::string args;
    bool threaded;
  };
  const std::vector<Case> cases{
      {"schedule", "--seed 4", false},
      {"dcb", "--capacity 2 --seed 4", false},
      {"simulate", "--strategic heuristic --tactical rule --capacity 3 --seed 4", false},
      {"montecarlo", "--strategic exact --tactical rule --capacity 2 --runs 6", true},
      {"sweep", "--tactical rule --capacities 1-3 --runs 3", true},
      {"train", "--episodes 200 --seed 4", true},
      {"equilibria", "", false},
  };
  std::vector<std::string> failed;
  for (const auto& c : cases) {
    const fs::path a = root / (c.sub + "_a"), b = root / (c.sub + "_b");
    const bool ok = run_cli(fmt::format("{} {} --out {}{}", c.sub, c.args, a.string(), c.threaded ? " --workers 1" : "")) == 0 &&
                    run_cli(fmt::format("{} --config {} --out {}{}", c.sub, (a / "manifest.json").string(), b.string(),
                                        c.threaded ? " --workers 4" : "")) == 0 &&
                    same_tree(a, b);
    if (!ok) failed.push_back(c.sub);
  }
  fs::remove_all(root);
  return {failed.empty(), failed.empty() ? fmt::format("{} subcommands rerun byte-identical", cases.size())
                                         : fmt::format("differs: {}", fmt::join(failed, ", "))};
}

}  // namespace

int main() {
  Shared shared;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"DCB optimality", dcb_optimality},
      {"DCB feasibility", dcb_feasibility},
      {"worked DCB instance", worked_instance},
      {"reward algebra", reward_algebra},
      {"game analysis", game_analysis},
      {"learning ordering", learning_ordering},
      {"capacity monotonicity", [&] { return capacity_monotonicity(shared); }},
      {"method ordering", [&] { return method_ordering(shared); }},
      {"metric identities", metric_identities},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    if (!o.pass) ++failures;
    fmt::print("{} {:2d} {}: {}\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
  return failures == 0 ? 0 : 1;
}
