#include "uam/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/core.h>

namespace uam {

using nlohmann::json;

namespace {

// Reads fields of one JSON object and rejects any key that was not asked for.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ScenarioError(fmt::format("{}: expected an object", path_));
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ScenarioError(fmt::format("{}.{}: wrong type", path_, key));
    }
  }

  template <typename T>
  void get(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (it->is_null()) {
      out.reset();
      return;
    }
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ScenarioError(fmt::format("{}.{}: wrong type", path_, key));
    }
  }

  const json* section(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  bool has(const char* key) const { return obj_.contains(key); }

  std::string path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ScenarioError(fmt::format("{}: unknown key '{}'", path_, it.key()));
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

DetectionMode detection_from(const std::string& s, const std::string& path) {
  if (auto m = parse_detection_mode(s)) return *m;
  throw ScenarioError(fmt::format("{}: expected 'all' or 'forward'", path));
}

}  // namespace

ScenarioConfig parse_scenario(const json& doc) {
  ScenarioConfig cfg;
  Reader top(doc, "$");

  const json* nodes = top.section("nodes");
  if (!nodes || !nodes->is_array()) throw ScenarioError("$.nodes: required array");
  for (std::size_t i = 0; i < nodes->size(); ++i) {
    Reader r((*nodes)[i], fmt::format("$.nodes[{}]", i));
    Node n;
    double x = 0, y = 0;
    r.get("id", n.id);
    r.get("x", x);
    r.get("y", y);
    r.finish();
    n.position = {x, y};
    cfg.nodes.push_back(std::move(n));
  }

  const json* routes = top.section("routes");
  if (!routes || !routes->is_array()) throw ScenarioError("$.routes: required array");
  for (std::size_t i = 0; i < routes->size(); ++i) {
    Reader r((*routes)[i], fmt::format("$.routes[{}]", i));
    Route route;
    r.get("id", route.id);
    r.get("nodes", route.nodes);
    r.finish();
    cfg.routes.push_back(std::move(route));
  }

  if (const json* res = top.section("resources")) {
    if (!res->is_array()) throw ScenarioError("$.resources: expected array");
    for (std::size_t i = 0; i < res->size(); ++i) {
      Reader r((*res)[i], fmt::format("$.resources[{}]", i));
      Resource resource;
      r.get("node", resource.node_id);
      r.get("capacity", resource.capacity);
      r.finish();
      cfg.resources.push_back(std::move(resource));
    }
  }

  if (const json* s = top.section("performance")) {
    Reader r(*s, "$.performance");
    auto& p = cfg.performance;
    r.get("v_min", p.v_min);
    r.get("v_cruise", p.v_cruise);
    r.get("v_max", p.v_max);
    r.get("dv", p.dv);
    r.get("accel", p.accel);
    r.finish();
  }

  if (const json* s = top.section("demand")) {
    Reader r(*s, "$.demand");
    auto& d = cfg.demand;
    r.get("mean_interval", d.mean_interval);
    r.get("flights_per_route", d.flights_per_route);
    r.get("beta_shape", d.beta_shape);
    r.get("interval_range", d.interval_range);
    r.get("first_departure_window", d.first_departure_window);
    r.get("mean_tolerance", d.mean_tolerance);
    r.finish();
  }

  if (const json* s = top.section("thresholds")) {
    Reader r(*s, "$.thresholds");
    auto& t = cfg.thresholds;
    r.get("d_mac", t.d_mac);
    r.get("d_nmac", t.d_nmac);
    r.get("d_lowc", t.d_lowc);
    r.get("observation_range", t.observation_range);
    r.finish();
  }

  cfg.reward = RewardParams::continuous_for(cfg.thresholds);
  if (const json* s = top.section("reward")) {
    Reader r(*s, "$.reward");
    auto& w = cfg.reward;
    r.get("alpha", w.alpha);
    r.get("delta", w.delta);
    r.get("eta", w.eta);
    r.get("psi", w.psi);
    r.get("max_flight_time_factor", w.max_flight_time_factor);
    r.finish();
  }

  if (const json* s = top.section("dcb")) {
    Reader r(*s, "$.dcb");
    auto& d = cfg.dcb;
    r.get("window_length", d.window_length);
    r.get("departure_separation", d.departure_separation);
    r.get("horizon", d.horizon);
    r.get("node_limit", d.node_limit);
    r.finish();
  }

  if (const json* s = top.section("rule_policy")) {
    Reader r(*s, "$.rule_policy");
    r.get("d_ls", cfg.rule.d_ls);
    r.get("d_hs", cfg.rule.d_hs);
    r.get("open_band", cfg.rule.open_band);
    r.finish();
  }

  if (const json* s = top.section("engine")) {
    Reader r(*s, "$.engine");
    r.get("step_dt", cfg.engine.step_dt);
    r.get("decision_dt", cfg.engine.decision_dt);
    r.get("max_sim_time", cfg.engine.max_sim_time);
    r.finish();
  }

  if (const json* s = top.section("risk")) {
    Reader r(*s, "$.risk");
    auto& k = cfg.risk;
    r.get("p_mac_given_nmac", k.p_mac_given_nmac);
    r.get("acasx_risk_ratio", k.acasx_risk_ratio);
    r.get("tls", k.tls);
    r.get("calibrate", k.calibrate);
    r.get("calibration_runs", k.calibration_runs);
    r.finish();
  }

  if (const json* s = top.section("learning")) {
    Reader r(*s, "$.learning");
    auto& l = cfg.learning;
    std::string mode = to_string(l.mode);
    r.get("mode", mode);
    l.mode = detection_from(mode, "$.learning.mode");
    r.get("episodes", l.episodes);
    r.get("update_period", l.update_period);
    r.get("learning_rate", l.learning_rate);
    r.get("learning_rate_floor", l.learning_rate_floor);
    r.get("n_step", l.n_step);
    r.get("discount", l.discount);
    r.get("epsilon_start", l.epsilon_start);
    r.get("epsilon_end", l.epsilon_end);
    r.get("epsilon_decay_episodes", l.epsilon_decay_episodes);
    r.get("pool_size", l.pool_size);
    r.get("pool_capacity", l.pool_capacity);
    r.get("dgoal_bins", l.dgoal_bins);
    r.get("speed_bins", l.speed_bins);
    r.get("distance_edges", l.distance_edges);
    r.get("range_rate_edges", l.range_rate_edges);
    r.finish();
  }

  top.finish();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(fmt::format("cannot open scenario '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_scenario(doc);
}

json to_json(const ScenarioConfig& cfg) {
  json doc;
  doc["nodes"] = json::array();
  for (const auto& n : cfg.nodes) doc["nodes"].push_back({{"id", n.id}, {"x", n.position.x()}, {"y", n.position.y()}});
  doc["routes"] = json::array();
  for (const auto& r : cfg.routes) doc["routes"].push_back({{"id", r.id}, {"nodes", r.nodes}});
  doc["resources"] = json::array();
  for (const auto& r : cfg.resources) doc["resources"].push_back({{"node", r.node_id}, {"capacity", r.capacity}});
  const auto& p = cfg.performance;
  doc["performance"] = {{"v_min", p.v_min}, {"v_cruise", p.v_cruise}, {"v_max", p.v_max}, {"dv", p.dv}, {"accel", p.accel}};
  const auto& d = cfg.demand;
  doc["demand"] = {{"mean_interval", d.mean_interval},
                   {"flights_per_route", d.flights_per_route},
                   {"beta_shape", d.beta_shape},
                   {"interval_range", d.interval_range},
                   {"first_departure_window", d.first_departure_window},
                   {"mean_tolerance", d.mean_tolerance}};
  const auto& t = cfg.thresholds;
  doc["thresholds"] = {
      {"d_mac", t.d_mac}, {"d_nmac", t.d_nmac}, {"d_lowc", t.d_lowc}, {"observation_range", t.observation_range}};
  const auto& w = cfg.reward;
  doc["reward"] = {{"alpha", w.alpha},
                   {"delta", w.delta},
                   {"eta", w.eta},
                   {"psi", w.psi},
                   {"max_flight_time_factor", w.max_flight_time_factor}};
  const auto& b = cfg.dcb;
  doc["dcb"] = {{"window_length", b.window_length},
                {"departure_separation", b.departure_separation},
                {"horizon", b.horizon ? json(*b.horizon) : json(nullptr)},
                {"node_limit", b.node_limit}};
  doc["rule_policy"] = {{"d_ls", cfg.rule.d_ls}, {"d_hs", cfg.rule.d_hs}, {"open_band", cfg.rule.open_band}};
  doc["engine"] = {{"step_dt", cfg.engine.step_dt},
                   {"decision_dt", cfg.engine.decision_dt},
                   {"max_sim_time", cfg.engine.max_sim_time}};
  const auto& k = cfg.risk;
  doc["risk"] = {{"p_mac_given_nmac", k.p_mac_given_nmac},
                 {"acasx_risk_ratio", k.acasx_risk_ratio},
                 {"tls", k.tls},
                 {"calibrate", k.calibrate},
                 {"calibration_runs", k.calibration_runs}};
  const auto& l = cfg.learning;
  doc["learning"] = {{"mode", to_string(l.mode)},
                     {"episodes", l.episodes},
                     {"update_period", l.update_period},
                     {"learning_rate", l.learning_rate},
                     {"learning_rate_floor", l.learning_rate_floor},
                     {"n_step", l.n_step},
                     {"discount", l.discount},
                     {"epsilon_start", l.epsilon_start},
                     {"epsilon_end", l.epsilon_end},
                     {"epsilon_decay_episodes", l.epsilon_decay_episodes},
                     {"pool_size", l.pool_size},
                     {"pool_capacity", l.pool_capacity ? json(*l.pool_capacity) : json(nullptr)},
                     {"dgoal_bins", l.dgoal_bins},
                     {"speed_bins", l.speed_bins},
                     {"distance_edges", l.distance_edges},
                     {"range_rate_edges", l.range_rate_edges}};
  return doc;
}

std::vector<Violation> validate_scenario(const ScenarioConfig& cfg) {
  std::vector<Violation> out;
  auto fail = [&](std::string path, std::string msg) { out.push_back({std::move(path), std::move(msg)}); };
  auto finite = [](double v) { return std::isfinite(v); };

  std::set<std::string> ids;
  for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
    const auto& n = cfg.nodes[i];
    const auto path = fmt::format("nodes[{}]", i);
    if (n.id.empty()) fail(path, "empty node id");
    if (!ids.insert(n.id).second) fail(path, fmt::format("duplicate node id '{}'", n.id));
    if (!finite(n.position.x()) || !finite(n.position.y())) fail(path, fmt::format("node '{}' has non-finite coordinates", n.id));
  }

  std::set<std::string> route_ids;
  std::set<std::string> on_route;
  for (std::size_t i = 0; i < cfg.routes.size(); ++i) {
    const auto& r = cfg.routes[i];
    const auto path = fmt::format("routes[{}]", i);
    if (!route_ids.insert(r.id).second) fail(path, fmt::format("duplicate route id '{}'", r.id));
    if (r.nodes.size() < 2) fail(path, fmt::format("route '{}' needs at least two nodes", r.id));
    bool all_known = true;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
      if (!ids.count(r.nodes[k])) {
        fail(path, fmt::format("route '{}' references unknown node '{}'", r.id, r.nodes[k]));
        all_known = false;
      }
      if (k > 0 && r.nodes[k] == r.nodes[k - 1]) {
        fail(path, fmt::format("route '{}' repeats node '{}' consecutively", r.id, r.nodes[k]));
      }
      on_route.insert(r.nodes[k]);
    }
    if (all_known && r.nodes.size() >= 2) {
      double len = 0;
      for (std::size_t k = 1; k < r.nodes.size(); ++k) {
        const Node* a = nullptr;
        const Node* b = nullptr;
        for (const auto& n : cfg.nodes) {
          if (n.id == r.nodes[k - 1]) a = &n;
          if (n.id == r.nodes[k]) b = &n;
        }
        len += (b->position - a->position).norm();
      }
      if (!(len > 0)) fail(path, fmt::format("route '{}' has zero length", r.id));
    }
  }
  if (cfg.routes.empty()) fail("routes", "at least one route is required");

  std::set<std::string> res_nodes;
  for (std::size_t i = 0; i < cfg.resources.size(); ++i) {
    const auto& r = cfg.resources[i];
    const auto path = fmt::format("resources[{}]", i);
    if (r.capacity < 1) fail(path, fmt::format("resource '{}' capacity must be >= 1 (got {})", r.node_id, r.capacity));
    if (!ids.count(r.node_id)) fail(path, fmt::format("resource '{}' references unknown node", r.node_id));
    else if (!on_route.count(r.node_id)) fail(path, fmt::format("resource '{}' lies on no route", r.node_id));
    if (!res_nodes.insert(r.node_id).second) fail(path, fmt::format("duplicate resource '{}'", r.node_id));
  }

  const auto& p = cfg.performance;
  if (!(0 < p.v_min && p.v_min <= p.v_cruise && p.v_cruise <= p.v_max)) {
    fail("performance", "speeds must satisfy 0 < v_min <= v_cruise <= v_max");
  }
  if (!(p.dv > 0)) fail("performance.dv", "dv must be positive");
  if (!(p.accel > 0)) fail("performance.accel", "accel must be positive");

  const auto& d = cfg.demand;
  if (!(d.mean_interval > 0)) fail("demand.mean_interval", "mean interval must be positive");
  if (d.flights_per_route < 0) fail("demand.flights_per_route", "must be >= 0");
  if (!(d.beta_shape[0] > 0 && d.beta_shape[1] > 0)) fail("demand.beta_shape", "shape parameters must be positive");
  if (!(d.interval_range[0] >= 0 && d.interval_range[0] <= d.interval_range[1])) {
    fail("demand.interval_range", "range must satisfy 0 <= min <= max");
  }
  if (d.first_departure_window < 0) fail("demand.first_departure_window", "must be >= 0");
  if (d.mean_interval > 0 && std::abs(d.mapped_mean() - d.mean_interval) > d.mean_tolerance * d.mean_interval) {
    fail("demand", fmt::format("mapped interval mean {} differs from mean_interval {}", d.mapped_mean(), d.mean_interval));
  }

  const auto& t = cfg.thresholds;
  if (!(0 < t.d_mac && t.d_mac < t.d_nmac && t.d_nmac < t.d_lowc && t.d_lowc <= t.observation_range)) {
    fail("thresholds", "thresholds must satisfy 0 < d_mac < d_nmac < d_lowc <= observation_range");
  }

  const auto& w = cfg.reward;
  if (w.alpha < 0 || w.delta < 0 || w.eta < 0 || w.psi < 0) fail("reward", "alpha, delta, eta and psi must be >= 0");
  if (!(w.max_flight_time_factor >= 1)) fail("reward.max_flight_time_factor", "must be >= 1");

  const auto& b = cfg.dcb;
  if (!(b.window_length > 0)) fail("dcb.window_length", "window length must be positive");
  if (!(b.departure_separation >= 0)) fail("dcb.departure_separation", "separation must be >= 0");
  if (b.horizon && !(*b.horizon > 0)) fail("dcb.horizon", "horizon must be positive");

  const auto& rp = cfg.rule;
  if (!(t.d_nmac < rp.d_ls && rp.d_ls < rp.d_hs && rp.d_hs <= t.observation_range)) {
    fail("rule_policy", "boundaries must satisfy d_nmac < d_ls < d_hs <= observation_range");
  }

  const auto& e = cfg.engine;
  if (!(0 < e.step_dt && e.step_dt <= e.decision_dt)) fail("engine", "need 0 < step_dt <= decision_dt");
  if (!(e.max_sim_time > 0)) fail("engine.max_sim_time", "must be positive");
  const double ratio = e.decision_dt / e.step_dt;
  if (e.step_dt > 0 && std::abs(ratio - std::round(ratio)) > 1e-9) {
    fail("engine.decision_dt", "decision_dt must be a whole multiple of step_dt");
  }

  const auto& k = cfg.risk;
  auto prob = [](double v) { return v >= 0 && v <= 1; };
  if (!prob(k.p_mac_given_nmac)) fail("risk.p_mac_given_nmac", "must lie in [0,1]");
  if (!prob(k.acasx_risk_ratio)) fail("risk.acasx_risk_ratio", "must lie in [0,1]");
  if (!(k.tls >= 0)) fail("risk.tls", "must be >= 0");
  if (k.calibration_runs < 1) fail("risk.calibration_runs", "must be >= 1");

  const auto& l = cfg.learning;
  if (l.episodes < 0 || l.update_period < 1) fail("learning", "episodes >= 0 and update_period >= 1 required");
  if (!prob(l.epsilon_start) || !prob(l.epsilon_end)) fail("learning", "exploration probabilities must lie in [0,1]");
  if (!(l.learning_rate > 0 && l.learning_rate <= 1)) fail("learning.learning_rate", "must lie in (0,1]");
  if (l.n_step < 1) fail("learning.n_step", "must be >= 1");
  if (!(l.learning_rate_floor >= 0 && l.learning_rate_floor <= l.learning_rate)) {
    fail("learning.learning_rate_floor", "must lie in [0, learning_rate]");
  }
  if (!(l.discount >= 0 && l.discount <= 1)) fail("learning.discount", "must lie in [0,1]");
  if (l.pool_size < 1) fail("learning.pool_size", "must be >= 1");
  if (l.pool_capacity && *l.pool_capacity < 1) fail("learning.pool_capacity", "must be >= 1");
  if (l.dgoal_bins < 1 || l.speed_bins < 1) fail("learning", "bin counts must be >= 1");
  if (l.distance_edges.size() < 2 || !std::is_sorted(l.distance_edges.begin(), l.distance_edges.end())) {
    fail("learning.distance_edges", "need at least two ascending edges");
  }
  if (!std::is_sorted(l.range_rate_edges.begin(), l.range_rate_edges.end())) {
    fail("learning.range_rate_edges", "edges must be ascending");
  }
  return out;
}

namespace {

ScenarioConfig checked(ScenarioConfig cfg) {
  auto violations = validate_scenario(cfg);
  if (!violations.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& v : violations) msg += fmt::format("\n  {}: {}", v.path, v.message);
    throw ScenarioError(msg);
  }
  return cfg;
}

}  // namespace

Scenario::Scenario(ScenarioConfig cfg) : cfg_(checked(std::move(cfg))), airspace_(cfg_.nodes, cfg_.routes) {}

void Scenario::annotate_etas(FlightPlan& plan) const {
  plan.eta_at_resource.clear();
  const std::size_t r = airspace_.route_index(plan.route_id);
  for (const auto& res : cfg_.resources) {
    if (auto arc = airspace_.arc_of(r, res.node_id)) {
      plan.eta_at_resource[res.node_id] = plan.required_departure + *arc / cfg_.performance.v_cruise;
    }
  }
}

std::filesystem::path default_data_dir() { return UAM_DATA_DIR; }

}  // namespace uam
