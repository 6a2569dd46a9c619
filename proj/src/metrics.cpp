#include "uam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <fmt/core.h>

namespace uam {

namespace {

// Order-independent sum.
double stable_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return std::accumulate(v.begin(), v.end(), 0.0);
}

std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

// Exact Poisson interval for a count, scaled by `scale`.
Estimate poisson_rate(std::size_t count, double scale, double confidence) {
  const double a = 1.0 - confidence;
  Estimate e;
  e.mean = static_cast<double>(count) * scale;
  const double k = static_cast<double>(count);
  e.ci_low = count == 0 ? 0.0 : boost::math::quantile(boost::math::chi_squared(2 * k), a / 2) / 2 * scale;
  e.ci_high = boost::math::quantile(boost::math::chi_squared(2 * k + 2), 1 - a / 2) / 2 * scale;
  return e;
}

}  // namespace

MacEstimate estimate_mac(double n_nmac, double flight_hours, const RiskModelParams& params) {
  if (!(flight_hours > 0)) throw MetricsError(fmt::format("flight hours must be positive (got {})", flight_hours));
  if (n_nmac < 0) throw MetricsError("NMAC count must be >= 0");
  MacEstimate m;
  m.expected = params.p_mac_given_nmac * params.acasx_risk_ratio * n_nmac;
  m.rate_per_100k_fh = m.expected / flight_hours * 100000.0;
  return m;
}

Calibration calibrate_p_mac_given_nmac(std::span<const EpisodeLog> logs, double confidence) {
  Calibration c;
  for (const auto& l : logs) {
    c.mac += l.count(EventKind::mac);
    c.nmac += l.count(EventKind::nmac);
  }
  if (c.nmac == 0) return c;
  const double k = static_cast<double>(c.mac);
  const double n = static_cast<double>(c.nmac);
  const double a = 1.0 - confidence;
  c.p = k / n;
  c.ci_low = c.mac == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1, a / 2);
  c.ci_high = c.mac == c.nmac ? 1.0 : boost::math::ibeta_inv(k + 1, n - k, 1 - a / 2);
  return c;
}

std::optional<double> risk_ratio(double method_rate, double baseline_rate) {
  if (!(baseline_rate > 0)) return std::nullopt;
  return method_rate / baseline_rate;
}

Estimate summarize(std::vector<double> values, double confidence) {
  Estimate e;
  if (values.empty()) return e;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  if (values.front() == values.back()) {
    e.mean = e.ci_low = e.ci_high = values.front();
    return e;
  }
  e.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  std::vector<double> sq;
  sq.reserve(values.size());
  for (double v : values) sq.push_back((v - e.mean) * (v - e.mean));
  const double sd = std::sqrt(stable_sum(std::move(sq)) / (n - 1));
  const double t = boost::math::quantile(boost::math::students_t(n - 1), 1 - (1 - confidence) / 2);
  const double half = t * sd / std::sqrt(n);
  e.ci_low = e.mean - half;
  e.ci_high = e.mean + half;
  return e;
}

MetricsReport aggregate(std::span<const EpisodeLog> logs, const RiskModelParams& params,
                        const AggregateOptions& options) {
  MetricsReport rep;
  rep.runs = logs.size();
  rep.pooled = options.pooled;
  rep.p_mac_given_nmac = params.p_mac_given_nmac;
  std::vector<double> lowc_rate, nmac_rate, mac_rate, hours, ground, airborne, alerts;
  for (const auto& l : logs) {
    const double fh = l.flight_hours();
    const auto lw = l.count(EventKind::lowc);
    const auto nm = l.count(EventKind::nmac);
    rep.lowc += lw;
    rep.nmac += nm;
    rep.mac += l.count(EventKind::mac);
    if (l.truncated) ++rep.truncated_runs;
    hours.push_back(fh);
    lowc_rate.push_back(fh > 0 ? static_cast<double>(lw) / fh : 0.0);
    nmac_rate.push_back(fh > 0 ? static_cast<double>(nm) / fh : 0.0);
    mac_rate.push_back(fh > 0 ? estimate_mac(static_cast<double>(nm), fh, params).rate_per_100k_fh : 0.0);
    for (const auto& f : l.flights) {
      if (f.final_phase == Phase::pre_departure) continue;
      ground.push_back(f.ground_delay());
      airborne.push_back(f.airborne_delay());
      alerts.push_back(f.alerts);
    }
  }
  rep.flights = ground.size();
  rep.flight_hours = stable_sum(hours);
  if (options.pooled) {
    if (rep.flight_hours > 0) {
      const double mac_scale = params.p_mac_given_nmac * params.acasx_risk_ratio * 100000.0 / rep.flight_hours;
      rep.lowc_per_fh = poisson_rate(rep.lowc, 1.0 / rep.flight_hours, options.confidence);
      rep.nmac_per_fh = poisson_rate(rep.nmac, 1.0 / rep.flight_hours, options.confidence);
      rep.est_mac_per_100k_fh = poisson_rate(rep.nmac, mac_scale, options.confidence);
    }
  } else {
    rep.lowc_per_fh = summarize(std::move(lowc_rate), options.confidence);
    rep.nmac_per_fh = summarize(std::move(nmac_rate), options.confidence);
    rep.est_mac_per_100k_fh = summarize(std::move(mac_rate), options.confidence);
  }
  if (rep.flights > 0) {
    const auto n = static_cast<double>(rep.flights);
    rep.mean_ground_delay = stable_sum(std::move(ground)) / n;
    rep.mean_airborne_delay = stable_sum(std::move(airborne)) / n;
    rep.mean_alerts = stable_sum(std::move(alerts)) / n;
  }
  return rep;
}

void attach_risk_ratio(MetricsReport& report, const MetricsReport& baseline) {
  report.risk_ratio = risk_ratio(report.est_mac_per_100k_fh.mean, baseline.est_mac_per_100k_fh.mean);
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace uam
