#include <doctest.h>

#include <algorithm>

#include "support.hpp"
#include "uam/metrics.hpp"

using namespace uam;

namespace {

EpisodeLog synthetic(double hours, std::size_t nmac, std::size_t mac, double ground = 0.0) {
  EpisodeLog l;
  FlightRecord f;
  f.final_phase = Phase::landed;
  f.actual = hours * 3600.0;
  f.estimated = f.actual;
  f.required = ground;
  l.flights.push_back(f);
  for (std::size_t k = 0; k < nmac; ++k) l.events.push_back({EventKind::nmac, 0, 1, 0, 1, 100});
  for (std::size_t k = 0; k < mac; ++k) l.events.push_back({EventKind::mac, 0, 1, 0, 1, 5});
  return l;
}

}  // namespace

TEST_CASE("estimated collision identities") {
  RiskModelParams p;
  const MacEstimate zero = estimate_mac(0, 10.0, p);
  CHECK(zero.expected == 0.0);
  CHECK(zero.rate_per_100k_fh == 0.0);
  const MacEstimate one = estimate_mac(4, 2.0, p);
  CHECK(one.expected == doctest::Approx(p.p_mac_given_nmac * p.acasx_risk_ratio * 4));
  CHECK(one.rate_per_100k_fh == doctest::Approx(one.expected / 2.0 * 1e5));
  // Linear in the count, inversely proportional to exposure.
  CHECK(estimate_mac(8, 2.0, p).expected == doctest::Approx(2 * one.expected));
  CHECK(estimate_mac(4, 4.0, p).rate_per_100k_fh == doctest::Approx(one.rate_per_100k_fh / 2));
  CHECK_THROWS_AS(estimate_mac(1, 0.0, p), MetricsError);
  CHECK_THROWS_AS(estimate_mac(-1, 1.0, p), MetricsError);
}

TEST_CASE("risk ratio") {
  CHECK(*risk_ratio(908.25, 205.53) == doctest::Approx(4.419).epsilon(0.001 / 4.419));
  CHECK(*risk_ratio(0.0, 3.0) == 0.0);
  CHECK_FALSE(risk_ratio(1.0, 0.0));
}

TEST_CASE("calibration") {
  std::vector<EpisodeLog> logs{synthetic(1, 40, 1), synthetic(1, 60, 1)};
  const Calibration c = calibrate_p_mac_given_nmac(logs);
  CHECK(c.nmac == 100);
  CHECK(c.mac == 2);
  REQUIRE(c.p);
  CHECK(*c.p == doctest::Approx(0.02));
  CHECK(c.ci_low < 0.02);
  CHECK(c.ci_high > 0.02);
  // Reference Clopper-Pearson bounds for 2 of 100.
  CHECK(c.ci_low == doctest::Approx(0.002431).epsilon(1e-3));
  CHECK(c.ci_high == doctest::Approx(0.070383).epsilon(1e-3));

  std::vector<EpisodeLog> none{synthetic(1, 0, 0)};
  CHECK_FALSE(calibrate_p_mac_given_nmac(none).p);
}

TEST_CASE("aggregation ignores run order") {
  Rng rng(6);
  boost::random::uniform_int_distribution<int> cnt(0, 9);
  boost::random::uniform_real_distribution<double> hrs(0.2, 3.0), gd(0, 500);
  std::vector<EpisodeLog> logs;
  for (int k = 0; k < 25; ++k) {
    logs.push_back(synthetic(hrs(rng), static_cast<std::size_t>(cnt(rng)), 0, gd(rng)));
  }
  RiskModelParams p;
  for (bool pooled : {false, true}) {
    const MetricsReport a = aggregate(logs, p, {pooled});
    auto shuffled = logs;
    std::reverse(shuffled.begin(), shuffled.end());
    std::rotate(shuffled.begin(), shuffled.begin() + 7, shuffled.end());
    const MetricsReport b = aggregate(shuffled, p, {pooled});
    CHECK(a.nmac == b.nmac);
    CHECK(a.flight_hours == b.flight_hours);
    CHECK(a.est_mac_per_100k_fh.mean == b.est_mac_per_100k_fh.mean);
    CHECK(a.est_mac_per_100k_fh.ci_high == b.est_mac_per_100k_fh.ci_high);
    CHECK(a.mean_ground_delay == b.mean_ground_delay);
    CHECK(a.est_mac_per_100k_fh.ci_low <= a.est_mac_per_100k_fh.mean);
    CHECK(a.est_mac_per_100k_fh.mean <= a.est_mac_per_100k_fh.ci_high);
  }
}

TEST_CASE("run-averaged rates") {
  std::vector<EpisodeLog> logs{synthetic(1.0, 2, 0), synthetic(2.0, 2, 0)};
  RiskModelParams p;
  const MetricsReport r = aggregate(logs, p);
  CHECK(r.nmac_per_fh.mean == doctest::Approx((2.0 + 1.0) / 2));
  const MetricsReport pooled = aggregate(logs, p, {true});
  CHECK(pooled.nmac_per_fh.mean == doctest::Approx(4.0 / 3.0));
  CHECK(pooled.est_mac_per_100k_fh.mean == doctest::Approx(estimate_mac(4, 3.0, p).rate_per_100k_fh));

  MetricsReport base = r;
  attach_risk_ratio(base, r);
  CHECK(*base.risk_ratio == doctest::Approx(1.0));
}

TEST_CASE("spearman") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> up{2, 4, 8, 16, 32};
  const std::vector<double> down{5, 3, 2, 1, 0};
  CHECK(*spearman(x, up) == doctest::Approx(1.0));
  CHECK(*spearman(x, down) == doctest::Approx(-1.0));
  // Ties get average ranks: ranks of y are 1.5, 1.5, 3, 4, 5.
  const std::vector<double> tied{0, 0, 1, 2, 3};
  CHECK(*spearman(x, tied) == doctest::Approx(9.5 / std::sqrt(10.0 * 9.5)));
  const std::vector<double> flat{1, 1, 1, 1, 1};
  CHECK_FALSE(spearman(x, flat));
}

TEST_CASE("summary of constant values has a degenerate interval") {
  const Estimate e = summarize({3.0, 3.0, 3.0});
  CHECK(e.mean == 3.0);
  CHECK(e.ci_low == 3.0);
  CHECK(e.ci_high == 3.0);
  const Estimate f = summarize({1.0, 2.0, 3.0});
  CHECK(f.mean == 2.0);
  // t(0.975, 2) = 4.302653 with sd 1 and n 3.
  CHECK(f.ci_high - f.mean == doctest::Approx(4.302653 / std::sqrt(3.0)).epsilon(1e-6));
}
