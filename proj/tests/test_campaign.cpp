#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "ips/campaign.hpp"
#include "ips/errors.hpp"
#include "ips/rng.hpp"
#include "ips/shadowing.hpp"
#include "oracles.hpp"

using namespace ips;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

std::shared_ptr<const PeriodicOrbit> cat_fixed_point() {
  auto cat = ToralAutomorphism::cat_map();
  return std::make_shared<PeriodicOrbit>(PeriodicOrbit::from_base_point(cat, v2(0, 0), 1));
}

std::shared_ptr<const PeriodicOrbit> cat_three_cycle() {
  auto cat = ToralAutomorphism::cat_map();
  return std::make_shared<PeriodicOrbit>(
      PeriodicOrbit::from_base_point(cat, v2(0.0, 0.5), 3));
}

// Deterministic scatter of torus points for pointwise comparisons.
std::vector<Vec> scatter(int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec> pts;
  for (int i = 0; i < count; ++i) {
    Vec x(2);
    x << rng.uniform01(), rng.uniform01();
    pts.push_back(x);
  }
  return pts;
}

// The perturbation of psi at x, recovered through the chart at f(x) so torus
// wrapping cannot contaminate the comparison.
Vec perturbation(const PseudomethodS& psm, long k, const Vec& x) {
  Vec fx = psm.base().eval(x);
  return psm.base().space().chart_from(fx, psm.apply(k, x));
}

}  // namespace

TEST_CASE("random pseudomethods are deterministic in the seed") {
  auto cat = ToralAutomorphism::cat_map();
  PseudomethodS a = make_random_pseudomethod(cat, 3, 1e-3, 77u);
  PseudomethodS b = make_random_pseudomethod(cat, 3, 1e-3, 77u);
  PseudomethodS c = make_random_pseudomethod(cat, 3, 1e-3, 78u);

  CHECK(a.k_period() == 3);
  CHECK(a.claimed_defect() == 1e-3);

  double max_same = 0.0;
  double max_diff = 0.0;
  for (const Vec& x : scatter(25, 11u)) {
    for (long k = 0; k < 3; ++k) {
      max_same = std::max(max_same, (a.apply(k, x) - b.apply(k, x)).norm());
      max_diff = std::max(max_diff, (a.apply(k, x) - c.apply(k, x)).norm());
    }
  }
  CHECK(max_same == 0.0);       // same seed: bit-identical maps
  CHECK(max_diff > 1e-5);       // different seed: a genuinely different field

  // Different k slots carry different fields.
  Vec x0 = v2(0.3, 0.7);
  CHECK((perturbation(a, 0, x0) - perturbation(a, 1, x0)).norm() > 1e-6);
}

TEST_CASE("the perturbation amplitude is exactly linear in d") {
  auto cat = ToralAutomorphism::cat_map();
  PseudomethodS full = make_random_pseudomethod(cat, 2, 1e-3, 2026u);
  PseudomethodS half = make_random_pseudomethod(cat, 2, 0.5e-3, 2026u);

  double worst = 0.0;
  for (const Vec& x : scatter(40, 5u)) {
    for (long k = 0; k < 2; ++k) {
      Vec g1 = perturbation(full, k, x);
      Vec g2 = perturbation(half, k, x);
      worst = std::max(worst, (g1 - 2.0 * g2).norm());
    }
  }
  // The fields halve bit for bit; the only noise is the chart round trip
  // used to recover them, at the scale of one ulp of the point coordinates.
  CHECK(worst <= 2e-15);
}

TEST_CASE("the defect is scaled to d on the measurement grid and never above") {
  auto cat = ToralAutomorphism::cat_map();
  const double d = 1e-3;
  PseudomethodS psm = make_random_pseudomethod(cat, 2, d, 909u);

  // Independent sup scan: a fine grid (denser than the internal one) plus
  // random points.  The sup must sit essentially at d: reaching it proves the
  // scaling, staying under d + tiny proves the grid max really is the max.
  double sup = 0.0;
  for (long k = 0; k < 2; ++k) {
    for (int i = 0; i < 97; ++i)
      for (int j = 0; j < 97; ++j) {
        Vec x = v2(i / 97.0, j / 97.0);
        sup = std::max(sup, perturbation(psm, k, x).norm());
      }
    for (const Vec& x : scatter(2000, 31u))
      sup = std::max(sup, perturbation(psm, k, x).norm());
  }
  CHECK(sup <= d * (1.0 + 1e-9));
  CHECK(sup >= d * (1.0 - 2e-2));  // a 97x97 scan of a smooth 1-periodic
                                   // field lands within a couple percent of
                                   // its true maximum

  // The library's own sampler agrees.
  auto orbit = cat_fixed_point();
  DefectSampler sampler = DefectSampler::orbit_focused(orbit, {0.05, 0.1}, 17u);
  CHECK(measure_defect_s(psm, sampler, 500) <= d + 1e-12);
}

TEST_CASE("zero defect reproduces the system bit for bit") {
  auto cat = ToralAutomorphism::cat_map();
  PseudomethodS psm = make_random_pseudomethod(cat, 2, 0.0, 5u);
  for (const Vec& x : scatter(30, 77u))
    for (long k = 0; k < 2; ++k)
      CHECK((psm.apply(k, x) - cat->eval(x)).norm() == 0.0);
}

TEST_CASE("campaign rows converge with small ratios on the cat fixed point") {
  auto orbit = cat_fixed_point();
  ShadowCampaignReport report = run_shadow_campaign(orbit, 1e-4, 30, 42u);

  REQUIRE(static_cast<int>(report.rows.size()) == 30);
  CHECK(report.all_converged);
  CHECK(report.pass);
  CHECK(report.max_residual <= 1e-12);
  CHECK(report.max_ratio <= 10.0);
  CHECK(report.ratio_bound == report.params.L);
  CHECK(report.params.L <= 10.0);

  double max_ratio = 0.0;
  for (const ShadowCampaignRow& row : report.rows) {
    CHECK(row.converged);
    CHECK(row.d == 1e-4);
    CHECK(row.ratio == row.sup_distance / row.d);
    CHECK(row.sup_distance > 0.0);  // random fields genuinely push the orbit
    max_ratio = std::max(max_ratio, row.ratio);
  }
  CHECK(report.max_ratio == max_ratio);

  // Seeds are pairwise distinct and in derivation order.
  for (std::size_t i = 0; i + 1 < report.rows.size(); ++i)
    CHECK(report.rows[i].seed != report.rows[i + 1].seed);
}

TEST_CASE("one campaign row replays against a direct solve") {
  auto orbit = cat_fixed_point();
  ShadowCampaignReport report = run_shadow_campaign(orbit, 1e-4, 4, 42u);
  const ShadowCampaignRow& row = report.rows[2];

  PseudomethodS psm =
      make_random_pseudomethod(orbit->system_ptr(), orbit->period(), row.d, row.seed);
  HyperbolicSplitting splitting = compute_splitting(orbit);
  ShadowingParams params = estimate_lipschitz_constant(splitting);
  ShadowingSolveStats stats;
  Pseudotrajectory traj = find_shadowing_trajectory(psm, splitting, params, 1, &stats);

  double sup = 0.0;
  const ModelSpace& space = orbit->system().space();
  for (long k = traj.k_min(); k <= traj.k_max(); ++k)
    sup = std::max(sup, space.distance(traj.at(k), orbit->point(k)));
  CHECK(sup == row.sup_distance);  // the campaign measures exactly this
  CHECK(traj.max_step_residual(psm) <= 1e-12);
  CHECK(stats.iterations == row.iterations);
}

TEST_CASE("halving d halves every sup distance almost exactly") {
  auto orbit = cat_fixed_point();
  ShadowCampaignReport full = run_shadow_campaign(orbit, 1e-4, 20, 7u);
  ShadowCampaignReport half = run_shadow_campaign(orbit, 0.5e-4, 20, 7u);

  REQUIRE(full.rows.size() == half.rows.size());
  for (std::size_t i = 0; i < full.rows.size(); ++i) {
    CHECK(full.rows[i].seed == half.rows[i].seed);  // same shapes, half the size
    double shrink = full.rows[i].sup_distance / half.rows[i].sup_distance;
    CHECK(shrink > 2.0 * 0.95);
    CHECK(shrink < 2.0 * 1.05);
  }
}

TEST_CASE("campaign succeeds on a fundamental period-3 orbit") {
  auto orbit = cat_three_cycle();
  ShadowCampaignReport report = run_shadow_campaign(orbit, 1e-3, 10, 2026u);
  CHECK(report.all_converged);
  CHECK(report.max_residual <= 1e-12);
  CHECK(report.max_ratio <= 10.0);
  CHECK(report.pass);
}

TEST_CASE("nonhyperbolic orbits are refused, not campaigned") {
  auto rot = std::make_shared<LinearSystem>(oracle::rot2(1.0));
  auto orbit = std::make_shared<PeriodicOrbit>(
      PeriodicOrbit::from_base_point(rot, Vec(Vec::Zero(2)), 1));
  CHECK_THROWS_AS(run_shadow_campaign(orbit, 1e-4, 3, 1u), NonHyperbolicError);
}

TEST_CASE("oversized defects are reported per row, not hidden") {
  auto orbit = cat_fixed_point();
  ShadowingParams params = estimate_lipschitz_constant(compute_splitting(orbit));
  double big = 4.0 * params.d0;  // beyond the solver's admissible defect
  ShadowCampaignReport report = run_shadow_campaign(orbit, big, 3, 9u);
  CHECK_FALSE(report.all_converged);
  CHECK_FALSE(report.pass);
  for (const ShadowCampaignRow& row : report.rows) CHECK_FALSE(row.converged);
}

TEST_CASE("campaign reports are byte stable") {
  auto orbit = cat_fixed_point();
  ShadowCampaignReport a = run_shadow_campaign(orbit, 1e-4, 6, 11u);
  ShadowCampaignReport b = run_shadow_campaign(orbit, 1e-4, 6, 11u);
  CHECK(a.csv() == b.csv());
  CHECK(a.summary() == b.summary());
  CHECK(a.csv().find("seed,d,sup_distance,ratio,iterations,converged") != std::string::npos);
  CHECK(a.csv().find("# construction: shadow-campaign") != std::string::npos);

  // Row count: header + comments + 6 rows, LF endings throughout.
  std::istringstream lines(a.csv());
  std::string line;
  int data_rows = 0;
  while (std::getline(lines, line))
    if (!line.empty() && line[0] != '#' && line[0] != 's') ++data_rows;
  CHECK(data_rows == 6);
  CHECK(a.csv().find('\r') == std::string::npos);
  CHECK(a.summary().find("PASS") != std::string::npos);
}
