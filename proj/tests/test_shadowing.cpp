#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

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

std::shared_ptr<const PeriodicOrbit> euclidean_fixed_point(const Mat& a) {
  auto sys = std::make_shared<LinearSystem>(a);
  Vec zero = Vec::Zero(a.rows());
  return std::make_shared<PeriodicOrbit>(PeriodicOrbit::from_base_point(sys, zero, 1));
}

// angle between a vector and a one-column subspace basis
double line_angle(const Vec& v, const Vec& w) {
  double c = std::abs(v.dot(w)) / (v.norm() * w.norm());
  return std::acos(std::min(1.0, c));
}

} // namespace

TEST_CASE("hyperbolicity classification separates moduli from the unit circle") {
  // cat map: moduli from the quadratic-formula oracle
  auto fp = cat_fixed_point();
  HyperbolicityVerdict verdict = classify_periodic_point(*fp);
  CHECK(verdict.hyperbolic);
  CHECK_FALSE(verdict.witness_modulus.has_value());
  auto oracle_moduli = oracle::eig2_moduli(2, 1, 1, 1);
  REQUIRE(verdict.moduli.size() == 2);
  CHECK(verdict.moduli[0] == doctest::Approx(oracle_moduli[0]).epsilon(1e-12));
  CHECK(verdict.moduli[1] == doctest::Approx(oracle_moduli[1]).epsilon(1e-12));
  CHECK(verdict.moduli[0] == doctest::Approx((3.0 - std::sqrt(5.0)) / 2).epsilon(1e-12));

  // planar rotation: both moduli exactly 1
  Mat rot = oracle::rot2(M_PI / 2);
  auto rot_orbit = euclidean_fixed_point(rot);
  verdict = classify_periodic_point(*rot_orbit);
  CHECK_FALSE(verdict.hyperbolic);
  REQUIRE(verdict.witness_modulus.has_value());
  CHECK(*verdict.witness_modulus == doctest::Approx(1.0).epsilon(1e-12));

  // 4x4 rotation-Jordan block: isometric spectrum, nonhyperbolic
  Mat q = oracle::rot2(M_PI / 2);
  Mat j4 = Mat::Zero(4, 4);
  j4.block(0, 0, 2, 2) = q;
  j4.block(2, 2, 2, 2) = q;
  j4.block(0, 2, 2, 2) = Mat::Identity(2, 2);
  verdict = classify_periodic_point(*euclidean_fixed_point(j4));
  CHECK_FALSE(verdict.hyperbolic);

  // tolerance boundary: modulus within 1e-9 of 1 is refused
  Mat near1(2, 2);
  near1 << 1.0 + 1e-10, 0, 0, 0.5;
  CHECK_FALSE(classify_periodic_point(*euclidean_fixed_point(near1)).hyperbolic);
  Mat off1(2, 2);
  off1 << 1.0 + 1e-6, 0, 0, 0.5;
  CHECK(classify_periodic_point(*euclidean_fixed_point(off1)).hyperbolic);
}

TEST_CASE("splitting of the cat fixed point matches the eigen oracle") {
  auto fp = cat_fixed_point();
  HyperbolicSplitting split = compute_splitting(fp);

  double lam = (3.0 - std::sqrt(5.0)) / 2;
  CHECK(split.lambda() == doctest::Approx(lam).epsilon(1e-9));
  // symmetric matrix: orthogonal eigenbasis, no transient growth
  CHECK(split.C() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(split.stable_dim() == 1);
  CHECK(split.unstable_dim() == 1);

  // oracle eigenvectors of [[2,1],[1,1]]: (1, mu - 2) for eigenvalue mu
  double mu_s = lam, mu_u = (3.0 + std::sqrt(5.0)) / 2;
  CHECK(line_angle(split.stable_basis(0).col(0), v2(1, mu_s - 2)) < 1e-9);
  CHECK(line_angle(split.unstable_basis(0).col(0), v2(1, mu_u - 2)) < 1e-9);

  // projector identities: complementary, idempotent, rank via trace
  Mat ps = split.stable_projector(0), pu = split.unstable_projector(0);
  CHECK((ps + pu - Mat::Identity(2, 2)).norm() < 1e-10);
  CHECK((ps * ps - ps).norm() < 1e-10);
  CHECK(ps.trace() == doctest::Approx(1.0).epsilon(1e-10));

  // decay inequalities on fresh sampled vectors, forward and backward
  Rng rng(99);
  const PeriodicOrbit& orb = *fp;
  for (int t = 0; t < 25; ++t) {
    double sgn = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    Vec vs = sgn * split.stable_basis(0).col(0);
    Vec vu = sgn * split.unstable_basis(0).col(0);
    for (int j = 0; j <= 3; ++j) {
      CHECK((orb.jacobian_power(0, j) * vs).norm() <=
            split.C() * std::pow(split.lambda(), j) + 1e-12);
      CHECK((orb.jacobian_power(0, -j) * vu).norm() <=
            split.C() * std::pow(split.lambda(), j) + 1e-12);
    }
  }
}

TEST_CASE("splitting along the period-3 orbit is invariant and decaying") {
  auto orbit = cat_three_cycle();
  HyperbolicSplitting split = compute_splitting(orbit);

  // constant linearization: the 3-fold product is the cube, so the per-step
  // rate equals the fixed point's
  CHECK(split.lambda() == doctest::Approx((3.0 - std::sqrt(5.0)) / 2).epsilon(1e-9));
  CHECK(split.C() <= 1.5);

  for (int k = 0; k < 3; ++k) {
    // S + U spans: combined basis matrix far from singular
    Mat combined(2, 2);
    combined.col(0) = split.stable_basis(k).col(0);
    combined.col(1) = split.unstable_basis(k).col(0);
    Eigen::JacobiSVD<Mat> svd(combined);
    CHECK(svd.singularValues().minCoeff() > 1e-8);

    // invariance: A_k S(p_k) = S(p_{k+1}), likewise for U
    Vec as = orbit->jacobian(k) * split.stable_basis(k).col(0);
    Vec au = orbit->jacobian(k) * split.unstable_basis(k).col(0);
    CHECK(line_angle(as, split.stable_basis(k + 1).col(0)) < 1e-8);
    CHECK(line_angle(au, split.unstable_basis(k + 1).col(0)) < 1e-8);

    // sampled decay at every cycle point
    for (int j = 0; j <= 9; ++j) {
      CHECK((orbit->jacobian_power(k, j) * split.stable_basis(k).col(0)).norm() <=
            split.C() * std::pow(split.lambda(), j) + 1e-12);
      CHECK((orbit->jacobian_power(k, -j) * split.unstable_basis(k).col(0)).norm() <=
            split.C() * std::pow(split.lambda(), j) + 1e-12);
    }
  }
}

TEST_CASE("diagonal systems give the plug-in constants") {
  Mat a(2, 2);
  a << 2, 0, 0, 0.5;
  auto orbit = euclidean_fixed_point(a);
  HyperbolicSplitting split = compute_splitting(orbit);
  CHECK(split.C() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(split.lambda() == doctest::Approx(0.5).epsilon(1e-12));
  ShadowingParams params = estimate_lipschitz_constant(split);
  CHECK(params.L == doctest::Approx(6.0).epsilon(1e-12));
  // chart radius 1 for a Euclidean fixed point: d_0 = (1/2) / (4 L)
  CHECK(params.d0 == doctest::Approx(1.0 / 48.0).epsilon(1e-12));

  Mat b(2, 2);
  b << 10, 0, 0, 0.1;
  HyperbolicSplitting split2 = compute_splitting(euclidean_fixed_point(b));
  CHECK(split2.lambda() == doctest::Approx(0.1).epsilon(1e-12));
  ShadowingParams params2 = estimate_lipschitz_constant(split2);
  CHECK(params2.L == doctest::Approx(22.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("cat fixed point Lipschitz constant is two root five") {
  auto fp = cat_fixed_point();
  HyperbolicSplitting split = compute_splitting(fp);
  ShadowingParams params = estimate_lipschitz_constant(split);
  // 2 C (1 + lambda) / (1 - lambda) with C = 1, lambda = (3 - sqrt 5)/2
  CHECK(params.L == doctest::Approx(2.0 * std::sqrt(5.0)).epsilon(1e-9));
  CHECK(params.L <= 10.0);
  CHECK(params.d0 == doctest::Approx(fp->chart_radius() / (8 * params.L)).epsilon(1e-12));
}

TEST_CASE("uniform constants are componentwise maxima over a family") {
  auto cat = ToralAutomorphism::cat_map();
  std::vector<HyperbolicSplitting> family;
  for (int q = 1; q <= 3; ++q)
    for (const PeriodicOrbit& orbit : find_rational_periodic_orbit(cat, q))
      family.push_back(compute_splitting(std::make_shared<PeriodicOrbit>(orbit)));
  REQUIRE(family.size() >= 4);

  auto [c_uni, lam_uni] = uniform_constants(family);
  double c_max = 0, lam_max = 0;
  for (const auto& s : family) {
    c_max = std::max(c_max, s.C());
    lam_max = std::max(lam_max, s.lambda());
  }
  CHECK(c_uni == c_max);
  CHECK(lam_uni == lam_max);
  // identical linearization at every grid point: the family shares the
  // fixed point's rate
  CHECK(lam_uni == doctest::Approx((3.0 - std::sqrt(5.0)) / 2).epsilon(1e-9));

  CHECK_THROWS_AS(uniform_constants({}), PreconditionError);
}

TEST_CASE("nonhyperbolic orbits are refused with a witness") {
  auto rot_orbit = euclidean_fixed_point(oracle::rot2(1.0));
  try {
    compute_splitting(rot_orbit);
    FAIL("expected NonHyperbolicError");
  } catch (const NonHyperbolicError& e) {
    CHECK(e.witness_modulus == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("the exact pseudomethod is shadowed by the orbit itself") {
  auto fp = cat_fixed_point();
  HyperbolicSplitting split = compute_splitting(fp);
  ShadowingParams params = estimate_lipschitz_constant(split);
  PseudomethodS psm = PseudomethodS::exact(fp->system_ptr(), 1);

  ShadowingSolveStats stats;
  Pseudotrajectory traj = find_shadowing_trajectory(psm, split, params, 3, &stats);
  CHECK(traj.max_step_residual(psm) <= 1e-12);
  for (long k = traj.k_min(); k <= traj.k_max(); ++k)
    CHECK(fp->space().distance(traj.at(k), fp->point(k)) <= 1e-13);
  CHECK(stats.iterations <= 2);
}

TEST_CASE("constant drift solves to the closed-form bounded solution") {
  auto fp = cat_fixed_point();
  const ModelSpace& space = fp->space();
  HyperbolicSplitting split = compute_splitting(fp);
  ShadowingParams params = estimate_lipschitz_constant(split);

  Vec delta = v2(1e-4, 0);
  auto cat = fp->system_ptr();
  std::vector<MapFn> maps{[cat, delta](const Vec& x) {
    return cat->space().wrap(cat->eval(x) + delta);
  }};
  PseudomethodS psm(cat, maps, 1e-4);

  // oracle: v = (I - A)^{-1} delta with A = [[2,1],[1,1]], by the explicit
  // 2x2 inverse of I - A = [[-1,-1],[-1,0]]: (I-A)^{-1} = [[0,-1],[-1,1]]
  Vec v_star = v2(-delta[1], -delta[0] + delta[1]);
  Vec x_star = space.chart_to(fp->point(0), v_star);

  Pseudotrajectory traj = find_shadowing_trajectory(psm, split, params, 4);
  CHECK(traj.max_step_residual(psm) <= 1e-12);
  for (long k = traj.k_min(); k <= traj.k_max(); ++k)
    CHECK(space.distance(traj.at(k), x_star) <= 1e-10);

  // the Lipschitz bound holds with margin
  ShadowingDistance dist = shadowing_distance(traj, *fp);
  CHECK(dist.sup <= params.L * 1e-4);
}

TEST_CASE("periodic pseudomethods close up over the joint window") {
  auto orbit = cat_three_cycle();
  const ModelSpace& space = orbit->space();
  HyperbolicSplitting split = compute_splitting(orbit);
  ShadowingParams params = estimate_lipschitz_constant(split);

  // k-period 2 against orbit period 3: joint window is a multiple of 6
  double d = 1e-4;
  auto cat = orbit->system_ptr();
  std::vector<MapFn> maps{
      [cat, d](const Vec& x) { return cat->space().wrap(cat->eval(x) + v2(d, 0)); },
      [cat, d](const Vec& x) { return cat->space().wrap(cat->eval(x) - v2(0, d)); }};
  PseudomethodS psm(cat, maps, d);

  ShadowingSolveStats stats;
  Pseudotrajectory traj = find_shadowing_trajectory(psm, split, params, 2, &stats);
  CHECK(traj.size() == 13); // 2 * lcm(2,3) + closing point
  CHECK(traj.max_step_residual(psm) <= 1e-12);
  // closure is bit-exact: the last point repeats the first
  CHECK(space.distance(traj.at(traj.k_min()), traj.at(traj.k_max())) == 0.0);

  ShadowingDistance dist = shadowing_distance(traj, *orbit);
  CHECK(dist.sup <= params.L * d);
  CHECK(dist.sup > 0.0);
}

TEST_CASE("smooth random pseudomethods stay within the Lipschitz budget") {
  auto fp = cat_fixed_point();
  HyperbolicSplitting split = compute_splitting(fp);
  ShadowingParams params = estimate_lipschitz_constant(split);
  auto cat = fp->system_ptr();

  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    double d = 1e-3;
    Rng rng(seed);
    double a1 = rng.uniform(-1, 1), a2 = rng.uniform(-1, 1);
    double p1 = rng.uniform(0, 2 * M_PI), p2 = rng.uniform(0, 2 * M_PI);
    std::vector<MapFn> maps{[cat, d, a1, a2, p1, p2](const Vec& x) {
      Vec field = v2(a1 * std::sin(2 * M_PI * x[1] + p1), a2 * std::cos(2 * M_PI * x[0] + p2));
      double cap = std::max(std::abs(a1), std::abs(a2)) * std::sqrt(2.0);
      return cat->space().wrap(cat->eval(x) + (d / cap) * field);
    }};
    PseudomethodS psm(cat, maps, d);

    Pseudotrajectory traj = find_shadowing_trajectory(psm, split, params, 2);
    CHECK(traj.max_step_residual(psm) <= 1e-12);
    ShadowingDistance dist = shadowing_distance(traj, *fp);
    CHECK(dist.sup <= params.L * d);
  }
}

TEST_CASE("halving the defect scale at most halves the sup distance") {
  auto fp = cat_fixed_point();
  HyperbolicSplitting split = compute_splitting(fp);
  ShadowingParams params = estimate_lipschitz_constant(split);
  auto cat = fp->system_ptr();

  auto solve_sup = [&](double d) {
    std::vector<MapFn> maps{[cat, d](const Vec& x) {
      Vec field = v2(std::sin(2 * M_PI * x[1] + 0.3), std::cos(2 * M_PI * x[0] + 1.1));
      return cat->space().wrap(cat->eval(x) + (d / std::sqrt(2.0)) * field);
    }};
    PseudomethodS psm(cat, maps, d);
    Pseudotrajectory traj = find_shadowing_trajectory(psm, split, params, 2);
    return shadowing_distance(traj, *fp).sup;
  };
  double s1 = solve_sup(1e-3);
  double s2 = solve_sup(0.5e-3);
  CHECK(s2 <= 0.5 * s1 * 1.05);
  CHECK(s2 >= 0.5 * s1 * 0.95);
}

TEST_CASE("the solver refuses defects beyond its admissible scale") {
  auto fp = cat_fixed_point();
  HyperbolicSplitting split = compute_splitting(fp);
  ShadowingParams params = estimate_lipschitz_constant(split);
  auto cat = fp->system_ptr();

  double d = 2 * params.d0;
  std::vector<MapFn> maps{[cat, d](const Vec& x) {
    return cat->space().wrap(cat->eval(x) + v2(d, 0));
  }};
  PseudomethodS psm(cat, maps, d);
  CHECK_THROWS_AS(find_shadowing_trajectory(psm, split, params, 1), PreconditionError);
}
