#include "ips/shadowing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ips/errors.hpp"
#include "ips/report.hpp"
#include "ips/rng.hpp"

namespace ips {

namespace {

std::vector<double> eigen_moduli(const Mat& b) {
  Eigen::EigenSolver<Mat> es(b, /*computeEigenvectors=*/false);
  std::vector<double> moduli(static_cast<std::size_t>(b.rows()));
  for (Index i = 0; i < b.rows(); ++i) moduli[static_cast<std::size_t>(i)] = std::abs(es.eigenvalues()[i]);
  std::sort(moduli.begin(), moduli.end());
  return moduli;
}

// Matrix sign of W by the scaled Newton iteration S <- (S + S^{-1})/2;
// converges quadratically when W has no purely imaginary eigenvalues.
Mat matrix_sign(Mat w) {
  Index n = w.rows();
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::PartialPivLU<Mat> lu(w);
    if (std::abs(lu.determinant()) < 1e-300)
      throw ConvergenceError("matrix sign iteration hit a singular iterate");
    Mat w_inv = lu.inverse();
    // determinant scaling accelerates convergence and tames wide spectra
    double scale = std::pow(std::abs(lu.determinant()), -1.0 / static_cast<double>(n));
    scale = std::min(std::max(scale, 1e-8), 1e8);
    Mat next = 0.5 * (scale * w + w_inv / scale);
    double change = (next - w).norm();
    w = next;
    if (change < 1e-14 * std::max(1.0, w.norm())) {
      // one unscaled polishing step
      w = 0.5 * (w + Mat(w.partialPivLu().inverse()));
      return w;
    }
  }
  throw ConvergenceError("matrix sign iteration did not settle in 100 steps");
}

// Orthonormal basis of the range of a (near-)projector via column-pivoted QR.
Mat range_basis(const Mat& p) {
  Eigen::ColPivHouseholderQR<Mat> qr(p);
  qr.setThreshold(1e-8);
  Index r = qr.rank();
  Mat q = qr.householderQ();
  return q.leftCols(r);
}

// Orthonormalize the columns of a full-column-rank matrix (thin QR).
Mat orthonormalize(const Mat& a) {
  if (a.cols() == 0) return a;
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  return q.leftCols(a.cols());
}

// Oblique projector onto span(s) along span(u).
Mat oblique_projector(const Mat& s, const Mat& u) {
  Index n = s.rows();
  Mat t(n, n);
  t.leftCols(s.cols()) = s;
  t.rightCols(u.cols()) = u;
  Mat selector = Mat::Zero(n, n);
  for (Index i = 0; i < s.cols(); ++i) selector(i, i) = 1.0;
  return t * selector * t.inverse();
}

} // namespace

HyperbolicityVerdict classify_periodic_point(const PeriodicOrbit& orbit) {
  HyperbolicityVerdict verdict;
  verdict.moduli = eigen_moduli(orbit.cycle_matrix());
  for (double m : verdict.moduli) {
    if (std::abs(m - 1.0) <= HyperbolicityVerdict::tolerance) {
      verdict.witness_modulus = m;
      verdict.hyperbolic = false;
      return verdict;
    }
  }
  verdict.hyperbolic = true;
  return verdict;
}

HyperbolicSplitting::HyperbolicSplitting(std::shared_ptr<const PeriodicOrbit> orbit,
                                         std::vector<Mat> stable_bases,
                                         std::vector<Mat> unstable_bases, double c,
                                         double lambda)
    : orbit_(std::move(orbit)), s_bases_(std::move(stable_bases)),
      u_bases_(std::move(unstable_bases)), c_(c), lambda_(lambda) {
  if (!orbit_) throw PreconditionError("splitting: missing orbit");
  int m = orbit_->period();
  if (static_cast<int>(s_bases_.size()) != m || static_cast<int>(u_bases_.size()) != m)
    throw PreconditionError("splitting: need one basis pair per cycle point");
  s_proj_.reserve(s_bases_.size());
  u_proj_.reserve(s_bases_.size());
  Index n = orbit_->dim();
  for (int k = 0; k < m; ++k) {
    if (s_bases_[k].cols() + u_bases_[k].cols() != n)
      throw PreconditionError("splitting: bases at index " + std::to_string(k) +
                              " do not span the tangent space");
    if (s_bases_[k].cols() == 0) {
      s_proj_.push_back(Mat::Zero(n, n));
      u_proj_.push_back(Mat::Identity(n, n));
    } else if (u_bases_[k].cols() == 0) {
      s_proj_.push_back(Mat::Identity(n, n));
      u_proj_.push_back(Mat::Zero(n, n));
    } else {
      Mat ps = oblique_projector(s_bases_[k], u_bases_[k]);
      s_proj_.push_back(ps);
      u_proj_.push_back(Mat::Identity(n, n) - ps);
    }
  }
}

HyperbolicSplitting compute_splitting(std::shared_ptr<const PeriodicOrbit> orbit) {
  if (!orbit) throw PreconditionError("compute_splitting: missing orbit");
  HyperbolicityVerdict verdict = classify_periodic_point(*orbit);
  if (!verdict.hyperbolic)
    throw NonHyperbolicError(
        "compute_splitting: cycle matrix has an eigenvalue of modulus " +
            format_g17(*verdict.witness_modulus) + " on the unit circle",
        *verdict.witness_modulus);

  Index n = orbit->dim();
  int m = orbit->period();
  Mat b = orbit->cycle_matrix();

  // Spectral projector for |mu| < 1: the Cayley transform W = (B-I)(B+I)^{-1}
  // sends the open unit disc to the left half plane, so P_s = (I - sign W)/2.
  Mat w = (b - Mat::Identity(n, n)) * Mat((b + Mat::Identity(n, n)).inverse());
  Mat sgn = matrix_sign(w);
  Mat ps = 0.5 * (Mat::Identity(n, n) - sgn);
  Mat pu = 0.5 * (Mat::Identity(n, n) + sgn);

  std::vector<Mat> s_bases{range_basis(ps)};
  std::vector<Mat> u_bases{range_basis(pu)};
  for (int k = 0; k + 1 < m; ++k) {
    s_bases.push_back(orthonormalize(Mat(orbit->jacobian(k) * s_bases.back())));
    u_bases.push_back(orthonormalize(Mat(orbit->jacobian(k) * u_bases.back())));
  }

  // per-step contraction rate from the cycle spectrum
  double worst = 0.0;
  for (double mu : verdict.moduli) worst = std::max(worst, mu < 1.0 ? mu : 1.0 / mu);
  double lambda = std::pow(worst, 1.0 / static_cast<double>(m));

  // transient-growth constant fitted on basis columns and random unit
  // combinations over j = 0 .. 3m, with 10% headroom on the excess over the
  // trivial j = 0 ratio
  double max_ratio = 1.0;
  Rng rng(0x5eedULL);
  for (int k = 0; k < m; ++k) {
    std::vector<Vec> stable_probes, unstable_probes;
    for (Index i = 0; i < s_bases[k].cols(); ++i) stable_probes.push_back(s_bases[k].col(i));
    for (Index i = 0; i < u_bases[k].cols(); ++i) unstable_probes.push_back(u_bases[k].col(i));
    for (int t = 0; t < 10; ++t) {
      if (s_bases[k].cols() > 0) {
        Vec mix = s_bases[k] * rng.unit_vector(s_bases[k].cols());
        stable_probes.push_back(mix / mix.norm());
      }
      if (u_bases[k].cols() > 0) {
        Vec mix = u_bases[k] * rng.unit_vector(u_bases[k].cols());
        unstable_probes.push_back(mix / mix.norm());
      }
    }
    for (int j = 0; j <= 3 * m; ++j) {
      double decay = std::pow(lambda, j);
      Mat fwd = orbit->jacobian_power(k, j);
      Mat bwd = orbit->jacobian_power(k, -j);
      for (const Vec& v : stable_probes) max_ratio = std::max(max_ratio, (fwd * v).norm() / decay);
      for (const Vec& v : unstable_probes) max_ratio = std::max(max_ratio, (bwd * v).norm() / decay);
    }
  }
  double c = 1.0 + 1.1 * (max_ratio - 1.0);

  return HyperbolicSplitting(std::move(orbit), std::move(s_bases), std::move(u_bases), c,
                             lambda);
}

std::pair<double, double> uniform_constants(const std::vector<HyperbolicSplitting>& family) {
  if (family.empty())
    throw PreconditionError("uniform_constants: the orbit family is empty");
  double c = 0.0, lambda = 0.0;
  for (const HyperbolicSplitting& s : family) {
    c = std::max(c, s.C());
    lambda = std::max(lambda, s.lambda());
  }
  return {c, lambda};
}

ShadowingParams estimate_lipschitz_constant(const HyperbolicSplitting& splitting) {
  ShadowingParams params;
  double c = splitting.C(), lambda = splitting.lambda();
  params.L = 2.0 * c * (1.0 + lambda) / (1.0 - lambda);
  double b = splitting.orbit().chart_radius();
  params.d0 = (b / 2.0) / (4.0 * params.L);
  return params;
}

Pseudotrajectory find_shadowing_trajectory(const PseudomethodS& psm,
                                           const HyperbolicSplitting& splitting,
                                           const ShadowingParams& params, int periods,
                                           ShadowingSolveStats* stats) {
  const PeriodicOrbit& orbit = splitting.orbit();
  const ModelSpace& space = orbit.space();
  if (periods < 1) throw PreconditionError("shadowing solver: periods must be >= 1");

  // defect gate: claimed scale and a measured probe near the orbit
  double b = orbit.chart_radius();
  DefectSampler sampler =
      DefectSampler::orbit_focused(splitting.orbit_ptr(), {b / 4, b / 2}, 0x5eed5eedULL);
  double measured = measure_defect_s(psm, sampler, 200);
  double d_eff = std::max(psm.claimed_defect(), measured);
  if (stats) stats->measured_defect = measured;
  if (d_eff > params.d0)
    throw PreconditionError("shadowing solver: defect " + format_g17(d_eff) +
                            " exceeds the admissible scale d0 = " + format_g17(params.d0));

  int m = orbit.period();
  int p = psm.k_period();
  long window = static_cast<long>(std::lcm(m, p)) * periods;
  Index n = orbit.dim();

  // v_{k+1} = A_k v_k + g_k(v_k) in chart coordinates along the orbit
  auto g = [&](long k, const Vec& v) {
    Vec image = psm.apply(k, space.chart_to(orbit.point(k), v));
    return Vec(space.chart_from(orbit.point(k + 1), image) - orbit.jacobian(k) * v);
  };

  std::vector<Vec> v(static_cast<std::size_t>(window), Vec::Zero(n));
  std::vector<Vec> c(static_cast<std::size_t>(window), Vec::Zero(n));
  std::vector<Vec> s(static_cast<std::size_t>(window) + 1, Vec::Zero(n));
  std::vector<Vec> u(static_cast<std::size_t>(window) + 1, Vec::Zero(n));

  // K-fold stable and unstable transfer operators with the projectors
  // interleaved, so the complementary component never contaminates them
  Mat bs = splitting.stable_projector(0);
  Mat gu = splitting.unstable_projector(0);
  for (long k = 0; k < window; ++k) bs = splitting.stable_projector(k + 1) * (orbit.jacobian(k) * bs);
  for (long k = window - 1; k >= 0; --k) {
    Mat inv_a = orbit.jacobian_power(k, -1);
    gu = splitting.unstable_projector(k) * (inv_a * gu);
  }
  Eigen::PartialPivLU<Mat> stable_closure(Mat(Mat::Identity(n, n) - bs));
  Eigen::PartialPivLU<Mat> unstable_closure(Mat(Mat::Identity(n, n) - gu));

  int iter = 0;
  double change = 0.0;
  bool settled = false;
  for (iter = 1; iter <= params.max_iterations; ++iter) {
    for (long k = 0; k < window; ++k) c[static_cast<std::size_t>(k)] = g(k, v[static_cast<std::size_t>(k)]);

    // stable component: forward accumulation, then exact periodic closure
    Vec r = Vec::Zero(n);
    for (long k = 0; k < window; ++k)
      r = splitting.stable_projector(k + 1) * Vec(orbit.jacobian(k) * r + c[static_cast<std::size_t>(k)]);
    s[0] = splitting.stable_projector(0) * Vec(stable_closure.solve(r));
    for (long k = 0; k < window; ++k)
      s[static_cast<std::size_t>(k) + 1] = splitting.stable_projector(k + 1) *
                                           Vec(orbit.jacobian(k) * s[static_cast<std::size_t>(k)] +
                                               c[static_cast<std::size_t>(k)]);

    // unstable component: backward accumulation, mirrored closure
    Vec t = Vec::Zero(n);
    for (long k = window - 1; k >= 0; --k)
      t = splitting.unstable_projector(k) *
          Vec(orbit.jacobian_power(k, -1) *
              Vec(t - splitting.unstable_projector(k + 1) * c[static_cast<std::size_t>(k)]));
    u[0] = splitting.unstable_projector(0) * Vec(unstable_closure.solve(t));
    u[static_cast<std::size_t>(window)] = u[0];
    for (long k = window - 1; k >= 1; --k)
      u[static_cast<std::size_t>(k)] =
          splitting.unstable_projector(k) *
          Vec(orbit.jacobian_power(k, -1) *
              Vec(u[static_cast<std::size_t>(k) + 1] -
                  splitting.unstable_projector(k + 1) * c[static_cast<std::size_t>(k)]));

    change = 0.0;
    double biggest = 0.0;
    for (long k = 0; k < window; ++k) {
      Vec next = s[static_cast<std::size_t>(k)] + u[static_cast<std::size_t>(k)];
      change = std::max(change, (next - v[static_cast<std::size_t>(k)]).norm());
      v[static_cast<std::size_t>(k)] = next;
      biggest = std::max(biggest, next.norm());
    }
    if (stats) {
      stats->iterations = iter;
      stats->final_change = change;
      stats->max_tangent_norm = biggest;
    }
    if (biggest > b)
      throw ConvergenceError("shadowing solver: iterate left the chart ball (" +
                             format_g17(biggest) + " > " + format_g17(b) + ")");
    if (change < params.tolerance) {
      settled = true;
      break;
    }
  }
  if (!settled)
    throw ConvergenceError("shadowing solver: no convergence in " +
                           std::to_string(params.max_iterations) + " sweeps (last change " +
                           format_g17(change) + ")");

  std::vector<Vec> points;
  points.reserve(static_cast<std::size_t>(window) + 1);
  for (long k = 0; k < window; ++k)
    points.push_back(space.chart_to(orbit.point(k), v[static_cast<std::size_t>(k)]));
  points.push_back(points.front()); // exact periodic closure
  Pseudotrajectory traj(Pseudotrajectory::Kind::StepwiseS, 0, std::move(points));

  double residual = traj.max_step_residual(psm);
  if (stats) stats->residual = residual;
  if (residual > 1e-12)
    throw ConvergenceError("shadowing solver: trajectory residual " + format_g17(residual) +
                           " exceeds 1e-12");
  return traj;
}

} // namespace ips
