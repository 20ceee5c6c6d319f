#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "ips/orbit.hpp"
#include "ips/pseudomethod.hpp"

namespace ips {

// Outcome of the hyperbolicity test on the cycle matrix B = A_{m-1} ... A_0:
// hyperbolic iff no eigenvalue modulus lies within `tolerance` of 1.
struct HyperbolicityVerdict {
  static constexpr double tolerance = 1e-9;

  bool hyperbolic = false;
  std::vector<double> moduli;            // eigenvalue moduli of B, ascending
  std::optional<double> witness_modulus; // offending modulus when nonhyperbolic
};

HyperbolicityVerdict classify_periodic_point(const PeriodicOrbit& orbit);

// Invariant stable/unstable splitting along a hyperbolic orbit with decay
// constants: |Df^j(p_k) v| <= C lambda^j |v| for unit v in S(p_k) and the
// mirrored backward bound for U(p_k), with 0 < lambda < 1 the per-step rate
// (m-th root of the cycle matrix's extremal moduli) and C >= 1 a sampled
// transient-growth constant with 10% headroom on its excess over 1.
class HyperbolicSplitting {
public:
  HyperbolicSplitting(std::shared_ptr<const PeriodicOrbit> orbit,
                      std::vector<Mat> stable_bases, std::vector<Mat> unstable_bases,
                      double c, double lambda);

  const PeriodicOrbit& orbit() const { return *orbit_; }
  std::shared_ptr<const PeriodicOrbit> orbit_ptr() const { return orbit_; }

  const Mat& stable_basis(long k) const { return s_bases_[orbit_->mod(k)]; }
  const Mat& unstable_basis(long k) const { return u_bases_[orbit_->mod(k)]; }
  Index stable_dim() const { return s_bases_[0].cols(); }
  Index unstable_dim() const { return u_bases_[0].cols(); }

  // Oblique projectors onto S along U and onto U along S at cycle index k.
  const Mat& stable_projector(long k) const { return s_proj_[orbit_->mod(k)]; }
  const Mat& unstable_projector(long k) const { return u_proj_[orbit_->mod(k)]; }

  double C() const { return c_; }
  double lambda() const { return lambda_; }

private:
  std::shared_ptr<const PeriodicOrbit> orbit_;
  std::vector<Mat> s_bases_, u_bases_;
  std::vector<Mat> s_proj_, u_proj_;
  double c_ = 0.0;
  double lambda_ = 0.0;
};

// Builds the splitting: spectral projectors of the cycle matrix split by
// modulus (inside versus outside the unit circle, computed through the matrix
// sign of the Cayley transform, so defective matrices are handled), bases
// propagated along the orbit by the A_k, constants fitted over j = 0 .. 3m.
// Throws NonHyperbolicError with the witness modulus on nonhyperbolic input.
HyperbolicSplitting compute_splitting(std::shared_ptr<const PeriodicOrbit> orbit);

// Componentwise maxima of (C, lambda) over a nonempty family; the returned
// pair satisfies every member's decay inequalities.
std::pair<double, double> uniform_constants(const std::vector<HyperbolicSplitting>& family);

struct ShadowingParams {
  double L = 0.0;         // shadowing distance per unit defect
  double d0 = 0.0;        // largest admissible defect scale
  int max_iterations = 200;
  double tolerance = 1e-13;
};

// L = 2 C (1 + lambda) / (1 - lambda) (norm bound for the bounded-solution
// operator, factor 2 covering chart distortion), d_0 = (b/2) / (4 L) with b
// the orbit's chart radius (b/2 is the largest radius a gluing ring fits in).
ShadowingParams estimate_lipschitz_constant(const HyperbolicSplitting& splitting);

struct ShadowingSolveStats {
  int iterations = 0;
  double final_change = 0.0;   // sup-norm change of the last sweep
  double max_tangent_norm = 0.0;
  double measured_defect = 0.0;
  double residual = 0.0;       // recursion gap of the returned trajectory
};

// Finds the periodic pseudotrajectory of the stepwise pseudomethod that stays
// near the orbit: writes x_k = exp_{p_k}(v_k), v_{k+1} = A_k v_k + g_k(v_k),
// and iterates the bounded-solution operator (stable components accumulated
// forward, unstable components backward, exact periodic closure over the
// window of `periods` * lcm(k-period, orbit period) steps).  The returned
// window is [0, K] with the closing point repeating the first bit for bit.
// Throws PreconditionError when the pseudomethod's defect (claimed, and
// measured near the orbit) exceeds params.d0, ConvergenceError when the
// iteration fails to settle or the residual stays above 1e-12.
Pseudotrajectory find_shadowing_trajectory(const PseudomethodS& psm,
                                           const HyperbolicSplitting& splitting,
                                           const ShadowingParams& params, int periods = 1,
                                           ShadowingSolveStats* stats = nullptr);

} // namespace ips
