#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ips/gluing.hpp"
#include "ips/orbit.hpp"
#include "ips/pseudomethod.hpp"
#include "ips/system.hpp"

namespace ips {

// Parameters of the rotation-drift construction: a periodic orbit whose
// derivative blocks are scaled plane rotations (a neutral rotation plane on
// coordinates 1-2, optional extra blocks below), together with a per-step
// drift that pushes pseudotrajectories along the rotation plane.  Because the
// rotation returns to the identity after nu cycles and the radial factors
// multiply to 1, the per-step drifts all line up at multiples of the super
// period m*nu and accumulate linearly, so no pseudotrajectory of the built
// pseudomethod can stay epsilon-close to the orbit.
struct RotationDriftSpec {
  int period = 1;                  // m >= 1: cycle length
  int nu = 1;                      // nu >= 1 with cos(nu * chi) = 1
  double chi = 0.0;                // rotation angle per step (0 = real case)
  std::vector<double> radii;       // r_0..r_{m-1}, product exactly 1
  std::vector<Mat> bottom_blocks;  // optional extra blocks B_j (empty: dim 2)
  double drift_scale = 0.0;        // d, constrained by m*nu*d < epsilon/3

  // Geometry of the model: the affine-core radius a and the derived radii.
  static constexpr double ball_radius = 0.2;  // a
  double max_block_norm() const;              // max_j ||A_j||_2
  double inner_radius() const;                // a-bar = a / (max norm + 1)
  double epsilon0() const;                    // a-bar / 3 (gluing ring radius)
  double epsilon() const;                     // epsilon0 / 10 (shadowing scale)
  double R() const;                           // 2 * max r_j
  double per_cycle_drift() const;             // m*nu*d / (2 R^m)

  Index dimension() const;    // 2 + bottom block rows
  Mat block_matrix(int j) const;  // A_j = r_j * rotation(chi) (+) B_j

  // Throws PreconditionError on any violated invariant (radii product,
  // cos(nu*chi) = 1, block shapes, positivity, drift bound).
  void validate() const;
};

// The realized model: a Euclidean system that is exactly affine with
// derivative A_j on the ball B(a, p_j) around each cycle point, and the
// designated m-periodic orbit with chart radius a.  The cycle derivative
// D h^m has a unit-modulus eigenvalue (a nu-th root of unity) on the
// rotation plane, so the orbit is nonhyperbolic.
struct RotationModel {
  RotationDriftSpec spec;
  std::shared_ptr<const CyclicAffineSystem> system;
  std::shared_ptr<const PeriodicOrbit> orbit;
};

RotationModel build_rotation_model(const RotationDriftSpec& spec);

// The adversarial pseudomethod: step k overrides the active ball k mod m with
//   psi_k(y) = A_k y + d * (r_0...r_k) * (cos((k+1) chi), sin((k+1) chi), 0..) / (2 R^m)
// for 0 <= k <= m*nu - 1, glued into the system over the ring
// (epsilon0/2, epsilon0) on that ball and left untouched elsewhere.  The
// family is k-periodic with period m*nu.
class RotationAdversary {
public:
  const RotationModel& model() const { return model_; }
  double d() const { return d_; }
  int k_period() const { return static_cast<int>(steps_.size()); }  // m*nu

  // Drift vector added by psi_k (chart coordinates at the image point).
  const Vec& drift(long k) const;
  // The glued step map for index k (reduced mod m*nu).
  const GluedMap& step(long k) const;

  // The construction as a stepwise pseudomethod (x_{k+1} = Psi_k(x_k)).
  PseudomethodS as_pseudomethod() const;

private:
  friend RotationAdversary build_rotation_adversary(const RotationModel&, double);
  RotationModel model_;
  double d_ = 0.0;
  std::vector<GluedMap> steps_;
  std::vector<Vec> drifts_;
};

// Builds and glues the adversary.  Requires spec.drift_scale consistency when
// d == spec.drift_scale is used, the drift bound m*nu*d < epsilon/3, and d
// admissible for linear gluing with outer ring radius epsilon0 on the ball
// radius a-bar.  Throws PreconditionError on violations.
RotationAdversary build_rotation_adversary(const RotationModel& model, double d);

// One verified start: the trajectory in chart coordinates from q, watched at
// super-period stamps k = m*nu*j.  At every stamp reached while the whole
// trajectory so far stayed inside the inner gluing region, the composition
// must match the telescoped form S^j q + j * c * e_1 (S = cycle derivative to
// the power nu, c = per-cycle drift) to 1e-10.  A trial certifies divergence
// either by crossing |pr_{1,2}| > 3 epsilon at the predicted stamp (+-1) or
// by escaping the inner region altogether (reported, not an error).
struct RotationTrial {
  int trial = 0;
  Vec q0;
  double pr_q0 = 0.0;            // |pr_{1,2} q0|
  long predicted_cycle = 0;      // first j with |pr_{1,2}(S^j q0 + j c e_1)| > 3 epsilon
  long guaranteed_cycle = 0;     // first j with j*c - |pr q0| > 3 epsilon (worst case)
  long observed_cycle = -1;      // first stamp j with |pr_{1,2} q^{m nu j}| > 3 epsilon
  double max_telescope_error = 0.0;  // over in-region stamps
  bool crossed = false;
  bool early_exit = false;       // left the inner region before crossing
  long exit_step = -1;           // first raw step with |v| >= rho_in, or -1
  bool pass = false;
};

struct RotationDivergenceReport {
  double d = 0.0;
  double per_cycle_drift = 0.0;  // c = m*nu*d / (2 R^m)
  double threshold = 0.0;        // 3 epsilon
  double rho_in = 0.0;           // inner gluing radius epsilon0 / 2
  double slope_rel_error = 0.0;  // |fitted slope - c| / c for the q = 0 trial
  std::vector<RotationTrial> trials;
  bool pass = false;

  // Stamp-level rows for every trial: trial, k, |pr_{1,2} q_k|, the telescoped
  // lower bound j*c - |pr q0|, and the in-region flag.  Structured header
  // echoes the construction parameters.
  std::string csv() const;
  std::string summary() const;  // one line per trial plus the verdict

  std::string csv_body_;
  std::string summary_;
};

// Runs trial 0 from q = 0 plus `trials` seeded starts with |q| <= 2 epsilon.
RotationDivergenceReport verify_rotation_divergence(const RotationAdversary& adversary,
                                                    std::uint64_t seed, int trials);

}  // namespace ips
