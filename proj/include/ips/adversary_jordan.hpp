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

// Parameters of the Jordan-drift construction: a linear fixed point whose
// derivative is a Jordan-like block matrix over the 2x2 rotation
//     Q = ( cos(theta)  sin(theta); -sin(theta)  cos(theta) ),
// with l copies of Q on the diagonal and identity blocks on the
// superdiagonal (dimension 2l).  Every eigenvalue has modulus 1, so the
// fixed point is nonhyperbolic.  The adversary adds the rotating drift
// (d/2) Q^k w to the bottom 2x2 block at step k; because Q is an isometry
// the drifts compound coherently and the bottom-block norm grows like k d/2
// while the trajectory stays in the linear region.
struct JordanDriftSpec {
  int l = 1;               // number of rotation blocks; dimension = 2l
  double theta = 0.0;      // rotation angle (0 = the real-eigenvalue case)
  Vec w;                   // unit 2-vector driving the drift
  int L = 1;               // natural Lipschitz constant under test
  double r_bar = 4.0;      // ball radius; drift bound 20 L d < r_bar / 10
  double drift_scale = 0.0;  // d

  double C() const { return 20.0 * static_cast<double>(L); }  // gluing ring scale
  Index dimension() const { return 2 * static_cast<Index>(l); }
  Mat q_matrix() const;      // Q
  Mat block_matrix() const;  // the full 2l x 2l matrix

  // Throws PreconditionError on any violated invariant (|w| = 1, l >= 1,
  // L >= 1, 20 L d < r_bar / 10, sampled isometry of Q).
  void validate() const;
};

// The realized model: the linear system x -> A x with the fixed point at the
// origin and chart radius r_bar.
struct JordanModel {
  JordanDriftSpec spec;
  std::shared_ptr<const LinearSystem> system;
  std::shared_ptr<const PeriodicOrbit> orbit;
};

JordanModel build_jordan_model(const JordanDriftSpec& spec);

// The adversarial pseudomethod: step k applies
//   psi_k(y) = A y + (d/2) (0, ..., 0, Q^k w)
// (drift in the bottom two coordinates), glued into the system over the ring
// (10 L d, 20 L d) on the chart ball.  The drift family never repeats for
// generic theta; the construction realizes the maps for a finite window of
// steps (default 20 L + 2, enough for every divergence horizon below) and
// the stepwise family wraps periodically beyond it, which keeps every map
// within d of the system.
class JordanAdversary {
public:
  const JordanModel& model() const { return model_; }
  double d() const { return d_; }
  int window() const { return static_cast<int>(steps_.size()); }

  const Vec& drift(long k) const;     // full-dimension drift vector at step k
  const GluedMap& step(long k) const; // glued map k (reduced mod window)

  PseudomethodS as_pseudomethod() const;

private:
  friend JordanAdversary build_jordan_adversary(const JordanDriftSpec&, double, int);
  JordanModel model_;
  double d_ = 0.0;
  std::vector<GluedMap> steps_;
  std::vector<Vec> drifts_;
};

// Builds and glues the adversary with gluing constant C = 20 L on ball
// radius r_bar.  window = 0 selects the default 20 L + 2.  Throws
// PreconditionError when d violates the drift bound or the gluing geometry.
JordanAdversary build_jordan_adversary(const JordanDriftSpec& spec, double d, int window = 0);

// One verified start q with |q| <= 4 L d.  While every visited point stays
// inside the inner gluing region (|y| < 10 L d), the bottom block of the
// composition must equal Q^k (pr q) + (k d / 2) Q^{k-1} w to 1e-12 and obey
// the lower bound |pr q_k| >= k d/2 - |pr q|.  The trial passes when the
// full norm leaves the 4 L d ball by step 20 L (for l = 1 the bottom block
// is the whole space; for l >= 2 the upper blocks integrate the growing
// bottom and escape even faster, while the bottom-projection norm itself can
// freeze once the trajectory leaves the drift region).
struct JordanTrial {
  int trial = 0;
  Vec q0;
  double pr_q0 = 0.0;             // |pr q0| (bottom 2x2 block)
  long exit_step = -1;            // first k with |q_k| > 4 L d (1 + 1e-12)
  bool exited = false;
  bool pr_crossed = false;        // bottom-block norm itself crossed 4 L d
  long pr_cross_step = -1;
  double max_identity_error = 0.0;  // bottom-block closed form, in-region steps
  double min_lower_slack = 0.0;     // min of |pr q_k| - (k d/2 - |pr q0|)
  bool left_inner_region = false;   // |q_k| >= 10 L d before exiting (defensive)
  long region_exit_step = -1;
  bool pass = false;
};

struct JordanDivergenceReport {
  double d = 0.0;
  double threshold = 0.0;  // 4 L d, with a 1e-12 relative roundoff guard
  double rho_in = 0.0;     // 10 L d
  long horizon = 0;        // 20 L
  std::vector<JordanTrial> trials;
  bool pass = false;

  // Step-level rows: trial, k, |pr q_k|, lower bound k d/2 - |pr q0|,
  // in-region flag.  Structured header echoes the construction parameters.
  std::string csv() const { return csv_body_; }
  std::string summary() const { return summary_; }

  std::string csv_body_;
  std::string summary_;
};

// Runs trial 0 from q = 0, trial 1 from the adversarial start whose bottom
// block anti-aligns with the drift at norm exactly 4 L d, and `trials`
// further seeded starts uniform in the 4 L d ball.
JordanDivergenceReport verify_jordan_divergence(const JordanAdversary& adversary,
                                                std::uint64_t seed, int trials);

}  // namespace ips
