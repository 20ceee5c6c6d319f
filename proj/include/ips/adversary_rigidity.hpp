#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ips/gluing.hpp"
#include "ips/orbit.hpp"
#include "ips/pseudomethod.hpp"

namespace ips {

// The drift chain pinned to a hyperbolic periodic orbit.  Starting from a
// unit seed e_0 along the dominant expanding direction of the cycle matrix
// B = A_{m-1} ... A_0, the chain propagates
//     lambda_i = |A_i e_i|,   e_{i+1} = A_i e_i / lambda_i,
//     a_0 = tau,              a_{i+1} = a_i lambda_i - 1,
// with tau chosen in closed form so that a_m = 0 exactly:
//     tau = (1 + sum_{j=1}^{m-1} prod_{i=j}^{m-1} lambda_i)
//           / prod_{i=0}^{m-1} lambda_i.
// n >= 1 is minimal with |B^{-n} tau e_0| < 1, and the designed cycle of
// chart offsets w_0 .. w_{M-1} (period M = m (n + 1)) is
//     w_i     = a_i e_i                 (0 <= i <= m-1),
//     w_m     = B^{-n} tau e_0,
//     w_{k+1} = A_{k mod m} w_k         (m <= k <= M-2),
// which closes up: A_{m-1} w_{M-1} = tau e_0 = w_0.  Scaled by a drift size
// d, the points exp_{p_{k mod m}}(d w_k) form a periodic pseudotrajectory of
// the adversary below whose every step sits a distance about d from the
// system, yet which pins any nearby true trajectory exponentially hard.
struct RigiditySequence {
  std::shared_ptr<const PeriodicOrbit> orbit;
  Vec e0;
  std::vector<Vec> e;          // e_0 .. e_m
  std::vector<double> lambda;  // lambda_0 .. lambda_{m-1}, all positive
  double tau = 0.0;
  std::vector<double> a;       // a_0 = tau .. a_m (a_m = 0 up to roundoff)
  int n = 0;                   // minimal n >= 1 with |B^{-n} tau e_0| < 1
  std::vector<Vec> w;          // w_0 .. w_{M-1}

  int m() const { return orbit ? orbit->period() : 0; }
  int period() const { return static_cast<int>(w.size()); }  // M = m (n + 1)
  double max_w_norm() const;
  double expansion() const;  // prod lambda_i = |B e_0| for an eigenseed
};

// Builds the chain.  The default seed is the unit eigenvector of the cycle
// matrix for the largest-modulus eigenvalue, which must be real and expanding
// (modulus > 1); a user-supplied seed must be unit and within angle 1e-8 of
// that direction.  Requires a hyperbolic orbit at its fundamental period.
// Validates a_m = 0 within 1e-10 * max(1, tau), a_j > 0 for j < m, and the
// stamp identity w_{km} = B^{k-1-n} tau e_0.
RigiditySequence build_rigidity_sequence(std::shared_ptr<const PeriodicOrbit> orbit,
                                         std::optional<Vec> e0 = std::nullopt);

// The glued adversary around the chain.  Step k overrides the active ball
// (k mod m) with the chart map psi_k(y) = A_{k mod m} y + delta_k, where
//     delta_k = -d e_{k+1}                     (k <= m-2),
//     delta_k = -d e_m + d B^{-n} tau e_0      (k = m-1),
//     delta_k = 0                              (m <= k <= M-1),
// and keeps the system bit for bit on every other ball.  Since
// |B^{-n} tau e_0| < 1, every delta_k stays within 2d, so each psi_k passes
// the nonlinear gluing nearness check with budget 4d; the glued defect is at
// most 4d.  The ring scale is C = 25 N on ball radius epsilon_2, giving
// blend radii (50 N d, 100 N d), where
//     N = max(1.0001 * max_k |w_k|, 20 L + 1),
//     epsilon_1 = orbit chart radius,
//     epsilon_2 = 0.9 * epsilon_1 / max_k |A_k|.
// The admissible drift sizes are d < d_max with d_max one quarter of the
// nonlinear gluing bound for ring scale 100 N on radius epsilon_2.
class RigidityAdversary {
public:
  const RigiditySequence& sequence() const { return seq_; }
  const PeriodicOrbit& orbit() const { return *seq_.orbit; }
  double d() const { return d_; }
  double d_max() const { return d_max_; }
  double N() const { return big_n_; }
  int L() const { return l_; }
  double epsilon1() const { return eps1_; }
  double epsilon2() const { return eps2_; }
  int k_period() const { return static_cast<int>(steps_.size()); }  // M

  const Vec& drift(long k) const;      // delta_k (zero for the undriven steps)
  const GluedMap& step(long k) const;  // glued map k (reduced mod M)
  Vec designed_offset(long k) const;   // d w_{k mod M}

  PseudomethodS as_pseudomethod() const;

private:
  friend RigidityAdversary build_rigidity_adversary(const RigiditySequence&, int, double);
  RigiditySequence seq_;
  double d_ = 0.0;
  double d_max_ = 0.0;
  double big_n_ = 0.0;
  int l_ = 0;
  double eps1_ = 0.0;
  double eps2_ = 0.0;
  std::vector<GluedMap> steps_;
  std::vector<Vec> drifts_;
};

// d = 0 selects the default d_max / 2.  Throws PreconditionError when d is
// outside (0, d_max) or the gluing geometry rejects the configuration.
RigidityAdversary build_rigidity_adversary(const RigiditySequence& seq, int L, double d = 0.0);

// One escape probe: a start offset from the designed cycle by `offset` along
// a fixed direction, tracked at whole-m stamps until the deviation from the
// designed offsets exceeds 2 N d.  `predicted_stamp` comes from the exact
// geometric growth of the offset direction; the observed stamp must match
// within +-1.
struct RigidityEscape {
  double offset = 0.0;
  double rate = 0.0;           // deviation growth factor per m steps
  long predicted_stamp = 0;
  long observed_stamp = -1;
  bool escaped = false;
  bool skipped = false;        // no real contracting direction to probe
  bool pass = false;
};

struct RigidityReport {
  double d = 0.0;
  double d_max = 0.0;
  double N = 0.0;
  int L = 0;
  int m = 0;
  int n = 0;
  int period = 0;  // M
  double tau = 0.0;
  double expansion = 0.0;
  double max_w = 0.0;
  double epsilon1 = 0.0;
  double epsilon2 = 0.0;
  bool w_within_budget = false;  // 1.0001 * max_w <= 16 L

  double push_error = 0.0;       // designed cycle under the glued maps, 2 periods
  double handoff_error = 0.0;    // the step m-1 identity alone
  double closure_error = 0.0;    // return to d w_0 after one period
  double designed_max_offset = 0.0;  // max_k |d w_k|, must stay <= N d

  double formula_error = 0.0;    // glued composition vs affine normal form
  long formula_checked = 0;      // (sample, step) pairs compared
  double measured_defect = 0.0;  // sampled sup dist(Psi_k, f), must be <= 4 d

  RigidityEscape unstable_plus;
  RigidityEscape unstable_minus;
  RigidityEscape stable_backward;
  double backward_recheck_error = 0.0;  // glued forward replay of the backward
                                        // affine extension

  bool pass = false;

  std::string csv() const { return csv_body_; }
  std::string summary() const { return summary_; }

  std::string csv_body_;
  std::string summary_;
};

// Verifies the adversary end to end:
//   - the designed cycle is reproduced by the glued maps and closes up,
//   - the glued composition from any start in the 16 L d ball follows the
//     affine normal form A_{k-1} ... A_0 (q - d w_0) + d w_k while it stays
//     inside the inner gluing region,
//   - offsets of 1e-8 along the expanding direction leave the 2 N d deviation
//     tube at the predicted stamp (both signs),
//   - an offset along the contracting direction leaves the tube backward at
//     the predicted stamp, and the backward affine extension replays forward
//     through the glued maps back to its start,
//   - the sampled defect stays within the 4 d gluing budget.
// `samples` controls the number of seeded normal-form starts.
RigidityReport verify_rigidity(const RigidityAdversary& adversary, std::uint64_t seed,
                               int samples);

}  // namespace ips
