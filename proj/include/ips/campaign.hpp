#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ips/pseudomethod.hpp"
#include "ips/shadowing.hpp"

namespace ips {

// A smooth random perturbation of the system: Psi_k(x) = exp_{f(x)}(g_k(x))
// with g_k a truncated trigonometric field
//     g_k(x) = sum_nu  ca_nu cos(2 pi nu . x) + cb_nu sin(2 pi nu . x)
// over the integer frequency vectors nu with |nu|_inf <= max_freq, so the
// field is 1-periodic in every coordinate (well defined on the torus and
// globally bounded on Euclidean space).  Coefficient vectors are drawn from
// the seeded generator, then every g_k is rescaled so that its global
// maximum (located by a dense grid scan plus local refinement on the
// 1-periodic window [0, 1)^dim) equals the defect d.  The shapes depend
// only on (seed, k_period, max_freq) and the amplitude is exactly linear in
// d: halving d halves every value of g_k bit for bit, which is what makes
// the Lipschitz-scaling law testable without slack for shape variation.
PseudomethodS make_random_pseudomethod(SystemPtr system, int k_period, double d,
                                       std::uint64_t seed, int max_freq = 2);

struct ShadowCampaignRow {
  std::uint64_t seed = 0;
  double d = 0.0;
  double sup_distance = 0.0;  // sup_k dist(x_k, p_k), measured from the points
  double ratio = 0.0;         // sup_distance / d (zero when d = 0)
  int iterations = 0;
  bool converged = false;     // solve succeeded and the replayed recursion
                              // residual stayed within 1e-12
};

struct ShadowCampaignReport {
  std::vector<ShadowCampaignRow> rows;  // one per seed, in seed order
  ShadowingParams params;               // (L, d_0) estimated for the orbit
  double max_ratio = 0.0;
  double max_residual = 0.0;            // largest replayed recursion gap
  bool all_converged = false;
  double ratio_bound = 0.0;             // the bound `pass` enforces
  bool pass = false;                    // all converged and max_ratio <= bound

  std::string csv() const { return csv_body_; }
  std::string summary() const { return summary_; }
  std::string csv_body_;
  std::string summary_;
};

// Runs `num_seeds` random d-pseudomethods against a hyperbolic orbit.  Each
// row's pseudomethod uses a seed derived from the master seed and the row
// index; the solve result is re-checked independently of the solver: the
// recursion residual is replayed through the pseudomethod and the
// sup-distance is measured directly from the returned points.  Rows are
// merged in seed order, so reports are deterministic; the solves themselves
// run concurrently.  ratio_bound = 0 selects the estimated constant L.
// Throws NonHyperbolicError for nonhyperbolic orbits.
ShadowCampaignReport run_shadow_campaign(std::shared_ptr<const PeriodicOrbit> orbit,
                                         double d, int num_seeds,
                                         std::uint64_t master_seed,
                                         double ratio_bound = 0.0);

}  // namespace ips
