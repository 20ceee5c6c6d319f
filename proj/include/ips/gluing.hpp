#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ips/orbit.hpp"
#include "ips/pseudomethod.hpp"

namespace ips {

// C^1 cubic ramp: 0 for t <= rho_in, 1 for t >= rho_out, and the cubic
// s^2 (3 - 2 s) with s = (t - rho_in) / (rho_out - rho_in) in between.
// Endpoint values are exact by case split; the profile is monotone
// nondecreasing with derivative zero at both ends.
class BumpFunction {
public:
  BumpFunction(double rho_in, double rho_out);

  double operator()(double t) const;

  double rho_in() const { return rho_in_; }
  double rho_out() const { return rho_out_; }
  // sup |beta'| = 1.5 / (rho_out - rho_in), used in continuity budgets.
  double max_slope() const { return 1.5 / (rho_out_ - rho_in_); }

private:
  double rho_in_;
  double rho_out_;
};

enum class GluingMode { Linear, Nonlinear };

// Input to a gluing operation.  local_maps[l] is the replacement map on the
// chart ball B(b, p_l), written in chart coordinates: it takes v in the chart
// at p_l to a vector in the chart at p_{l+1}.  A null entry means "keep the
// system on that ball": the glued map equals f there with no blending and no
// nearness requirement.  Non-null entries must stay close to the linear part
// A_l on the radius-b ball: within d in linear mode, within d/2 in nonlinear
// mode.  Linear mode requires the system itself to be affine on the balls and
// blends over the ring (eps/2, eps); nonlinear mode blends over (C d/2, C d)
// and requires the system remainder phi_l to stay within d/2 on the C d ball.
struct GluingSpec {
  std::shared_ptr<const PeriodicOrbit> orbit;
  std::vector<MapFn> local_maps;
  double b = 0.0;
  double d = 0.0;
  GluingMode mode = GluingMode::Linear;
  double epsilon = 0.0; // linear mode: outer ring radius
  double C = 0.0;       // nonlinear mode: ring scale

  double rho_in() const;
  double rho_out() const;
  double nearness_bound() const; // d (linear) or d/2 (nonlinear)
};

struct NearnessWitness {
  int ball = 0;
  Vec v;           // chart coordinates at p_ball
  double gap = 0.0; // |psi_l(v) - A_l v|
};

struct NearnessResult {
  bool pass = false;
  double bound = 0.0;
  double max_gap = 0.0;
  std::optional<NearnessWitness> witness; // worst violation when pass == false
};

// Samples |psi_l(v) - A_l v| over the radius-b balls that carry a local map
// (exact centers, the designated ring radii, radius b, and uniform interior
// points) and compares the sup against the mode's bound.
NearnessResult check_local_nearness(const GluingSpec& spec, std::uint64_t seed, int count);

// The glued map Psi: on each ball that carries a local map it equals
// exp_{p_{l+1}} o psi_l o exp_{p_l}^{-1} inside radius rho_in, equals f at and
// outside radius rho_out, and blends the two with the bump profile over the
// ring.  Everywhere else (null-map balls included) it equals f bit for bit.
// Evaluation is pure; instances can be shared across threads.
class GluedMap {
public:
  Vec operator()(const Vec& x) const; // map of the model space

  // Chart-level evaluation on ball l (requires a local map there and
  // |v| <= b): returns psi_l(v) inside rho_in, the chart image of f at and
  // outside rho_out, and the blend in between.
  Vec tangent_eval(long ball, const Vec& v) const;

  const PeriodicOrbit& orbit() const { return *spec_.orbit; }
  const GluingSpec& spec() const { return spec_; }
  double rho_in() const { return bump_.rho_in(); }
  double rho_out() const { return bump_.rho_out(); }
  double defect_budget() const { return spec_.d; }
  const BumpFunction& bump() const { return bump_; }

  MapFn as_map_fn() const; // copyable adapter

private:
  friend GluedMap glue_linear(const GluingSpec&, std::uint64_t, int);
  friend GluedMap glue_nonlinear(const GluingSpec&, std::uint64_t, int);
  explicit GluedMap(GluingSpec spec);

  GluingSpec spec_;
  BumpFunction bump_;
};

// Linear-mode gluing.  Validates eps < b/2 and d < eps/2, verifies by
// sampling that the system is affine on every overridden ball and that the
// local maps pass the nearness check, then builds the glued map with ring
// (eps/2, eps).  Throws PreconditionError on any violated requirement.
GluedMap glue_linear(const GluingSpec& spec, std::uint64_t seed = 2026, int samples = 400);

// Nonlinear-mode gluing.  Validates C d < b/2, verifies by sampling that the
// system remainder stays within d/2 on the radius-C d balls (throws
// RemainderBoundError otherwise: d must shrink) and that the local maps pass
// the nearness check with bound d/2, then builds the glued map with ring
// (C d/2, C d).
GluedMap glue_nonlinear(const GluingSpec& spec, std::uint64_t seed = 2026, int samples = 400);

// Largest defect budget d accepted by the corresponding gluing call.  Both
// depend only on the geometry (and, in the nonlinear case, the system through
// its sampled remainder), never on the local maps.
//   linear:    d < eps/2, so the bound is eps/2 (use d strictly below it).
//   nonlinear: 0.9 * min(b / (2 C), 1 / (2 K C^2)) where K is a sampled
//              quadratic bound |phi_l(v)| <= K |v|^2 on the balls, inflated
//              by 10%.  The direct remainder check in glue_nonlinear remains
//              the authority; this bound just sizes d.
double admissible_defect_linear(double b, double epsilon);
double admissible_defect_nonlinear(const PeriodicOrbit& orbit, double b, double C,
                                   std::uint64_t seed = 2026, int samples = 2000);

// Post-glue verification: sampled sup of dist(Psi(x), f(x)) over points
// focused on the balls (including the ring radii), plus exact region-identity
// checks on the spheres of radius rho_in * 0.99 (Psi must reproduce the local
// map's chart path bit for bit) and rho_out * 1.01 (Psi must return f bit for
// bit).
struct GluingReport {
  GluingMode mode = GluingMode::Linear;
  double b = 0.0;
  double d = 0.0;
  double rho_in = 0.0;
  double rho_out = 0.0;
  double defect_sup = 0.0;
  double inner_identity_gap = 0.0;
  double outer_identity_gap = 0.0;
  bool pass = false;

  std::string text() const;
};

GluingReport verify_gluing(const GluedMap& g, std::uint64_t seed, int count);

} // namespace ips
