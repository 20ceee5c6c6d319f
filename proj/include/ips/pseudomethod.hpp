#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ips/orbit.hpp"
#include "ips/system.hpp"

namespace ips {

using MapFn = std::function<Vec(const Vec&)>;

// A stepwise pseudomethod: a k-periodic family {Psi_k} of continuous maps
// meant to satisfy dist(Psi_k(x), f(x)) <= d pointwise.  Pseudotrajectories
// follow x_{k+1} = Psi_k(x_k).
class PseudomethodS {
public:
  PseudomethodS(SystemPtr base, std::vector<MapFn> maps, double claimed_defect);

  // The trivial pseudomethod Psi_k = f (defect 0).
  static PseudomethodS exact(SystemPtr base, int k_period = 1);

  const DiscreteSystem& base() const { return *base_; }
  SystemPtr base_ptr() const { return base_; }
  int k_period() const { return static_cast<int>(maps_.size()); }
  double claimed_defect() const { return claimed_defect_; }

  Vec apply(long k, const Vec& x) const { return maps_[mod(k)](x); }
  const MapFn& map(long k) const { return maps_[mod(k)]; }

private:
  int mod(long k) const {
    long p = static_cast<long>(maps_.size());
    return static_cast<int>(((k % p) + p) % p);
  }
  SystemPtr base_;
  std::vector<MapFn> maps_;
  double claimed_defect_;
};

// A trajectorywise pseudomethod: a family {Psi_k} meant to satisfy
// dist(Psi_{k+1}(x), f(Psi_k(x))) <= d pointwise.  Pseudotrajectories are
// direct images x_k = Psi_k(x_0).  The family is either k-periodic (indices
// wrap, and the wrap pair counts toward the defect) or an open finite family
// (indices clamp to the stored range; only interior consecutive pairs count).
class PseudomethodT {
public:
  PseudomethodT(SystemPtr base, std::vector<MapFn> maps, double claimed_defect,
                bool periodic_in_k = true);

  const DiscreteSystem& base() const { return *base_; }
  SystemPtr base_ptr() const { return base_; }
  int k_period() const { return static_cast<int>(maps_.size()); }
  double claimed_defect() const { return claimed_defect_; }
  bool periodic_in_k() const { return periodic_in_k_; }

  Vec apply(long k, const Vec& x) const { return maps_[index(k)](x); }

private:
  int index(long k) const {
    long p = static_cast<long>(maps_.size());
    if (!periodic_in_k_) return static_cast<int>(std::min(std::max(k, 0L), p - 1));
    return static_cast<int>(((k % p) + p) % p);
  }
  SystemPtr base_;
  std::vector<MapFn> maps_;
  double claimed_defect_;
  bool periodic_in_k_;
};

// Deterministic sample-point stream for defect measurement.  point(i) is a
// pure function of (configuration, seed, i), so sample sets taken with the
// same seed are nested: the first n points of a longer run are exactly the
// points of a shorter run.  Streams mix uniform points near the region of
// interest, points on designated sphere radii around cycle points (to probe
// region boundaries), the exact cycle centers, and global points.
class DefectSampler {
public:
  // Uniform over the whole torus.
  static DefectSampler global(const ModelSpace& space, std::uint64_t seed);

  // Focused on an orbit's chart balls: exact centers, spheres at the given
  // radii, ball interiors, a surrounding shell, and (on the torus) global
  // points.
  static DefectSampler orbit_focused(std::shared_ptr<const PeriodicOrbit> orbit,
                                     std::vector<double> sphere_radii, std::uint64_t seed);

  Vec point(std::size_t i) const;
  const ModelSpace& space() const { return space_; }

private:
  DefectSampler(ModelSpace space, std::uint64_t seed)
      : space_(space), seed_(seed) {}
  ModelSpace space_;
  std::uint64_t seed_;
  std::shared_ptr<const PeriodicOrbit> orbit_;
  std::vector<double> radii_;
};

// sup over k in one k-period and the first `count` sample points of
// dist(Psi_k(x), f(x)).
double measure_defect_s(const PseudomethodS& psm, const DefectSampler& sampler, int count);

// sup over k in one k-period and the first `count` sample points of
// dist(Psi_{k+1}(x), f(Psi_k(x))).
double measure_defect_t(const PseudomethodT& psm, const DefectSampler& sampler, int count);

// A finite window of a pseudotrajectory, indices k_min..k_max inclusive.
class Pseudotrajectory {
public:
  enum class Kind { StepwiseS, TrajectorywiseT };

  Pseudotrajectory(Kind kind, long k_min, std::vector<Vec> points);

  Kind kind() const { return kind_; }
  long k_min() const { return k_min_; }
  long k_max() const { return k_min_ + static_cast<long>(points_.size()) - 1; }
  const Vec& at(long k) const;
  std::size_t size() const { return points_.size(); }

  // Largest gap in the stepwise recursion x_{k+1} = Psi_k(x_k) over the
  // window (zero for trajectories produced by generate_s going forward).
  double max_step_residual(const PseudomethodS& psm) const;

private:
  Kind kind_;
  long k_min_;
  std::vector<Vec> points_;
};

// Builds the stepwise pseudotrajectory through x0 (at index 0) over the
// window [k_min, k_max].  Forward indices satisfy the recursion exactly by
// construction; backward indices are found by Newton inversion of Psi_k near
// f^{-1} of the current point and re-checked against the forward relation
// (ConvergenceError when a map is not invertible near the required point).
Pseudotrajectory generate_s(const PseudomethodS& psm, const Vec& x0, long k_min, long k_max);

// Builds the trajectorywise pseudotrajectory x_k = Psi_k(x0) over [0, k_max].
Pseudotrajectory generate_t(const PseudomethodT& psm, const Vec& x0, long k_max);

// sup over the window of dist(x_k, f^k(p)) together with the index attaining
// it.  f^k(p) is the orbit's cycle point k mod m.
struct ShadowingDistance {
  double sup = 0.0;
  long argmax = 0;
};
ShadowingDistance shadowing_distance(const Pseudotrajectory& traj, const PeriodicOrbit& orbit);

// CSV body for a trajectory: header k,x_1..x_n,dist, one row per index,
// 17 significant digits, LF endings.
std::string trajectory_to_csv(const Pseudotrajectory& traj, const PeriodicOrbit& orbit);

} // namespace ips
