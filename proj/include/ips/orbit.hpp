#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ips/system.hpp"

namespace ips {

// Forward/backward iteration of a system: k >= 0 applies eval k times,
// k < 0 applies eval_inverse |k| times.
Vec iterate(const DiscreteSystem& system, const Vec& x, long k);

// A periodic orbit of a system: cycle points p_0..p_{m-1} with p_{k+1} =
// f(p_k) and p_m = p_0, per-point Jacobians A_k = Df(p_k), the fundamental
// (minimal) period m0 and a chart radius b whose balls B(b, p_j) around the
// distinct cycle points are pairwise disjoint and lie in valid charts.
class PeriodicOrbit {
public:
  // Builds the orbit by iterating the system from the base point.  Unless an
  // explicit chart radius is given it defaults to min(1/8, half the minimal
  // pairwise cycle distance) on the torus and to half the minimal pairwise
  // cycle distance (capped at 1.0 for a fixed point) on Euclidean space.
  static PeriodicOrbit from_base_point(SystemPtr system, const Vec& base, int period,
                                       std::optional<double> chart_radius = std::nullopt);

  const DiscreteSystem& system() const { return *system_; }
  SystemPtr system_ptr() const { return system_; }
  const ModelSpace& space() const { return system_->space(); }
  Index dim() const { return system_->dim(); }

  int period() const { return period_; }                         // m
  int fundamental_period() const { return fundamental_period_; } // m0
  double chart_radius() const { return chart_radius_; }

  // Cycle point / Jacobian at index k (any integer, reduced mod m).
  const Vec& point(long k) const { return points_[mod(k)]; }
  const Mat& jacobian(long k) const { return jacobians_[mod(k)]; }

  // Product A_{m-1} ... A_0 = D f^m (p_0).
  Mat cycle_matrix() const;

  // D f^j (p_k) for any integer j (negative j uses inverse Jacobians).
  Mat jacobian_power(long k, long j) const;

  int mod(long k) const {
    long m = period_;
    return static_cast<int>(((k % m) + m) % m);
  }

private:
  PeriodicOrbit() = default;
  SystemPtr system_;
  std::vector<Vec> points_;
  std::vector<Mat> jacobians_;
  int period_ = 0;
  int fundamental_period_ = 0;
  double chart_radius_ = 0.0;
};

// All periodic orbits of a linear toral automorphism through rational grid
// points with coordinates in {0, 1/q, ..., (q-1)/q}, enumerated exactly in
// integer arithmetic.  Each orbit is reported once, with period = fundamental
// period, ordered by (period, lexicographic smallest point).
std::vector<PeriodicOrbit> find_rational_periodic_orbit(
    std::shared_ptr<const ToralAutomorphism> system, int denominator);

// The local conjugate F_k = exp_{p_{k+1}}^{-1} o f o exp_{p_k} of the system
// at cycle index k: a map between chart balls with F_k(0) = 0 and
// DF_k(0) = A_k.
class LocalConjugate {
public:
  LocalConjugate(std::shared_ptr<const PeriodicOrbit> orbit, long k);

  Vec eval(const Vec& v) const;
  const Mat& linear_part() const;
  // phi_k(v) = F_k(v) - A_k v.
  Vec remainder(const Vec& v) const;

  const PeriodicOrbit& orbit() const { return *orbit_; }
  int index() const { return k_; }

private:
  std::shared_ptr<const PeriodicOrbit> orbit_;
  int k_;
};

// --------------------------------------------------------- orbit text records

// Pure-data snapshot of an orbit for export/import (17 significant digits,
// LF line endings; doubles round-trip exactly).
struct OrbitRecord {
  SpaceKind space_kind = SpaceKind::FlatTorus;
  Index dim = 0;
  int period = 0;
  int fundamental_period = 0;
  double chart_radius = 0.0;
  std::vector<Vec> points;
  std::vector<Mat> jacobians;
};

OrbitRecord orbit_to_record(const PeriodicOrbit& orbit);
std::string orbit_record_to_text(const OrbitRecord& record);
OrbitRecord orbit_record_from_text(const std::string& text);

// Re-attach an imported record to a system, re-validating the orbit.
PeriodicOrbit orbit_from_record(SystemPtr system, const OrbitRecord& record);

} // namespace ips
