#include "ips/pseudomethod.hpp"

#include <cmath>
#include <sstream>

#include "ips/errors.hpp"
#include "ips/report.hpp"
#include "ips/rng.hpp"

namespace ips {

PseudomethodS::PseudomethodS(SystemPtr base, std::vector<MapFn> maps, double claimed_defect)
    : base_(std::move(base)), maps_(std::move(maps)), claimed_defect_(claimed_defect) {
  if (!base_) throw PreconditionError("pseudomethod requires a base system");
  if (maps_.empty()) throw PreconditionError("pseudomethod requires at least one map");
  if (claimed_defect_ < 0.0) throw PreconditionError("defect bound must be nonnegative");
}

PseudomethodS PseudomethodS::exact(SystemPtr base, int k_period) {
  if (k_period <= 0) throw PreconditionError("k-period must be positive");
  std::vector<MapFn> maps;
  const DiscreteSystem* sys = base.get();
  for (int k = 0; k < k_period; ++k)
    maps.emplace_back([sys](const Vec& x) { return sys->eval(x); });
  return PseudomethodS(std::move(base), std::move(maps), 0.0);
}

PseudomethodT::PseudomethodT(SystemPtr base, std::vector<MapFn> maps, double claimed_defect,
                             bool periodic_in_k)
    : base_(std::move(base)),
      maps_(std::move(maps)),
      claimed_defect_(claimed_defect),
      periodic_in_k_(periodic_in_k) {
  if (!base_) throw PreconditionError("pseudomethod requires a base system");
  if (maps_.empty()) throw PreconditionError("pseudomethod requires at least one map");
  if (claimed_defect_ < 0.0) throw PreconditionError("defect bound must be nonnegative");
}

// ------------------------------------------------------------------- sampler

DefectSampler DefectSampler::global(const ModelSpace& space, std::uint64_t seed) {
  if (!space.is_torus())
    throw PreconditionError("global sampling needs a compact space; use orbit_focused");
  return DefectSampler(space, seed);
}

DefectSampler DefectSampler::orbit_focused(std::shared_ptr<const PeriodicOrbit> orbit,
                                           std::vector<double> sphere_radii,
                                           std::uint64_t seed) {
  if (!orbit) throw PreconditionError("orbit_focused sampler requires an orbit");
  DefectSampler s(orbit->space(), seed);
  s.orbit_ = std::move(orbit);
  s.radii_ = std::move(sphere_radii);
  return s;
}

Vec DefectSampler::point(std::size_t i) const {
  // Random access: each index gets its own deterministic substream.
  Rng rng(seed_ ^ (0x9e3779b97f4a7c15ull * (i + 1)));
  Index n = space_.dim();
  if (!orbit_) {
    Vec x(n);
    for (Index c = 0; c < n; ++c) x[c] = rng.uniform01();
    return x;
  }
  int m = orbit_->fundamental_period();
  int j = static_cast<int>(i % m);
  std::size_t kinds = radii_.size() + (space_.is_torus() ? 3 : 2);
  std::size_t kind = (i / m) % kinds;
  double b = orbit_->chart_radius();
  if (kind < radii_.size()) {
    // exactly on a designated sphere (region boundaries)
    return space_.chart_to(orbit_->point(j), radii_[kind] * rng.unit_vector(n));
  }
  kind -= radii_.size();
  if (kind == 0) return orbit_->point(j);                                // exact center
  if (kind == 1) return space_.chart_to(orbit_->point(j), rng.in_ball(n, 1.5 * b));
  Vec x(n); // global torus point
  for (Index c = 0; c < n; ++c) x[c] = rng.uniform01();
  return x;
}

double measure_defect_s(const PseudomethodS& psm, const DefectSampler& sampler, int count) {
  if (count <= 0) throw PreconditionError("sample count must be positive");
  const DiscreteSystem& f = psm.base();
  double sup = 0.0;
  for (int k = 0; k < psm.k_period(); ++k)
    for (int i = 0; i < count; ++i) {
      Vec x = sampler.point(static_cast<std::size_t>(i));
      sup = std::max(sup, f.space().distance(psm.apply(k, x), f.eval(x)));
    }
  return sup;
}

double measure_defect_t(const PseudomethodT& psm, const DefectSampler& sampler, int count) {
  if (count <= 0) throw PreconditionError("sample count must be positive");
  const DiscreteSystem& f = psm.base();
  double sup = 0.0;
  int pairs = psm.periodic_in_k() ? psm.k_period() : psm.k_period() - 1;
  for (int k = 0; k < pairs; ++k)
    for (int i = 0; i < count; ++i) {
      Vec x = sampler.point(static_cast<std::size_t>(i));
      sup = std::max(sup, f.space().distance(psm.apply(k + 1, x), f.eval(psm.apply(k, x))));
    }
  return sup;
}

// -------------------------------------------------------------- trajectories

Pseudotrajectory::Pseudotrajectory(Kind kind, long k_min, std::vector<Vec> points)
    : kind_(kind), k_min_(k_min), points_(std::move(points)) {
  if (points_.empty()) throw PreconditionError("trajectory window must be nonempty");
}

const Vec& Pseudotrajectory::at(long k) const {
  if (k < k_min() || k > k_max()) throw PreconditionError("index outside trajectory window");
  return points_[static_cast<std::size_t>(k - k_min_)];
}

double Pseudotrajectory::max_step_residual(const PseudomethodS& psm) const {
  double worst = 0.0;
  const ModelSpace& sp = psm.base().space();
  for (long k = k_min(); k < k_max(); ++k)
    worst = std::max(worst, sp.distance(psm.apply(k, at(k)), at(k + 1)));
  return worst;
}

Pseudotrajectory generate_s(const PseudomethodS& psm, const Vec& x0, long k_min, long k_max) {
  if (!(k_min <= 0 && 0 <= k_max && k_min < k_max))
    throw PreconditionError("window must contain 0 and be nondegenerate");
  const DiscreteSystem& f = psm.base();
  const ModelSpace& sp = f.space();
  std::vector<Vec> pts(static_cast<std::size_t>(k_max - k_min + 1));
  auto slot = [&](long k) -> Vec& { return pts[static_cast<std::size_t>(k - k_min)]; };
  slot(0) = sp.wrap(x0);
  for (long k = 0; k < k_max; ++k) slot(k + 1) = psm.apply(k, slot(k));
  for (long k = -1; k >= k_min; --k) {
    const Vec& target = slot(k + 1);
    Vec guess = f.eval_inverse(target);
    Vec z = newton_invert([&](const Vec& w) { return psm.apply(k, w); }, sp, target, guess);
    if (sp.distance(psm.apply(k, z), target) > 1e-10)
      throw ConvergenceError("backward generation: forward re-check failed at index " +
                             std::to_string(k));
    slot(k) = z;
  }
  return Pseudotrajectory(Pseudotrajectory::Kind::StepwiseS, k_min, std::move(pts));
}

Pseudotrajectory generate_t(const PseudomethodT& psm, const Vec& x0, long k_max) {
  if (k_max < 0) throw PreconditionError("window must be nonnegative");
  std::vector<Vec> pts;
  Vec x = psm.base().space().wrap(x0);
  for (long k = 0; k <= k_max; ++k) pts.push_back(psm.apply(k, x));
  return Pseudotrajectory(Pseudotrajectory::Kind::TrajectorywiseT, 0, std::move(pts));
}

ShadowingDistance shadowing_distance(const Pseudotrajectory& traj, const PeriodicOrbit& orbit) {
  ShadowingDistance out;
  out.argmax = traj.k_min();
  for (long k = traj.k_min(); k <= traj.k_max(); ++k) {
    double d = orbit.space().distance(traj.at(k), orbit.point(k));
    if (d > out.sup) {
      out.sup = d;
      out.argmax = k;
    }
  }
  return out;
}

std::string trajectory_to_csv(const Pseudotrajectory& traj, const PeriodicOrbit& orbit) {
  std::ostringstream os;
  Index n = orbit.dim();
  os << "k";
  for (Index i = 0; i < n; ++i) os << ",x_" << (i + 1);
  os << ",dist\n";
  for (long k = traj.k_min(); k <= traj.k_max(); ++k) {
    os << k;
    const Vec& x = traj.at(k);
    for (Index i = 0; i < n; ++i) os << "," << format_g17(x[i]);
    os << "," << format_g17(orbit.space().distance(x, orbit.point(k))) << "\n";
  }
  return os.str();
}

} // namespace ips
