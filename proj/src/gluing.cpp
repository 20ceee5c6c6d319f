#include "ips/gluing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ips/errors.hpp"
#include "ips/report.hpp"
#include "ips/rng.hpp"

namespace ips {

namespace {

// Deterministic chart probe for ball `ball`, sample index `i`: the listed
// sphere radii in rotation (radius 0 means the exact center), then uniform
// points in the radius-rmax ball.
Vec radial_probe(Index dim, const std::vector<double>& radii, double rmax, int ball, int i,
                 std::uint64_t seed) {
  Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1)) ^
          (0xbf58476d1ce4e5b9ULL * static_cast<std::uint64_t>(ball + 1)));
  int kinds = static_cast<int>(radii.size()) + 1;
  int kind = i % kinds;
  if (kind < static_cast<int>(radii.size())) {
    if (radii[kind] == 0.0) return Vec::Zero(dim);
    return Vec(radii[kind] * rng.unit_vector(dim));
  }
  return rng.in_ball(dim, rmax);
}

void validate_geometry(const GluingSpec& spec) {
  if (!spec.orbit) throw PreconditionError("gluing: spec carries no orbit");
  if (static_cast<int>(spec.local_maps.size()) != spec.orbit->period())
    throw PreconditionError("gluing: need one local-map slot per cycle ball (" +
                            std::to_string(spec.orbit->period()) + "), got " +
                            std::to_string(spec.local_maps.size()));
  if (!(spec.b > 0.0) || spec.b > spec.orbit->chart_radius() * (1 + 1e-12))
    throw PreconditionError("gluing: ball radius b must lie in (0, chart radius = " +
                            format_g17(spec.orbit->chart_radius()) + "], got " +
                            format_g17(spec.b));
  if (!(spec.d > 0.0)) throw PreconditionError("gluing: defect budget d must be positive");
  if (spec.mode == GluingMode::Linear) {
    if (!(spec.epsilon > 0.0) || !(spec.epsilon < spec.b / 2))
      throw PreconditionError("gluing: linear mode needs 0 < eps < b/2, got eps = " +
                              format_g17(spec.epsilon) + ", b = " + format_g17(spec.b));
    if (!(spec.d < spec.epsilon / 2))
      throw PreconditionError("gluing: linear mode needs d < eps/2, got d = " +
                              format_g17(spec.d) + ", eps = " + format_g17(spec.epsilon));
  } else {
    if (!(spec.C > 0.0))
      throw PreconditionError("gluing: nonlinear mode needs C > 0");
    if (!(spec.C * spec.d < spec.b / 2))
      throw PreconditionError("gluing: nonlinear mode needs C d < b/2, got C d = " +
                              format_g17(spec.C * spec.d) + ", b = " + format_g17(spec.b));
  }
}

// System remainder phi_l(v) = F_l(v) - A_l v in the chart at p_l.
Vec system_remainder(const PeriodicOrbit& orbit, int l, const Vec& v) {
  const ModelSpace& space = orbit.space();
  Vec image = orbit.system().eval(space.chart_to(orbit.point(l), v));
  Vec f_chart = space.chart_from(orbit.point(l + 1), image);
  return f_chart - orbit.jacobian(l) * v;
}

} // namespace

BumpFunction::BumpFunction(double rho_in, double rho_out)
    : rho_in_(rho_in), rho_out_(rho_out) {
  if (!(rho_in > 0.0) || !(rho_out > rho_in))
    throw PreconditionError("bump profile needs 0 < rho_in < rho_out, got [" +
                            format_g17(rho_in) + ", " + format_g17(rho_out) + "]");
}

double BumpFunction::operator()(double t) const {
  if (t <= rho_in_) return 0.0;
  if (t >= rho_out_) return 1.0;
  double s = (t - rho_in_) / (rho_out_ - rho_in_);
  return s * s * (3.0 - 2.0 * s);
}

double GluingSpec::rho_in() const {
  return mode == GluingMode::Linear ? epsilon / 2 : C * d / 2;
}

double GluingSpec::rho_out() const {
  return mode == GluingMode::Linear ? epsilon : C * d;
}

double GluingSpec::nearness_bound() const {
  return mode == GluingMode::Linear ? d : d / 2;
}

NearnessResult check_local_nearness(const GluingSpec& spec, std::uint64_t seed, int count) {
  validate_geometry(spec);
  if (count < 1) throw PreconditionError("gluing: nearness check needs at least one sample");
  NearnessResult res;
  res.bound = spec.nearness_bound();
  const std::vector<double> radii{0.0, spec.rho_in(), 0.5 * (spec.rho_in() + spec.rho_out()),
                                  spec.rho_out(), spec.b};
  for (int l = 0; l < spec.orbit->period(); ++l) {
    if (!spec.local_maps[l]) continue;
    const Mat& a = spec.orbit->jacobian(l);
    for (int i = 0; i < count; ++i) {
      Vec v = radial_probe(spec.orbit->dim(), radii, spec.b, l, i, seed);
      double gap = (spec.local_maps[l](v) - a * v).norm();
      if (gap > res.max_gap) {
        res.max_gap = gap;
        res.witness = NearnessWitness{l, v, gap};
      }
    }
  }
  // Absolute slack absorbs arithmetic rounding when a map sits exactly on the
  // bound; genuine violations in this library exceed it by orders of
  // magnitude.
  res.pass = res.max_gap <= res.bound + 1e-12;
  if (res.pass) res.witness.reset();
  return res;
}

GluedMap::GluedMap(GluingSpec spec)
    : spec_(std::move(spec)), bump_(spec_.rho_in(), spec_.rho_out()) {}

Vec GluedMap::operator()(const Vec& x) const {
  const PeriodicOrbit& orb = *spec_.orbit;
  const ModelSpace& space = orb.space();
  const DiscreteSystem& f = orb.system();
  for (int l = 0; l < orb.period(); ++l) {
    if (!spec_.local_maps[l]) continue;
    Vec v = space.chart_from(orb.point(l), x);
    double rho = v.norm();
    if (rho >= bump_.rho_out()) continue;
    double beta = bump_(rho);
    Vec w = spec_.local_maps[l](v);
    if (beta > 0.0) {
      Vec w_f = space.chart_from(orb.point(l + 1), f.eval(x));
      w = (1.0 - beta) * w + beta * w_f;
    }
    return space.chart_to(orb.point(l + 1), w);
  }
  return f.eval(x);
}

Vec GluedMap::tangent_eval(long ball, const Vec& v) const {
  const PeriodicOrbit& orb = *spec_.orbit;
  int l = orb.mod(ball);
  if (!spec_.local_maps[l])
    throw PreconditionError("glued map: ball " + std::to_string(l) + " carries no local map");
  double rho = v.norm();
  if (rho > spec_.b * (1 + 1e-12))
    throw PreconditionError("glued map: |v| = " + format_g17(rho) +
                            " exceeds the ball radius b = " + format_g17(spec_.b));
  const ModelSpace& space = orb.space();
  auto f_chart = [&](const Vec& vv) {
    Vec image = orb.system().eval(space.chart_to(orb.point(l), vv));
    return Vec(space.chart_from(orb.point(l + 1), image));
  };
  if (rho >= bump_.rho_out()) return f_chart(v);
  double beta = bump_(rho);
  Vec w = spec_.local_maps[l](v);
  if (beta <= 0.0) return w;
  return Vec((1.0 - beta) * w + beta * f_chart(v));
}

MapFn GluedMap::as_map_fn() const {
  GluedMap copy = *this;
  return [copy](const Vec& x) { return copy(x); };
}

GluedMap glue_linear(const GluingSpec& spec, std::uint64_t seed, int samples) {
  if (spec.mode != GluingMode::Linear)
    throw PreconditionError("glue_linear: spec is not in linear mode");
  validate_geometry(spec);

  // The system must be affine on every overridden ball: its remainder there
  // is pure arithmetic rounding.
  const std::vector<double> radii{spec.b / 4, spec.b / 2, spec.b};
  double worst = 0.0;
  for (int l = 0; l < spec.orbit->period(); ++l) {
    if (!spec.local_maps[l]) continue;
    for (int i = 0; i < samples; ++i) {
      Vec v = radial_probe(spec.orbit->dim(), radii, spec.b, l, i, seed ^ 0x2545f4914f6cdd1dULL);
      worst = std::max(worst, system_remainder(*spec.orbit, l, v).norm());
    }
  }
  if (worst > 1e-10)
    throw PreconditionError("glue_linear: the system is not affine on the balls "
                            "(sampled remainder " + format_g17(worst) + ")");

  NearnessResult near = check_local_nearness(spec, seed, samples);
  if (!near.pass)
    throw PreconditionError("glue_linear: local map on ball " +
                            std::to_string(near.witness->ball) + " strays " +
                            format_g17(near.witness->gap) + " > " + format_g17(near.bound) +
                            " from the linear part");
  return GluedMap(spec);
}

GluedMap glue_nonlinear(const GluingSpec& spec, std::uint64_t seed, int samples) {
  if (spec.mode != GluingMode::Nonlinear)
    throw PreconditionError("glue_nonlinear: spec is not in nonlinear mode");
  validate_geometry(spec);

  // The system remainder must stay within d/2 on the radius-C d balls.
  double ring = spec.C * spec.d;
  const std::vector<double> radii{ring / 2, 0.75 * ring, ring};
  double worst = 0.0;
  for (int l = 0; l < spec.orbit->period(); ++l) {
    if (!spec.local_maps[l]) continue;
    for (int i = 0; i < samples; ++i) {
      Vec v = radial_probe(spec.orbit->dim(), radii, ring, l, i, seed ^ 0x2545f4914f6cdd1dULL);
      worst = std::max(worst, system_remainder(*spec.orbit, l, v).norm());
    }
  }
  if (worst > spec.d / 2 + 1e-15)
    throw RemainderBoundError("glue_nonlinear: sampled remainder " + format_g17(worst) +
                              " exceeds d/2 = " + format_g17(spec.d / 2) +
                              " on the radius-C d ball; decrease d", worst);

  NearnessResult near = check_local_nearness(spec, seed, samples);
  if (!near.pass)
    throw PreconditionError("glue_nonlinear: local map on ball " +
                            std::to_string(near.witness->ball) + " strays " +
                            format_g17(near.witness->gap) + " > " + format_g17(near.bound) +
                            " from the linear part");
  return GluedMap(spec);
}

double admissible_defect_linear(double b, double epsilon) {
  if (!(b > 0.0) || !(epsilon > 0.0) || !(epsilon < b / 2))
    throw PreconditionError("admissible defect: need 0 < eps < b/2, got eps = " +
                            format_g17(epsilon) + ", b = " + format_g17(b));
  return epsilon / 2;
}

double admissible_defect_nonlinear(const PeriodicOrbit& orbit, double b, double C,
                                   std::uint64_t seed, int samples) {
  if (!(b > 0.0) || b > orbit.chart_radius() * (1 + 1e-12))
    throw PreconditionError("admissible defect: ball radius b must lie in (0, chart radius]");
  if (!(C > 0.0)) throw PreconditionError("admissible defect: C must be positive");

  // Sampled quadratic bound |phi_l(v)| <= K |v|^2 over a dyadic radius sweep;
  // the factor 1.1 covers directions between probes.  The direct remainder
  // check in glue_nonlinear remains the authority.
  double khat = 0.0;
  Rng rng(seed);
  for (int l = 0; l < orbit.period(); ++l) {
    for (int i = 0; i < samples; ++i) {
      double r = b * std::pow(0.5, i % 14);
      Vec v = r * rng.unit_vector(orbit.dim());
      double r2 = v.squaredNorm();
      if (r2 <= 0.0) continue;
      khat = std::max(khat, system_remainder(orbit, l, v).norm() / r2);
    }
  }
  khat *= 1.1;
  double bound_ring = b / (2 * C);
  double bound_rem = khat > 1e-300 ? 1.0 / (2 * khat * C * C)
                                   : std::numeric_limits<double>::infinity();
  return 0.9 * std::min(bound_ring, bound_rem);
}

GluingReport verify_gluing(const GluedMap& g, std::uint64_t seed, int count) {
  const GluingSpec& spec = g.spec();
  const PeriodicOrbit& orb = *spec.orbit;
  const ModelSpace& space = orb.space();
  const DiscreteSystem& f = orb.system();

  GluingReport rep;
  rep.mode = spec.mode;
  rep.b = spec.b;
  rep.d = spec.d;
  rep.rho_in = g.rho_in();
  rep.rho_out = g.rho_out();

  DefectSampler sampler = DefectSampler::orbit_focused(
      spec.orbit,
      {0.99 * g.rho_in(), g.rho_in(), 0.5 * (g.rho_in() + g.rho_out()), g.rho_out(),
       std::min(1.01 * g.rho_out(), spec.b)},
      seed);
  for (int i = 0; i < count; ++i) {
    Vec x = sampler.point(i);
    rep.defect_sup = std::max(rep.defect_sup, space.distance(g(x), f.eval(x)));
  }

  Rng rng(seed ^ 0xa0761d6478bd642fULL);
  int dirs = std::max(8, count / (8 * std::max(1, orb.period())));
  double outer_radius = std::min(1.01 * g.rho_out(), spec.b);
  for (int l = 0; l < orb.period(); ++l) {
    if (!spec.local_maps[l]) continue;
    for (int t = 0; t < dirs; ++t) {
      Vec u = rng.unit_vector(orb.dim());
      Vec x_in = space.chart_to(orb.point(l), Vec(0.99 * g.rho_in() * u));
      Vec v = space.chart_from(orb.point(l), x_in);
      Vec expect = space.chart_to(orb.point(l + 1), spec.local_maps[l](v));
      rep.inner_identity_gap =
          std::max(rep.inner_identity_gap, space.distance(g(x_in), expect));
      Vec x_out = space.chart_to(orb.point(l), Vec(outer_radius * u));
      rep.outer_identity_gap =
          std::max(rep.outer_identity_gap, space.distance(g(x_out), f.eval(x_out)));
    }
  }

  rep.pass = rep.defect_sup <= spec.d + 1e-12 && rep.inner_identity_gap <= 1e-15 &&
             rep.outer_identity_gap <= 1e-15;
  return rep;
}

std::string GluingReport::text() const {
  std::ostringstream out;
  out << "glued-map report\n";
  out << "mode = " << (mode == GluingMode::Linear ? "linear" : "nonlinear") << "\n";
  out << "b = " << format_g17(b) << "\n";
  out << "d = " << format_g17(d) << "\n";
  out << "ring = [" << format_g17(rho_in) << ", " << format_g17(rho_out) << "]\n";
  out << "sampled sup |Psi - f| = " << format_g17(defect_sup) << "\n";
  out << "inner region identity gap = " << format_g17(inner_identity_gap) << "\n";
  out << "outer region identity gap = " << format_g17(outer_identity_gap) << "\n";
  out << "verdict = " << (pass ? "pass" : "fail") << "\n";
  return out.str();
}

} // namespace ips
