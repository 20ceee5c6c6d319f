#include "ips/orbit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "ips/errors.hpp"

namespace ips {

Vec iterate(const DiscreteSystem& system, const Vec& x, long k) {
  Vec z = x;
  if (k >= 0)
    for (long i = 0; i < k; ++i) z = system.eval(z);
  else
    for (long i = 0; i < -k; ++i) z = system.eval_inverse(z);
  return z;
}

PeriodicOrbit PeriodicOrbit::from_base_point(SystemPtr system, const Vec& base, int period,
                                             std::optional<double> chart_radius) {
  if (!system) throw PreconditionError("orbit requires a system");
  if (period <= 0) throw PreconditionError("orbit period must be positive");
  const ModelSpace& sp = system->space();

  PeriodicOrbit o;
  o.system_ = system;
  o.period_ = period;
  Vec z = sp.wrap(base);
  for (int k = 0; k < period; ++k) {
    o.points_.push_back(z);
    o.jacobians_.push_back(system->jacobian(z));
    z = system->eval(z);
  }
  double closure = sp.distance(z, o.points_.front());
  if (closure > 1e-12)
    throw PreconditionError("point does not return after the given period (closure error " +
                            std::to_string(closure) + ")");

  // fundamental period = least divisor d of m with f^d(p) = p
  o.fundamental_period_ = period;
  for (int d = 1; d < period; ++d) {
    if (period % d != 0) continue;
    if (sp.distance(o.points_[d % period], o.points_[0]) <= 1e-12) {
      o.fundamental_period_ = d;
      break;
    }
  }

  double min_pair = std::numeric_limits<double>::infinity();
  for (int i = 0; i < o.fundamental_period_; ++i)
    for (int j = i + 1; j < o.fundamental_period_; ++j)
      min_pair = std::min(min_pair, sp.distance(o.points_[i], o.points_[j]));

  if (chart_radius) {
    o.chart_radius_ = *chart_radius;
  } else if (sp.is_torus()) {
    o.chart_radius_ = std::min(0.125, 0.5 * min_pair);
  } else {
    o.chart_radius_ = std::isfinite(min_pair) ? 0.5 * min_pair : 1.0;
  }
  if (!(o.chart_radius_ > 0.0) || o.chart_radius_ > sp.chart_radius())
    throw PreconditionError("orbit chart radius must be positive and within chart validity");
  if (0.5 * min_pair < o.chart_radius_)
    throw PreconditionError("orbit chart balls must be pairwise disjoint");
  return o;
}

Mat PeriodicOrbit::cycle_matrix() const {
  Mat b = Mat::Identity(dim(), dim());
  for (int k = 0; k < period_; ++k) b = jacobians_[k] * b;
  return b;
}

Mat PeriodicOrbit::jacobian_power(long k, long j) const {
  Mat b = Mat::Identity(dim(), dim());
  if (j >= 0) {
    for (long i = 0; i < j; ++i) b = jacobian(k + i) * b;
  } else {
    for (long i = 1; i <= -j; ++i) b = jacobian(k - i).partialPivLu().solve(b).eval();
  }
  return b;
}

// ------------------------------------------------- rational orbit enumeration

std::vector<PeriodicOrbit> find_rational_periodic_orbit(
    std::shared_ptr<const ToralAutomorphism> system, int denominator) {
  if (!system) throw PreconditionError("orbit enumeration requires a toral automorphism");
  if (denominator <= 0) throw PreconditionError("denominator must be positive");
  const int q = denominator;
  const Index n = system->dim();
  const Mat& m = system->matrix();

  // integer grid point -> linear index
  long total = 1;
  for (Index i = 0; i < n; ++i) {
    total *= q;
    if (total > 50'000'000L) throw PreconditionError("grid too large to enumerate");
  }
  auto decode = [&](long idx) {
    std::vector<long> c(n);
    for (Index i = 0; i < n; ++i) {
      c[i] = idx % q;
      idx /= q;
    }
    return c;
  };
  auto encode = [&](const std::vector<long>& c) {
    long idx = 0;
    for (Index i = n - 1; i >= 0; --i) idx = idx * q + c[i];
    return idx;
  };
  auto step = [&](const std::vector<long>& c) {
    std::vector<long> r(n, 0);
    for (Index i = 0; i < n; ++i) {
      long s = 0;
      for (Index j = 0; j < n; ++j) s += static_cast<long>(std::llround(m(i, j))) * c[j];
      r[i] = ((s % q) + q) % q;
    }
    return r;
  };

  std::vector<char> seen(total, 0);
  std::vector<PeriodicOrbit> orbits;
  for (long idx = 0; idx < total; ++idx) {
    if (seen[idx]) continue;
    // walk the cycle through idx; mark every visited grid point
    std::vector<long> cycle;
    long cur = idx;
    while (!seen[cur]) {
      seen[cur] = 1;
      cycle.push_back(cur);
      cur = encode(step(decode(cur)));
    }
    if (cur != idx) continue; // tail into an earlier cycle cannot happen for a bijection
    int period = static_cast<int>(cycle.size());
    // base point: lexicographically smallest coordinate vector on the cycle
    std::vector<long> base_c = decode(cycle.front());
    for (long member : cycle) {
      std::vector<long> c = decode(member);
      if (c < base_c) base_c = c;
    }
    Vec base(n);
    for (Index i = 0; i < n; ++i) base[i] = static_cast<double>(base_c[i]) / q;
    orbits.push_back(PeriodicOrbit::from_base_point(system, base, period));
  }
  std::sort(orbits.begin(), orbits.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
    if (a.period() != b.period()) return a.period() < b.period();
    const Vec &pa = a.point(0), &pb = b.point(0);
    for (Index i = 0; i < pa.size(); ++i)
      if (pa[i] != pb[i]) return pa[i] < pb[i];
    return false;
  });
  return orbits;
}

// ------------------------------------------------------------ local conjugate

LocalConjugate::LocalConjugate(std::shared_ptr<const PeriodicOrbit> orbit, long k)
    : orbit_(std::move(orbit)) {
  if (!orbit_) throw PreconditionError("local conjugate requires an orbit");
  k_ = orbit_->mod(k);
}

Vec LocalConjugate::eval(const Vec& v) const {
  if (v.norm() > orbit_->chart_radius() * (1.0 + 1e-12))
    throw PreconditionError("local conjugate evaluated outside its chart ball");
  const ModelSpace& sp = orbit_->space();
  Vec x = sp.chart_to(orbit_->point(k_), v);
  return sp.chart_from(orbit_->point(k_ + 1), orbit_->system().eval(x));
}

const Mat& LocalConjugate::linear_part() const { return orbit_->jacobian(k_); }

Vec LocalConjugate::remainder(const Vec& v) const { return eval(v) - linear_part() * v; }

// --------------------------------------------------------- orbit text records

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

} // namespace

OrbitRecord orbit_to_record(const PeriodicOrbit& orbit) {
  OrbitRecord r;
  r.space_kind = orbit.space().kind();
  r.dim = orbit.dim();
  r.period = orbit.period();
  r.fundamental_period = orbit.fundamental_period();
  r.chart_radius = orbit.chart_radius();
  for (int k = 0; k < orbit.period(); ++k) {
    r.points.push_back(orbit.point(k));
    r.jacobians.push_back(orbit.jacobian(k));
  }
  return r;
}

std::string orbit_record_to_text(const OrbitRecord& r) {
  std::ostringstream os;
  os << "orbit\n";
  os << "space " << (r.space_kind == SpaceKind::FlatTorus ? "flat-torus" : "euclidean") << "\n";
  os << "dim " << r.dim << "\n";
  os << "period " << r.period << "\n";
  os << "fundamental-period " << r.fundamental_period << "\n";
  os << "chart-radius " << g17(r.chart_radius) << "\n";
  for (int k = 0; k < r.period; ++k) {
    os << "point " << k;
    for (Index i = 0; i < r.dim; ++i) os << " " << g17(r.points[k][i]);
    os << "\n";
    os << "jacobian " << k;
    for (Index i = 0; i < r.dim; ++i)
      for (Index j = 0; j < r.dim; ++j) os << " " << g17(r.jacobians[k](i, j));
    os << "\n";
  }
  os << "end\n";
  return os.str();
}

OrbitRecord orbit_record_from_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  OrbitRecord r;
  bool saw_header = false, saw_end = false;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError("orbit record line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (!saw_header) {
      if (tag != "orbit") fail("expected 'orbit' header");
      saw_header = true;
      continue;
    }
    if (tag == "space") {
      std::string kind;
      ls >> kind;
      if (kind == "flat-torus")
        r.space_kind = SpaceKind::FlatTorus;
      else if (kind == "euclidean")
        r.space_kind = SpaceKind::Euclidean;
      else
        fail("unknown space kind '" + kind + "'");
    } else if (tag == "dim") {
      ls >> r.dim;
    } else if (tag == "period") {
      ls >> r.period;
    } else if (tag == "fundamental-period") {
      ls >> r.fundamental_period;
    } else if (tag == "chart-radius") {
      ls >> r.chart_radius;
    } else if (tag == "point") {
      int k;
      ls >> k;
      if (k != static_cast<int>(r.points.size())) fail("point records out of order");
      Vec p(r.dim);
      for (Index i = 0; i < r.dim; ++i)
        if (!(ls >> p[i])) fail("short point record");
      r.points.push_back(p);
    } else if (tag == "jacobian") {
      int k;
      ls >> k;
      if (k != static_cast<int>(r.jacobians.size())) fail("jacobian records out of order");
      Mat a(r.dim, r.dim);
      for (Index i = 0; i < r.dim; ++i)
        for (Index j = 0; j < r.dim; ++j)
          if (!(ls >> a(i, j))) fail("short jacobian record");
      r.jacobians.push_back(a);
    } else if (tag == "end") {
      saw_end = true;
      break;
    } else {
      fail("unknown tag '" + tag + "'");
    }
  }
  if (!saw_header || !saw_end) throw ConfigError("orbit record missing header or end marker");
  if (static_cast<int>(r.points.size()) != r.period ||
      static_cast<int>(r.jacobians.size()) != r.period)
    throw ConfigError("orbit record has wrong number of point/jacobian rows");
  return r;
}

PeriodicOrbit orbit_from_record(SystemPtr system, const OrbitRecord& record) {
  if (!system) throw PreconditionError("orbit import requires a system");
  if (system->space().kind() != record.space_kind || system->dim() != record.dim)
    throw PreconditionError("orbit record does not match the system's model space");
  PeriodicOrbit o =
      PeriodicOrbit::from_base_point(system, record.points.at(0), record.period,
                                     record.chart_radius);
  for (int k = 0; k < o.period(); ++k) {
    if (o.space().distance(o.point(k), record.points[k]) > 1e-12)
      throw PreconditionError("orbit record points disagree with the system");
    if ((o.jacobian(k) - record.jacobians[k]).cwiseAbs().maxCoeff() > 1e-9)
      throw PreconditionError("orbit record Jacobians disagree with the system");
  }
  return o;
}

} // namespace ips
