#include "ips/model_space.hpp"

#include <cmath>

namespace ips {

namespace {

// Reduce t to [0, 1).  std::floor keeps exact values (e.g. 0.5) exact.
double wrap01(double t) {
  double r = t - std::floor(t);
  if (r >= 1.0) r = 0.0; // guard against floor rounding (t = -1e-17)
  return r;
}

// Reduce t to [-1/2, 1/2).
double wrap_half(double t) {
  double r = t - std::round(t);
  if (r < -0.5) r = 0.5; // round-to-even edge
  if (r >= 0.5) r = -0.5;
  return r;
}

} // namespace

Vec ModelSpace::wrap(Vec x) const {
  if (is_torus()) {
    for (Index i = 0; i < x.size(); ++i) x[i] = wrap01(x[i]);
  }
  return x;
}

double ModelSpace::distance(const Vec& x, const Vec& y) const {
  if (is_torus()) {
    double s = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
      double d = wrap_half(x[i] - y[i]);
      s += d * d;
    }
    return std::sqrt(s);
  }
  return (x - y).norm();
}

Vec ModelSpace::chart_to(const Vec& x, const Vec& v) const {
  return wrap(x + v);
}

Vec ModelSpace::chart_from(const Vec& x, const Vec& y) const {
  if (is_torus()) {
    Vec v(x.size());
    for (Index i = 0; i < x.size(); ++i) v[i] = wrap_half(y[i] - x[i]);
    return v;
  }
  return y - x;
}

} // namespace ips
