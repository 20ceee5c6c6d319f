#pragma once

#include <limits>

#include "ips/types.hpp"

namespace ips {

enum class SpaceKind { FlatTorus, Euclidean };

// Flat model space: either the flat torus R^n / Z^n with the quotient metric
// (coordinate differences reduced to [-1/2, 1/2]) or Euclidean R^n.  Charts
// are translations: chart_to(x, v) = x + v (reduced mod 1 on the torus) and
// chart_from(x, y) is the wrapped difference y - x.  On the torus the chart
// at x is an isometry on balls of radius < 1/4; Euclidean charts are global.
class ModelSpace {
public:
  static ModelSpace flat_torus(Index dim) { return ModelSpace(SpaceKind::FlatTorus, dim); }
  static ModelSpace euclidean(Index dim) { return ModelSpace(SpaceKind::Euclidean, dim); }

  SpaceKind kind() const { return kind_; }
  Index dim() const { return dim_; }
  bool is_torus() const { return kind_ == SpaceKind::FlatTorus; }

  // Radius below which charts are isometric and balls embed.
  double chart_radius() const {
    return is_torus() ? 0.25 : std::numeric_limits<double>::infinity();
  }

  // Canonical representative of a point (torus: coordinates in [0, 1)).
  Vec wrap(Vec x) const;

  // Quotient metric distance.
  double distance(const Vec& x, const Vec& y) const;

  // exp_x(v): the point reached from x by the tangent offset v.
  Vec chart_to(const Vec& x, const Vec& v) const;

  // exp_x^{-1}(y): the tangent offset from x to y (torus: componentwise
  // wrapped difference in [-1/2, 1/2)).
  Vec chart_from(const Vec& x, const Vec& y) const;

  bool operator==(const ModelSpace& o) const { return kind_ == o.kind_ && dim_ == o.dim_; }

private:
  ModelSpace(SpaceKind kind, Index dim) : kind_(kind), dim_(dim) {}
  SpaceKind kind_;
  Index dim_;
};

} // namespace ips
