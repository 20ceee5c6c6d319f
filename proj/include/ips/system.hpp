#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ips/model_space.hpp"
#include "ips/types.hpp"

namespace ips {

// A discrete dynamical system: a homeomorphism of a flat model space with an
// evaluable inverse and Jacobian.
class DiscreteSystem {
public:
  virtual ~DiscreteSystem() = default;

  const ModelSpace& space() const { return space_; }
  Index dim() const { return space_.dim(); }

  virtual Vec eval(const Vec& x) const = 0;
  virtual Vec eval_inverse(const Vec& y) const = 0;
  virtual Mat jacobian(const Vec& x) const = 0;
  virtual std::string name() const = 0;

protected:
  explicit DiscreteSystem(ModelSpace space) : space_(space) {}

private:
  ModelSpace space_;
};

using SystemPtr = std::shared_ptr<const DiscreteSystem>;

// x |-> M x (mod 1) on the flat torus, M integer with det = +-1.
class ToralAutomorphism : public DiscreteSystem {
public:
  explicit ToralAutomorphism(Mat m_int);

  Vec eval(const Vec& x) const override;
  Vec eval_inverse(const Vec& y) const override;
  Mat jacobian(const Vec&) const override { return m_; }
  std::string name() const override { return "toral-automorphism"; }

  const Mat& matrix() const { return m_; }
  // Integer inverse matrix (exact because |det M| = 1).
  const Mat& inverse_matrix() const { return m_inv_; }

  // The hyperbolic 2x2 staple: rows (2 1; 1 1).
  static std::shared_ptr<const ToralAutomorphism> cat_map();

private:
  Mat m_, m_inv_;
};

// x |-> x + c (mod 1): a torus translation (Jacobian = identity).
class ToralTranslation : public DiscreteSystem {
public:
  explicit ToralTranslation(Vec shift);

  Vec eval(const Vec& x) const override { return space().wrap(x + shift_); }
  Vec eval_inverse(const Vec& y) const override { return space().wrap(y - shift_); }
  Mat jacobian(const Vec&) const override { return Mat::Identity(dim(), dim()); }
  std::string name() const override { return "toral-translation"; }

private:
  Vec shift_;
};

// x |-> M x + amp * field(x) (mod 1): a smooth perturbation of a toral
// automorphism.  field is a fixed trigonometric vector field with analytic
// Jacobian; for small amp the map stays a diffeomorphism and the inverse is
// computed by Newton iteration.
class PerturbedToralAutomorphism : public DiscreteSystem {
public:
  PerturbedToralAutomorphism(Mat m_int, double amplitude);

  Vec eval(const Vec& x) const override;
  Vec eval_inverse(const Vec& y) const override;
  Mat jacobian(const Vec& x) const override;
  std::string name() const override { return "perturbed-toral-automorphism"; }

  double amplitude() const { return amp_; }

private:
  Vec field(const Vec& x) const;
  Mat field_jacobian(const Vec& x) const;

  Mat m_, m_inv_;
  double amp_;
};

// x |-> A x on Euclidean space (fixed point at the origin).
class LinearSystem : public DiscreteSystem {
public:
  explicit LinearSystem(Mat a);

  Vec eval(const Vec& x) const override { return a_ * x; }
  Vec eval_inverse(const Vec& y) const override;
  Mat jacobian(const Vec&) const override { return a_; }
  std::string name() const override { return "linear"; }

  const Mat& matrix() const { return a_; }

private:
  Mat a_;
  Eigen::PartialPivLU<Mat> lu_;
};

// A Euclidean system carrying a prescribed m-periodic orbit p_0 -> p_1 ->
// ... -> p_{m-1} -> p_0 with prescribed local derivatives: inside the ball
// B(linear_radius, p_j) the map is exactly the affine map
//     x |-> p_{j+1} + A_j (x - p_j),
// outside B(blend_radius, p_j) it is the identity, and in between the two
// pieces are joined with a C^1 cubic ramp.  Only behavior on the inner balls
// matters for the constructions built on top; the global extension keeps the
// map continuous and defined everywhere.  Inversion is guaranteed on the
// affine cores and the identity region; inside the blend ring the extension
// may fold, and eval_inverse either finds a genuine preimage by Newton or
// raises ConvergenceError.
class CyclicAffineSystem : public DiscreteSystem {
public:
  CyclicAffineSystem(std::vector<Vec> points, std::vector<Mat> derivatives,
                     double linear_radius, double blend_radius);

  Vec eval(const Vec& x) const override;
  Vec eval_inverse(const Vec& y) const override;
  Mat jacobian(const Vec& x) const override;
  std::string name() const override { return "cyclic-affine"; }

  int period() const { return static_cast<int>(points_.size()); }
  const Vec& point(int j) const { return points_[mod(j)]; }
  const Mat& derivative(int j) const { return a_[mod(j)]; }
  double linear_radius() const { return r_lin_; }
  double blend_radius() const { return r_blend_; }

private:
  int mod(int j) const {
    int m = period();
    return ((j % m) + m) % m;
  }
  // Index of the ball containing x (distance < r_blend), or -1.
  int ball_index(const Vec& x) const;
  double ramp(double t) const;       // 0 inside r_lin, 1 outside r_blend
  double ramp_slope(double t) const; // d ramp / dt

  std::vector<Vec> points_;
  std::vector<Mat> a_;
  std::vector<Eigen::PartialPivLU<Mat>> a_lu_;
  double r_lin_, r_blend_;
};

// Generic local inversion: solve system-like map(z) = target by damped Newton
// with finite-difference Jacobian, starting from guess.  Throws
// ConvergenceError on failure.
Vec newton_invert(const std::function<Vec(const Vec&)>& map, const ModelSpace& space,
                  const Vec& target, const Vec& guess, double tol = 1e-13,
                  int max_iter = 60, double step_cap = 1e9);

} // namespace ips
