#include "ips/system.hpp"

#include <cmath>

#include "ips/errors.hpp"

namespace ips {

namespace {

bool is_integer_matrix(const Mat& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != std::round(m(i, j))) return false;
  return true;
}

// Exact integer inverse of an integer matrix with det = +-1 (adjugate).
Mat unimodular_inverse(const Mat& m) {
  double det = std::round(m.determinant());
  if (std::abs(std::abs(det) - 1.0) > 1e-9)
    throw PreconditionError("toral automorphism requires |det M| = 1, got det = " +
                            std::to_string(m.determinant()));
  Mat inv = m.inverse();
  for (Index i = 0; i < inv.rows(); ++i)
    for (Index j = 0; j < inv.cols(); ++j)
      inv(i, j) = std::round(inv(i, j));
  // verify exactness
  if (((inv * m) - Mat::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() > 1e-9)
    throw PreconditionError("integer inverse verification failed");
  return inv;
}

} // namespace

// ---------------------------------------------------------------- toral maps

ToralAutomorphism::ToralAutomorphism(Mat m_int)
    : DiscreteSystem(ModelSpace::flat_torus(m_int.rows())), m_(std::move(m_int)) {
  if (m_.rows() != m_.cols()) throw PreconditionError("matrix must be square");
  if (!is_integer_matrix(m_)) throw PreconditionError("toral automorphism matrix must be integer");
  m_inv_ = unimodular_inverse(m_);
}

Vec ToralAutomorphism::eval(const Vec& x) const { return space().wrap(m_ * x); }

Vec ToralAutomorphism::eval_inverse(const Vec& y) const { return space().wrap(m_inv_ * y); }

std::shared_ptr<const ToralAutomorphism> ToralAutomorphism::cat_map() {
  Mat m(2, 2);
  m << 2, 1, 1, 1;
  return std::make_shared<const ToralAutomorphism>(m);
}

ToralTranslation::ToralTranslation(Vec shift)
    : DiscreteSystem(ModelSpace::flat_torus(shift.size())), shift_(std::move(shift)) {}

PerturbedToralAutomorphism::PerturbedToralAutomorphism(Mat m_int, double amplitude)
    : DiscreteSystem(ModelSpace::flat_torus(m_int.rows())), m_(std::move(m_int)), amp_(amplitude) {
  if (!is_integer_matrix(m_)) throw PreconditionError("base matrix must be integer");
  m_inv_ = unimodular_inverse(m_);
  // Keep the perturbation small enough that M + amp*Dfield stays invertible:
  // |amp| * sup|Dfield| <= 2*pi*|amp| must be well below 1/|M^{-1}|.
  double margin = 2.0 * M_PI * std::abs(amp_) * m_inv_.operatorNorm();
  if (margin >= 0.5)
    throw PreconditionError("perturbation amplitude too large for a diffeomorphism");
}

Vec PerturbedToralAutomorphism::field(const Vec& x) const {
  // Smooth vector field vanishing at the origin so (0, ..., 0) stays fixed.
  Index n = dim();
  Vec f(n);
  for (Index i = 0; i < n; ++i) {
    double t = x[(i + 1) % n];
    f[i] = std::sin(2.0 * M_PI * t) / (2.0 * M_PI);
  }
  return f;
}

Mat PerturbedToralAutomorphism::field_jacobian(const Vec& x) const {
  Index n = dim();
  Mat j = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    double t = x[(i + 1) % n];
    j(i, (i + 1) % n) = std::cos(2.0 * M_PI * t);
  }
  return j;
}

Vec PerturbedToralAutomorphism::eval(const Vec& x) const {
  return space().wrap(m_ * x + amp_ * field(x));
}

Mat PerturbedToralAutomorphism::jacobian(const Vec& x) const {
  return m_ + amp_ * field_jacobian(x);
}

Vec PerturbedToralAutomorphism::eval_inverse(const Vec& y) const {
  // Newton on the torus from the unperturbed inverse.
  Vec z = space().wrap(m_inv_ * y);
  for (int it = 0; it < 60; ++it) {
    Vec r = space().chart_from(eval(z), y); // residual in the chart at f(z)
    if (r.norm() < 1e-14) return z;
    Vec step = jacobian(z).partialPivLu().solve(r);
    z = space().chart_to(z, step);
  }
  throw ConvergenceError("perturbed toral map inversion did not converge");
}

// ------------------------------------------------------------ linear systems

LinearSystem::LinearSystem(Mat a)
    : DiscreteSystem(ModelSpace::euclidean(a.rows())), a_(std::move(a)), lu_(a_) {
  if (a_.rows() != a_.cols()) throw PreconditionError("matrix must be square");
  if (std::abs(a_.determinant()) < 1e-12)
    throw PreconditionError("linear system matrix must be invertible");
}

Vec LinearSystem::eval_inverse(const Vec& y) const { return lu_.solve(y); }

// ------------------------------------------------------- cyclic affine model

CyclicAffineSystem::CyclicAffineSystem(std::vector<Vec> points, std::vector<Mat> derivatives,
                                       double linear_radius, double blend_radius)
    : DiscreteSystem(ModelSpace::euclidean(points.empty() ? 0 : points.front().size())),
      points_(std::move(points)),
      a_(std::move(derivatives)),
      r_lin_(linear_radius),
      r_blend_(blend_radius) {
  if (points_.empty() || a_.size() != points_.size())
    throw PreconditionError("cyclic affine system needs one derivative per point");
  if (!(0.0 < r_lin_ && r_lin_ < r_blend_))
    throw PreconditionError("need 0 < linear_radius < blend_radius");
  for (size_t i = 0; i < points_.size(); ++i)
    for (size_t j = i + 1; j < points_.size(); ++j)
      if ((points_[i] - points_[j]).norm() <= 2.0 * r_blend_)
        throw PreconditionError("cyclic affine blend balls must be pairwise disjoint");
  for (const Mat& a : a_) {
    if (std::abs(a.determinant()) < 1e-12)
      throw PreconditionError("cyclic affine derivatives must be invertible");
    a_lu_.emplace_back(a);
  }
}

int CyclicAffineSystem::ball_index(const Vec& x) const {
  for (int j = 0; j < period(); ++j)
    if ((x - points_[j]).norm() < r_blend_) return j;
  return -1;
}

double CyclicAffineSystem::ramp(double t) const {
  if (t <= r_lin_) return 0.0;
  if (t >= r_blend_) return 1.0;
  double s = (t - r_lin_) / (r_blend_ - r_lin_);
  return s * s * (3.0 - 2.0 * s);
}

double CyclicAffineSystem::ramp_slope(double t) const {
  if (t <= r_lin_ || t >= r_blend_) return 0.0;
  double s = (t - r_lin_) / (r_blend_ - r_lin_);
  return 6.0 * s * (1.0 - s) / (r_blend_ - r_lin_);
}

Vec CyclicAffineSystem::eval(const Vec& x) const {
  int j = ball_index(x);
  if (j < 0) return x;
  const Vec& p = points_[j];
  const Vec& pn = points_[mod(j + 1)];
  Vec u = x - p;
  double rho = u.norm();
  // correction c(x) = (p_{j+1} - p_j) + (A_j - I) u, faded out by the ramp
  Vec c = (pn - p) + a_[j] * u - u;
  double beta = ramp(rho);
  if (beta == 0.0) return pn + a_[j] * u; // exact affine core
  return x + (1.0 - beta) * c;
}

Mat CyclicAffineSystem::jacobian(const Vec& x) const {
  int j = ball_index(x);
  Index n = dim();
  if (j < 0) return Mat::Identity(n, n);
  const Vec& p = points_[j];
  const Vec& pn = points_[mod(j + 1)];
  Vec u = x - p;
  double rho = u.norm();
  if (rho <= r_lin_) return a_[j];
  Vec c = (pn - p) + a_[j] * u - u;
  double beta = ramp(rho);
  double slope = ramp_slope(rho);
  Mat jac = Mat::Identity(n, n) + (1.0 - beta) * (a_[j] - Mat::Identity(n, n));
  if (slope != 0.0 && rho > 0.0) jac -= (slope / rho) * (c * u.transpose());
  return jac;
}

Vec CyclicAffineSystem::eval_inverse(const Vec& y) const {
  // Image-side case analysis: y near p_{j+1} came from the affine core at p_j.
  for (int j = 0; j < period(); ++j) {
    const Vec& pn = points_[mod(j + 1)];
    if ((y - pn).norm() < r_lin_) {
      Vec cand = points_[j] + a_lu_[j].solve(y - pn);
      if ((cand - points_[j]).norm() <= r_lin_ && (eval(cand) - y).norm() < 1e-12) return cand;
    }
  }
  if (ball_index(y) < 0 && (eval(y) - y).norm() < 1e-12) return y; // identity region
  // Ring preimage: polish by Newton from the affine continuation of each ball,
  // then from y itself.
  std::vector<Vec> guesses;
  for (int j = 0; j < period(); ++j)
    guesses.push_back(points_[j] + a_lu_[j].solve(y - points_[mod(j + 1)]));
  guesses.push_back(y);
  for (const Vec& g : guesses) {
    try {
      Vec z = newton_invert([this](const Vec& w) { return eval(w); }, space(), y, g, 1e-13, 60,
                            r_blend_);
      if ((eval(z) - y).norm() < 1e-11) return z;
    } catch (const ConvergenceError&) {
      // try the next guess
    }
  }
  throw ConvergenceError("cyclic affine inverse: no preimage found near the orbit");
}

// ------------------------------------------------------------ newton inverse

Vec newton_invert(const std::function<Vec(const Vec&)>& map, const ModelSpace& space,
                  const Vec& target, const Vec& guess, double tol, int max_iter,
                  double step_cap) {
  Vec z = guess;
  Index n = z.size();
  double h = 1e-7;
  double cap = std::min(step_cap, 0.45 * std::min(space.chart_radius(), 1e6));
  for (int it = 0; it < max_iter; ++it) {
    Vec fz = map(z);
    Vec r = space.chart_from(fz, target);
    if (r.norm() < tol) return z;
    Mat j(n, n);
    for (Index c = 0; c < n; ++c) {
      Vec e = Vec::Zero(n);
      e[c] = h;
      Vec fp = map(space.chart_to(z, e));
      Vec fm = map(space.chart_to(z, -e));
      j.col(c) = space.chart_from(fm, fp) / (2.0 * h);
    }
    Eigen::PartialPivLU<Mat> lu(j);
    if (std::abs(lu.determinant()) < 1e-14)
      throw ConvergenceError("newton inversion: singular local Jacobian");
    Vec step = lu.solve(r);
    if (step.norm() > cap) step *= cap / step.norm();
    z = space.chart_to(z, step);
  }
  throw ConvergenceError("newton inversion did not converge");
}

} // namespace ips
