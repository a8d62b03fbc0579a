#pragma once

#include "elastoray/errors.hpp"
#include "elastoray/linalg.hpp"
#include "elastoray/medium.hpp"

namespace elastoray {

// Positions this far outside phi = 0 are still accepted as "closed domain".
inline constexpr double kDomainTolerance = 1e-9;
inline constexpr double kBoundaryTolerance = 1e-10;

// The symmetric matrix M with g^{-1}(x, xi) = xi . M xi, i.e.
// M_S = (mu Id + R) / rho and M_P = ((lambda + 2 mu) Id + R) / rho,
// together with its spatial derivatives.
struct ModeMatrix {
  Mat3 value = Mat3::Zero();
  std::array<Mat3, 3> gradient{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
};

inline ModeMatrix mode_matrix(const CoefficientSample& c, Mode mode) {
  const double stiff = mode == Mode::S ? c.mu.value : c.lambda.value + 2.0 * c.mu.value;
  const Vec3 stiff_grad =
      mode == Mode::S ? c.mu.gradient : Vec3(c.lambda.gradient + 2.0 * c.mu.gradient);
  const double rho = c.rho.value;
  const Mat3 numer = stiff * Mat3::Identity() + c.stress.value;
  ModeMatrix out;
  out.value = numer / rho;
  for (int k = 0; k < 3; ++k) {
    const Mat3 dnumer = stiff_grad(k) * Mat3::Identity() + c.stress.gradient[k];
    out.gradient[k] = dnumer / rho - numer * c.rho.gradient(k) / (rho * rho);
  }
  return out;
}

inline ModeMatrix mode_matrix(const Medium& m, Mode mode, const Vec3& x) {
  return mode_matrix(m.sample(x), mode);
}

inline void require_in_domain(const Medium& m, const Vec3& x) {
  if (m.domain.phi(x) > kDomainTolerance)
    throw Error(ErrorCode::OutOfDomain, "position lies outside the closed domain");
}

inline void require_on_boundary(const Medium& m, const Vec3& x) {
  if (!m.domain.on_boundary(x, kBoundaryTolerance))
    throw Error(ErrorCode::NotOnBoundary, "position is not on the boundary");
}

struct MetricSample {
  double value = 0.0;
  Vec3 grad_x = Vec3::Zero();
  Vec3 grad_xi = Vec3::Zero();
};

// Dual metric g^{-1}_mode(x, xi) and its gradients, without the domain check.
inline MetricSample metric_inv_unchecked(const ModeMatrix& mm, const Vec3& xi) {
  MetricSample s;
  const Vec3 mxi = mm.value * xi;
  s.value = xi.dot(mxi);
  s.grad_xi = 2.0 * mxi;
  for (int k = 0; k < 3; ++k) s.grad_x(k) = xi.dot(mm.gradient[k] * xi);
  return s;
}

inline MetricSample metric_inv(const Medium& m, Mode mode, const Vec3& x, const Vec3& xi) {
  require_in_domain(m, x);
  return metric_inv_unchecked(mode_matrix(m, mode, x), xi);
}

// Principal symbol p = q_S (Id - pi) + q_P pi of the elastodynamic operator and
// the factor ptilde = q_P (Id - pi) + q_S pi with ptilde p = q_S q_P Id.
template <class Scalar>
struct PrincipalSymbol {
  using Matrix = Eigen::Matrix<Scalar, 3, 3>;
  Matrix p;
  Matrix ptilde;
  Scalar qS;
  Scalar qP;
};

template <class Scalar>
PrincipalSymbol<Scalar> principal_symbol(const CoefficientSample& c, double tau,
                                         const Eigen::Matrix<Scalar, 3, 1>& xi) {
  using Matrix = Eigen::Matrix<Scalar, 3, 3>;
  const Scalar sq = adot(xi, xi);
  if (std::abs(sq) == 0.0)
    throw Error(ErrorCode::DegenerateDirection, "principal symbol needs xi . xi != 0");
  const Eigen::Matrix<Scalar, 3, 1> rxi = c.stress.value.template cast<Scalar>() * xi;
  const Scalar rform = adot(xi, rxi);
  const double rho = c.rho.value;
  const Scalar qS = rho * tau * tau - c.mu.value * sq - rform;
  const Scalar qP = rho * tau * tau - (c.lambda.value + 2.0 * c.mu.value) * sq - rform;
  const Matrix pi = direction_projector(xi);
  const Matrix id = Matrix::Identity();
  return {qS * (id - pi) + qP * pi, qP * (id - pi) + qS * pi, qS, qP};
}

template <class Scalar>
PrincipalSymbol<Scalar> principal_symbol(const Medium& m, const Vec3& x, double tau,
                                         const Eigen::Matrix<Scalar, 3, 1>& xi) {
  require_in_domain(m, x);
  return principal_symbol(m.sample(x), tau, xi);
}

// Displacement-to-traction symbol
//   s(x, xi) = lambda (nu (x) xi) + mu (xi (x) nu) + mu (xi . nu) Id + (R xi . nu) Id,
// with (u (x) v) a = u (v . a); complex xi uses the analytic dot product.
template <class Scalar>
Eigen::Matrix<Scalar, 3, 3> traction_symbol(const CoefficientSample& c, const Vec3& nu,
                                            const Eigen::Matrix<Scalar, 3, 1>& xi) {
  using Matrix = Eigen::Matrix<Scalar, 3, 3>;
  const Eigen::Matrix<Scalar, 3, 1> n = nu.cast<Scalar>();
  const Scalar xin = adot(xi, n);
  const Scalar rxin = adot(Eigen::Matrix<Scalar, 3, 1>(c.stress.value.template cast<Scalar>() * xi), n);
  return c.lambda.value * (n * xi.transpose()) + c.mu.value * (xi * n.transpose()) +
         (c.mu.value * xin + rxin) * Matrix::Identity();
}

template <class Scalar>
Eigen::Matrix<Scalar, 3, 3> traction_symbol(const Medium& m, const Vec3& x,
                                            const Eigen::Matrix<Scalar, 3, 1>& xi) {
  require_on_boundary(m, x);
  return traction_symbol(m.sample(x), m.domain.normal(x), xi);
}

// d s / d xi_n along the normal: (lambda + mu) nu (x) nu + (mu + R nu . nu) Id.
// Positive definite for admissible media.
inline Mat3 traction_normal_derivative(const Medium& m, const Vec3& x) {
  require_on_boundary(m, x);
  const Vec3 nu = m.domain.normal(x);
  return traction_symbol(m.sample(x), nu, nu);
}

}  // namespace elastoray
