#pragma once

#include "elastoray/errors.hpp"
#include "elastoray/linalg.hpp"
#include "elastoray/medium.hpp"
#include "elastoray/symbols.hpp"

#include <numbers>
#include <optional>
#include <random>
#include <vector>

namespace elastoray {

inline constexpr double kGlancingTolerance = 1e-10;

// gamma = (t, x, tau, xi_|) with x on the boundary and xi_| tangent there.
// The exterior normal nu(x) is cached alongside.
struct BoundaryCovector {
  double t = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 nu = Vec3::UnitZ();
  double tau = 0.0;
  Vec3 xi = Vec3::Zero();
};

inline BoundaryCovector make_boundary_covector(const Domain& d, double t, const Vec3& x, double tau,
                                               const Vec3& xi_tangential) {
  if (!d.on_boundary(x, kBoundaryTolerance))
    throw Error(ErrorCode::NotOnBoundary, "covector base point is not on the boundary");
  if (!std::isfinite(tau) || !xi_tangential.allFinite() || !std::isfinite(t))
    throw Error(ErrorCode::InvalidCovector, "non-finite covector component");
  const Vec3 nu = d.normal(x);
  const double xin = xi_tangential.dot(nu);
  if (std::abs(xin) > 1e-12 * xi_tangential.norm() + 1e-300)
    throw Error(ErrorCode::InvalidCovector, "xi_| is not tangent to the boundary");
  if (tau == 0.0 && xi_tangential.norm() == 0.0)
    throw Error(ErrorCode::InvalidCovector, "(tau, xi_|) must be nonzero");
  return {t, x, nu, tau, xi_tangential};
}

// Builds gamma from an arbitrary covector at a boundary point by removing its
// normal component.
inline BoundaryCovector restrict_to_boundary(const Domain& d, double t, const Vec3& x, double tau,
                                             const Vec3& xi) {
  const Vec3 nu = d.normal(x);
  Vec3 xt = xi - xi.dot(nu) * nu;
  xt -= xt.dot(nu) * nu;
  return make_boundary_covector(d, t, x, tau, xt);
}

// ---------------------------------------------------------------------------
// Characteristic quadratic and region classification
// ---------------------------------------------------------------------------

enum class Region { Elliptic, Hyperbolic, Glancing };
enum class CombinedRegion { HyperbolicP, Mixed, EllipticS, Glancing };

inline std::string_view to_string(Region r) {
  switch (r) {
    case Region::Elliptic: return "elliptic";
    case Region::Hyperbolic: return "hyperbolic";
    case Region::Glancing: return "glancing";
  }
  return "?";
}

inline std::string_view to_string(CombinedRegion r) {
  switch (r) {
    case CombinedRegion::HyperbolicP: return "H_P";
    case CombinedRegion::Mixed: return "mixed";
    case CombinedRegion::EllipticS: return "E_S";
    case CombinedRegion::Glancing: return "glancing";
  }
  return "?";
}

// q_mode(tau, xi_| - z nu) = -rho (a z^2 - 2 b z + c) with
// a = <nu, nu>_m, b = <xi_|, nu>_m, c = <xi_|, xi_|>_m - tau^2.
struct ModeQuadratic {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double rho = 1.0;
  double discriminant = 0.0;  // b^2 - a c
  double scale = 1.0;         // a (tau^2 + <xi,xi>_m), same units as the discriminant

  double relative_discriminant() const { return discriminant / scale; }

  cplx q(cplx z) const { return -rho * ((a * z - 2.0 * b) * z + c); }
  cplx dq(cplx z) const { return 2.0 * rho * (b - a * z); }
};

inline ModeQuadratic mode_quadratic(const CoefficientSample& cs, Mode mode, const BoundaryCovector& g) {
  const Mat3 mm = mode_matrix(cs, mode).value;
  ModeQuadratic q;
  q.rho = cs.rho.value;
  q.a = g.nu.dot(mm * g.nu);
  q.b = g.xi.dot(mm * g.nu);
  const double xx = g.xi.dot(mm * g.xi);
  q.c = xx - g.tau * g.tau;
  q.discriminant = q.b * q.b - q.a * q.c;
  q.scale = q.a * (g.tau * g.tau + xx);
  return q;
}

inline Region region_of(const ModeQuadratic& q, double glancing_tol = kGlancingTolerance) {
  if (std::abs(q.discriminant) < glancing_tol * q.scale) return Region::Glancing;
  return q.discriminant > 0.0 ? Region::Hyperbolic : Region::Elliptic;
}

struct RegionLabel {
  Region S = Region::Glancing;
  Region P = Region::Glancing;
  CombinedRegion combined = CombinedRegion::Glancing;
  bool in_gamma_delta = false;
  double rel_disc_S = 0.0;
  double rel_disc_P = 0.0;

  Region operator[](Mode m) const { return m == Mode::S ? S : P; }
};

inline bool in_gamma_delta(const BoundaryCovector& g, double delta) {
  return std::abs(g.tau) >= delta * g.xi.norm();
}

inline RegionLabel classify(const Medium& m, const BoundaryCovector& g, const ClassParams& params,
                            double glancing_tol = kGlancingTolerance) {
  const CoefficientSample cs = m.sample(g.x);
  const ModeQuadratic qs = mode_quadratic(cs, Mode::S, g);
  const ModeQuadratic qp = mode_quadratic(cs, Mode::P, g);
  RegionLabel r;
  r.S = region_of(qs, glancing_tol);
  r.P = region_of(qp, glancing_tol);
  r.rel_disc_S = qs.relative_discriminant();
  r.rel_disc_P = qp.relative_discriminant();
  if (r.S == Region::Glancing || r.P == Region::Glancing)
    r.combined = CombinedRegion::Glancing;
  else if (r.P == Region::Hyperbolic)
    r.combined = CombinedRegion::HyperbolicP;
  else if (r.S == Region::Hyperbolic)
    r.combined = CombinedRegion::Mixed;
  else
    r.combined = CombinedRegion::EllipticS;
  r.in_gamma_delta = in_gamma_delta(g, params.delta);
  return r;
}

// ---------------------------------------------------------------------------
// Characteristic roots
// ---------------------------------------------------------------------------

struct ModeRoots {
  Mode mode = Mode::S;
  Region region = Region::Glancing;
  double rel_discriminant = 0.0;
  bool real = false;
  cplx forward;   // forward real root, or the root with positive imaginary part
  cplx backward;  // the other root
  CVec3 xi;       // xi_| - forward * nu
  CVec3 xi_backward;
  cplx c;         // d/dz q_mode(tau, xi_| - z nu) at the forward root
};

// Both roots of a z^2 - 2 b z + c = 0 ordered (forward, backward). Forward
// means tau <xi_| - z nu, nu>_m = tau (b - a z) > 0 for real roots and
// Im z > 0 for complex ones.
inline std::pair<cplx, cplx> ordered_roots(const ModeQuadratic& q, double tau) {
  if (q.discriminant >= 0.0) {
    const double sq = std::sqrt(q.discriminant);
    const double big = q.b + std::copysign(sq, q.b == 0.0 ? 1.0 : q.b);
    double z1 = big / q.a;
    double z2 = big != 0.0 ? q.c / big : q.b / q.a;
    if (tau * (q.b - q.a * z1) < tau * (q.b - q.a * z2)) std::swap(z1, z2);
    return {z1, z2};
  }
  const double im = std::sqrt(-q.discriminant) / q.a;
  const double re = q.b / q.a;
  return {cplx(re, im), cplx(re, -im)};
}

inline ModeRoots mode_roots(const CoefficientSample& cs, const BoundaryCovector& g, Mode mode,
                            double glancing_tol = kGlancingTolerance) {
  const ModeQuadratic q = mode_quadratic(cs, mode, g);
  ModeRoots r;
  r.mode = mode;
  r.region = region_of(q, glancing_tol);
  r.rel_discriminant = q.relative_discriminant();
  if (r.region == Region::Glancing)
    throw GlancingError(std::string("glancing covector for mode ") + std::string(to_string(mode)),
                        q.relative_discriminant());
  r.real = r.region == Region::Hyperbolic;
  std::tie(r.forward, r.backward) = ordered_roots(q, g.tau);
  const CVec3 xt = g.xi.cast<cplx>();
  const CVec3 nu = g.nu.cast<cplx>();
  r.xi = xt - r.forward * nu;
  r.xi_backward = xt - r.backward * nu;
  r.c = q.dq(r.forward);
  return r;
}

struct CharRoots {
  ModeRoots S;
  ModeRoots P;
  cplx lopatinski;  // xi_S . xi_P (analytic)

  const ModeRoots& operator[](Mode m) const { return m == Mode::S ? S : P; }

  // |xi_S . xi_P| / (|xi_S| |xi_P|) with analytic norms.
  double normalized_lopatinski() const {
    return std::abs(lopatinski) / (analytic_norm(S.xi) * analytic_norm(P.xi));
  }
};

inline CharRoots char_roots(const Medium& m, const BoundaryCovector& g,
                            double glancing_tol = kGlancingTolerance) {
  const CoefficientSample cs = m.sample(g.x);
  CharRoots r{mode_roots(cs, g, Mode::S, glancing_tol), mode_roots(cs, g, Mode::P, glancing_tol), {}};
  r.lopatinski = adot(r.S.xi, r.P.xi);
  return r;
}

// ---------------------------------------------------------------------------
// Lopatinski margin by sampling Gamma_delta
// ---------------------------------------------------------------------------

// Uniform point on the boundary (uniform in direction for ellipsoids).
template <class Rng>
Vec3 random_boundary_point(const Domain& d, Rng& rng) {
  std::normal_distribution<double> n01;
  Vec3 v;
  do {
    v = Vec3(n01(rng), n01(rng), n01(rng));
  } while (v.norm() < 1e-8);
  return d.boundary_point(v.normalized());
}

// Random covector in Gamma_delta with (tau, |xi_|) on the unit circle.
template <class Rng>
BoundaryCovector random_gamma_delta_covector(const Domain& d, double delta, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const Vec3 x = random_boundary_point(d, rng);
  const auto basis = d.tangent_basis(x);
  const double alpha = 2.0 * std::numbers::pi * u01(rng);
  const double theta = std::atan(1.0 / delta) * u01(rng);
  const double sign = u01(rng) < 0.5 ? -1.0 : 1.0;
  const Vec3 dir = std::cos(alpha) * basis[0] + std::sin(alpha) * basis[1];
  return make_boundary_covector(d, 0.0, x, sign * std::cos(theta), std::sin(theta) * dir);
}

struct LopatinskiReport {
  std::size_t requested = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // within the glancing margin
  double min_margin = std::numeric_limits<double>::infinity();
  std::optional<BoundaryCovector> argmin;
  double min_hyperbolic = std::numeric_limits<double>::infinity();
  double min_mixed = std::numeric_limits<double>::infinity();
  double min_elliptic = std::numeric_limits<double>::infinity();

  bool positive() const { return evaluated > 0 && min_margin > 0.0; }
};

inline LopatinskiReport lopatinski_margin(const Medium& m, const ClassParams& params,
                                          std::size_t sample_count, std::uint64_t seed,
                                          double glancing_margin = 1e-3) {
  params.validate();
  std::mt19937_64 rng(seed);
  LopatinskiReport rep;
  rep.requested = sample_count;
  for (std::size_t i = 0; i < sample_count; ++i) {
    const BoundaryCovector g = random_gamma_delta_covector(m.domain, params.delta, rng);
    const RegionLabel label = classify(m, g, params, glancing_margin);
    if (label.combined == CombinedRegion::Glancing) {
      ++rep.skipped;
      continue;
    }
    const CharRoots roots = char_roots(m, g);
    const double v = roots.normalized_lopatinski();
    ++rep.evaluated;
    if (v < rep.min_margin) {
      rep.min_margin = v;
      rep.argmin = g;
    }
    double& slot = label.combined == CombinedRegion::HyperbolicP
                       ? rep.min_hyperbolic
                       : (label.combined == CombinedRegion::Mixed ? rep.min_mixed : rep.min_elliptic);
    slot = std::min(slot, v);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Residue matrices and the Dirichlet-to-Neumann symbol
// ---------------------------------------------------------------------------

struct ResidueData {
  CharRoots roots;
  CMat3 A0;
  CMat3 A1;
  CMat3 A0_inverse;
  double A0_condition = 0.0;
};

inline ResidueData residue_matrices(const Medium& m, const BoundaryCovector& g) {
  const CharRoots roots = char_roots(m, g);
  const cplx sqS = adot(roots.S.xi, roots.S.xi);
  const cplx sqP = adot(roots.P.xi, roots.P.xi);
  const double scale = g.tau * g.tau + g.xi.squaredNorm();
  if (std::abs(sqS) < 1e-12 * scale || std::abs(sqP) < 1e-12 * scale ||
      std::abs(roots.lopatinski) < 1e-12 * scale)
    throw Error(ErrorCode::SingularResidue, "xi_S^2, xi_P^2 or xi_S . xi_P vanishes");

  const CMat3 id = CMat3::Identity();
  const CMat3 shear = id - direction_projector(roots.S.xi);
  const CMat3 comp = direction_projector(roots.P.xi);
  ResidueData r{roots, {}, {}, {}, 0.0};
  r.A0 = shear / roots.S.c + comp / roots.P.c;
  r.A1 = (roots.S.forward / roots.S.c) * shear + (roots.P.forward / roots.P.c) * comp;
  r.A0_condition = condition_number(r.A0);
  if (!(r.A0_condition < 1e12)) throw Error(ErrorCode::SingularResidue, "A0 is numerically singular");
  r.A0_inverse = r.A0.inverse();
  return r;
}

namespace detail {

inline CMat3 dn_route_e(const CoefficientSample& cs, const BoundaryCovector& g, const CharRoots& roots) {
  // Oblique projector onto C xi_P along xi_S^perp.
  const CMat3 onto_p = roots.P.xi * roots.S.xi.transpose() / roots.lopatinski;
  const CMat3 sP = traction_symbol(cs, g.nu, roots.P.xi);
  const CMat3 sS = traction_symbol(cs, g.nu, roots.S.xi);
  return sP * onto_p + sS * (CMat3::Identity() - onto_p);
}

inline CMat3 dn_route_r(const CoefficientSample& cs, const BoundaryCovector& g, const ResidueData& res,
                        double normal_sign) {
  const CMat3 uprime = res.A1 * res.A0_inverse;
  const CMat3 s_tan = traction_symbol(cs, g.nu, CVec3(g.xi.cast<cplx>()));
  const CMat3 s_nu = traction_symbol(cs, g.nu, CVec3(g.nu.cast<cplx>()));
  return s_tan + normal_sign * s_nu * uprime;
}

inline double relative_difference(const CMat3& a, const CMat3& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace detail

// Sign relating u' = A1 A0^{-1} to the normal component of the covector in the
// traction symbol. Calibrated once on the homogeneous unit-ball medium at
// tau = 2, xi_| = (1, 0, 0), x = (0, 0, 1) and frozen afterwards.
inline double normal_derivative_sign() {
  static const double sign = [] {
    const Medium m;  // rho = lambda = mu = 1, R = 0, unit ball
    const BoundaryCovector g = make_boundary_covector(m.domain, 0.0, Vec3(0, 0, 1), 2.0, Vec3(1, 0, 0));
    const CoefficientSample cs = m.sample(g.x);
    const ResidueData res = residue_matrices(m, g);
    const CMat3 e = detail::dn_route_e(cs, g, res.roots);
    const double plus = detail::relative_difference(e, detail::dn_route_r(cs, g, res, 1.0));
    const double minus = detail::relative_difference(e, detail::dn_route_r(cs, g, res, -1.0));
    return minus < plus ? -1.0 : 1.0;
  }();
  return sign;
}

struct DNSymbol {
  CMat3 value;    // eigenbasis route
  CMat3 route_r;  // residue route, A1 A0^{-1} composed with the traction symbol
  double route_discrepancy = 0.0;
  ResidueData residue;
};

inline DNSymbol dn_symbol(const Medium& m, const BoundaryCovector& g) {
  const CoefficientSample cs = m.sample(g.x);
  ResidueData res = residue_matrices(m, g);
  DNSymbol out;
  out.value = detail::dn_route_e(cs, g, res.roots);
  out.route_r = detail::dn_route_r(cs, g, res, normal_derivative_sign());
  out.route_discrepancy = detail::relative_difference(out.value, out.route_r);
  out.residue = std::move(res);
  return out;
}

// ---------------------------------------------------------------------------
// First-order companion symbol
// ---------------------------------------------------------------------------

// p(tau, xi) = rho tau^2 Id - (lambda + mu) xi (x) xi - (mu xi.xi + xi.R xi) Id,
// valid for any (also zero or isotropic) complex xi.
inline CMat3 principal_symbol_matrix(const CoefficientSample& cs, double tau, const CVec3& xi) {
  const cplx sq = adot(xi, xi);
  const cplx rform = adot(xi, CVec3(cs.stress.value.cast<cplx>() * xi));
  return (cs.rho.value * tau * tau - cs.mu.value * sq - rform) * CMat3::Identity() -
         (cs.lambda.value + cs.mu.value) * (xi * xi.transpose());
}

// Monic quadratic pencil in the inward normal coordinate zeta,
//   phat(zeta) = -K^{-1} p(tau, xi_| - zeta nu) = zeta^2 Id + p1 zeta + p2,
// K the (positive definite) normal traction derivative.
struct CompanionSymbol {
  double eta = 0.0;  // |(tau, xi_|)|
  CMat3 p1;
  CMat3 p2;
  CMat3 k_inverse;
  Eigen::Matrix<cplx, 6, 6> g;
  Eigen::Matrix<cplx, 6, 6> g_prime;

  CMat3 phat(cplx zeta) const { return zeta * zeta * CMat3::Identity() + zeta * p1 + p2; }
};

inline CompanionSymbol companion_symbol(const Medium& m, const BoundaryCovector& gam) {
  const CoefficientSample cs = m.sample(gam.x);
  CompanionSymbol c;
  c.eta = std::sqrt(gam.tau * gam.tau + gam.xi.squaredNorm());
  if (c.eta == 0.0) throw Error(ErrorCode::FrameDegenerate, "tangential frequency vanishes");
  const CVec3 xt = gam.xi.cast<cplx>();
  const CVec3 nu = gam.nu.cast<cplx>();
  auto pz = [&](double z) { return principal_symbol_matrix(cs, gam.tau, CVec3(xt - z * nu)); };
  const CMat3 p0 = pz(0.0), pp = pz(1.0), pm = pz(-1.0);
  const CMat3 lead = 0.5 * (pp + pm) - p0;  // = -K
  c.k_inverse = (-lead).inverse();
  c.p1 = -c.k_inverse * (0.5 * (pp - pm));
  c.p2 = -c.k_inverse * p0;
  const CMat3 id = CMat3::Identity();
  c.g.setZero();
  c.g.topRightCorner<3, 3>() = c.eta * id;
  c.g.bottomLeftCorner<3, 3>() = -c.p2 / c.eta;
  c.g.bottomRightCorner<3, 3>() = -c.p1;
  c.g_prime.setZero();
  c.g_prime.topLeftCorner<3, 3>() = -c.p1;
  c.g_prime.topRightCorner<3, 3>() = -c.eta * id;
  c.g_prime.bottomLeftCorner<3, 3>() = c.p2 / c.eta;
  return c;
}

struct KernelCheck {
  Mode mode = Mode::S;
  cplx root;
  int expected_dim = 0;
  int found_dim = 0;
  double span_residual = 0.0;  // max |(z - g) (|eta| a, z a)| over a basis of ker p(z)
};

struct CompanionReport {
  double product_residual = 0.0;    // (zeta - g')(zeta - g) vs diag(phat, phat), relative
  double eigenvalue_mismatch = 0.0; // companion eigenvalues vs quadratic roots, relative
  int zeta_kernel_dim = 0;          // dim ker(zeta - g)
  std::vector<KernelCheck> kernels; // one per real root

  bool ok(double product_tol = 1e-12, double eigen_tol = 1e-10) const {
    if (product_residual > product_tol || eigenvalue_mismatch > eigen_tol) return false;
    for (const auto& k : kernels)
      if (k.found_dim != k.expected_dim || k.span_residual > 1e-9) return false;
    return true;
  }
};

namespace detail {

inline int numerical_kernel_dim(const Eigen::MatrixXcd& a, double rel_tol = 1e-9) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  const auto& sv = svd.singularValues();
  const double cut = rel_tol * std::max(sv(0), 1e-300);
  int dim = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) <= cut) ++dim;
  return dim;
}

inline Eigen::MatrixXcd numerical_kernel(const Eigen::MatrixXcd& a, int dim) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(dim);
}

}  // namespace detail

inline CompanionReport companion_symbol_check(const Medium& m, const BoundaryCovector& gam, cplx zeta) {
  const CompanionSymbol c = companion_symbol(m, gam);
  const CoefficientSample cs = m.sample(gam.x);
  using Mat6 = Eigen::Matrix<cplx, 6, 6>;
  const Mat6 id6 = Mat6::Identity();
  CompanionReport rep;

  const Mat6 prod = (zeta * id6 - c.g_prime) * (zeta * id6 - c.g);
  Mat6 expect = Mat6::Zero();
  const CMat3 ph = c.phat(zeta);
  expect.topLeftCorner<3, 3>() = ph;
  expect.bottomRightCorner<3, 3>() = ph;
  const double pscale = std::max({expect.cwiseAbs().maxCoeff(), (zeta * id6 - c.g).cwiseAbs().maxCoeff(),
                                  (zeta * id6 - c.g_prime).cwiseAbs().maxCoeff(), 1e-300});
  rep.product_residual = (prod - expect).cwiseAbs().maxCoeff() / (pscale * pscale);
  rep.zeta_kernel_dim = detail::numerical_kernel_dim(zeta * id6 - c.g);

  // Eigenvalues against the six quadratic roots (S roots counted twice).
  Eigen::ComplexEigenSolver<Mat6> eig(c.g, false);
  std::vector<cplx> eigvals(eig.eigenvalues().data(), eig.eigenvalues().data() + 6);
  std::vector<std::pair<Mode, cplx>> expected;
  for (Mode mode : kModes) {
    const ModeQuadratic q = mode_quadratic(cs, mode, gam);
    const auto [zf, zb] = ordered_roots(q, gam.tau);
    const int mult = mode == Mode::S ? 2 : 1;
    for (int k = 0; k < mult; ++k) {
      expected.emplace_back(mode, zf);
      expected.emplace_back(mode, zb);
    }
    if (q.discriminant > 0.0 && region_of(q) == Region::Hyperbolic) {
      for (cplx z : {zf, zb}) {
        KernelCheck kc;
        kc.mode = mode;
        kc.root = z;
        kc.expected_dim = mult;
        kc.found_dim = detail::numerical_kernel_dim(z * id6 - c.g);
        const CMat3 pz = principal_symbol_matrix(cs, gam.tau, CVec3(gam.xi.cast<cplx>() - z * gam.nu.cast<cplx>()));
        const Eigen::MatrixXcd ker = detail::numerical_kernel(pz, mult);
        for (Eigen::Index j = 0; j < ker.cols(); ++j) {
          CVec6 w;
          w.head<3>() = c.eta * ker.col(j);
          w.tail<3>() = z * ker.col(j);
          kc.span_residual = std::max(kc.span_residual,
                                      ((z * id6 - c.g) * w).norm() / (w.norm() * std::max(c.g.norm(), 1.0)));
        }
        rep.kernels.push_back(kc);
      }
    }
  }
  const double escale = std::max(c.eta, 1.0);
  std::vector<bool> used(eigvals.size(), false);
  for (const auto& [mode, z] : expected) {
    std::size_t best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < eigvals.size(); ++i) {
      if (used[i]) continue;
      const double d = std::abs(eigvals[i] - z);
      if (d < dist) {
        dist = d;
        best = i;
      }
    }
    used[best] = true;
    rep.eigenvalue_mismatch = std::max(rep.eigenvalue_mismatch, dist / std::max(std::abs(z), escale));
  }
  return rep;
}

}  // namespace elastoray
