#pragma once

// Test media and oracles computed independently of the library's own code
// paths (direct formulas, geometry, numerical quadrature).

#include "elastoray/elastoray.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace testing_support {

using namespace elastoray;

inline Medium homogeneous() { return Medium{}; }

inline Medium constant_stress() {
  Medium m;
  m.stress = ResidualStressField::constant(Vec3(0.1, 0.0, -0.1).asDiagonal().toDenseMatrix());
  return m;
}

inline Medium potential_stress() {
  Medium m;
  m.stress = ResidualStressField::from_potential(
      Polynomial({{{1, 1, 1}, 0.05}, {{2, 0, 0}, 0.02}, {{0, 2, 0}, -0.02}}));
  return m;
}

inline Medium gaussian_bump() {
  Medium m;
  m.lambda = ScalarField::gaussian_bump(0.7, 0.1, Vec3::Zero(), 0.5);
  m.mu = ScalarField::gaussian_bump(0.8, 0.2, Vec3::Zero(), 0.5);
  return m;
}

inline ClassParams default_params() { return ClassParams{3.0, 0.2, 0.5}; }

// p = rho tau^2 Id - (lambda + mu) xi xi^T - (mu |xi|^2 + xi.R xi) Id
inline Mat3 p_direct(double rho, double lam, double mu, const Mat3& r, double tau, const Vec3& xi) {
  return (rho * tau * tau - mu * xi.squaredNorm() - xi.dot(r * xi)) * Mat3::Identity() - (lam + mu) * xi * xi.transpose();
}

inline CMat3 p_direct(const Medium& m, const Vec3& x, double tau, const CVec3& xi) {
  const double rho = m.rho(x), lam = m.lambda(x), mu = m.mu(x);
  const Mat3 r = m.stress(x);
  const cplx sq = (xi.transpose() * xi)(0);
  const cplx rf = (xi.transpose() * r.cast<cplx>() * xi)(0);
  return (rho * tau * tau - mu * sq - rf) * CMat3::Identity() - (lam + mu) * xi * xi.transpose();
}

// Residue matrices by a trapezoidal contour integral around the forward roots.
// Every root of det p(tau, xi_| - z nu) comes from the two scalar quadratics,
// found here with the plain quadratic formula.
struct QuadratureResidues {
  CMat3 A0 = CMat3::Zero();
  CMat3 A1 = CMat3::Zero();
};

inline std::array<cplx, 2> plain_roots(const Medium& m, const BoundaryCovector& g, double speed_coef) {
  // rho tau^2 = speed_coef |xi|^2 + xi.R xi along xi = xi_| - z nu
  const Mat3 r = m.stress(g.x);
  const double rho = m.rho(g.x);
  const Mat3 mm = (speed_coef * Mat3::Identity() + r) / rho;
  const double a = g.nu.dot(mm * g.nu), b = g.xi.dot(mm * g.nu), c = g.xi.dot(mm * g.xi) - g.tau * g.tau;
  const cplx d = std::sqrt(cplx(b * b - a * c));
  return {(b + d) / a, (b - d) / a};
}

inline QuadratureResidues quadrature_residues(const Medium& m, const BoundaryCovector& g, cplx zs, cplx zp,
                                              int nodes = 256) {
  const double lam = m.lambda(g.x), mu = m.mu(g.x);
  std::vector<cplx> all;
  for (cplx z : plain_roots(m, g, mu)) all.push_back(z);
  for (cplx z : plain_roots(m, g, lam + 2.0 * mu)) all.push_back(z);
  auto integrate = [&](cplx c, double rad, QuadratureResidues& out) {
    for (int k = 0; k < nodes; ++k) {
      const cplx w = std::polar(1.0, 2.0 * std::numbers::pi * k / nodes);
      const cplx z = c + rad * w;
      const CMat3 inv = p_direct(m, g.x, g.tau, CVec3(g.xi.cast<cplx>() - z * g.nu.cast<cplx>())).inverse();
      out.A0 += (rad * w / double(nodes)) * inv;
      out.A1 += (rad * w * z / double(nodes)) * inv;
    }
  };
  QuadratureResidues q;
  const cplx c = 0.5 * (zs + zp);
  const double rad = 1.5 * std::max({std::abs(zs - c), std::abs(zp - c), 1e-3});
  bool clean = true;
  for (cplx z : all)
    if (std::abs(z - zs) > 1e-9 && std::abs(z - zp) > 1e-9 && std::abs(z - c) < 1.1 * rad) clean = false;
  if (clean) {
    integrate(c, rad, q);
    return q;
  }
  for (cplx z0 : {zs, zp}) {
    double r = 1e300;
    for (cplx z : all)
      if (std::abs(z - z0) > 1e-9) r = std::min(r, std::abs(z - z0));
    integrate(z0, 0.4 * r, q);
  }
  return q;
}

// Exit point of the straight ray x + s v from a point of the unit ball.
inline Vec3 chord_exit(const Vec3& x, const Vec3& v) {
  const Vec3 u = v.normalized();
  const double s = -2.0 * x.dot(u);
  return x + s * u;
}

// Covector at a point of the unit sphere for tau and tangential magnitude k
// along a tangent direction e.
inline BoundaryCovector covector(const Medium& m, const Vec3& x, double tau, const Vec3& xi) {
  return make_boundary_covector(m.domain, 0.0, x, tau, xi);
}

// Random Gamma_delta covectors away from glancing, with a region filter.
template <class Pred>
std::vector<BoundaryCovector> sample_covectors(const Medium& m, std::size_t n, std::uint64_t seed, Pred keep,
                                               double delta = 0.5, double margin = 1e-3) {
  std::mt19937_64 rng(seed);
  std::vector<BoundaryCovector> out;
  const ClassParams p{3.0, 0.2, delta};
  while (out.size() < n) {
    const BoundaryCovector g = random_gamma_delta_covector(m.domain, delta, rng);
    const RegionLabel l = classify(m, g, p, margin);
    if (l.combined == CombinedRegion::Glancing || !keep(l, g)) continue;
    out.push_back(g);
  }
  return out;
}

inline auto any_region = [](const RegionLabel&, const BoundaryCovector&) { return true; };

}  // namespace testing_support
