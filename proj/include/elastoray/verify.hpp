#pragma once

#include "elastoray/boundary.hpp"
#include "elastoray/linalg.hpp"
#include "elastoray/medium.hpp"

#include <array>
#include <numbers>
#include <vector>

namespace elastoray {

// Numerical residue matrices: (1 / 2 pi i) \oint z^j p(tau, xi_| - z nu)^{-1} dz
// over a circle around the two selected roots, by the trapezoidal rule.
struct ContourResidues {
  CMat3 A0 = CMat3::Zero();
  CMat3 A1 = CMat3::Zero();
  cplx center;
  double radius = 0.0;
  int nodes = 0;
  bool single_circle = true;  // false when two small circles were needed
};

namespace detail {

inline int winding(cplx center, double radius, cplx z) { return std::abs(z - center) < radius ? 1 : 0; }

inline void trapezoid(const CoefficientSample& cs, const BoundaryCovector& g, cplx center, double radius,
                      int nodes, CMat3& a0, CMat3& a1) {
  const CVec3 xt = g.xi.cast<cplx>();
  const CVec3 nu = g.nu.cast<cplx>();
  for (int k = 0; k < nodes; ++k) {
    const double th = 2.0 * std::numbers::pi * k / nodes;
    const cplx w = std::polar(1.0, th);
    const cplx z = center + radius * w;
    const CMat3 pinv = principal_symbol_matrix(cs, g.tau, CVec3(xt - z * nu)).inverse();
    // dz / (2 pi i) = radius w dtheta / (2 pi)
    const cplx weight = radius * w / static_cast<double>(nodes);
    a0 += weight * pinv;
    a1 += weight * z * pinv;
  }
}

}  // namespace detail

inline ContourResidues contour_residues(const Medium& m, const BoundaryCovector& g, int nodes = 256) {
  const CoefficientSample cs = m.sample(g.x);
  const CharRoots roots = char_roots(m, g);
  const cplx zs = roots.S.forward, zp = roots.P.forward;
  const std::array<cplx, 2> others{roots.S.backward, roots.P.backward};

  ContourResidues out;
  out.nodes = nodes;
  out.center = 0.5 * (zs + zp);
  out.radius = 1.5 * std::max({std::abs(zs - out.center), std::abs(zp - out.center), 1e-3});
  bool clean = true;
  for (cplx z : others)
    if (std::abs(z - out.center) < 1.1 * out.radius) clean = false;
  if (clean) {
    detail::trapezoid(cs, g, out.center, out.radius, nodes, out.A0, out.A1);
    return out;
  }

  // Two small circles, one per selected root, each avoiding every other root.
  out.single_circle = false;
  const std::array<cplx, 4> all{zs, zp, others[0], others[1]};
  for (cplx z0 : {zs, zp}) {
    double r = std::numeric_limits<double>::infinity();
    for (cplx z : all)
      if (std::abs(z - z0) > 1e-14) r = std::min(r, std::abs(z - z0));
    r = std::isfinite(r) ? 0.4 * r : 1.0;
    detail::trapezoid(cs, g, z0, r, nodes, out.A0, out.A1);
  }
  return out;
}

}  // namespace elastoray
