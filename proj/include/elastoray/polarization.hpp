#pragma once

#include "elastoray/boundary.hpp"
#include "elastoray/errors.hpp"
#include "elastoray/linalg.hpp"
#include "elastoray/medium.hpp"
#include "elastoray/symbols.hpp"

#include <string>
#include <vector>

namespace elastoray {

// Scalar elliptic symbol of order one used for the displacement half of the
// Cauchy data: e(gamma) = sqrt(tau^2 + |xi_|^2).
inline double cauchy_weight(const BoundaryCovector& g) {
  return std::sqrt(g.tau * g.tau + g.xi.squaredNorm());
}

// One summand of C^6 = B_S^+ + B_S^- + B_P^+ + B_P^-  (or + B_P in the mixed region).
struct PolarizationBlock {
  std::string name;  // "S+", "S-", "P+", "P-" or "P"
  int first_column = 0;
  int rank = 0;
  CMat6 projector = CMat6::Zero();
};

struct PolarizationFrame {
  BoundaryCovector gamma;
  bool p_hyperbolic = false;
  double e = 0.0;
  CMat6 basis = CMat6::Zero();  // columns (e a, s(x, xi_mode) a)
  double condition = 0.0;
  std::vector<PolarizationBlock> blocks;
  CharRoots roots;

  const PolarizationBlock& block(std::string_view name) const {
    for (const auto& b : blocks)
      if (b.name == name) return b;
    throw Error(ErrorCode::FrameDegenerate, "no polarization block " + std::string(name));
  }

  CMat6 shear_forward() const { return block("S+").projector; }
  CMat6 compressional_forward() const {
    return p_hyperbolic ? block("P+").projector : CMat6::Zero();
  }
  // pi_P = pi_P^+ + pi_P^- over H_P, the B_P projector over the mixed region.
  CMat6 compressional() const {
    return p_hyperbolic ? CMat6(block("P+").projector + block("P-").projector) : block("P").projector;
  }
};

namespace detail {

// Unit basis of {a : a . xi = 0} for a real direction xi.
inline std::array<Vec3, 2> real_orthogonal_plane(const Vec3& xi) {
  const Vec3 a1 = any_orthogonal(xi);
  return {a1, xi.normalized().cross(a1).normalized()};
}

inline CVec6 cauchy_column(const CoefficientSample& cs, const BoundaryCovector& g, double e,
                           const CVec3& xi_mode, const CVec3& a) {
  CVec6 col;
  col.head<3>() = e * a;
  col.tail<3>() = traction_symbol(cs, g.nu, xi_mode) * a;
  return col;
}

}  // namespace detail

inline PolarizationFrame polarization_frame(const Medium& m, const BoundaryCovector& g,
                                            double max_condition = 1e8) {
  const CoefficientSample cs = m.sample(g.x);
  PolarizationFrame f;
  f.gamma = g;
  f.roots = char_roots(m, g);
  if (!f.roots.S.real)
    throw Error(ErrorCode::FrameDegenerate, "polarization frames need gamma in the shear hyperbolic region");
  f.p_hyperbolic = f.roots.P.real;
  f.e = cauchy_weight(g);

  int col = 0;
  auto add_shear = [&](const CVec3& xi_mode, const char* name) {
    const Vec3 xr = xi_mode.real();
    const auto plane = detail::real_orthogonal_plane(xr);
    f.blocks.push_back({name, col, 2, CMat6::Zero()});
    for (const Vec3& a : plane) f.basis.col(col++) = detail::cauchy_column(cs, g, f.e, xi_mode, a.cast<cplx>());
  };
  auto add_comp = [&](const CVec3& xi_mode, const char* name, bool new_block) {
    if (new_block) f.blocks.push_back({name, col, 0, CMat6::Zero()});
    f.blocks.back().rank += 1;
    const CVec3 a = xi_mode / xi_mode.norm();
    f.basis.col(col++) = detail::cauchy_column(cs, g, f.e, xi_mode, a);
  };

  add_shear(f.roots.S.xi, "S+");
  add_shear(f.roots.S.xi_backward, "S-");
  if (f.p_hyperbolic) {
    add_comp(f.roots.P.xi, "P+", true);
    add_comp(f.roots.P.xi_backward, "P-", true);
  } else {
    add_comp(f.roots.P.xi, "P", true);
    add_comp(f.roots.P.xi_backward, "P", false);
  }

  f.condition = condition_number(f.basis);
  if (!(f.condition <= max_condition))
    throw Error(ErrorCode::NearDegenerateFrame,
                "polarization basis condition number " + std::to_string(f.condition) + " exceeds limit");
  const CMat6 inv = f.basis.fullPivLu().inverse();
  for (auto& b : f.blocks)
    b.projector = f.basis.middleCols(b.first_column, b.rank) * inv.middleRows(b.first_column, b.rank);
  return f;
}

// Orthogonal projector onto the direction perpendicular to both xi_| and nu.
inline Mat3 mute_symbol(const BoundaryCovector& g) {
  const Vec3 w = g.nu.cross(g.xi);
  const double scale = std::max(std::abs(g.tau), g.xi.norm());
  if (w.norm() <= 1e-12 * scale)
    throw Error(ErrorCode::DegenerateMuting, "muting direction undefined at normal incidence");
  const Vec3 u = w.normalized();
  return u * u.transpose();
}

inline CMat6 block_diagonal(const Mat3& m) {
  CMat6 out = CMat6::Zero();
  out.topLeftCorner<3, 3>() = m.cast<cplx>();
  out.bottomRightCorner<3, 3>() = m.cast<cplx>();
  return out;
}

// || pi_P diag(mute, mute) || for an arbitrary 3x3 mute matrix.
inline double muting_residual(const PolarizationFrame& f, const Mat3& mute) {
  return spectral_norm(f.compressional() * block_diagonal(mute));
}

inline double muting_annihilation_check(const Medium& m, const BoundaryCovector& g) {
  const PolarizationFrame f = polarization_frame(m, g);
  return muting_residual(f, mute_symbol(g));
}

// Principal symbol of the Cauchy data C f = (E f, Lambda f) for a source with
// polarization a at gamma.
inline CVec6 cauchy_data_symbol(const Medium& m, const BoundaryCovector& g, const CVec3& a) {
  const DNSymbol dn = dn_symbol(m, g);
  CVec6 v;
  v.head<3>() = cauchy_weight(g) * a;
  v.tail<3>() = dn.value * a;
  return v;
}

}  // namespace elastoray
