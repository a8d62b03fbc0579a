#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <string_view>

namespace elastoray {

using cplx = std::complex<double>;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using CVec3 = Eigen::Vector3cd;
using CMat3 = Eigen::Matrix3cd;
using CVec6 = Eigen::Matrix<cplx, 6, 1>;
using CMat6 = Eigen::Matrix<cplx, 6, 6>;

// Wave family: shear or compressional.
enum class Mode { S, P };

inline constexpr std::array<Mode, 2> kModes{Mode::S, Mode::P};

inline std::string_view to_string(Mode m) { return m == Mode::S ? "S" : "P"; }

// Bilinear (non-Hermitian) dot product; this is the analytic extension of
// the real Euclidean product, so no conjugation takes place.
template <class A, class B>
auto adot(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a.transpose() * b).value();
}

// pi(xi) = xi (x) xi / (xi . xi); for complex xi the denominator is the
// analytic square, which may vanish.
template <class Scalar>
Eigen::Matrix<Scalar, 3, 3> direction_projector(const Eigen::Matrix<Scalar, 3, 1>& xi) {
  const Scalar sq = adot(xi, xi);
  return xi * xi.transpose() / sq;
}

// |eta| = sqrt(|eta . eta|) with the analytic square.
template <class Scalar>
double analytic_norm(const Eigen::Matrix<Scalar, 3, 1>& v) {
  return std::sqrt(std::abs(adot(v, v)));
}

inline double spectral_norm(const Eigen::Ref<const Eigen::MatrixXcd>& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  return svd.singularValues()(0);
}

inline double condition_number(const Eigen::Ref<const Eigen::MatrixXcd>& a) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  return smin == 0.0 ? std::numeric_limits<double>::infinity() : sv(0) / smin;
}

// Unit vector orthogonal to a nonzero real vector.
inline Vec3 any_orthogonal(const Vec3& v) {
  Vec3 trial = std::abs(v.x()) <= std::abs(v.y()) && std::abs(v.x()) <= std::abs(v.z())
                   ? Vec3::UnitX()
                   : (std::abs(v.y()) <= std::abs(v.z()) ? Vec3::UnitY() : Vec3::UnitZ());
  Vec3 w = v.cross(trial);
  return w.normalized();
}

}  // namespace elastoray
