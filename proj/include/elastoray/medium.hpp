#pragma once

#include "elastoray/errors.hpp"
#include "elastoray/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <variant>
#include <vector>

namespace elastoray {

// ---------------------------------------------------------------------------
// Scalar coefficient fields
// ---------------------------------------------------------------------------

// Polynomial in (x1, x2, x3), stored as exponent triple -> coefficient.
class Polynomial {
 public:
  using Exponents = std::array<int, 3>;

  struct Term {
    Exponents exponents;
    double coef;
  };

  Polynomial() = default;

  explicit Polynomial(const std::map<Exponents, double>& terms) {
    for (const auto& [e, c] : terms) {
      if (e[0] < 0 || e[1] < 0 || e[2] < 0)
        throw Error(ErrorCode::InvalidMedium, "negative polynomial exponent");
      if (c != 0.0) terms_.push_back({e, c});
    }
  }

  static Polynomial constant(double c) { return Polynomial({{{0, 0, 0}, c}}); }

  const std::vector<Term>& terms() const { return terms_; }

  int degree() const {
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, t.exponents[0] + t.exponents[1] + t.exponents[2]);
    return d;
  }

  bool is_zero() const { return terms_.empty(); }

  double operator()(const Vec3& x) const {
    double sum = 0.0;
    for (const auto& t : terms_) {
      double v = t.coef;
      for (int a = 0; a < 3; ++a)
        for (int k = 0; k < t.exponents[a]; ++k) v *= x(a);
      sum += v;
    }
    return sum;
  }

  Polynomial derivative(int axis) const {
    std::map<Exponents, double> out;
    for (const auto& t : terms_) {
      if (t.exponents[axis] == 0) continue;
      Exponents d = t.exponents;
      d[axis] -= 1;
      out[d] += t.coef * t.exponents[axis];
    }
    return Polynomial(out);
  }

  Polynomial operator+(const Polynomial& o) const {
    auto out = as_map();
    for (const auto& t : o.terms_) out[t.exponents] += t.coef;
    return Polynomial(out);
  }

  Polynomial operator*(double s) const {
    auto out = as_map();
    for (auto& [e, c] : out) c *= s;
    return Polynomial(out);
  }

  Polynomial operator-(const Polynomial& o) const { return *this + o * -1.0; }

 private:
  std::map<Exponents, double> as_map() const {
    std::map<Exponents, double> m;
    for (const auto& t : terms_) m[t.exponents] += t.coef;
    return m;
  }

  std::vector<Term> terms_;
};

struct ConstantField {
  double value = 0.0;
};

struct PolynomialField {
  Polynomial poly;
  std::array<Polynomial, 3> gradient;

  static PolynomialField make(Polynomial p) {
    PolynomialField f{std::move(p), {}};
    for (int a = 0; a < 3; ++a) f.gradient[a] = f.poly.derivative(a);
    return f;
  }
};

// base + amplitude * exp(-|x - center|^2 / (2 width^2))
struct GaussianBumpField {
  double base = 1.0;
  double amplitude = 0.0;
  Vec3 center = Vec3::Zero();
  double width = 1.0;
};

struct FieldSample {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();
};

class ScalarField {
 public:
  using Family = std::variant<ConstantField, PolynomialField, GaussianBumpField>;

  ScalarField() : family_(ConstantField{0.0}) {}
  explicit ScalarField(Family family) : family_(std::move(family)) { validate(); }

  static ScalarField constant(double v) { return ScalarField(ConstantField{v}); }
  static ScalarField polynomial(Polynomial p) {
    return ScalarField(PolynomialField::make(std::move(p)));
  }
  static ScalarField gaussian_bump(double base, double amplitude, const Vec3& center, double width) {
    return ScalarField(GaussianBumpField{base, amplitude, center, width});
  }

  const Family& family() const { return family_; }

  FieldSample sample(const Vec3& x) const {
    return std::visit(
        [&](const auto& f) -> FieldSample {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, ConstantField>) {
            return {f.value, Vec3::Zero()};
          } else if constexpr (std::is_same_v<T, PolynomialField>) {
            return {f.poly(x), Vec3(f.gradient[0](x), f.gradient[1](x), f.gradient[2](x))};
          } else {
            const Vec3 d = x - f.center;
            const double w2 = f.width * f.width;
            const double g = f.amplitude * std::exp(-d.squaredNorm() / (2.0 * w2));
            return {f.base + g, -g * d / w2};
          }
        },
        family_);
  }

  double operator()(const Vec3& x) const { return sample(x).value; }

 private:
  void validate() const {
    if (const auto* g = std::get_if<GaussianBumpField>(&family_)) {
      if (!(g->width > 0.0) || !std::isfinite(g->width))
        throw Error(ErrorCode::InvalidMedium, "gaussian bump width must be positive");
    }
    if (const auto* p = std::get_if<PolynomialField>(&family_)) {
      if (p->poly.degree() > 4)
        throw Error(ErrorCode::InvalidMedium, "polynomial fields are limited to degree 4");
    }
  }

  Family family_;
};

// ---------------------------------------------------------------------------
// Residual stress
// ---------------------------------------------------------------------------

struct StressSample {
  Mat3 value = Mat3::Zero();
  std::array<Mat3, 3> gradient{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};  // d/dx_k
  Vec3 divergence = Vec3::Zero();
};

// R(x) is either constant or R = Hess(psi) - (Lap psi) Id for a polynomial
// potential psi; both are symmetric and divergence free.
class ResidualStressField {
 public:
  ResidualStressField() = default;

  static ResidualStressField constant(const Mat3& r) {
    const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
    if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale)
      throw Error(ErrorCode::InvalidMedium, "constant residual stress must be symmetric");
    ResidualStressField f;
    f.constant_ = r;
    return f;
  }

  static ResidualStressField from_potential(const Polynomial& psi) {
    if (psi.degree() > 4)
      throw Error(ErrorCode::UnsupportedPotential, "stress potential degree exceeds 4");
    ResidualStressField f;
    f.potential_ = psi;
    f.is_potential_ = true;
    std::array<Polynomial, 3> first{psi.derivative(0), psi.derivative(1), psi.derivative(2)};
    const Polynomial lap = first[0].derivative(0) + first[1].derivative(1) + first[2].derivative(2);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        Polynomial entry = first[i].derivative(j);
        if (i == j) entry = entry - lap;
        f.entries_[i][j] = entry;
        for (int k = 0; k < 3; ++k) f.entry_gradients_[k][i][j] = entry.derivative(k);
      }
    }
    return f;
  }

  bool is_potential() const { return is_potential_; }
  const Polynomial& potential() const { return potential_; }
  const Mat3& constant_value() const { return constant_; }

  StressSample sample(const Vec3& x) const {
    StressSample s;
    if (!is_potential_) {
      s.value = constant_;
      return s;
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        s.value(i, j) = entries_[i][j](x);
        for (int k = 0; k < 3; ++k) s.gradient[k](i, j) = entry_gradients_[k][i][j](x);
      }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s.divergence(i) += s.gradient[j](i, j);
    return s;
  }

  Mat3 operator()(const Vec3& x) const { return sample(x).value; }

 private:
  Mat3 constant_ = Mat3::Zero();
  Polynomial potential_;
  bool is_potential_ = false;
  std::array<std::array<Polynomial, 3>, 3> entries_;
  std::array<std::array<std::array<Polynomial, 3>, 3>, 3> entry_gradients_;
};

// Divergence-free residual stress induced by a polynomial potential.
inline ResidualStressField stress_from_potential(const ScalarField& psi) {
  return std::visit(
      [](const auto& f) -> ResidualStressField {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantField>) {
          return ResidualStressField::from_potential(Polynomial::constant(f.value));
        } else if constexpr (std::is_same_v<T, PolynomialField>) {
          return ResidualStressField::from_potential(f.poly);
        } else {
          throw Error(ErrorCode::UnsupportedPotential,
                      "stress potentials must be polynomial (degree <= 4)");
        }
      },
      psi.family());
}

// ---------------------------------------------------------------------------
// Domain
// ---------------------------------------------------------------------------

// Ellipsoid {phi < 0}, phi(x) = sum (x_i / a_i)^2 - 1; the unit ball has a = (1,1,1).
class Domain {
 public:
  Domain() : semi_axes_(1.0, 1.0, 1.0) {}

  static Domain unit_ball() { return Domain(); }
  static Domain ball(double radius) { return ellipsoid(Vec3::Constant(radius)); }
  static Domain ellipsoid(const Vec3& semi_axes) {
    if (!(semi_axes.minCoeff() > 0.0) || !semi_axes.allFinite())
      throw Error(ErrorCode::InvalidMedium, "ellipsoid semi-axes must be positive");
    Domain d;
    d.semi_axes_ = semi_axes;
    return d;
  }

  const Vec3& semi_axes() const { return semi_axes_; }
  bool is_ball() const { return semi_axes_.minCoeff() == semi_axes_.maxCoeff(); }

  double phi(const Vec3& x) const { return x.cwiseQuotient(semi_axes_).squaredNorm() - 1.0; }

  Vec3 phi_gradient(const Vec3& x) const {
    return 2.0 * x.cwiseQuotient(semi_axes_.cwiseProduct(semi_axes_));
  }

  // Exterior unit normal; meaningful on (or near) the boundary.
  Vec3 normal(const Vec3& x) const { return phi_gradient(x).normalized(); }

  bool contains(const Vec3& x, double tol = 1e-9) const { return phi(x) <= tol; }
  bool on_boundary(const Vec3& x, double tol = 1e-10) const { return std::abs(phi(x)) <= tol; }

  // Radial projection; exact because phi + 1 is 2-homogeneous.
  Vec3 project_to_boundary(const Vec3& x) const { return x / std::sqrt(phi(x) + 1.0); }

  // Boundary point in the radial direction dir.
  Vec3 boundary_point(const Vec3& dir) const { return project_to_boundary(dir); }

  // Orthonormal basis (e1, e2) of the tangent plane at a boundary point.
  std::array<Vec3, 2> tangent_basis(const Vec3& x) const {
    const Vec3 n = normal(x);
    const Vec3 e1 = any_orthogonal(n);
    return {e1, n.cross(e1)};
  }

  double characteristic_length() const { return semi_axes_.maxCoeff(); }

 private:
  Vec3 semi_axes_;
};

// ---------------------------------------------------------------------------
// Medium and admissibility
// ---------------------------------------------------------------------------

struct ClassParams {
  double L = 3.0;
  double eps = 0.2;
  double delta = 0.5;

  void validate() const {
    for (double v : {L, eps, delta})
      if (!(v > 0.0) || !std::isfinite(v))
        throw Error(ErrorCode::Config, "class parameters L, eps, delta must be finite and positive");
  }
};

// Coefficients and first derivatives at one point.
struct CoefficientSample {
  FieldSample rho, lambda, mu;
  StressSample stress;
};

struct Medium {
  ScalarField rho = ScalarField::constant(1.0);
  ScalarField lambda = ScalarField::constant(1.0);
  ScalarField mu = ScalarField::constant(1.0);
  ResidualStressField stress;
  Domain domain;

  CoefficientSample sample(const Vec3& x) const {
    return {rho.sample(x), lambda.sample(x), mu.sample(x), stress.sample(x)};
  }
};

// Points of a uniform n^3 lattice over the bounding box that lie in the
// closed domain.
inline std::vector<Vec3> domain_grid(const Domain& d, int n) {
  std::vector<Vec3> pts;
  const Vec3& a = d.semi_axes();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Vec3 u(i, j, k);
        const Vec3 x = (2.0 * u / (n - 1) - Vec3::Ones()).cwiseProduct(a);
        if (d.phi(x) <= 1e-12) pts.push_back(x);
      }
  return pts;
}

struct ClassReport {
  std::size_t points = 0;
  bool positive = true;        // rho, lambda, mu > 0
  double positivity_margin = std::numeric_limits<double>::infinity();
  bool lame_bound = true;      // lambda + 2 mu, 1/mu, 1/rho <= L
  double lame_margin = std::numeric_limits<double>::infinity();
  bool stress_small = true;    // |R| <= eps mu  (spectral norm)
  double stress_margin = std::numeric_limits<double>::infinity();
  bool metric_positive = true; // mu + lambda_min(R) > 0
  double metric_margin = std::numeric_limits<double>::infinity();
  bool divergence_free = true;
  double max_divergence = 0.0;
  Vec3 worst_lame_point = Vec3::Zero();
  Vec3 worst_stress_point = Vec3::Zero();
  Vec3 worst_metric_point = Vec3::Zero();

  bool admissible() const {
    return positive && lame_bound && stress_small && metric_positive && divergence_free;
  }
};

inline ClassReport check_class_membership(const Medium& m, const ClassParams& p,
                                          int grid_resolution = 21) {
  if (grid_resolution < 5) throw Error(ErrorCode::Config, "grid resolution must be at least 5");
  p.validate();
  ClassReport rep;
  for (const Vec3& x : domain_grid(m.domain, grid_resolution)) {
    ++rep.points;
    const double rho = m.rho(x), lam = m.lambda(x), mu = m.mu(x);
    const StressSample s = m.stress.sample(x);

    rep.positivity_margin = std::min({rep.positivity_margin, rho, lam, mu});

    const double lame = p.L - std::max({lam + 2.0 * mu, 1.0 / mu, 1.0 / rho});
    if (lame < rep.lame_margin) {
      rep.lame_margin = lame;
      rep.worst_lame_point = x;
    }

    Eigen::SelfAdjointEigenSolver<Mat3> eig(s.value, Eigen::EigenvaluesOnly);
    const Vec3& ev = eig.eigenvalues();
    const double norm = std::max(std::abs(ev(0)), std::abs(ev(2)));
    const double small = p.eps * mu - norm;
    if (small < rep.stress_margin) {
      rep.stress_margin = small;
      rep.worst_stress_point = x;
    }
    const double metric = mu + ev(0);
    if (metric < rep.metric_margin) {
      rep.metric_margin = metric;
      rep.worst_metric_point = x;
    }
    rep.max_divergence = std::max(rep.max_divergence, s.divergence.norm());
  }
  rep.positive = rep.positivity_margin > 0.0;
  rep.lame_bound = rep.lame_margin >= 0.0;
  rep.stress_small = rep.stress_margin >= 0.0;
  rep.metric_positive = rep.metric_margin > 0.0;
  rep.divergence_free = rep.max_divergence < 1e-10;
  return rep;
}

// Throws InvalidMedium unless rho, lambda, mu are positive on the grid.
inline void validate_medium(const Medium& m, int grid_resolution = 11) {
  for (const Vec3& x : domain_grid(m.domain, grid_resolution)) {
    if (!(m.rho(x) > 0.0) || !(m.lambda(x) > 0.0) || !(m.mu(x) > 0.0))
      throw Error(ErrorCode::InvalidMedium, "rho, lambda and mu must be positive in the domain");
  }
}

}  // namespace elastoray
