#pragma once

#include "elastoray/boundary.hpp"
#include "elastoray/errors.hpp"
#include "elastoray/linalg.hpp"
#include "elastoray/medium.hpp"
#include "elastoray/ode.hpp"
#include "elastoray/parallel.hpp"
#include "elastoray/polarization.hpp"
#include "elastoray/symbols.hpp"

#include <algorithm>
#include <deque>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace elastoray {

// A point on a bicharacteristic of H = tau^2 - g_mode^{-1}(x, xi). tau is a
// constant of motion and is never integrated.
struct RayState {
  double s = 0.0;
  double t = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 xi = Vec3::Zero();
  double tau = 1.0;
  Mode mode = Mode::S;
};

struct RaySample {
  double s = 0.0;
  double t = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 xi = Vec3::Zero();
};

struct StepControl {
  double tolerance = 1e-12;      // relative local error per step
  double hamiltonian_tol = 1e-9; // |tau^2 - g^{-1}(x, xi)| <= tol tau^2
  double boundary_tol = 1e-12;   // |phi| at a localized boundary event
  double tangential_tol = 1e-6;  // glancing-exit threshold on |d(phi o x)/ds|
  int max_steps = 200000;
  bool record_samples = false;
};

struct LensMapEntry {
  BoundaryCovector in;
  BoundaryCovector out;
  Mode mode = Mode::S;
  double travel_time = 0.0;
  RayState exit_state;             // full covector at the exit point
  double max_hamiltonian_residual = 0.0;  // relative to tau^2
  int steps = 0;
  std::vector<RaySample> samples;
};

namespace detail {

using RayVec = Eigen::Matrix<double, 7, 1>;  // (x, xi, t)

struct HamiltonFlow {
  const Medium* medium;
  Mode mode;
  double tau;

  RayVec operator()(const RayVec& y) const {
    const Vec3 x = y.head<3>();
    const Vec3 xi = y.segment<3>(3);
    const ModeMatrix mm = mode_matrix(medium->sample(x), mode);
    const MetricSample g = metric_inv_unchecked(mm, xi);
    RayVec dy;
    dy.head<3>() = -g.grad_xi;  // dx/ds = dH/dxi
    dy.segment<3>(3) = g.grad_x;  // dxi/ds = -dH/dx
    dy(6) = 2.0 * tau;          // dt/ds = dH/dtau
    return dy;
  }

  double residual(const RayVec& y) const {
    const Vec3 x = y.head<3>();
    const Vec3 xi = y.segment<3>(3);
    const Mat3 mm = mode_matrix(medium->sample(x), mode).value;
    return std::abs(tau * tau - xi.dot(mm * xi)) / (tau * tau);
  }
};

inline RayVec pack(const RayState& r) {
  RayVec y;
  y << r.x, r.xi, r.t;
  return y;
}

}  // namespace detail

// Full interior-pointing covector for a mode at a boundary covector: the
// forward root of q_mode(tau, xi_| - z nu) = 0.
inline RayState launch_state(const Medium& m, const BoundaryCovector& g, Mode mode) {
  const ModeRoots r = mode_roots(m.sample(g.x), g, mode);
  if (!r.real)
    throw Error(ErrorCode::InvalidCovector,
                std::string("covector is elliptic for mode ") + std::string(to_string(mode)));
  RayState st;
  st.t = g.t;
  st.x = g.x;
  st.tau = g.tau;
  st.mode = mode;
  st.xi = g.xi - r.forward.real() * g.nu;
  return st;
}

// Covector at boundary point x whose mode bicharacteristic leaves x with
// velocity along the interior direction d: xi = -tau M^{-1} d / sqrt(d . M^{-1} d).
inline BoundaryCovector covector_from_direction(const Medium& m, Mode mode, double t, const Vec3& x,
                                                double tau, const Vec3& direction) {
  const Mat3 minv = mode_matrix(m, mode, x).value.inverse();
  const Vec3 d = direction.normalized();
  const Vec3 xi = -tau * minv * d / std::sqrt(d.dot(minv * d));
  return restrict_to_boundary(m.domain, t, x, tau, xi);
}

// Integrates from an interior-pointing boundary state until the ray leaves
// the domain again.
inline LensMapEntry trace_from_state(const Medium& m, const RayState& start, const StepControl& ctrl = {}) {
  using detail::RayVec;
  const detail::HamiltonFlow flow{&m, start.mode, start.tau};
  const Domain& dom = m.domain;
  const double dir = start.tau >= 0.0 ? 1.0 : -1.0;  // time increases along the integration

  RayVec y = detail::pack(start);
  const double len = dom.characteristic_length();
  const double speed0 = flow(y).head<3>().norm();
  if (!(speed0 > 0.0)) throw Error(ErrorCode::InvalidCovector, "zero ray velocity");
  const double h_max = 0.1 * len / speed0;
  double h = 0.01 * len / speed0;
  const double h_min = 1e-14 * len / speed0;
  const double xi_scale = std::max(start.xi.norm(), 1e-300);
  const double t_scale = std::abs(flow(y)(6)) * len / speed0;

  auto error_norm = [&](const RayVec& err) {
    double e = 0.0;
    for (int i = 0; i < 3; ++i) e = std::max(e, std::abs(err(i)) / len);
    for (int i = 3; i < 6; ++i) e = std::max(e, std::abs(err(i)) / xi_scale);
    e = std::max(e, std::abs(err(6)) / t_scale);
    return e / ctrl.tolerance;
  };
  auto phi_rate = [&](const RayVec& state) {
    const Vec3 grad = dom.phi_gradient(state.head<3>());
    const Vec3 vel = dir * flow(state).head<3>();
    return std::pair{grad.dot(vel), grad.norm() * vel.norm()};
  };

  if (phi_rate(y).first >= 0.0)
    throw Error(ErrorCode::InvalidCovector, "initial covector does not point into the domain");

  LensMapEntry out;
  out.mode = start.mode;
  out.in = restrict_to_boundary(dom, start.t, start.x, start.tau, start.xi);
  double s = start.s;
  if (ctrl.record_samples) out.samples.push_back({s, y(6), y.head<3>(), y.segment<3>(3)});

  RayVec err;
  for (int step = 0;; ++step) {
    if (step >= ctrl.max_steps) throw Error(ErrorCode::MaxStepsExceeded, "ray tracing step limit reached");
    const RayVec trial = dopri5_step<7>(flow, y, dir * h, err);
    const double en = error_norm(err);
    if (!(en <= 1.0) || flow.residual(trial) > 0.5 * ctrl.hamiltonian_tol) {
      h *= (en <= 1.0) ? 0.5 : std::max(0.2, 0.9 * std::pow(en, -0.2));
      if (h < h_min)
        throw Error(ErrorCode::StepControlFailure, "step size underflow or Hamiltonian drift");
      continue;
    }
    const double phi_new = dom.phi(trial.head<3>());
    if (phi_new >= 0.0) {
      // bracket [0, h]: phi < 0 at 0 (or ~0 at the entry), phi >= 0 at h
      double lo = 0.0, hi = h;
      RayVec exit_state = trial;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const RayVec ym = dopri5_step<7>(flow, y, dir * mid, err);
        const double pm = dom.phi(ym.head<3>());
        exit_state = ym;
        if (std::abs(pm) <= ctrl.boundary_tol && pm <= 0.0 + ctrl.boundary_tol) {
          hi = mid;
          break;
        }
        (pm < 0.0 ? lo : hi) = mid;
        if (hi - lo <= 1e-17 * h) break;
      }
      if (std::abs(dom.phi(exit_state.head<3>())) > ctrl.boundary_tol) {
        exit_state = dopri5_step<7>(flow, y, dir * hi, err);
      }
      const auto [rate, rate_scale] = phi_rate(exit_state);
      if (std::abs(rate) < ctrl.tangential_tol * rate_scale)
        throw Error(ErrorCode::GlancingExit, "ray leaves the domain tangentially");
      s += dir * hi;
      out.max_hamiltonian_residual = std::max(out.max_hamiltonian_residual, flow.residual(exit_state));
      out.steps = step + 1;
      RayState ex;
      ex.s = s;
      ex.t = exit_state(6);
      ex.x = exit_state.head<3>();
      ex.xi = exit_state.segment<3>(3);
      ex.tau = start.tau;
      ex.mode = start.mode;
      out.exit_state = ex;
      out.out = restrict_to_boundary(dom, ex.t, ex.x, ex.tau, ex.xi);
      out.travel_time = ex.t - start.t;
      if (ctrl.record_samples) out.samples.push_back({s, ex.t, ex.x, ex.xi});
      return out;
    }
    y = trial;
    s += dir * h;
    out.max_hamiltonian_residual = std::max(out.max_hamiltonian_residual, flow.residual(y));
    if (ctrl.record_samples) out.samples.push_back({s, y(6), y.head<3>(), y.segment<3>(3)});
    h = std::min(h_max, h * std::min(5.0, 0.9 * std::pow(std::max(en, 1e-30), -0.2)));
  }
}

inline LensMapEntry trace_leg(const Medium& m, const BoundaryCovector& g, Mode mode,
                              const StepControl& ctrl = {}) {
  return trace_from_state(m, launch_state(m, g, mode), ctrl);
}

// ---------------------------------------------------------------------------
// Lens-map tables
// ---------------------------------------------------------------------------

struct TraceFailure {
  ErrorCode code = ErrorCode::InvalidCovector;
  std::string message;
};

using LensMapResult = std::variant<LensMapEntry, TraceFailure>;

inline LensMapResult try_trace_leg(const Medium& m, const BoundaryCovector& g, Mode mode,
                                   const StepControl& ctrl = {}) {
  try {
    return trace_leg(m, g, mode, ctrl);
  } catch (const Error& e) {
    return TraceFailure{e.code(), e.what()};
  }
}

inline std::vector<LensMapResult> lens_map_table(const Medium& m, Mode mode,
                                                 const std::vector<BoundaryCovector>& fan,
                                                 const StepControl& ctrl = {}, unsigned workers = 1) {
  std::vector<LensMapResult> out(fan.size(), TraceFailure{});
  parallel_for(fan.size(), workers, [&](std::size_t i) { out[i] = try_trace_leg(m, fan[i], mode, ctrl); });
  return out;
}

// Fan of covectors at boundary points spread over the boundary (Fibonacci
// lattice), launched at incidence angles (from the inward normal) uniformly in
// [min_angle, max_angle] for the reference mode.
inline std::vector<BoundaryCovector> incidence_fan(const Medium& m, Mode reference, std::size_t n,
                                                   double min_angle, double max_angle, double tau = 1.0) {
  std::vector<BoundaryCovector> fan;
  fan.reserve(n);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double zc = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - zc * zc));
    const double az = golden * static_cast<double>(i);
    const Vec3 x = m.domain.boundary_point(Vec3(r * std::cos(az), r * std::sin(az), zc));
    const auto basis = m.domain.tangent_basis(x);
    const double angle =
        n == 1 ? min_angle : min_angle + (max_angle - min_angle) * static_cast<double>(i) / static_cast<double>(n - 1);
    const double rot = 2.399963 * static_cast<double>(i) * 0.5;
    const Vec3 e = std::cos(rot) * basis[0] + std::sin(rot) * basis[1];
    const Vec3 d = -std::cos(angle) * m.domain.normal(x) + std::sin(angle) * e;
    fan.push_back(covector_from_direction(m, reference, 0.0, x, tau, d));
  }
  return fan;
}

// ---------------------------------------------------------------------------
// Reflection and broken bicharacteristics
// ---------------------------------------------------------------------------

enum class BranchStatus { Traced, Evanescent, Glancing };

struct BranchNote {
  Mode mode = Mode::S;
  BranchStatus status = BranchStatus::Traced;
};

struct ReflectionResult {
  BoundaryCovector gamma;
  std::vector<RayState> branches;  // reflected and converted states pointing inward
  std::vector<BranchNote> notes;   // one per mode
};

inline ReflectionResult reflect(const Medium& m, const RayState& incident) {
  if (!m.domain.on_boundary(incident.x, kBoundaryTolerance))
    throw Error(ErrorCode::NotOnBoundary, "reflection point is not on the boundary");
  ReflectionResult res;
  res.gamma = restrict_to_boundary(m.domain, incident.t, incident.x, incident.tau, incident.xi);
  const CoefficientSample cs = m.sample(incident.x);
  const ModeQuadratic qin = mode_quadratic(cs, incident.mode, res.gamma);
  if (region_of(qin) != Region::Hyperbolic)
    throw Error(ErrorCode::GlancingReflection, "incident ray is glancing at the reflection point");
  for (Mode mode : kModes) {
    const Region reg = region_of(mode_quadratic(cs, mode, res.gamma));
    if (reg == Region::Elliptic) {
      res.notes.push_back({mode, BranchStatus::Evanescent});
      continue;
    }
    if (reg == Region::Glancing) {
      res.notes.push_back({mode, BranchStatus::Glancing});
      continue;
    }
    res.branches.push_back(launch_state(m, res.gamma, mode));
    res.notes.push_back({mode, BranchStatus::Traced});
  }
  return res;
}

// Ray-level stand-in for an element of the wavefront set of the Cauchy data.
struct WFEvent {
  BoundaryCovector gamma;
  Mode mode = Mode::S;
  int order = 0;       // arrival rank by time
  int reflections = 0; // number of boundary reflections before arrival
  std::string path;    // mode sequence, e.g. "SP"
  double travel_time = 0.0;
};

struct BranchIssue {
  std::string path;
  std::string kind;  // "evanescent", "glancing" or an error code
  double t = 0.0;
};

struct TransportResult {
  std::vector<WFEvent> events;
  std::vector<BranchIssue> issues;
  std::vector<LensMapEntry> legs;
};

inline TransportResult broken_transport(const Medium& m, const BoundaryCovector& gin,
                                        const std::vector<Mode>& initial_modes, int depth = 3,
                                        double t_max = std::numeric_limits<double>::infinity(),
                                        const StepControl& ctrl = {}) {
  struct Pending {
    RayState state;
    int reflections;
    std::string path;
  };
  TransportResult res;
  std::deque<Pending> queue;
  for (Mode mode : initial_modes) {
    try {
      queue.push_back({launch_state(m, gin, mode), 0, std::string(to_string(mode))});
    } catch (const Error& e) {
      res.issues.push_back({std::string(to_string(mode)), std::string(to_string(e.code())), gin.t});
    }
  }
  while (!queue.empty()) {
    Pending cur = std::move(queue.front());
    queue.pop_front();
    LensMapEntry leg;
    try {
      leg = trace_from_state(m, cur.state, ctrl);
    } catch (const Error& e) {
      res.issues.push_back({cur.path, std::string(to_string(e.code())), cur.state.t});
      continue;
    }
    if (leg.out.t > t_max) continue;
    res.events.push_back({leg.out, cur.state.mode, 0, cur.reflections, cur.path, leg.out.t - gin.t});
    res.legs.push_back(leg);
    if (cur.reflections >= depth) continue;
    try {
      const ReflectionResult refl = reflect(m, leg.exit_state);
      for (const auto& note : refl.notes) {
        if (note.status == BranchStatus::Evanescent)
          res.issues.push_back({cur.path + std::string(to_string(note.mode)), "evanescent", leg.out.t});
        else if (note.status == BranchStatus::Glancing)
          res.issues.push_back({cur.path + std::string(to_string(note.mode)), "glancing", leg.out.t});
      }
      for (const RayState& b : refl.branches)
        queue.push_back({b, cur.reflections + 1, cur.path + std::string(to_string(b.mode))});
    } catch (const Error& e) {
      res.issues.push_back({cur.path, std::string(to_string(e.code())), leg.out.t});
    }
  }
  std::stable_sort(res.events.begin(), res.events.end(),
                   [](const WFEvent& a, const WFEvent& b) { return a.gamma.t < b.gamma.t; });
  for (std::size_t i = 0; i < res.events.size(); ++i) res.events[i].order = static_cast<int>(i);
  return res;
}

// ---------------------------------------------------------------------------
// Boundary distance by multi-start shooting
// ---------------------------------------------------------------------------

struct DistanceResult {
  bool connected = false;
  double distance = std::numeric_limits<double>::infinity();
  double miss = std::numeric_limits<double>::infinity();
  BoundaryCovector entry;
  BoundaryCovector exit;
  Vec3 direction = Vec3::Zero();
  int traces = 0;
  int converged_rays = 0;
};

struct ShootingOptions {
  int n_starts = 64;
  int refine_best = 4;
  double miss_tol = 1e-9;
  std::uint64_t seed = 1;
  double tau = 1.0;
  StepControl ctrl{};
  std::optional<Vec3> initial_direction;  // skips the random starts when set
};

namespace detail {

// Derivative-free simplex minimization in two variables.
template <class F>
std::pair<Eigen::Vector2d, double> nelder_mead(const F& f, const Eigen::Vector2d& x0, double size,
                                               double ftol, int max_iter) {
  std::array<Eigen::Vector2d, 3> p{x0, x0 + Eigen::Vector2d(size, 0), x0 + Eigen::Vector2d(0, size)};
  std::array<double, 3> v{f(p[0]), f(p[1]), f(p[2])};
  for (int it = 0; it < max_iter; ++it) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    const int best = idx[0], mid = idx[1], worst = idx[2];
    if (v[best] <= ftol) break;
    if ((p[worst] - p[best]).norm() < 1e-14 && (p[mid] - p[best]).norm() < 1e-14) break;
    const Eigen::Vector2d centroid = 0.5 * (p[best] + p[mid]);
    const Eigen::Vector2d refl = centroid + (centroid - p[worst]);
    const double fr = f(refl);
    if (fr < v[best]) {
      const Eigen::Vector2d exp = centroid + 2.0 * (centroid - p[worst]);
      const double fe = f(exp);
      if (fe < fr) {
        p[worst] = exp;
        v[worst] = fe;
      } else {
        p[worst] = refl;
        v[worst] = fr;
      }
    } else if (fr < v[mid]) {
      p[worst] = refl;
      v[worst] = fr;
    } else {
      const Eigen::Vector2d con = centroid + 0.5 * (p[worst] - centroid);
      const double fc = f(con);
      if (fc < v[worst]) {
        p[worst] = con;
        v[worst] = fc;
      } else {
        for (int k : {mid, worst}) {
          p[k] = p[best] + 0.5 * (p[k] - p[best]);
          v[k] = f(p[k]);
        }
      }
    }
  }
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (v[k] < v[best]) best = k;
  return {p[best], v[best]};
}

}  // namespace detail

// Travel time of the fastest connecting non-tangential ray from x to y (both
// on the boundary); equals the g_mode boundary distance when that ray is
// minimizing.
inline DistanceResult boundary_distance(const Medium& m, Mode mode, const Vec3& x, const Vec3& y,
                                        const ShootingOptions& opt = {}) {
  if ((x - y).norm() < 1e-12) throw Error(ErrorCode::Config, "boundary_distance needs distinct points");
  require_on_boundary(m, x);
  require_on_boundary(m, y);
  DistanceResult best;
  const Vec3 nu = m.domain.normal(x);
  const auto tb = m.domain.tangent_basis(x);
  const double len = m.domain.characteristic_length();

  struct Shot {
    bool ok = false;
    Vec3 exit = Vec3::Zero();
    LensMapEntry leg;
  };
  auto shoot = [&](const Vec3& d) {
    Shot sh;
    ++best.traces;
    if (d.dot(nu) > -1e-6 * d.norm()) return sh;
    try {
      sh.leg = trace_leg(m, covector_from_direction(m, mode, 0.0, x, opt.tau, d), mode, opt.ctrl);
      sh.exit = sh.leg.out.x;
      sh.ok = true;
    } catch (const Error&) {
    }
    return sh;
  };

  // starting directions, uniform on the inward hemisphere
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<std::pair<double, Vec3>> starts;
  if (opt.initial_direction) {
    const Shot sh = shoot(*opt.initial_direction);
    if (sh.ok) starts.emplace_back((sh.exit - y).norm(), opt.initial_direction->normalized());
  }
  for (int i = 0; i < (opt.initial_direction ? 0 : opt.n_starts); ++i) {
    const double c = std::max(u01(rng), 1e-3);
    const double a = 2.0 * std::numbers::pi * u01(rng);
    const double sn = std::sqrt(1.0 - c * c);
    const Vec3 d = -c * nu + sn * (std::cos(a) * tb[0] + std::sin(a) * tb[1]);
    const Shot sh = shoot(d);
    if (sh.ok) starts.emplace_back((sh.exit - y).norm(), d);
  }
  std::sort(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  const int n_refine = std::min<int>(opt.refine_best, static_cast<int>(starts.size()));
  for (int k = 0; k < n_refine; ++k) {
    Vec3 base = starts[k].second.normalized();
    auto chart = [&](const Vec3& b, const Eigen::Vector2d& uv) {
      const Vec3 t1 = any_orthogonal(b);
      const Vec3 t2 = b.cross(t1);
      return Vec3(b + uv(0) * t1 + uv(1) * t2).normalized();
    };
    auto objective = [&](const Eigen::Vector2d& uv) {
      const Shot sh = shoot(chart(base, uv));
      return sh.ok ? (sh.exit - y).squaredNorm() / (len * len) : 1e6;
    };
    if (!opt.initial_direction) {
      const auto [uv, fval] = detail::nelder_mead(objective, Eigen::Vector2d::Zero(), 0.05, 1e-12, 300);
      if (fval >= 1e6) continue;
      base = chart(base, uv);
    }

    // Gauss-Newton polish with central-difference Jacobian of the exit point.
    Shot cur = shoot(base);
    for (int it = 0; it < 30 && cur.ok; ++it) {
      const Vec3 r = cur.exit - y;
      if (r.norm() < 0.01 * opt.miss_tol * len) break;
      Eigen::Matrix<double, 3, 2> jac;
      const double hstep = 1e-6;
      bool ok = true;
      for (int j = 0; j < 2; ++j) {
        Eigen::Vector2d e = Eigen::Vector2d::Zero();
        e(j) = hstep;
        const Shot sp = shoot(chart(base, e));
        const Shot sm = shoot(chart(base, -e));
        if (!sp.ok || !sm.ok) {
          ok = false;
          break;
        }
        jac.col(j) = (sp.exit - sm.exit) / (2.0 * hstep);
      }
      if (!ok) break;
      const Eigen::Vector2d delta = jac.colPivHouseholderQr().solve(-r);
      double lambda = 1.0;
      bool improved = false;
      for (int ls = 0; ls < 8; ++ls, lambda *= 0.5) {
        const Vec3 cand = chart(base, lambda * delta);
        const Shot sc = shoot(cand);
        if (sc.ok && (sc.exit - y).norm() < r.norm()) {
          base = cand;
          cur = sc;
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
    if (!cur.ok) continue;
    const double miss = (cur.exit - y).norm();
    if (miss <= opt.miss_tol * len) {
      ++best.converged_rays;
      if (!best.connected || cur.leg.travel_time < best.distance) {
        best.connected = true;
        best.distance = cur.leg.travel_time;
        best.miss = miss;
        best.entry = cur.leg.in;
        best.exit = cur.leg.out;
        best.direction = base;
      }
    } else if (!best.connected && miss < best.miss) {
      best.miss = miss;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Recovery of the shear and compressional lens maps from boundary events
// ---------------------------------------------------------------------------

struct ProbeRecovery {
  BoundaryCovector probe;
  std::optional<LensMapEntry> direct_S, direct_P;
  std::optional<WFEvent> recovered_S, recovered_P;
  double muting_residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<Mode> shear_source_modes;  // modes launched by the muted source
  std::vector<Mode> comp_source_modes;   // modes launched by the compressional source
  double err_S = std::numeric_limits<double>::quiet_NaN();
  double err_P = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> failures;
};

struct RecoveryReport {
  std::vector<ProbeRecovery> probes;
  double max_error_S = 0.0;
  double max_error_P = 0.0;
  double max_muting_residual = 0.0;
  double max_time_separation = 0.0;  // max |t_S - t_P| over probes with both maps
  std::size_t recovered_S = 0;
  std::size_t recovered_P = 0;
};

// Max of exit-position, tangential-covector and time discrepancies.
inline double lens_discrepancy(const BoundaryCovector& a, const BoundaryCovector& b) {
  return std::max({(a.x - b.x).cwiseAbs().maxCoeff(), (a.xi - b.xi).cwiseAbs().maxCoeff(), std::abs(a.t - b.t)});
}

namespace detail {

// Modes whose forward projector does not annihilate the Cauchy-data symbol.
inline std::vector<Mode> launched_modes(const PolarizationFrame& f, const CVec6& v, double tol = 1e-8) {
  std::vector<Mode> modes;
  const double vn = v.norm();
  if ((f.shear_forward() * v).norm() > tol * vn) modes.push_back(Mode::S);
  if (f.p_hyperbolic && (f.compressional_forward() * v).norm() > tol * vn) modes.push_back(Mode::P);
  return modes;
}

inline std::optional<WFEvent> first_arrival(const Medium& m, const BoundaryCovector& g,
                                            const std::vector<Mode>& modes, const StepControl& ctrl,
                                            std::vector<std::string>& failures) {
  if (modes.empty()) return std::nullopt;
  const TransportResult tr = broken_transport(m, g, modes, 1, std::numeric_limits<double>::infinity(), ctrl);
  for (const auto& is : tr.issues)
    if (is.path.size() == 1) failures.push_back(is.path + ": " + is.kind);
  if (tr.events.empty()) return std::nullopt;
  return tr.events.front();
}

}  // namespace detail

inline ProbeRecovery recover_probe(const Medium& m, const BoundaryCovector& g, const StepControl& ctrl = {}) {
  ProbeRecovery pr;
  pr.probe = g;
  auto direct = [&](Mode mode) -> std::optional<LensMapEntry> {
    auto r = try_trace_leg(m, g, mode, ctrl);
    if (auto* e = std::get_if<LensMapEntry>(&r)) return *e;
    pr.failures.push_back(std::string("direct ") + std::string(to_string(mode)) + ": " +
                          std::get<TraceFailure>(r).message);
    return std::nullopt;
  };
  pr.direct_S = direct(Mode::S);
  pr.direct_P = direct(Mode::P);

  try {
    const PolarizationFrame frame = polarization_frame(m, g);
    const Mat3 mute = mute_symbol(g);
    pr.muting_residual = muting_residual(frame, mute);

    // Muted source: polarization along the SH direction, f = M f.
    Eigen::SelfAdjointEigenSolver<Mat3> eig(mute);
    const CVec3 sh = eig.eigenvectors().col(2).cast<cplx>();
    pr.shear_source_modes = detail::launched_modes(frame, cauchy_data_symbol(m, g, sh));
    pr.recovered_S = detail::first_arrival(m, g, pr.shear_source_modes, ctrl, pr.failures);

    // Compressional source: polarization along xi_P, which lies in B_P^+.
    if (frame.p_hyperbolic) {
      const CVec3 a = frame.roots.P.xi / frame.roots.P.xi.norm();
      pr.comp_source_modes = detail::launched_modes(frame, cauchy_data_symbol(m, g, a));
      pr.recovered_P = detail::first_arrival(m, g, pr.comp_source_modes, ctrl, pr.failures);
    } else {
      pr.failures.push_back("compressional source: probe is not in H_P");
    }
  } catch (const Error& e) {
    pr.failures.push_back(e.what());
  }

  if (pr.direct_S && pr.recovered_S) pr.err_S = lens_discrepancy(pr.direct_S->out, pr.recovered_S->gamma);
  if (pr.direct_P && pr.recovered_P) pr.err_P = lens_discrepancy(pr.direct_P->out, pr.recovered_P->gamma);
  return pr;
}

inline RecoveryReport recover_lens_maps(const Medium& m, const std::vector<BoundaryCovector>& probes,
                                        const StepControl& ctrl = {}, unsigned workers = 1) {
  RecoveryReport rep;
  rep.probes.resize(probes.size());
  parallel_for(probes.size(), workers, [&](std::size_t i) { rep.probes[i] = recover_probe(m, probes[i], ctrl); });
  for (const auto& p : rep.probes) {
    if (!std::isnan(p.err_S)) {
      ++rep.recovered_S;
      rep.max_error_S = std::max(rep.max_error_S, p.err_S);
    }
    if (!std::isnan(p.err_P)) {
      ++rep.recovered_P;
      rep.max_error_P = std::max(rep.max_error_P, p.err_P);
    }
    if (!std::isnan(p.muting_residual)) rep.max_muting_residual = std::max(rep.max_muting_residual, p.muting_residual);
    if (p.recovered_S && p.recovered_P)
      rep.max_time_separation = std::max(rep.max_time_separation, std::abs(p.recovered_S->travel_time - p.recovered_P->travel_time));
  }
  return rep;
}

}  // namespace elastoray
