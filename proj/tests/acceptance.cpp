// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace elastoray;
using namespace testing_support;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [" << what << "]";
    }
  }
};

const ClassParams kParams{3.0, 0.2, 0.5};
const std::vector<Medium> kSymbolMedia{homogeneous(), constant_stress(), potential_stress()};

Vec3 random_interior(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec3 x;
  do x = Vec3(u(rng), u(rng), u(rng));
  while (x.norm() > 1.0);
  return x;
}

// 1. symbol factorization
void criterion_factorization(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> ut(-2.0, 2.0);
  double worst_prod = 0.0, worst_det = 0.0;
  std::size_t n = 0;
  for (const Medium& m : kSymbolMedia) {
    for (int i = 0; i < 3334; ++i, ++n) {
      const Vec3 x = random_interior(rng);
      const Vec3 xi(n01(rng), n01(rng), n01(rng));
      const auto ps = principal_symbol(m, x, ut(rng), xi);
      const double q = ps.qS * ps.qP, d = ps.qS * ps.qS * ps.qP;
      worst_prod = std::max(worst_prod,
                            (ps.ptilde * ps.p - q * Mat3::Identity()).cwiseAbs().maxCoeff() / std::max(1.0, std::abs(q)));
      worst_det = std::max(worst_det, std::abs(ps.p.determinant() - d) / std::max(1.0, std::abs(d)));
    }
  }
  const double t = seconds_since(t0);
  o.detail << "samples=" << n << " max_rel_product=" << worst_prod << " max_rel_det=" << worst_det << " time=" << t
           << "s";
  o.require(n >= 10000, "sample count");
  o.require(worst_prod <= 1e-10, "product");
  o.require(worst_det <= 1e-10, "determinant");
  o.require(t < 5.0, "runtime");
}

// 2. residue matrices vs contour quadrature, and the A1 relations
void criterion_residues(Outcome& o) {
  double worst_q = 0.0, worst_rel = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < kSymbolMedia.size(); ++k) {
    const Medium& m = kSymbolMedia[k];
    for (const auto& g : sample_covectors(m, k == 0 ? 34 : 33, 200 + k, any_region)) {
      ++n;
      const ResidueData r = residue_matrices(m, g);
      const QuadratureResidues q = quadrature_residues(m, g, r.roots.S.forward, r.roots.P.forward, 256);
      worst_q = std::max({worst_q, (r.A0 - q.A0).cwiseAbs().maxCoeff(), (r.A1 - q.A1).cwiseAbs().maxCoeff()});
      const CVec3 xs = r.roots.S.xi, xp = r.roots.P.xi;
      const CVec3 w(cplx(0.3, 0.1), cplx(-0.7, 0.0), cplx(0.2, 0.4));
      const CVec3 v = w - xp * (adot(xp, w) / adot(xp, xp));  // v . xi_P = 0
      const double s1 = std::max((r.A1 * v).norm(), std::abs(r.roots.S.forward) * (r.A0 * v).norm());
      const double s2 = std::max((r.A1 * xs).norm(), std::abs(r.roots.P.forward) * (r.A0 * xs).norm());
      worst_rel = std::max(worst_rel, (r.A1 * v - r.roots.S.forward * (r.A0 * v)).norm() / std::max(s1, 1e-300));
      worst_rel = std::max(worst_rel, (r.A1 * xs - r.roots.P.forward * (r.A0 * xs)).norm() / std::max(s2, 1e-300));
    }
  }
  o.detail << "covectors=" << n << " max_abs_quadrature=" << worst_q << " max_rel_A1_relation=" << worst_rel;
  o.require(n == 100, "count");
  o.require(worst_q <= 1e-8, "quadrature");
  o.require(worst_rel <= 1e-12, "A1 relations");
}

// 3. DN symbol, two routes, across regions; hand actions
void criterion_dn(Outcome& o) {
  double worst = 0.0;
  std::array<int, 3> per_region{0, 0, 0};
  const std::array<CombinedRegion, 3> regions{CombinedRegion::HyperbolicP, CombinedRegion::Mixed,
                                              CombinedRegion::EllipticS};
  for (int r = 0; r < 3; ++r) {
    for (std::size_t k = 0; k < kSymbolMedia.size(); ++k) {
      const int count = (r == 0 && k == 0) ? 12 : 11;
      const auto covs = sample_covectors(kSymbolMedia[k], count, 300 + 10 * r + k,
                                         [&](const RegionLabel& l, const BoundaryCovector&) { return l.combined == regions[r]; });
      for (const auto& g : covs) {
        worst = std::max(worst, dn_symbol(kSymbolMedia[k], g).route_discrepancy);
        ++per_region[r];
      }
    }
  }
  const Medium m = homogeneous();
  const BoundaryCovector g = make_boundary_covector(m.domain, 0.0, Vec3(0, 0, 1), 2.0, Vec3(1, 0, 0));
  const DNSymbol dn = dn_symbol(m, g);
  const CVec3 sh(0, 1, 0);
  const double sh_err = (dn.value * sh - std::sqrt(3.0) * sh).norm();
  const CVec3 a = CVec3(1.0, 0.0, 1.0 / std::sqrt(3.0)).normalized();
  const double p_err = (dn.value * a - CVec3(1.0, 0.0, std::sqrt(3.0))).norm();
  o.detail << "covectors(H_P,mixed,E_S)=(" << per_region[0] << "," << per_region[1] << "," << per_region[2]
           << ") max_rel_route_gap=" << worst << " SH_err=" << sh_err << " P_err=" << p_err;
  o.require(per_region[0] + per_region[1] + per_region[2] == 100, "count");
  o.require(worst <= 1e-10, "routes");
  o.require(sh_err <= 1e-10 && p_err <= 1e-10, "hand values");
}

// 4. Lopatinski margin
void criterion_lopatinski(Outcome& o) {
  for (std::size_t k = 0; k < kSymbolMedia.size(); ++k) {
    const LopatinskiReport a = lopatinski_margin(kSymbolMedia[k], kParams, 100000, 400 + k);
    const LopatinskiReport b = lopatinski_margin(kSymbolMedia[k], kParams, 200000, 400 + k);
    const double ratio = b.min_margin / a.min_margin;
    o.detail << " medium" << k << ":min=" << a.min_margin << ",doubled=" << b.min_margin << ",evaluated=" << a.evaluated;
    o.require(a.positive() && b.positive(), "positive");
    o.require(a.evaluated >= 90000, "evaluated");
    o.require(std::abs(ratio - 1.0) <= 0.1, "stability");
  }
}

// 5. polarization frames and muting
void criterion_polarization(Outcome& o) {
  const std::vector<Medium> media{homogeneous(), constant_stress(), potential_stress(), gaussian_bump()};
  double alg = 0.0, mute = 0.0, control = std::numeric_limits<double>::infinity();
  int frames = 0;
  bool ranks_ok = true;
  std::mt19937_64 rng(501);
  std::normal_distribution<double> n01;
  for (std::size_t k = 0; k < media.size(); ++k) {
    const auto covs = sample_covectors(media[k], 50, 500 + k, [](const RegionLabel& l, const BoundaryCovector& g) {
      return l.S == Region::Hyperbolic && g.xi.norm() > 1e-3 * std::abs(g.tau);
    });
    for (const auto& g : covs) {
      const PolarizationFrame f = polarization_frame(media[k], g);
      ++frames;
      std::vector<int> ranks;
      CMat6 sum = CMat6::Zero();
      for (const auto& b : f.blocks) {
        ranks.push_back(b.rank);
        sum += b.projector;
        alg = std::max(alg, spectral_norm(b.projector * b.projector - b.projector));
        for (const auto& c : f.blocks)
          if (&b != &c) alg = std::max(alg, spectral_norm(b.projector * c.projector));
      }
      alg = std::max(alg, spectral_norm(sum - CMat6::Identity()));
      const std::vector<int> expected = f.p_hyperbolic ? std::vector<int>{2, 2, 1, 1} : std::vector<int>{2, 2, 2};
      ranks_ok &= ranks == expected;
      const Mat3 m = mute_symbol(g);
      mute = std::max(mute, muting_residual(f, m));
      Mat3 d;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) d(i, j) = n01(rng);
      d = (d + d.transpose()).eval() / (d + d.transpose()).norm();
      control = std::min(control, muting_residual(f, m + 0.1 * d));
    }
  }
  o.detail << "frames=" << frames << " ranks_ok=" << ranks_ok << " max_projector_defect=" << alg
           << " max_muting_residual=" << mute << " min_perturbed_residual=" << control;
  o.require(ranks_ok, "ranks");
  o.require(alg <= 1e-10, "projector algebra");
  o.require(mute <= 1e-10, "muting");
  o.require(control > 1e-2, "negative control");
}

double incidence_angle(const Medium& m, const RayState& st) {
  const Vec3 v = -mode_matrix(m, st.mode, st.x).value * st.xi / st.tau;
  return std::acos(std::clamp(-v.normalized().dot(m.domain.normal(st.x)), -1.0, 1.0));
}

// 6. constant medium exactness
void criterion_constant_rays(Outcome& o) {
  const Medium m = homogeneous();
  const double cP = std::sqrt(3.0), critical = std::asin(1.0 / std::sqrt(3.0));
  double time_err = 0.0, snell_err = 0.0;
  int traced = 0, evanescent_ok = 0, evanescent_cases = 0, reflections = 0;
  for (Mode mode : kModes) {
    const auto fan = incidence_fan(m, mode, 50, 0.0, 1.4);
    for (const auto& g : fan) {
      const LensMapEntry e = trace_leg(m, g, mode);
      ++traced;
      const double c = mode == Mode::S ? 1.0 : cP;
      // chord/c with the chord from the geometric line along the launch velocity
      const RayState st = launch_state(m, g, mode);
      const Vec3 v = -st.xi / st.tau;
      const Vec3 exit = chord_exit(g.x, v);
      time_err = std::max(time_err, std::abs(e.travel_time - (exit - g.x).norm() / c));
      time_err = std::max(time_err, (e.out.x - exit).norm());

      const double theta = std::acos(std::clamp(-v.normalized().dot(m.domain.normal(g.x)), -1.0, 1.0));
      const ReflectionResult r = reflect(m, e.exit_state);
      const double sin_other = mode == Mode::S ? std::sin(theta) * cP : std::sin(theta) / cP;
      for (const RayState& b : r.branches) {
        ++reflections;
        const double expected = b.mode == mode ? theta : std::asin(sin_other);
        snell_err = std::max(snell_err, std::abs(incidence_angle(m, b) - expected));
      }
      if (mode == Mode::S && std::abs(theta - critical) > 1e-6) {
        ++evanescent_cases;
        const bool has_p = std::any_of(r.branches.begin(), r.branches.end(), [](const RayState& b) { return b.mode == Mode::P; });
        const bool noted = std::any_of(r.notes.begin(), r.notes.end(), [](const BranchNote& n) {
          return n.mode == Mode::P && n.status == BranchStatus::Evanescent;
        });
        if (theta > critical ? (!has_p && noted) : has_p) ++evanescent_ok;
      }
    }
  }
  o.detail << "legs=" << traced << " max_time_or_exit_err=" << time_err << " reflections=" << reflections
           << " max_snell_err=" << snell_err << " evanescent_classification=" << evanescent_ok << "/" << evanescent_cases;
  o.require(traced == 100, "count");
  o.require(time_err <= 1e-8, "travel times");
  o.require(snell_err <= 1e-8, "Snell");
  o.require(evanescent_ok == evanescent_cases && evanescent_cases > 0, "evanescent");
}

// 7. conservation
void criterion_conservation(Outcome& o) {
  StepControl ctrl;
  ctrl.record_samples = true;
  double ham = 0.0, refl = 0.0;
  bool tau_exact = true;
  std::size_t samples = 0, legs = 0;
  for (const Medium& m : {potential_stress(), gaussian_bump(), constant_stress()}) {
    for (Mode mode : kModes) {
      for (const auto& g : incidence_fan(m, mode, 10, 0.0, 1.3)) {
        const TransportResult tr = broken_transport(m, g, {mode}, 2, std::numeric_limits<double>::infinity(), ctrl);
        for (const auto& leg : tr.legs) {
          ++legs;
          tau_exact &= leg.out.tau == g.tau && leg.exit_state.tau == g.tau;
          for (const auto& s : leg.samples) {
            ++samples;
            const double h = g.tau * g.tau - metric_inv_unchecked(mode_matrix(m, leg.mode, s.x), s.xi).value;
            ham = std::max(ham, std::abs(h) / (g.tau * g.tau));
          }
          const ReflectionResult r = reflect(m, leg.exit_state);
          for (const RayState& b : r.branches) {
            const Vec3 nu = m.domain.normal(b.x);
            const Vec3 tan_b = b.xi - b.xi.dot(nu) * nu;
            tau_exact &= b.tau == g.tau;
            refl = std::max({refl, std::abs(b.t - leg.exit_state.t), (b.x - leg.exit_state.x).norm(),
                             (tan_b - r.gamma.xi).norm() / std::max(1.0, r.gamma.xi.norm())});
          }
        }
      }
    }
  }
  o.detail << "legs=" << legs << " samples=" << samples << " max_rel_hamiltonian=" << ham << " tau_exact=" << tau_exact
           << " max_reflection_defect=" << refl;
  o.require(ham <= 1e-9, "hamiltonian");
  o.require(tau_exact, "tau");
  o.require(refl <= 4.0 * std::numeric_limits<double>::epsilon(), "reflection");
}

// 8. generating function identity
void criterion_generating_function(Outcome& o) {
  const Medium m = gaussian_bump();
  std::mt19937_64 rng(801);
  double worst = 0.0;
  int pairs = 0, attempts = 0;
  while (pairs < 20 && attempts < 60) {
    ++attempts;
    const Vec3 x = random_boundary_point(m.domain, rng), y = random_boundary_point(m.domain, rng);
    if ((x - y).norm() < 0.3 || (x + y).norm() < 0.3) continue;  // skip near-coincident and near-antipodal pairs
    ShootingOptions opt;
    opt.n_starts = 32;
    opt.seed = 800 + attempts;
    const DistanceResult base = boundary_distance(m, Mode::S, x, y, opt);
    if (!base.connected) continue;
    ShootingOptions warm = opt;
    warm.initial_direction = base.direction;
    Vec3 grad = Vec3::Zero();
    bool ok = true;
    for (const Vec3& e : m.domain.tangent_basis(y)) {
      const Vec3 yp = m.domain.project_to_boundary(y + 1e-4 * e), ym = m.domain.project_to_boundary(y - 1e-4 * e);
      const DistanceResult dp = boundary_distance(m, Mode::S, x, yp, warm);
      const DistanceResult dm = boundary_distance(m, Mode::S, x, ym, warm);
      ok &= dp.connected && dm.connected;
      grad += (dp.distance - dm.distance) / (yp - ym).norm() * e;
    }
    if (!ok) continue;
    const Vec3 expected = -base.exit.xi / base.exit.tau;
    worst = std::max(worst, (grad - expected).norm() / expected.norm());
    ++pairs;
  }
  o.detail << "pairs=" << pairs << " max_rel_gradient_err=" << worst;
  o.require(pairs == 20, "pairs");
  o.require(worst <= 1e-3, "gradient");
}

// 9. lens-map recovery
void criterion_recovery(Outcome& o) {
  const auto t0 = Clock::now();
  const unsigned workers = worker_count();
  const std::vector<std::pair<std::string, Medium>> media{{"conformal", gaussian_bump()},
                                                          {"anisotropic", constant_stress()}};
  for (const auto& [name, m] : media) {
    const auto probes = incidence_fan(m, Mode::P, 50, 0.1, 1.0);
    const RecoveryReport r = recover_lens_maps(m, probes, {}, workers);
    o.detail << " " << name << ":S=" << r.recovered_S << "/50,P=" << r.recovered_P << "/50,err_S=" << r.max_error_S
             << ",err_P=" << r.max_error_P << ",max|tS-tP|=" << r.max_time_separation;
    o.require(r.recovered_S == 50 && r.recovered_P == 50, name + " recovered");
    o.require(r.max_error_S <= 1e-6 && r.max_error_P <= 1e-6, name + " error");
    o.require(r.max_time_separation > 0.1, name + " separation");
  }
  const double t = seconds_since(t0);
  o.detail << " time=" << t << "s";
  o.require(t < 60.0, "runtime");
}

// 10. companion symbol
void criterion_companion(Outcome& o) {
  double prod = 0.0, eig = 0.0;
  int n = 0, kernel_bad = 0;
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (std::size_t k = 0; k < kSymbolMedia.size(); ++k) {
    for (const auto& g : sample_covectors(kSymbolMedia[k], k == 0 ? 34 : 33, 1000 + k, any_region)) {
      const CompanionReport r = companion_symbol_check(kSymbolMedia[k], g, cplx(u(rng), u(rng)));
      ++n;
      prod = std::max(prod, r.product_residual);
      eig = std::max(eig, r.eigenvalue_mismatch);
      for (const auto& kc : r.kernels) kernel_bad += kc.found_dim != kc.expected_dim || kc.span_residual > 1e-9;
    }
  }
  o.detail << "covectors=" << n << " max_rel_product=" << prod << " max_rel_eigen_mismatch=" << eig
           << " kernel_failures=" << kernel_bad;
  o.require(n == 100, "count");
  o.require(prod <= 1e-12, "product");
  o.require(eig <= 1e-10, "eigenvalues");
  o.require(kernel_bad == 0, "kernels");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"1 symbol factorization", criterion_factorization},
      {"2 residue quadrature oracle", criterion_residues},
      {"3 DN dual-route agreement", criterion_dn},
      {"4 Lopatinski margin", criterion_lopatinski},
      {"5 polarization frames and muting", criterion_polarization},
      {"6 constant-medium ray exactness", criterion_constant_rays},
      {"7 conservation", criterion_conservation},
      {"8 generating-function identity", criterion_generating_function},
      {"9 lens-map recovery", criterion_recovery},
      {"10 companion-symbol oracle", criterion_companion},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " exception: " << e.what();
    }
    std::printf("%s  criterion %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
