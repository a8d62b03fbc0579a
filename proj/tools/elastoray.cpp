// Command-line driver: every subcommand writes a JSON report
// {command, medium_digest, params, results, failures} and exits nonzero iff
// one of its asserted checks failed.

#include "elastoray/elastoray.hpp"
#include "elastoray/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>

using namespace elastoray;

namespace {

struct Options {
  std::string medium_path;
  std::string out_path;
  std::string csv_path;
  std::uint64_t seed = 1;
  double tol = -1.0;  // subcommand default when negative
  std::size_t fan_n = 10;
  double tau = 1.0;
  double delta = -1.0;  // from the medium file when negative
  int depth = 3;
  double tmax = std::numeric_limits<double>::infinity();
  std::vector<double> ratios{0.3, 0.5, 1.0 / std::numbers::sqrt3, 0.8, 1.2, 2.0};
  std::string mode = "S";
  std::vector<double> point{0.0, 0.0, -1.0};
  std::vector<double> direction;
  double angle = 0.0;
  double min_angle = 0.0;
  double max_angle = 45.0;
  int grid = 21;
  std::size_t samples = 10000;
  int n_starts = 64;
};

struct Report {
  std::string command;
  json params = json::object();
  json results = json::object();
  json failures = json::array();

  void fail(const std::string& check, const std::string& detail) {
    failures.push_back({{"check", check}, {"detail", detail}});
  }
};

Mode parse_mode(const std::string& s) {
  if (s == "S" || s == "s") return Mode::S;
  if (s == "P" || s == "p") return Mode::P;
  throw Error(ErrorCode::Config, "mode must be S or P");
}

double tol_or(const Options& o, double fallback) { return o.tol > 0.0 ? o.tol : fallback; }

MediumFile load(const Options& o) {
  if (o.medium_path.empty()) {
    MediumFile mf;
    mf.source = json{{"builtin", "homogeneous"}};
    return mf;
  }
  MediumFile mf = load_medium(o.medium_path);
  validate_medium(mf.medium);
  return mf;
}

ClassParams params_of(const MediumFile& mf, const Options& o) {
  ClassParams p = mf.params;
  if (o.delta > 0.0) p.delta = o.delta;
  p.validate();
  return p;
}

std::vector<Vec3> fibonacci_points(const Domain& d, std::size_t n) {
  std::vector<Vec3> pts;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = golden * static_cast<double>(i);
    pts.push_back(d.boundary_point(Vec3(r * std::cos(a), r * std::sin(a), z)));
  }
  return pts;
}

// Covectors at fan_n boundary points, one per |xi_|| / tau ratio.
std::vector<BoundaryCovector> covector_grid(const Medium& m, const Options& o) {
  std::vector<BoundaryCovector> out;
  for (const Vec3& x : fibonacci_points(m.domain, o.fan_n)) {
    const Vec3 e = m.domain.tangent_basis(x)[0];
    for (double r : o.ratios) out.push_back(make_boundary_covector(m.domain, 0.0, x, o.tau, r * std::abs(o.tau) * e));
  }
  return out;
}

json label_json(const RegionLabel& l) {
  return {{"S", std::string(to_string(l.S))},
          {"P", std::string(to_string(l.P))},
          {"combined", std::string(to_string(l.combined))},
          {"gamma_delta", l.in_gamma_delta},
          {"rel_discriminant_S", l.rel_disc_S},
          {"rel_discriminant_P", l.rel_disc_P}};
}

// ---------------------------------------------------------------------------

void cmd_validate(const MediumFile& mf, const Options& o, Report& rep) {
  const ClassParams p = params_of(mf, o);
  const ClassReport c = check_class_membership(mf.medium, p, o.grid);
  rep.params = {{"L", p.L}, {"eps", p.eps}, {"delta", p.delta}, {"grid", o.grid}};
  rep.results = {{"points", c.points},
                 {"positive", c.positive},
                 {"positivity_margin", c.positivity_margin},
                 {"lame_bound", c.lame_bound},
                 {"lame_margin", c.lame_margin},
                 {"stress_small", c.stress_small},
                 {"stress_margin", c.stress_margin},
                 {"metric_positive", c.metric_positive},
                 {"metric_margin", c.metric_margin},
                 {"divergence_free", c.divergence_free},
                 {"max_divergence", c.max_divergence},
                 {"worst_lame_point", to_json(c.worst_lame_point)},
                 {"worst_stress_point", to_json(c.worst_stress_point)},
                 {"worst_metric_point", to_json(c.worst_metric_point)}};
  if (!c.positive) rep.fail("positivity", "rho, lambda or mu is not positive");
  if (!c.lame_bound) rep.fail("lame_bound", "lambda + 2 mu, 1/mu or 1/rho exceeds L");
  if (!c.stress_small) rep.fail("stress_small", "|R| exceeds eps mu");
  if (!c.metric_positive) rep.fail("metric_positive", "mu + lambda_min(R) is not positive");
  if (!c.divergence_free) rep.fail("divergence_free", "div R exceeds 1e-10");
}

void cmd_classify(const MediumFile& mf, const Options& o, Report& rep) {
  const ClassParams p = params_of(mf, o);
  const double gtol = tol_or(o, kGlancingTolerance);
  rep.params = {{"fan_n", o.fan_n}, {"tau", o.tau}, {"ratios", o.ratios}, {"delta", p.delta}, {"glancing_tol", gtol}};
  std::ofstream csv;
  if (!o.csv_path.empty()) {
    csv.open(o.csv_path);
    write_covector_csv_header(csv);
  }
  json rows = json::array();
  for (const auto& g : covector_grid(mf.medium, o)) {
    const RegionLabel l = classify(mf.medium, g, p, gtol);
    json row = to_json(g);
    row["label"] = label_json(l);
    rows.push_back(row);
    if (csv) write_covector_csv_row(csv, g, to_string(l.combined), std::min(l.rel_disc_S, l.rel_disc_P));
    // the region inclusions E_S in E_P and H_P in H_S
    if ((l.S == Region::Elliptic && l.P != Region::Elliptic) || (l.P == Region::Hyperbolic && l.S != Region::Hyperbolic))
      rep.fail("region_inclusion", "labels violate E_S in E_P / H_P in H_S");
  }
  rep.results["rows"] = rows;
}

void cmd_roots(const MediumFile& mf, const Options& o, Report& rep) {
  const ClassParams p = params_of(mf, o);
  rep.params = {{"fan_n", o.fan_n}, {"tau", o.tau}, {"ratios", o.ratios}, {"delta", p.delta},
                {"samples", o.samples}, {"seed", o.seed}};
  json rows = json::array();
  for (const auto& g : covector_grid(mf.medium, o)) {
    json row = to_json(g);
    try {
      const CharRoots r = char_roots(mf.medium, g);
      const CoefficientSample cs = mf.medium.sample(g.x);
      for (Mode mode : kModes) {
        const ModeRoots& mr = r[mode];
        const ModeQuadratic q = mode_quadratic(cs, mode, g);
        const double resid = std::abs(q.q(mr.forward)) / (q.rho * q.scale / q.a);
        row[std::string(to_string(mode))] = {{"region", std::string(to_string(mr.region))},
                                             {"forward", to_json(mr.forward)},
                                             {"backward", to_json(mr.backward)},
                                             {"c", to_json(mr.c)},
                                             {"residual", resid}};
        if (resid > 1e-10) rep.fail("root_residual", "selected root residual above 1e-10");
        if (!mr.real && !(mr.forward.imag() > 0.0)) rep.fail("root_selection", "complex root without Im z > 0");
      }
      row["lopatinski"] = to_json(r.lopatinski);
      row["normalized_lopatinski"] = r.normalized_lopatinski();
      row["glancing"] = false;
    } catch (const GlancingError& e) {
      row["glancing"] = true;
      row["discriminant"] = e.discriminant();
    }
    rows.push_back(row);
  }
  rep.results["rows"] = rows;
  const LopatinskiReport lr = lopatinski_margin(mf.medium, p, o.samples, o.seed);
  rep.results["lopatinski"] = {{"requested", lr.requested},        {"evaluated", lr.evaluated},
                               {"skipped", lr.skipped},            {"min_margin", lr.min_margin},
                               {"min_hyperbolic", lr.min_hyperbolic}, {"min_mixed", lr.min_mixed},
                               {"min_elliptic", lr.min_elliptic}};
  if (lr.argmin) rep.results["lopatinski"]["argmin"] = to_json(*lr.argmin);
  if (!lr.positive()) rep.fail("lopatinski", "no positive Lopatinski margin");
}

void cmd_dn(const MediumFile& mf, const Options& o, Report& rep) {
  const double tol = tol_or(o, 1e-10);
  rep.params = {{"fan_n", o.fan_n}, {"tau", o.tau}, {"ratios", o.ratios}, {"tol", tol}};
  json rows = json::array();
  double worst = 0.0;
  for (const auto& g : covector_grid(mf.medium, o)) {
    json row = to_json(g);
    try {
      const DNSymbol dn = dn_symbol(mf.medium, g);
      row["dn"] = to_json(dn.value);
      row["route_discrepancy"] = dn.route_discrepancy;
      row["A0_condition"] = dn.residue.A0_condition;
      worst = std::max(worst, dn.route_discrepancy);
    } catch (const Error& e) {
      row["skipped"] = std::string(to_string(e.code()));
    }
    rows.push_back(row);
  }
  rep.results["rows"] = rows;
  rep.results["max_route_discrepancy"] = worst;
  rep.results["normal_derivative_sign"] = normal_derivative_sign();
  if (worst > tol) rep.fail("dn_dual_route", "route discrepancy " + std::to_string(worst));
}

void cmd_frame(const MediumFile& mf, const Options& o, Report& rep) {
  const double tol = tol_or(o, 1e-10);
  rep.params = {{"fan_n", o.fan_n}, {"tau", o.tau}, {"ratios", o.ratios}, {"tol", tol}};
  json rows = json::array();
  double worst_mute = 0.0, worst_alg = 0.0;
  for (const auto& g : covector_grid(mf.medium, o)) {
    json row = to_json(g);
    try {
      const PolarizationFrame f = polarization_frame(mf.medium, g);
      json ranks = json::object();
      CMat6 sum = CMat6::Zero();
      for (const auto& b : f.blocks) {
        ranks[b.name] = b.rank;
        sum += b.projector;
        worst_alg = std::max(worst_alg, spectral_norm(b.projector * b.projector - b.projector));
      }
      worst_alg = std::max(worst_alg, spectral_norm(sum - CMat6::Identity()));
      row["ranks"] = ranks;
      row["condition"] = f.condition;
      try {
        const double mr = muting_residual(f, mute_symbol(g));
        row["muting_residual"] = mr;
        worst_mute = std::max(worst_mute, mr);
      } catch (const Error& e) {
        row["muting_residual"] = std::string(to_string(e.code()));
      }
    } catch (const Error& e) {
      row["skipped"] = std::string(to_string(e.code()));
    }
    rows.push_back(row);
  }
  rep.results["rows"] = rows;
  rep.results["max_muting_residual"] = worst_mute;
  rep.results["max_projector_defect"] = worst_alg;
  if (worst_mute > tol) rep.fail("muting_annihilation", "residual " + std::to_string(worst_mute));
  if (worst_alg > tol) rep.fail("projector_algebra", "defect " + std::to_string(worst_alg));
}

BoundaryCovector single_covector(const Medium& m, const Options& o, Mode mode) {
  if (o.point.size() != 3) throw Error(ErrorCode::Config, "--point needs three values");
  const Vec3 x = m.domain.project_to_boundary(Vec3(o.point[0], o.point[1], o.point[2]));
  const Vec3 nu = m.domain.normal(x);
  Vec3 d;
  if (!o.direction.empty()) {
    if (o.direction.size() != 3) throw Error(ErrorCode::Config, "--direction needs three values");
    d = Vec3(o.direction[0], o.direction[1], o.direction[2]);
  } else {
    const double a = o.angle * std::numbers::pi / 180.0;
    d = -std::cos(a) * nu + std::sin(a) * m.domain.tangent_basis(x)[0];
  }
  return covector_from_direction(m, mode, 0.0, x, o.tau, d);
}

void cmd_trace(const MediumFile& mf, const Options& o, Report& rep) {
  const Mode mode = parse_mode(o.mode);
  const BoundaryCovector g = single_covector(mf.medium, o, mode);
  rep.params = {{"mode", o.mode}, {"point", o.point}, {"direction", o.direction}, {"angle", o.angle},
                {"tau", o.tau},   {"depth", o.depth}};
  if (std::isfinite(o.tmax)) rep.params["tmax"] = o.tmax;
  StepControl ctrl;
  ctrl.record_samples = !o.csv_path.empty();
  const double htol = tol_or(o, ctrl.hamiltonian_tol);
  rep.results["gamma_in"] = to_json(g);
  if (o.depth <= 0) {
    const LensMapEntry e = trace_leg(mf.medium, g, mode, ctrl);
    rep.results["leg"] = to_json(e);
    if (!o.csv_path.empty()) {
      std::ofstream csv(o.csv_path);
      write_samples_csv(csv, e.samples);
    }
    if (e.max_hamiltonian_residual > htol) rep.fail("hamiltonian", "residual above tolerance");
    return;
  }
  const TransportResult tr = broken_transport(mf.medium, g, {mode}, o.depth, o.tmax, ctrl);
  json events = json::array(), issues = json::array(), legs = json::array();
  for (const auto& e : tr.events) events.push_back(to_json(e));
  for (const auto& i : tr.issues) issues.push_back({{"path", i.path}, {"kind", i.kind}, {"t", i.t}});
  for (const auto& l : tr.legs) {
    legs.push_back(to_json(l));
    if (l.max_hamiltonian_residual > htol) rep.fail("hamiltonian", "residual above tolerance");
  }
  rep.results["events"] = events;
  rep.results["issues"] = issues;
  rep.results["legs"] = legs;
  if (!o.csv_path.empty()) {
    std::ofstream csv(o.csv_path);
    csv << "leg,mode,t,x1,x2,x3\n" << std::setprecision(17);
    for (std::size_t k = 0; k < tr.legs.size(); ++k)
      for (const BoundaryCovector& b : {tr.legs[k].in, tr.legs[k].out})
        csv << k << ',' << to_string(tr.legs[k].mode) << ',' << b.t << ',' << b.x(0) << ',' << b.x(1) << ','
            << b.x(2) << '\n';
  }
}

void cmd_lensmap(const MediumFile& mf, const Options& o, Report& rep) {
  const Mode mode = parse_mode(o.mode);
  const double deg = std::numbers::pi / 180.0;
  const auto fan = incidence_fan(mf.medium, mode, o.fan_n, o.min_angle * deg, o.max_angle * deg, o.tau);
  rep.params = {{"mode", o.mode}, {"fan_n", o.fan_n}, {"min_angle", o.min_angle}, {"max_angle", o.max_angle},
                {"tau", o.tau}};
  StepControl ctrl;
  const double htol = tol_or(o, ctrl.hamiltonian_tol);
  const auto table = lens_map_table(mf.medium, mode, fan, ctrl, worker_count());
  json entries = json::array();
  std::size_t ok = 0;
  for (const auto& r : table) {
    entries.push_back(to_json(r));
    if (const auto* e = std::get_if<LensMapEntry>(&r)) {
      ++ok;
      if (e->max_hamiltonian_residual > htol) rep.fail("hamiltonian", "residual above tolerance");
    }
  }
  rep.results["entries"] = entries;
  rep.results["traced"] = ok;
  // homogeneity spot check on the first traced entry
  for (const auto& r : table) {
    const auto* e = std::get_if<LensMapEntry>(&r);
    if (!e) continue;
    BoundaryCovector g2 = e->in;
    g2.tau *= 2.0;
    g2.xi *= 2.0;
    const LensMapEntry e2 = trace_leg(mf.medium, g2, mode, ctrl);
    const double dev = std::max({(e2.out.x - e->out.x).norm(), (e2.out.xi - 2.0 * e->out.xi).norm(),
                                 std::abs(e2.travel_time - e->travel_time)});
    rep.results["homogeneity_deviation"] = dev;
    if (dev > 1e-8) rep.fail("homogeneity", "scaled covector changes the lens map");
    break;
  }
  if (!o.csv_path.empty()) {
    std::ofstream csv(o.csv_path);
    write_lens_map_csv(csv, table);
  }
}

void cmd_distance(const MediumFile& mf, const Options& o, Report& rep) {
  const Mode mode = parse_mode(o.mode);
  const auto pts = fibonacci_points(mf.medium.domain, o.fan_n);
  rep.params = {{"mode", o.mode}, {"fan_n", o.fan_n}, {"n_starts", o.n_starts}, {"seed", o.seed}};
  const std::size_t n = pts.size();
  std::vector<DistanceResult> res(n * n);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) pairs.emplace_back(i, j);
  parallel_for(pairs.size(), worker_count(), [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    ShootingOptions so;
    so.n_starts = o.n_starts;
    so.seed = o.seed + 7919 * k;
    res[i * n + j] = boundary_distance(mf.medium, mode, pts[i], pts[j], so);
  });
  json matrix = json::array();
  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        row.push_back(0.0);
        continue;
      }
      const auto& r = res[i * n + j];
      row.push_back(r.connected ? json(r.distance) : json(nullptr));
      const auto& rt = res[j * n + i];
      if (r.connected && rt.connected) asym = std::max(asym, std::abs(r.distance - rt.distance));
    }
    matrix.push_back(row);
  }
  json points = json::array();
  for (const auto& p : pts) points.push_back(to_json(p));
  rep.results["points"] = points;
  rep.results["distance"] = matrix;
  rep.results["max_asymmetry"] = asym;
  if (asym > tol_or(o, 1e-6)) rep.fail("symmetry", "d(x,y) != d(y,x)");
}

void cmd_recover(const MediumFile& mf, const Options& o, Report& rep) {
  const double tol = tol_or(o, 1e-6);
  const double deg = std::numbers::pi / 180.0;
  const double lo = std::max(o.min_angle, 5.0), hi = o.max_angle;
  const auto probes = incidence_fan(mf.medium, Mode::P, o.fan_n, lo * deg, hi * deg, std::abs(o.tau));
  rep.params = {{"fan_n", o.fan_n}, {"min_angle", lo}, {"max_angle", hi}, {"tau", std::abs(o.tau)}, {"tol", tol}};
  const RecoveryReport rr = recover_lens_maps(mf.medium, probes, StepControl{}, worker_count());
  json rows = json::array();
  for (const auto& p : rr.probes) {
    json row = {{"probe", to_json(p.probe)}};
    if (p.recovered_S) row["recovered_S"] = to_json(p.recovered_S->gamma);
    if (p.recovered_P) row["recovered_P"] = to_json(p.recovered_P->gamma);
    if (p.direct_S) row["direct_S"] = to_json(p.direct_S->out);
    if (p.direct_P) row["direct_P"] = to_json(p.direct_P->out);
    row["error_S"] = std::isnan(p.err_S) ? json(nullptr) : json(p.err_S);
    row["error_P"] = std::isnan(p.err_P) ? json(nullptr) : json(p.err_P);
    row["muting_residual"] = std::isnan(p.muting_residual) ? json(nullptr) : json(p.muting_residual);
    json sm = json::array(), cm = json::array();
    for (Mode m : p.shear_source_modes) sm.push_back(std::string(to_string(m)));
    for (Mode m : p.comp_source_modes) cm.push_back(std::string(to_string(m)));
    row["shear_source_modes"] = sm;
    row["compressional_source_modes"] = cm;
    row["failures"] = p.failures;
    rows.push_back(row);
  }
  rep.results["probes"] = rows;
  rep.results["recovered_S"] = rr.recovered_S;
  rep.results["recovered_P"] = rr.recovered_P;
  rep.results["max_error_S"] = rr.max_error_S;
  rep.results["max_error_P"] = rr.max_error_P;
  rep.results["max_muting_residual"] = rr.max_muting_residual;
  rep.results["max_time_separation"] = rr.max_time_separation;
  if (rr.recovered_S != probes.size()) rep.fail("recovered_S", "not every shear lens-map value was recovered");
  if (rr.recovered_P != probes.size()) rep.fail("recovered_P", "not every compressional lens-map value was recovered");
  if (rr.max_error_S > tol) rep.fail("error_S", std::to_string(rr.max_error_S));
  if (rr.max_error_P > tol) rep.fail("error_P", std::to_string(rr.max_error_P));
  if (rr.max_muting_residual > 1e-10) rep.fail("muting", std::to_string(rr.max_muting_residual));
}

void cmd_selftest(const MediumFile& mf, const Options& o, Report& rep) {
  const Medium& m = mf.medium;
  const ClassParams p = params_of(mf, o);
  std::mt19937_64 rng(o.seed);
  const std::size_t n = std::max<std::size_t>(o.fan_n, 1);
  rep.params = {{"samples", n}, {"seed", o.seed}, {"delta", p.delta}};
  json checks = json::object();
  auto record = [&](const std::string& name, double value, double limit) {
    const bool pass = value <= limit;
    checks[name] = {{"value", value}, {"limit", limit}, {"pass", pass}};
    if (!pass) rep.fail(name, std::to_string(value) + " > " + std::to_string(limit));
  };

  // symbol factorization at random interior points
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double fact = 0.0;
  for (std::size_t i = 0; i < 20 * n; ++i) {
    Vec3 x(u(rng), u(rng), u(rng));
    x = 0.9 * x.cwiseProduct(m.domain.semi_axes()) / std::max(1.0, std::sqrt(m.domain.phi(x) + 1.0));
    const Vec3 xi(u(rng), u(rng), u(rng));
    const double tau = 2.0 * u(rng);
    const auto ps = principal_symbol(m.sample(x), tau, xi);
    const double sc = std::max(1.0, std::abs(ps.qS * ps.qP));
    fact = std::max(fact, (ps.ptilde * ps.p - ps.qS * ps.qP * Mat3::Identity()).cwiseAbs().maxCoeff() / sc);
    fact = std::max(fact, std::abs(ps.p.determinant() - ps.qS * ps.qS * ps.qP) / std::max(1.0, std::abs(ps.qS * ps.qS * ps.qP)));
  }
  record("symbol_factorization", fact, 1e-10);

  double res_err = 0.0, dn_err = 0.0, comp = 0.0, mute = 0.0, proj = 0.0;
  std::size_t used = 0;
  while (used < n) {
    const BoundaryCovector g = random_gamma_delta_covector(m.domain, p.delta, rng);
    if (classify(m, g, p, 1e-3).combined == CombinedRegion::Glancing) continue;
    ++used;
    const DNSymbol dn = dn_symbol(m, g);
    dn_err = std::max(dn_err, dn.route_discrepancy);
    const ContourResidues cr = contour_residues(m, g);
    res_err = std::max({res_err, (cr.A0 - dn.residue.A0).cwiseAbs().maxCoeff(),
                        (cr.A1 - dn.residue.A1).cwiseAbs().maxCoeff()});
    const CompanionReport c = companion_symbol_check(m, g, cplx(0.3, 0.7));
    comp = std::max({comp, c.product_residual, c.eigenvalue_mismatch});
    if (dn.residue.roots.S.real && g.xi.norm() > 1e-6) {
      const PolarizationFrame f = polarization_frame(m, g);
      CMat6 sum = CMat6::Zero();
      for (const auto& b : f.blocks) {
        sum += b.projector;
        proj = std::max(proj, spectral_norm(b.projector * b.projector - b.projector));
      }
      proj = std::max(proj, spectral_norm(sum - CMat6::Identity()));
      mute = std::max(mute, muting_residual(f, mute_symbol(g)));
    }
  }
  record("residue_quadrature", res_err, 1e-8);
  record("dn_dual_route", dn_err, 1e-10);
  record("companion_symbol", comp, 1e-10);
  record("projector_algebra", proj, 1e-10);
  record("muting_annihilation", mute, 1e-10);

  // ray invariants on a small fan
  const auto fan = incidence_fan(m, Mode::S, std::min<std::size_t>(n, 8), 0.1, 0.7);
  double ham = 0.0, rev = 0.0;
  for (const auto& g : fan) {
    const LensMapEntry e = trace_leg(m, g, Mode::S);
    ham = std::max(ham, e.max_hamiltonian_residual);
    BoundaryCovector back = e.out;
    back.xi = -back.xi;
    const LensMapEntry r = trace_leg(m, back, Mode::S);
    rev = std::max(rev, (r.out.x - g.x).norm());
  }
  record("hamiltonian_residual", ham, 1e-9);
  record("time_reversal", rev, 1e-8);
  rep.results["checks"] = checks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ray and symbol toolkit for isotropic elastodynamics with residual stress"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--medium", o.medium_path, "medium JSON file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_path, "JSON report path (default: stdout)");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--tol", o.tol, "tolerance of the asserted check")->check(CLI::PositiveNumber);
    sub->add_option("--csv", o.csv_path, "optional CSV output");
  };
  auto fan = [&](CLI::App* sub) {
    sub->add_option("--fan-n", o.fan_n, "fan size")->check(CLI::PositiveNumber);
    sub->add_option("--tau", o.tau, "frequency tau");
    sub->add_option("--delta", o.delta, "Gamma_delta parameter")->check(CLI::PositiveNumber);
  };
  auto grid = [&](CLI::App* sub) {
    common(sub);
    fan(sub);
    sub->add_option("--ratios", o.ratios, "|xi_|| / |tau| values per base point");
  };

  std::vector<std::pair<CLI::App*, void (*)(const MediumFile&, const Options&, Report&)>> subs;
  auto* validate = app.add_subcommand("validate", "class membership, positivity and divergence report");
  common(validate);
  validate->add_option("--grid", o.grid, "grid points per axis")->check(CLI::Range(5, 201));
  validate->add_option("--delta", o.delta, "Gamma_delta parameter")->check(CLI::PositiveNumber);
  subs.emplace_back(validate, cmd_validate);

  auto* classify_cmd = app.add_subcommand("classify", "region labels over a covector grid");
  grid(classify_cmd);
  subs.emplace_back(classify_cmd, cmd_classify);

  auto* roots = app.add_subcommand("roots", "characteristic roots and Lopatinski margins");
  grid(roots);
  roots->add_option("--samples", o.samples, "Lopatinski sample count")->check(CLI::PositiveNumber);
  subs.emplace_back(roots, cmd_roots);

  auto* dn = app.add_subcommand("dn", "Dirichlet-to-Neumann symbol, dual-route residuals");
  grid(dn);
  subs.emplace_back(dn, cmd_dn);

  auto* frame = app.add_subcommand("frame", "polarization ranks and muting residuals");
  grid(frame);
  subs.emplace_back(frame, cmd_frame);

  auto* trace = app.add_subcommand("trace", "single leg or broken ray");
  common(trace);
  fan(trace);
  trace->add_option("--mode", o.mode, "S or P");
  trace->add_option("--point", o.point, "entry point (projected to the boundary)")->expected(3);
  trace->add_option("--direction", o.direction, "interior launch direction")->expected(3);
  trace->add_option("--angle", o.angle, "incidence angle from the inward normal, degrees");
  trace->add_option("--depth", o.depth, "reflections to follow (0: single leg)")->check(CLI::NonNegativeNumber);
  trace->add_option("--tmax", o.tmax, "time limit")->check(CLI::PositiveNumber);
  subs.emplace_back(trace, cmd_trace);

  auto* lensmap = app.add_subcommand("lensmap", "lens-map table over an incidence fan");
  common(lensmap);
  fan(lensmap);
  lensmap->add_option("--mode", o.mode, "S or P");
  lensmap->add_option("--min-angle", o.min_angle, "degrees")->check(CLI::Range(0.0, 89.0));
  lensmap->add_option("--max-angle", o.max_angle, "degrees")->check(CLI::Range(0.0, 89.0));
  subs.emplace_back(lensmap, cmd_lensmap);

  auto* distance = app.add_subcommand("distance", "boundary distance matrix by shooting");
  common(distance);
  fan(distance);
  distance->add_option("--mode", o.mode, "S or P");
  distance->add_option("--starts", o.n_starts, "shooting starts per pair")->check(CLI::PositiveNumber);
  subs.emplace_back(distance, cmd_distance);

  auto* recover = app.add_subcommand("recover", "lens-map recovery from first arrivals");
  common(recover);
  fan(recover);
  recover->add_option("--min-angle", o.min_angle, "degrees")->check(CLI::Range(0.0, 89.0));
  recover->add_option("--max-angle", o.max_angle, "degrees")->check(CLI::Range(0.0, 89.0));
  subs.emplace_back(recover, cmd_recover);

  auto* selftest = app.add_subcommand("selftest", "invariant suite");
  common(selftest);
  fan(selftest);
  subs.emplace_back(selftest, cmd_selftest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  Report rep;
  MediumFile mf;
  try {
    mf = load(o);
    for (auto& [sub, fn] : subs) {
      if (!sub->parsed()) continue;
      rep.command = sub->get_name();
      if (rep.command == "selftest" && o.fan_n == 10 && !sub->count("--fan-n")) o.fan_n = 50;
      fn(mf, o, rep);
    }
  } catch (const Error& e) {
    std::cerr << "elastoray: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "elastoray: " << e.what() << '\n';
    return 2;
  }

  const json out = {{"command", rep.command},
                    {"medium_digest", medium_digest(mf.source)},
                    {"params", rep.params},
                    {"results", rep.results},
                    {"failures", rep.failures}};
  if (o.out_path.empty()) {
    std::cout << out.dump(2) << '\n';
  } else {
    std::ofstream f(o.out_path);
    if (!f) {
      std::cerr << "elastoray: cannot write " << o.out_path << '\n';
      return 2;
    }
    f << out.dump(2) << '\n';
  }
  return rep.failures.empty() ? 0 : 1;
}
