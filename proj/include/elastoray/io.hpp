#pragma once

#include "elastoray/boundary.hpp"
#include "elastoray/errors.hpp"
#include "elastoray/medium.hpp"
#include "elastoray/rays.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

namespace elastoray {

using json = nlohmann::json;

struct MediumFile {
  Medium medium;
  ClassParams params;
  json source;  // parsed document, used for the digest
};

namespace io_detail {

inline double number(const json& j, const char* what) {
  if (!j.is_number()) throw Error(ErrorCode::Config, std::string(what) + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::Config, std::string(what) + " must be finite");
  return v;
}

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::Config, std::string("missing key '") + key + "'");
  return j.at(key);
}

inline Vec3 vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Config, std::string(what) + " must be a 3-vector");
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

inline Polynomial polynomial(const json& terms) {
  if (!terms.is_array()) throw Error(ErrorCode::Config, "polynomial terms must be an array");
  std::map<Polynomial::Exponents, double> out;
  for (const auto& t : terms) {
    const json& pw = field(t, "powers");
    if (!pw.is_array() || pw.size() != 3) throw Error(ErrorCode::Config, "powers must have three entries");
    Polynomial::Exponents e{};
    for (int i = 0; i < 3; ++i) {
      if (!pw[i].is_number_integer() || pw[i].get<int>() < 0)
        throw Error(ErrorCode::Config, "powers must be non-negative integers");
      e[i] = pw[i].get<int>();
    }
    out[e] += number(field(t, "coef"), "coef");
  }
  return Polynomial(out);
}

inline ScalarField scalar_field(const json& j, const char* name) {
  if (j.is_number()) return ScalarField::constant(number(j, name));
  const std::string family = field(j, "family").get<std::string>();
  if (family == "constant") return ScalarField::constant(number(field(j, "value"), name));
  if (family == "polynomial") return ScalarField::polynomial(polynomial(field(j, "terms")));
  if (family == "gaussian")
    return ScalarField::gaussian_bump(number(field(j, "base"), "base"), number(field(j, "amplitude"), "amplitude"),
                                      vec3(field(j, "center"), "center"), number(field(j, "width"), "width"));
  throw Error(ErrorCode::Config, "unknown field family '" + family + "'");
}

inline Domain domain(const json& j) {
  const std::string kind = field(j, "kind").get<std::string>();
  if (kind == "ball") return Domain::ball(j.contains("radius") ? number(j["radius"], "radius") : 1.0);
  if (kind == "ellipsoid") return Domain::ellipsoid(vec3(field(j, "semi_axes"), "semi_axes"));
  throw Error(ErrorCode::Config, "unknown domain kind '" + kind + "'");
}

inline ResidualStressField stress(const json& j) {
  const std::string kind = field(j, "kind").get<std::string>();
  if (kind == "zero") return ResidualStressField::constant(Mat3::Zero());
  if (kind == "constant") {
    const json& mj = field(j, "matrix");
    if (!mj.is_array() || mj.size() != 3) throw Error(ErrorCode::Config, "matrix must be 3x3");
    Mat3 r;
    for (int i = 0; i < 3; ++i) r.row(i) = vec3(mj[i], "matrix row").transpose();
    return ResidualStressField::constant(r);
  }
  if (kind == "potential") return ResidualStressField::from_potential(polynomial(field(j, "terms")));
  throw Error(ErrorCode::Config, "unknown residual_stress kind '" + kind + "'");
}

}  // namespace io_detail

inline MediumFile parse_medium(const json& j) {
  try {
    MediumFile mf;
    mf.source = j;
    Medium& m = mf.medium;
    m.domain = j.contains("domain") ? io_detail::domain(j["domain"]) : Domain::unit_ball();
    m.rho = j.contains("rho") ? io_detail::scalar_field(j["rho"], "rho") : ScalarField::constant(1.0);
    m.lambda = j.contains("lambda") ? io_detail::scalar_field(j["lambda"], "lambda") : ScalarField::constant(1.0);
    m.mu = j.contains("mu") ? io_detail::scalar_field(j["mu"], "mu") : ScalarField::constant(1.0);
    m.stress = j.contains("residual_stress") ? io_detail::stress(j["residual_stress"])
                                             : ResidualStressField::constant(Mat3::Zero());
    if (j.contains("class_params")) {
      const json& p = j["class_params"];
      mf.params.L = io_detail::number(io_detail::field(p, "L"), "L");
      mf.params.eps = io_detail::number(io_detail::field(p, "eps"), "eps");
      mf.params.delta = io_detail::number(io_detail::field(p, "delta"), "delta");
    }
    mf.params.validate();
    return mf;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("medium file: ") + e.what());
  }
}

inline MediumFile load_medium(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open medium file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, "cannot parse " + path + ": " + e.what());
  }
  return parse_medium(j);
}

// FNV-1a over the canonical (key-sorted, compact) serialization.
inline std::string medium_digest(const json& source) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : source.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline json to_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

inline json to_json(const cplx& z) { return json::array({z.real(), z.imag()}); }

inline json to_json(const CMat3& a) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) {
    json row = json::array();
    for (int k = 0; k < 3; ++k) row.push_back(to_json(a(i, k)));
    rows.push_back(row);
  }
  return rows;
}

inline json to_json(const BoundaryCovector& g) {
  return {{"t", g.t}, {"x", to_json(g.x)}, {"tau", g.tau}, {"xi", to_json(g.xi)}};
}

inline json to_json(const LensMapEntry& e) {
  return {{"mode", std::string(to_string(e.mode))},
          {"in", to_json(e.in)},
          {"out", to_json(e.out)},
          {"travel_time", e.travel_time},
          {"max_hamiltonian_residual", e.max_hamiltonian_residual},
          {"steps", e.steps}};
}

inline json to_json(const LensMapResult& r) {
  if (const auto* e = std::get_if<LensMapEntry>(&r)) return to_json(*e);
  const auto& f = std::get<TraceFailure>(r);
  return {{"error", std::string(to_string(f.code))}, {"message", f.message}};
}

inline json to_json(const WFEvent& e) {
  return {{"order", e.order},      {"mode", std::string(to_string(e.mode))},
          {"path", e.path},        {"reflections", e.reflections},
          {"travel_time", e.travel_time}, {"gamma", to_json(e.gamma)}};
}

// CSV row (t, x1..x3, tau, xi1..xi3, label, margin).
inline void write_covector_csv_header(std::ostream& os) { os << "t,x1,x2,x3,tau,xi1,xi2,xi3,label,margin\n"; }

inline void write_covector_csv_row(std::ostream& os, const BoundaryCovector& g, std::string_view label,
                                   double margin) {
  os << std::setprecision(17) << g.t << ',' << g.x(0) << ',' << g.x(1) << ',' << g.x(2) << ',' << g.tau << ','
     << g.xi(0) << ',' << g.xi(1) << ',' << g.xi(2) << ',' << label << ',' << margin << '\n';
}

inline void write_lens_map_csv(std::ostream& os, const std::vector<LensMapResult>& table) {
  os << "index,mode,status,t_in,x1_in,x2_in,x3_in,tau,xi1_in,xi2_in,xi3_in,"
        "t_out,x1_out,x2_out,x3_out,xi1_out,xi2_out,xi3_out,travel_time\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (const auto* e = std::get_if<LensMapEntry>(&table[i])) {
      const auto& a = e->in;
      const auto& b = e->out;
      os << i << ',' << to_string(e->mode) << ",ok," << a.t << ',' << a.x(0) << ',' << a.x(1) << ',' << a.x(2) << ','
         << a.tau << ',' << a.xi(0) << ',' << a.xi(1) << ',' << a.xi(2) << ',' << b.t << ',' << b.x(0) << ','
         << b.x(1) << ',' << b.x(2) << ',' << b.xi(0) << ',' << b.xi(1) << ',' << b.xi(2) << ',' << e->travel_time
         << '\n';
    } else {
      os << i << ",," << to_string(std::get<TraceFailure>(table[i]).code) << ",,,,,,,,,,,,,,,,\n";
    }
  }
}

// Dense samples as (s, t, x1..x3, xi1..xi3) rows.
inline void write_samples_csv(std::ostream& os, const std::vector<RaySample>& samples) {
  os << "s,t,x1,x2,x3,xi1,xi2,xi3\n" << std::setprecision(17);
  for (const auto& r : samples)
    os << r.s << ',' << r.t << ',' << r.x(0) << ',' << r.x(1) << ',' << r.x(2) << ',' << r.xi(0) << ',' << r.xi(1)
       << ',' << r.xi(2) << '\n';
}

}  // namespace elastoray
