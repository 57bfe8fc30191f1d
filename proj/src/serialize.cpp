#include "fieldtn/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fieldtn/errors.hpp"

namespace fieldtn {

using Kind = MatrixFunction::Kind;
using MF = MatrixFunction;

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw SerializationError(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

double number(const Json& j, const char* what) {
  if (!j.is_number()) throw SerializationError(std::string(what) + " must be a number");
  return j.get<double>();
}

int integer(const Json& j, const char* what) {
  if (!j.is_number_integer()) throw SerializationError(std::string(what) + " must be an integer");
  return j.get<int>();
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::kConstant: return "constant";
    case Kind::kAffine: return "affine";
    case Kind::kGrid: return "grid";
    case Kind::kCallable: return "callable";
    case Kind::kSum: return "sum";
    case Kind::kProduct: return "product";
    case Kind::kKron: return "kron";
    case Kind::kScale: return "scale";
    case Kind::kScalarTimes: return "scalar_times";
    case Kind::kDirectSum: return "direct_sum";
    case Kind::kConj: return "conj";
    case Kind::kAdjoint: return "adjoint";
    case Kind::kExp: return "exp";
    case Kind::kInverse: return "inverse";
    case Kind::kDiag: return "diag";
  }
  return "unknown";
}

Json mf_body(const MF& f) {
  const auto& n = f.node();
  Json j;
  j["kind"] = kind_name(n.kind);
  const auto children = [&] {
    Json arr = Json::array();
    for (const auto& c : n.children) arr.push_back(mf_body(c));
    return arr;
  };
  switch (n.kind) {
    case Kind::kConstant:
      j["value"] = to_json(n.matrices[0]);
      break;
    case Kind::kAffine:
      j["A0"] = to_json(n.matrices[0]);
      j["A1"] = to_json(n.matrices[1]);
      break;
    case Kind::kGrid: {
      j["order"] = n.order;
      j["points"] = n.points;
      Json vals = Json::array();
      for (const auto& m : n.matrices) vals.push_back(to_json(m));
      j["values"] = vals;
      break;
    }
    case Kind::kCallable:
      throw SerializationError("matrix function holds an in-process callable and cannot be serialized");
    case Kind::kSum:
      j["terms"] = children();
      break;
    case Kind::kProduct:
    case Kind::kKron:
      j["factors"] = children();
      break;
    case Kind::kScale:
      j["weight"] = to_json(n.weight);
      j["arg"] = mf_body(n.children[0]);
      break;
    case Kind::kScalarTimes:
      j["scalar"] = mf_body(n.children[0]);
      j["arg"] = mf_body(n.children[1]);
      break;
    case Kind::kDirectSum:
      j["blocks"] = children();
      break;
    case Kind::kDiag:
      j["entries"] = children();
      break;
    case Kind::kConj:
    case Kind::kAdjoint:
    case Kind::kExp:
    case Kind::kInverse:
      j["arg"] = mf_body(n.children[0]);
      break;
  }
  return j;
}

std::vector<MF> mf_list(const Json& arr, const Interval& d, const char* what) {
  if (!arr.is_array() || arr.empty())
    throw SerializationError(std::string(what) + " must be a non-empty array");
  std::vector<MF> out;
  for (const auto& e : arr) out.push_back(matrix_function_from_json(e, d));
  return out;
}

PermutationPhaseParams phase_params_from_json(const Json& p, const Interval& d) {
  PermutationPhaseParams out;
  out.q = mf_list(field(p, "q"), d, "q");
  out.t = mf_list(field(p, "t"), d, "t");
  out.permutation = matrix_from_json(field(p, "permutation"));
  out.k = p.contains("k") ? integer(p.at("k"), "k") : 0;
  return out;
}

Json phase_params_to_json(const PermutationPhaseParams& p) {
  Json q = Json::array(), t = Json::array();
  for (const auto& f : p.q) q.push_back(to_json(f));
  for (const auto& f : p.t) t.push_back(to_json(f));
  return Json{{"q", q}, {"t", t}, {"permutation", to_json(p.permutation)}, {"k", p.k}};
}

void check_type(const Json& j, const char* type) {
  if (j.contains("type") && j.at("type") != type)
    throw SerializationError(std::string("expected an object of type \"") + type + "\"");
}

}  // namespace

Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Json to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

Json to_json(const Interval& d) { return Json::array({d.x_minus(), d.x_plus()}); }

Json to_json(const MF& f) {
  Json j = mf_body(f);
  j["domain"] = to_json(f.domain());
  return j;
}

Json to_json(const Cmps& psi) {
  return Json{{"type", "cmps"},          {"schema_version", kSchemaVersion},
              {"interval", to_json(psi.interval())}, {"D", psi.D()},
              {"B", to_json(psi.B())},   {"Q", to_json(psi.Q())},
              {"L", to_json(psi.L())}};
}

Json to_json(const Cmpo& O) {
  return Json{{"type", "cmpo"},        {"schema_version", kSchemaVersion},
              {"interval", to_json(O.interval())}, {"D", O.D()},
              {"B", to_json(O.B())},   {"Q", to_json(O.Q())},
              {"L", to_json(O.L())},   {"R", to_json(O.R())},
              {"T", to_json(O.T())}};
}

Json to_json(const SectorState& s) {
  Json sectors = Json::array();
  for (int j = 0; j <= s.j_max(); ++j) {
    Json sec = Json::array();
    for (Complex c : s.sector(j)) sec.push_back(to_json(c));
    sectors.push_back(sec);
  }
  return Json{{"type", "sector_state"},
              {"schema_version", kSchemaVersion},
              {"interval", to_json(s.interval())},
              {"j_max", s.j_max()},
              {"m", s.m()},
              {"ordering", "colex-multiset"},
              {"sectors", sectors},
              {"truncation_leakage", s.truncation_leakage}};
}

Json to_json(const UnitarityReport& r) {
  return Json{{"type", "unitarity_report"},
              {"schema_version", kSchemaVersion},
              {"passed", r.passed},
              {"max_A_deviation", r.max_A_deviation},
              {"max_offdiag", r.max_offdiag},
              {"probes", r.probes},
              {"j_max", r.j_max},
              {"tol", r.tol},
              {"seed", r.seed}};
}

Json to_json(const CmpuFamily& family) {
  struct Visitor {
    Json operator()(const IdentityParams&) const { return Json::object(); }
    Json operator()(const DisplacementParams& p) const { return Json{{"alpha", to_json(p.alpha)}}; }
    Json operator()(const PermutationPhaseParams& p) const { return phase_params_to_json(p); }
    Json operator()(const ParityPhaseParams& p) const { return Json{{"omega", p.omega}}; }
    Json operator()(const NumberControlledParams& p) const {
      return Json{{"D", p.D}, {"theta", p.theta}};
    }
    Json operator()(const MultiSectorParams& p) const {
      return Json{{"block_dims", p.block_dims}, {"thetas", p.thetas}};
    }
    Json operator()(const DisplacedPhaseParams& p) const {
      return Json{{"alpha", to_json(p.alpha)}, {"phase", phase_params_to_json(p.phase)}};
    }
    Json operator()(const SubspaceUnitaryParams& p) const {
      Json states = Json::array();
      for (const auto& s : p.states) states.push_back(to_json(s));
      return Json{{"states", states}, {"phases", p.phases}};
    }
    Json operator()(const SwapVacuumParams& p) const { return Json{{"mode", to_json(p.mode)}}; }
  };
  return Json{{"family", family_tag(family)}, {"params", std::visit(Visitor{}, family)}};
}

Complex complex_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw SerializationError("complex numbers are [re, im] pairs");
}

ComplexMatrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
    throw SerializationError("matrices are non-empty arrays of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  ComplexMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw SerializationError("matrix rows differ in length");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

Interval interval_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw SerializationError("intervals are [x_minus, x_plus]");
  return Interval(number(j[0], "x_minus"), number(j[1], "x_plus"));
}

MF matrix_function_from_json(const Json& j, std::optional<Interval> default_domain) {
  if (j.is_number() || (j.is_array() && !j.empty() && j[0].is_array())) {
    if (!default_domain) throw SerializationError("constant shorthand needs a domain");
    if (j.is_number()) return MF::constant(ComplexMatrix::Constant(1, 1, j.get<double>()), *default_domain);
    return MF::constant(matrix_from_json(j), *default_domain);
  }
  if (!j.is_object()) throw SerializationError("matrix functions are JSON objects");
  const Interval d = j.contains("domain") ? interval_from_json(j.at("domain"))
                     : default_domain   ? *default_domain
                                        : throw SerializationError("matrix function without a domain");
  const std::string kind = field(j, "kind").get<std::string>();
  const auto arg = [&](const char* key) { return matrix_function_from_json(field(j, key), d); };
  if (kind == "constant") return MF::constant(matrix_from_json(field(j, "value")), d);
  if (kind == "affine")
    return MF::affine(matrix_from_json(field(j, "A0")), matrix_from_json(field(j, "A1")), d);
  if (kind == "grid") {
    std::vector<double> pts;
    for (const auto& p : field(j, "points")) pts.push_back(number(p, "grid point"));
    std::vector<ComplexMatrix> vals;
    for (const auto& v : field(j, "values")) vals.push_back(matrix_from_json(v));
    return MF::grid(std::move(pts), std::move(vals), integer(field(j, "order"), "order"), d);
  }
  if (kind == "sum") return MF::sum(mf_list(field(j, "terms"), d, "terms"));
  if (kind == "product" || kind == "kron") {
    const auto f = mf_list(field(j, "factors"), d, "factors");
    if (f.size() != 2) throw SerializationError(kind + " needs exactly two factors");
    return kind == "product" ? MF::product(f[0], f[1]) : MF::kron(f[0], f[1]);
  }
  if (kind == "scale") return MF::scale(complex_from_json(field(j, "weight")), arg("arg"));
  if (kind == "scalar_times") return MF::scalar_times(arg("scalar"), arg("arg"));
  if (kind == "direct_sum") return MF::direct_sum(mf_list(field(j, "blocks"), d, "blocks"));
  if (kind == "diag") return MF::diag(mf_list(field(j, "entries"), d, "entries"));
  if (kind == "conj") return arg("arg").conj();
  if (kind == "adjoint") return arg("arg").adjoint();
  if (kind == "exp") return arg("arg").exp();
  if (kind == "inverse") return arg("arg").inverse();
  throw SerializationError("unknown matrix function kind \"" + kind + "\"");
}

Cmps cmps_from_json(const Json& j) {
  check_type(j, "cmps");
  const Interval d = interval_from_json(field(j, "interval"));
  if (j.contains("builder")) {
    const std::string b = j.at("builder").get<std::string>();
    if (b == "vacuum") return vacuum_cmps(d);
    if (b == "fock")
      return fock_cmps(integer(field(j, "N"), "N"), matrix_function_from_json(field(j, "mode"), d));
    throw SerializationError("unknown cMPS builder \"" + b + "\"");
  }
  Cmps psi(d, matrix_from_json(field(j, "B")), matrix_function_from_json(field(j, "Q"), d),
           matrix_function_from_json(field(j, "L"), d));
  if (j.contains("D") && integer(j.at("D"), "D") != psi.D())
    throw SerializationError("declared D does not match the tensors");
  return psi;
}

Cmpo cmpo_from_json(const Json& j) {
  if (j.contains("type") && j.at("type") == "catalog") {
    const Interval d = interval_from_json(field(j, "interval"));
    const Json params = j.contains("params") ? j.at("params") : Json::object();
    return build(family_from_json(field(j, "family").get<std::string>(), params, d), d);
  }
  check_type(j, "cmpo");
  const Interval d = interval_from_json(field(j, "interval"));
  Cmpo O(d, matrix_from_json(field(j, "B")), matrix_function_from_json(field(j, "Q"), d),
         matrix_function_from_json(field(j, "L"), d), matrix_function_from_json(field(j, "R"), d),
         matrix_function_from_json(field(j, "T"), d));
  if (j.contains("D") && integer(j.at("D"), "D") != O.D())
    throw SerializationError("declared D does not match the tensors");
  return O;
}

SectorState sector_state_from_json(const Json& j) {
  check_type(j, "sector_state");
  SectorState s(interval_from_json(field(j, "interval")), integer(field(j, "j_max"), "j_max"),
                integer(field(j, "m"), "m"));
  const Json& sectors = field(j, "sectors");
  if (!sectors.is_array() || static_cast<int>(sectors.size()) != s.j_max() + 1)
    throw SerializationError("sector_state needs j_max + 1 sectors");
  for (int k = 0; k <= s.j_max(); ++k) {
    const Json& sec = sectors[static_cast<std::size_t>(k)];
    if (!sec.is_array() || sec.size() != s.size(k))
      throw SerializationError("sector " + std::to_string(k) + " has the wrong number of amplitudes");
    for (std::size_t r = 0; r < sec.size(); ++r) s.sector(k)[r] = complex_from_json(sec[r]);
  }
  if (j.contains("truncation_leakage")) s.truncation_leakage = number(j.at("truncation_leakage"), "leakage");
  return s;
}

UnitarityReport unitarity_report_from_json(const Json& j) {
  check_type(j, "unitarity_report");
  UnitarityReport r;
  try {
    r.passed = field(j, "passed").get<bool>();
    r.max_A_deviation = number(field(j, "max_A_deviation"), "max_A_deviation");
    r.max_offdiag = number(field(j, "max_offdiag"), "max_offdiag");
    r.probes = field(j, "probes").get<std::vector<long long>>();
    r.j_max = integer(field(j, "j_max"), "j_max");
    r.tol = number(field(j, "tol"), "tol");
    r.seed = field(j, "seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw SerializationError(std::string("unitarity report: ") + e.what());
  }
  return r;
}

CmpuFamily family_from_json(const std::string& tag, const Json& p, const Interval& d) {
  if (!p.is_object()) throw SerializationError("family parameters must be a JSON object");
  try {
    if (tag == "identity") return IdentityParams{};
    if (tag == "displacement") return DisplacementParams{matrix_function_from_json(field(p, "alpha"), d)};
    if (tag == "permutation_phase") return phase_params_from_json(p, d);
    if (tag == "parity_phase") return ParityPhaseParams{number(field(p, "omega"), "omega")};
    if (tag == "number_controlled_phase")
      return NumberControlledParams{integer(field(p, "D"), "D"), number(field(p, "theta"), "theta")};
    if (tag == "multi_sector_phase")
      return MultiSectorParams{field(p, "block_dims").get<std::vector<int>>(),
                               field(p, "thetas").get<std::vector<double>>()};
    if (tag == "displaced_phase")
      return DisplacedPhaseParams{matrix_function_from_json(field(p, "alpha"), d),
                                  phase_params_from_json(field(p, "phase"), d)};
    if (tag == "subspace_unitary") {
      SubspaceUnitaryParams out;
      for (const auto& s : field(p, "states")) {
        Json sj = s;
        if (!sj.contains("interval")) sj["interval"] = to_json(d);
        out.states.push_back(cmps_from_json(sj));
      }
      out.phases = field(p, "phases").get<std::vector<double>>();
      return out;
    }
    if (tag == "swap_vacuum_one_particle") return SwapVacuumParams{matrix_function_from_json(field(p, "mode"), d)};
  } catch (const nlohmann::json::exception& e) {
    throw SerializationError("family " + tag + ": " + e.what());
  }
  throw ValidationError("unknown family \"" + tag + "\"");
}

std::vector<LatticeProbe> probes_from_json(const Json& j) {
  const Json& arr = j.is_array() ? j : field(j, "probes");
  if (!arr.is_array()) throw SerializationError("probes must be an array");
  std::vector<LatticeProbe> out;
  std::size_t idx = 0;
  for (const auto& p : arr) {
    LatticeProbe pr;
    pr.id = p.contains("id") ? p.at("id").get<std::string>() : "p" + std::to_string(idx);
    pr.labels = parse_labels(field(p, "labels").get<std::string>());
    for (const auto& x : field(p, "xs")) pr.xs.push_back(number(x, "probe point"));
    out.push_back(std::move(pr));
    ++idx;
  }
  return out;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SerializationError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SerializationError(path + ": " + e.what());
  }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SerializationError("cannot write " + path);
  out << text;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v + 0.0);
  return buf;
}

std::string format_complex(Complex z) {
  const double im = z.imag() + 0.0;
  std::string s = format_real(z.real());
  if (!(std::signbit(im)) || std::isnan(im)) s += "+";
  return s + format_real(im) + "i";
}

}  // namespace fieldtn
