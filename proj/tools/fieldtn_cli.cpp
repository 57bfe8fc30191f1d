#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fieldtn/errors.hpp"
#include "fieldtn/parallel.hpp"
#include "fieldtn/serialize.hpp"

using namespace fieldtn;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kNumerical = 2;
constexpr int kNotUnitary = 3;

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ValidationError(std::string("bad number in ") + what + ": " + item);
    out.push_back(v);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  for (double v : parse_list(text, what)) {
    if (v != static_cast<int>(v)) throw ValidationError(std::string(what) + " must be integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

// Inline JSON or a path to a JSON file.
Json json_argument(const std::string& text) {
  if (std::filesystem::exists(text)) return read_json_file(text);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SerializationError("neither a file nor valid JSON: " + text);
  }
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty())
    std::cout << text;
  else
    write_text_file(out, text);
}

PropagatorConfig propagator_config(double tol) {
  PropagatorConfig cfg;
  cfg.tol = tol;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous matrix product states and operators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("fieldtn schema ") + kSchemaVersion);
  int threads = default_thread_count();
  app.add_option("--threads", threads, "Cap on worker threads")->check(CLI::PositiveNumber);

  double tol = 1e-10;
  std::string out;

  // propagate
  auto* prop = app.add_subcommand("propagate", "Path-ordered exponential of a generator");
  std::string gen_file, prop_cmpo, prop_cmps;
  double from = 0.0, to = 0.0;
  bool have_from = false, have_to = false;
  auto* g_opt = prop->add_option("--generator", gen_file, "MatrixFunction JSON");
  auto* pc_opt = prop->add_option("--cmpo", prop_cmpo, "Use the Q of this cMPO");
  auto* ps_opt = prop->add_option("--cmps", prop_cmps, "Use the Q of this cMPS");
  g_opt->excludes(pc_opt)->excludes(ps_opt);
  pc_opt->excludes(ps_opt);
  prop->add_option("--from", from, "Lower end (default: interval start)")
      ->each([&](const std::string&) { have_from = true; });
  prop->add_option("--to", to, "Upper end (default: interval end)")
      ->each([&](const std::string&) { have_to = true; });
  prop->add_option("--tol", tol, "Relative tolerance");
  prop->add_option("--out", out, "Output JSON path (default stdout)");

  // coeff
  auto* coeff = app.add_subcommand("coeff", "Evaluate one coefficient");
  std::string coeff_cmpo, coeff_cmps, labels, points;
  auto* cc_opt = coeff->add_option("--cmpo", coeff_cmpo, "cMPO JSON");
  auto* cs_opt = coeff->add_option("--cmps", coeff_cmps, "cMPS JSON");
  cc_opt->excludes(cs_opt);
  coeff->add_option("--labels", labels, "Label string over L, R, A (cMPO only)");
  coeff->add_option("--points", points, "Comma-separated increasing points");
  coeff->add_option("--tol", tol, "Relative tolerance");
  coeff->add_option("--out", out, "Output JSON path (default: text on stdout)");

  // inner
  auto* inner = app.add_subcommand("inner", "Inner product <a|b> of two cMPS");
  std::string inner_a, inner_b;
  inner->add_option("--a", inner_a, "Bra cMPS JSON")->required();
  inner->add_option("--b", inner_b, "Ket cMPS JSON")->required();
  inner->add_option("--tol", tol, "Relative tolerance");
  inner->add_option("--out", out, "Output JSON path (default: text on stdout)");

  // compose
  auto* comp = app.add_subcommand("compose", "Product O1 O2 of two cMPOs");
  std::string comp_first, comp_second;
  comp->add_option("--first", comp_first, "Left factor O1")->required();
  comp->add_option("--second", comp_second, "Right factor O2")->required();
  comp->add_option("--out", out, "Output JSON path (default stdout)");

  // apply
  auto* app_cmd = app.add_subcommand("apply", "Apply a cMPO to a cMPS");
  std::string apply_cmpo, apply_cmps;
  app_cmd->add_option("--cmpo", apply_cmpo, "cMPO JSON")->required();
  app_cmd->add_option("--cmps", apply_cmps, "cMPS JSON")->required();
  app_cmd->add_option("--out", out, "Output JSON path (default stdout)");

  // check-unitarity
  auto* unit = app.add_subcommand("check-unitarity", "Sampled unitarity certificate");
  std::string unit_cmpo;
  UnitarityOptions uopt;
  unit->add_option("--cmpo", unit_cmpo, "cMPO JSON")->required();
  unit->add_option("--jmax", uopt.j_max, "Largest sector probed")->check(CLI::NonNegativeNumber);
  unit->add_option("--samples", uopt.samples_per_j, "Samples per sector")->check(CLI::PositiveNumber);
  unit->add_option("--tol", uopt.tol, "Deviation tolerance");
  unit->add_option("--seed", uopt.seed, "Sampling seed");
  unit->add_option("--out", out, "Output JSON path (default stdout)");

  // catalog
  auto* cat = app.add_subcommand("catalog", "Built-in cMPU families");
  cat->require_subcommand(1);
  auto* cat_build = cat->add_subcommand("build", "Build a family member");
  auto* cat_list = cat->add_subcommand("list", "List family tags");
  std::string family, params = "{}", interval_text = "-0.5,0.5";
  cat_build->add_option("--family", family, "Family tag")->required();
  cat_build->add_option("--params", params, "Parameter JSON (inline or file)");
  cat_build->add_option("--interval", interval_text, "x_minus,x_plus");
  cat_build->add_option("--out", out, "Output JSON path (default stdout)");

  // converge
  auto* conv = app.add_subcommand("converge", "Lattice convergence study");
  std::string conv_cmpo, conv_probe, conv_ns;
  int n_max = 1;
  conv->add_option("--cmpo", conv_cmpo, "cMPO JSON")->required();
  conv->add_option("--probe", conv_probe, "Probe JSON")->required();
  conv->add_option("--Ns", conv_ns, "Comma-separated increasing site counts")->required();
  conv->add_option("--nmax", n_max, "Occupation cutoff per site")->check(CLI::PositiveNumber);
  conv->add_option("--tol", tol, "Relative tolerance of continuum values");
  conv->add_option("--out", out, "Output CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*prop) {
      std::optional<MatrixFunction> G;
      if (!gen_file.empty())
        G = matrix_function_from_json(read_json_file(gen_file));
      else if (!prop_cmpo.empty())
        G = cmpo_from_json(read_json_file(prop_cmpo)).Q();
      else if (!prop_cmps.empty())
        G = cmps_from_json(read_json_file(prop_cmps)).Q();
      else
        throw ValidationError("propagate needs --generator, --cmpo or --cmps");
      const double a = have_from ? from : G->domain().x_minus();
      const double b = have_to ? to : G->domain().x_plus();
      const ComplexMatrix V = path_ordered_exp(*G, a, b, propagator_config(tol));
      emit(out, dump_json(Json{{"type", "propagator"},
                               {"schema_version", kSchemaVersion},
                               {"ordering", "later-left"},
                               {"a", a},
                               {"b", b},
                               {"value", to_json(V)}}));
    } else if (*coeff) {
      const std::vector<double> xs = parse_list(points, "--points");
      Complex c;
      if (!coeff_cmpo.empty()) {
        const Cmpo O = cmpo_from_json(read_json_file(coeff_cmpo));
        const auto lab = parse_labels(labels);
        c = cmpo_coefficient(O, lab, xs, propagator_config(tol));
      } else if (!coeff_cmps.empty()) {
        if (!labels.empty()) throw ValidationError("--labels applies to cMPOs only");
        c = cmps_coefficient(cmps_from_json(read_json_file(coeff_cmps)), xs, propagator_config(tol));
      } else {
        throw ValidationError("coeff needs --cmpo or --cmps");
      }
      if (out.empty())
        std::cout << format_complex(c) << "\n";
      else
        write_text_file(out, dump_json(Json{{"type", "coefficient"},
                                            {"schema_version", kSchemaVersion},
                                            {"labels", labels},
                                            {"points", xs},
                                            {"value", to_json(c)}}));
    } else if (*inner) {
      const Complex c = inner_product(cmps_from_json(read_json_file(inner_a)),
                                      cmps_from_json(read_json_file(inner_b)), propagator_config(tol));
      if (out.empty())
        std::cout << format_complex(c) << "\n";
      else
        write_text_file(out, dump_json(Json{{"type", "inner_product"},
                                            {"schema_version", kSchemaVersion},
                                            {"value", to_json(c)}}));
    } else if (*comp) {
      const Cmpo O = compose(cmpo_from_json(read_json_file(comp_first)),
                             cmpo_from_json(read_json_file(comp_second)));
      emit(out, dump_json(to_json(O)));
    } else if (*app_cmd) {
      const Cmps psi = apply(cmpo_from_json(read_json_file(apply_cmpo)),
                             cmps_from_json(read_json_file(apply_cmps)));
      emit(out, dump_json(to_json(psi)));
    } else if (*unit) {
      uopt.threads = threads;
      const UnitarityReport r = check_unitary(cmpo_from_json(read_json_file(unit_cmpo)), uopt);
      emit(out, dump_json(to_json(r)));
      if (!r.passed) {
        std::cerr << "fieldtn: unitarity check failed (max deviation "
                  << format_real(std::max(r.max_A_deviation, r.max_offdiag)) << ")\n";
        return kNotUnitary;
      }
    } else if (*cat_list) {
      for (const auto& t : family_tags()) std::cout << t << "\n";
    } else if (*cat_build) {
      const auto ends = parse_list(interval_text, "--interval");
      if (ends.size() != 2) throw ValidationError("--interval takes x_minus,x_plus");
      const Interval d(ends[0], ends[1]);
      const Cmpo O = build(family_from_json(family, json_argument(params), d), d);
      emit(out, dump_json(to_json(O)));
    } else if (*conv) {
      const Cmpo O = cmpo_from_json(read_json_file(conv_cmpo));
      const auto probes = probes_from_json(read_json_file(conv_probe));
      const auto Ns = parse_int_list(conv_ns, "--Ns");
      ConvergenceOptions copt;
      copt.n_max = n_max;
      copt.threads = threads;
      copt.propagator = propagator_config(tol);
      emit(out, convergence_study(O, probes, Ns, copt).to_csv());
    }
  } catch (const AccuracyError& e) {
    std::cerr << "fieldtn: accuracy error: " << e.what() << "\n";
    return kNumerical;
  } catch (const CapacityError& e) {
    std::cerr << "fieldtn: capacity error: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << "fieldtn: " << e.what() << "\n";
    return kInvalid;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "fieldtn: bad JSON: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "fieldtn: " << e.what() << "\n";
    return kNumerical;
  }
  return kOk;
}
