// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 when any fails.
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fieldtn/catalog.hpp"
#include "fieldtn/lattice.hpp"
#include "fieldtn/sector_state.hpp"
#include "fieldtn/unitarity.hpp"
#include "support.hpp"

using namespace fieldtn;
using namespace fieldtn::testing;
using MF = MatrixFunction;

namespace {

const Interval kDom = centered_interval(1.0);

struct Verdict {
  bool ok = true;
  std::string detail;
};

// Collects the worst value of a measured quantity against its bound.
struct Worst {
  double value = 0.0;
  bool violated = false;
  void add(double v, double bound) {
    if (std::isnan(v) || v > bound) violated = true;
    if (std::isnan(v) || v > value) value = v;
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

MF real_fn(std::function<double(double)> f, const Interval& d = kDom) {
  return MF::scalar([f](double x) { return Complex(f(x)); }, d);
}

std::vector<CoeffLabel> all_a(std::size_t j) { return std::vector<CoeffLabel>(j, CoeffLabel::A); }

// Sorted points at least `gap` apart.
std::vector<double> spread_points(Rng& rng, const Interval& d, int j, double gap) {
  for (;;) {
    auto xs = sorted_uniform(rng, d, j);
    bool ok = true;
    for (int i = 1; i < j; ++i) ok = ok && xs[i] - xs[i - 1] > gap;
    if (j > 0) ok = ok && xs.front() - d.x_minus() > gap / 2 && d.x_plus() - xs.back() > gap / 2;
    if (ok) return xs;
  }
}

// 1. Propagator exactness.
Verdict propagator_exactness() {
  Rng rng(derive_seed(1001, 0));
  const Interval d(-1.0, 1.0);
  Worst exact, rk4, cocycle;
  for (int D = 1; D <= 6; ++D) {
    const ComplexMatrix Q = rng.matrix(D, D);
    const ComplexMatrix ref = mat_exp(2.0 * Q);
    exact.add(rel_diff(path_ordered_exp(MF::constant(Q, d), -1.0, 1.0), ref), 1e-10);
    exact.add(rel_diff(ref, taylor_exp(2.0 * Q)), 1e-10);
    // The same generator through the adaptive stepper.
    const MF opaque = MF::callable(D, [Q](double) { return Q; }, d);
    rk4.add(rel_diff(path_ordered_exp(opaque, -1.0, 1.0), ref), 1e-10);
  }
  PropagatorConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    const int D = 1 + static_cast<int>(rng.next() % 4);
    const MF G = random_affine(rng, D, d, 1.0);
    std::vector<double> p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::sort(p.begin(), p.end());
    const ComplexMatrix ac = path_ordered_exp(G, p[0], p[2], cfg);
    const ComplexMatrix split = path_ordered_exp(G, p[1], p[2], cfg) * path_ordered_exp(G, p[0], p[1], cfg);
    cocycle.add((ac - split).norm() / ac.norm(), 10 * cfg.tol);
  }
  return {!exact.violated && !rk4.violated && !cocycle.violated,
          "constant " + sci(exact.value) + ", rk4 " + sci(rk4.value) + ", cocycle " + sci(cocycle.value) +
              " over 100 cases"};
}

// 2. Fock-state norms and sector selectivity.
Verdict fock_states() {
  const std::vector<MF> modes = {
      MF::constant(ComplexMatrix::Constant(1, 1, 1.0), kDom),
      real_fn([](double x) { return std::sqrt(2.0) * std::cos(M_PI * x); }),
      MF::scalar([](double x) { return std::sqrt(3.0) * 2.0 * x * std::exp(kI * 4.0 * x * x); }, kDom)};
  Rng rng(derive_seed(1002, 0));
  Worst norm, off;
  for (const auto& f : modes) {
    for (int N = 1; N <= 3; ++N) {
      const Cmps psi = fock_cmps(N, f);
      norm.add(std::abs(inner_product(psi, psi) - 1.0), 1e-8);
      for (int j = 0; j <= 5; ++j) {
        if (j == N) continue;
        for (int s = 0; s < 10; ++s) off.add(std::abs(cmps_coefficient(psi, sorted_uniform(rng, kDom, j))), 1e-12);
      }
    }
  }
  return {!norm.violated && !off.violated,
          "norm deviation " + sci(norm.value) + ", off-sector " + sci(off.value)};
}

// 3. Product rule against lattice products.
Verdict product_rule() {
  Rng rng(derive_seed(1003, 0));
  const std::vector<int> Ns{32, 64, 128, 256};
  Worst rel;
  double lo = 10.0, hi = -10.0;
  for (int pair = 0; pair < 20; ++pair) {
    const int D1 = 1 + pair % 2, D2 = 1 + (pair / 2) % 2;
    const Cmpo O1 = random_cmpo(rng, D1, kDom, 0.5), O2 = random_cmpo(rng, D2, kDom, 0.5);
    std::vector<LatticeProbe> probes;
    for (int k = 0; k < 3; ++k) {
      const int j = k == 0 ? 1 : 2;
      probes.push_back({"p" + std::to_string(k), random_labels(rng, j), spread_points(rng, kDom, j, 0.1)});
    }
    ConvergenceOptions opt;
    opt.lattice = [&](int N) { return lattice_product(discretize(O1, N), discretize(O2, N)); };
    const ConvergenceTable t = convergence_study(compose(O1, O2), probes, Ns, opt);
    for (const auto& r : t.rows)
      if (r.N == 128) rel.add(r.abs_error / std::abs(r.continuum_value), 8.0 / 128);
    for (const auto& f : t.fits) {
      if (f.exact) continue;
      lo = std::min(lo, f.slope);
      hi = std::max(hi, f.slope);
    }
  }
  const bool slopes = lo >= 0.8 && hi <= 1.2;
  return {!rel.violated && slopes,
          "max relative error at N=128 " + sci(rel.value) + " (bound " + sci(8.0 / 128) + "), slopes in [" +
              sci(lo) + ", " + sci(hi) + "]"};
}

// 4. Unitarity of the catalog and rejection of perturbations.
Verdict unitarity() {
  PermutationPhaseParams cycle;
  cycle.q = {real_fn([](double x) { return 0.7 + x; }), real_fn([](double x) { return -0.4 * std::cos(x); }),
             real_fn([](double) { return 1.3; })};
  cycle.t = {real_fn([](double x) { return 0.2 * x; }), real_fn([](double) { return -1.0; }),
             real_fn([](double x) { return x * x; })};
  cycle.permutation = ComplexMatrix::Zero(3, 3);
  cycle.permutation(1, 0) = 1.0;
  cycle.permutation(2, 1) = std::exp(kI * 0.4);
  cycle.permutation(0, 2) = -1.0;
  cycle.k = 1;
  PermutationPhaseParams pair;
  pair.q = {real_fn([](double x) { return 2.0 * x; }), real_fn([](double) { return -0.5; })};
  pair.t = {real_fn([](double) { return 0.3; }), real_fn([](double x) { return std::sin(3 * x); })};
  pair.permutation = identity_matrix(2);
  const MF cosm = real_fn([](double x) { return std::sqrt(2.0) * std::cos(M_PI * x); });
  const MF sinm = real_fn([](double x) { return std::sqrt(2.0) * std::sin(2 * M_PI * x); });
  const MF alpha = MF::scalar([](double x) { return Complex(0.5 * std::sin(3 * x), 0.2); }, kDom);
  const std::vector<CmpuFamily> families = {
      DisplacementParams{alpha}, cycle, pair, ParityPhaseParams{1.0},
      NumberControlledParams{3, M_PI / 3}, NumberControlledParams{4, M_PI},
      SubspaceUnitaryParams{{fock_cmps(1, cosm), fock_cmps(1, sinm)}, {0.7, -1.9}}, SwapVacuumParams{cosm}};
  std::string failed;
  double worst = 0.0;
  for (std::size_t i = 0; i < families.size(); ++i) {
    const UnitarityReport r = check_unitary(build(families[i], kDom), 4, 200, 1e-8, 400 + i);
    worst = std::max({worst, r.max_A_deviation, r.max_offdiag});
    if (!r.passed) failed += " " + family_tag(families[i]);
  }
  const std::vector<Cmpo> base = {displacement_cmpu(alpha), parity_phase_cmpu(1.0, kDom),
                                  number_controlled_phase_cmpu(3, 1.0, kDom)};
  int caught = 0;
  double weakest = 1e300;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(1004, seed));
    const Cmpo& O = base[seed % base.size()];
    ComplexMatrix delta = rng.matrix(O.D(), O.D());
    delta *= 0.1 / delta.norm();
    const MF dm = MF::constant(delta, kDom);
    const int which = static_cast<int>(seed % 5);
    const Cmpo P(kDom, which == 0 ? ComplexMatrix(O.B() + delta) : O.B(), which == 1 ? O.Q() + dm : O.Q(),
                 which == 2 ? O.L() + dm : O.L(), which == 3 ? O.R() + dm : O.R(),
                 which == 4 ? O.T() + dm : O.T());
    const UnitarityReport r = check_unitary(P, 4, 200, 1e-8, seed);
    if (!r.passed) ++caught;
    weakest = std::min(weakest, std::max(r.max_A_deviation, r.max_offdiag));
  }
  return {failed.empty() && caught == 20,
          std::to_string(families.size()) + " families, worst deviation " + sci(worst) +
              (failed.empty() ? "" : ", failing:" + failed) + "; perturbations rejected " +
              std::to_string(caught) + "/20 (smallest deviation " + sci(weakest) + ")"};
}

Complex bumpy(std::span<const double> xs) {
  Complex a(0.7, -0.2);
  for (std::size_t i = 0; i < xs.size(); ++i)
    a *= std::exp(kI * (1.3 * xs[i] + 0.4 * i)) * (0.8 + 0.5 * std::cos(3.0 * xs[i] + i));
  return a;
}

// 5. String-operator identity on sectors up to three.
Verdict string_identity() {
  const Interval d(0.0, 1.0);
  const SectorState s = SectorState::from_function(d, 3, 16, bumpy);
  Worst w;
  for (double omega : {0.5, 1.0, 2.3}) {
    const SectorState a = truncated_apply(parity_phase_cmpu(omega, d), s);
    const SectorState b = string_phase_apply(s, omega);
    for (int j = 0; j <= 3; ++j)
      for (std::size_t r = 0; r < s.size(j); ++r) w.add(std::abs(a.sector(j)[r] - b.sector(j)[r]), 1e-6);
  }
  return {!w.violated, "max amplitude difference " + sci(w.value) + " for omega 0.5, 1.0, 2.3"};
}

// 6. Gauge invariance.
Verdict gauge_invariance() {
  Rng rng(derive_seed(1006, 0));
  Worst w;
  int probes = 0;
  for (int D = 1; D <= 3; ++D) {
    const Cmpo O = random_cmpo(rng, D, kDom, 0.6);
    const ComplexMatrix A = rng.matrix(D, D, 0.5), C = identity_matrix(D) + rng.matrix(D, D, 0.2);
    const MF g = MF::affine(ComplexMatrix::Zero(D, D), A, kDom).exp() * MF::constant(C, kDom);
    const MF dg = MF::constant(A, kDom) * g;
    const Cmpo G = gauge_transform(O, g, dg);
    const int n = D == 3 ? 16 : 17;
    for (int s = 0; s < n; ++s, ++probes) {
      const int j = static_cast<int>(rng.next() % 4);
      const auto xs = sorted_uniform(rng, kDom, j);
      const auto lab = random_labels(rng, j);
      const Complex a = cmpo_coefficient(G, lab, xs), b = cmpo_coefficient(O, lab, xs);
      w.add(std::abs(a - b) / std::max(1.0, std::abs(b)), 1e-8);
    }
  }
  return {!w.violated && probes == 50, std::to_string(probes) + " probes, max deviation " + sci(w.value)};
}

// 7. apply against compose-then-vacuum.
Verdict area_law_map() {
  Rng rng(derive_seed(1007, 0));
  Worst w;
  bool dims = true;
  for (int pair = 0; pair < 20; ++pair) {
    const int D1 = 1 + pair % 3, D2 = 1 + (pair / 3) % 3;
    const Cmpo O = random_cmpo(rng, D1, kDom, 0.6);
    const Cmps psi = random_cmps(rng, D2, kDom, 0.6);
    const Cmps direct = apply(O, psi);
    const Cmps routed = apply_to_vacuum(compose(O, embed_cmps(psi)));
    dims = dims && direct.D() == D1 * D2 && routed.D() == D1 * D2;
    for (int j = 0; j <= 3; ++j) {
      const auto xs = sorted_uniform(rng, kDom, j);
      const Complex a = cmps_coefficient(direct, xs), b = cmps_coefficient(routed, xs);
      w.add(std::abs(a - b) / std::max(1.0, std::abs(b)), 1e-10);
    }
  }
  return {!w.violated && dims, "20 pairs, max deviation " + sci(w.value) + (dims ? ", D = D1 D2" : ", wrong D")};
}

// 8. Projector factorization.
Verdict projector_factorization() {
  Rng rng(derive_seed(1008, 0));
  Worst w;
  for (int q = 0; q < 20; ++q) {
    const auto st = [&] { return normalize(random_cmps(rng, 1 + static_cast<int>(rng.next() % 2), kDom, 0.6)); };
    const Cmps phi = st(), pi = st(), pj = st(), chi = st();
    const Complex lhs = inner_product(phi, apply(projector_cmpo(pi, pj), chi));
    const Complex rhs = inner_product(phi, pi) * inner_product(pj, chi);
    w.add(std::abs(lhs - rhs), 1e-8);
  }
  return {!w.violated, "20 quadruples, max deviation " + sci(w.value)};
}

// 9. Number-controlled phase at coefficient level and through truncated_apply.
Verdict number_controlled() {
  Rng rng(derive_seed(1009, 0));
  const Interval d(0.0, 1.0);
  Worst coeff, off, state;
  for (int D = 3; D <= 5; ++D) {
    for (double theta : {M_PI / 3, M_PI}) {
      const Cmpo U = number_controlled_phase_cmpu(D, theta, d);
      for (int j = 0; j <= D; ++j) {
        const Complex want = j == D - 2 ? std::exp(kI * theta) : Complex(1.0);
        for (int s = 0; s < 5; ++s) {
          const auto xs = sorted_uniform(rng, d, j);
          coeff.add(std::abs(cmpo_coefficient(U, all_a(xs.size()), xs) - want), 1e-10);
          if (j > 0) {
            auto lab = random_labels(rng, j);
            lab[static_cast<std::size_t>(rng.next() % j)] = rng.next() % 2 ? CoeffLabel::L : CoeffLabel::R;
            off.add(std::abs(cmpo_coefficient(U, lab, xs)), 1e-10);
          }
        }
      }
      const SectorState s = SectorState::from_function(d, D - 1, 8, bumpy);
      const SectorState out = truncated_apply(U, s);
      for (int j = 0; j <= D - 1; ++j) {
        const Complex ph = j == D - 2 ? std::exp(kI * theta) : Complex(1.0);
        for (std::size_t r = 0; r < s.size(j); ++r) state.add(std::abs(out.sector(j)[r] - ph * s.sector(j)[r]), 1e-10);
      }
    }
  }
  return {!coeff.violated && !off.violated && !state.violated,
          "D 3..5, theta pi/3 and pi: coefficients " + sci(coeff.value) + ", off-A " + sci(off.value) +
              ", sector amplitudes " + sci(state.value)};
}

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run_cli(const std::string& args) {
  const std::string cmd = std::string(FIELDTN_CLI) + " " + args + " 2>/dev/null";
  Outcome r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 10. CLI reproducibility of the example commands.
Verdict cli_reproducibility() {
  const std::string data = FIELDTN_DATA;
  const auto tmp = [](const std::string& n) {
    return (std::filesystem::temp_directory_path() / ("fieldtn_accept_" + n)).string();
  };
  struct Job {
    std::string args;
    std::string out_file;  // empty: compare stdout
    int expect_code;
  };
  const std::vector<Job> jobs = {
      {"coeff --cmpo " + data + "/identity.json --labels AA --points 0.1,0.3", "", 0},
      {"check-unitarity --cmpo " + data + "/displacement.json --jmax 3 --samples 200 --tol 1e-8 --seed 7 --out ",
       "unit.json", 0},
      {"converge --cmpo " + data + "/parity.json --probe " + data + "/probes.json --Ns 32,64,128,256 --out ",
       "conv.csv", 0},
      {"catalog build --family parity_phase --params '{\"omega\": 1.0}' --interval 0,1 --out ", "parity.json", 0},
  };
  int identical = 0;
  std::string issues;
  for (const auto& job : jobs) {
    std::string bytes[2];
    bool codes = true;
    for (int rep = 0; rep < 2; ++rep) {
      const std::string path = job.out_file.empty() ? "" : tmp(std::to_string(rep) + job.out_file);
      const Outcome o = run_cli(job.args + path);
      codes = codes && o.code == job.expect_code;
      bytes[rep] = job.out_file.empty() ? o.out : slurp(path);
      if (!path.empty()) std::filesystem::remove(path);
    }
    if (codes && !bytes[0].empty() && bytes[0] == bytes[1])
      ++identical;
    else
      issues += " [" + job.args.substr(0, job.args.find(' ')) + "]";
  }
  const Outcome c = run_cli(jobs[0].args);
  const bool expected = c.out == "1+0i\n";
  return {identical == static_cast<int>(jobs.size()) && expected,
          std::to_string(identical) + "/" + std::to_string(jobs.size()) + " commands byte-identical" +
              (expected ? "" : ", coeff printed " + c.out) + issues};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> check;
    double budget;  // seconds
  };
  const std::vector<Criterion> criteria = {
      {"propagator exactness", propagator_exactness, 10},
      {"fock-state cmps", fock_states, 30},
      {"product rule vs lattice", product_rule, 300},
      {"catalog unitarity", unitarity, 300},
      {"string-operator identity", string_identity, 120},
      {"gauge invariance", gauge_invariance, 60},
      {"apply vs compose-then-vacuum", area_law_map, 60},
      {"projector factorization", projector_factorization, 60},
      {"number-controlled phase", number_controlled, 60},
      {"cli reproducibility", cli_reproducibility, 60},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char t[48];
    std::snprintf(t, sizeof t, "%.1f s of %.0f s", secs, criteria[i].budget);
    if (secs > criteria[i].budget) {
      v.ok = false;
      v.detail += ", over time budget";
    }
    if (!v.ok) ++failures;
    std::cout << (v.ok ? "PASS " : "FAIL ") << i + 1 << " " << criteria[i].name << ": " << v.detail << " (" << t
              << ")" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
