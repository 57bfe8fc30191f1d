#include "fieldtn/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "fieldtn/errors.hpp"

namespace fieldtn {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

void require_lattice_args(int N, int n_max) {
  if (N < 2) throw DomainError("discretize: need N >= 2 sites");
  if (n_max < 1) throw DomainError("discretize: need n_max >= 1");
}

// Sum over all orderings of l copies of L, r of R and a of T.
ComplexMatrix ordered_sum(const ComplexMatrix& L, const ComplexMatrix& R, const ComplexMatrix& T,
                          int l, int r, int a) {
  const auto d = L.rows();
  ComplexMatrix total = ComplexMatrix::Zero(d, d);
  std::function<void(int, int, int, const ComplexMatrix&)> rec = [&](int l, int r, int a,
                                                                     const ComplexMatrix& acc) {
    if (l == 0 && r == 0 && a == 0) {
      total += acc;
      return;
    }
    if (l > 0) rec(l - 1, r, a, acc * L);
    if (r > 0) rec(l, r - 1, a, acc * R);
    if (a > 0) rec(l, r, a - 1, acc * T);
  };
  rec(l, r, a, ComplexMatrix::Identity(d, d));
  return total;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

int LatticeSystem::site_of(double x) const {
  const double u = (interval.clamp_checked(x) - interval.x_minus()) / epsilon;
  return std::clamp(static_cast<int>(std::floor(u)), 0, N - 1);
}

LatticeSystem discretize(const Cmpo& O, int N, int n_max) {
  require_lattice_args(N, n_max);
  LatticeSystem sys{O.interval(), N, O.interval().length() / N, n_max, false, O.B(), {}};
  const double eps = sys.epsilon;
  const double se = std::sqrt(eps);
  const int p = n_max + 1;
  const auto id = identity_matrix(O.D());
  for (int k = 0; k < N; ++k) {
    const double x = sys.site_position(k);
    const ComplexMatrix Q = O.Q()(x), L = O.L()(x), R = O.R()(x), T = O.T()(x);
    std::vector<ComplexMatrix> site(static_cast<std::size_t>(p * p));
    for (int n = 0; n <= n_max; ++n) {
      for (int m = 0; m <= n_max; ++m) {
        ComplexMatrix& A = site[n * p + m];
        if (n == 0 && m == 0) {
          A = id + eps * Q;
        } else if (n == 1 && m == 0) {
          A = se * L;
        } else if (n == 0 && m == 1) {
          A = se * R;
        } else if (n == 1 && m == 1) {
          A = T;
        } else {
          A = ComplexMatrix::Zero(O.D(), O.D());
          for (int a = 0; a <= std::min(n, m); ++a) {
            const int l = n - a, r = m - a;
            A += (std::pow(se, l + r) / factorial(l + r + a)) * ordered_sum(L, R, T, l, r, a);
          }
        }
      }
    }
    sys.tensors.push_back(std::move(site));
  }
  return sys;
}

LatticeSystem discretize(const Cmps& psi, int N, int n_max) {
  require_lattice_args(N, n_max);
  LatticeSystem sys{psi.interval(), N, psi.interval().length() / N, n_max, true, psi.B(), {}};
  const double eps = sys.epsilon;
  for (int k = 0; k < N; ++k) {
    const double x = sys.site_position(k);
    const ComplexMatrix L = std::sqrt(eps) * psi.L()(x);
    std::vector<ComplexMatrix> site{identity_matrix(psi.D()) + eps * psi.Q()(x)};
    ComplexMatrix pw = identity_matrix(psi.D());
    for (int n = 1; n <= n_max; ++n) {
      pw = pw * L;
      site.push_back(pw / factorial(n));
    }
    sys.tensors.push_back(std::move(site));
  }
  return sys;
}

LatticeSystem lattice_product(const LatticeSystem& a, const LatticeSystem& b) {
  if (a.is_state || b.is_state) throw DomainError("lattice_product: operands must be operators");
  if (a.N != b.N || a.n_max != b.n_max || !(a.interval == b.interval))
    throw DomainError("lattice_product: lattices differ");
  LatticeSystem out{a.interval, a.N, a.epsilon, a.n_max, false, kron(a.B, b.B), {}};
  const int p = a.n_max + 1;
  for (int s = 0; s < a.N; ++s) {
    std::vector<ComplexMatrix> site(static_cast<std::size_t>(p * p));
    for (int n = 0; n < p; ++n)
      for (int m = 0; m < p; ++m) {
        ComplexMatrix c = ComplexMatrix::Zero(out.D(), out.D());
        for (int k = 0; k < p; ++k) c += factorial(k) * kron(a.op(s, n, k), b.op(s, k, m));
        site[n * p + m] = std::move(c);
      }
    out.tensors.push_back(std::move(site));
  }
  return out;
}

Complex lattice_matrix_element(const LatticeSystem& sys, std::span<const int> out,
                               std::span<const int> in) {
  if (sys.is_state) throw DomainError("lattice_matrix_element: system is a state");
  if (out.size() != static_cast<std::size_t>(sys.N) || in.size() != out.size())
    throw DimensionError("lattice_matrix_element: occupation lists need one entry per site");
  double factor = 1.0;
  ComplexMatrix m = sys.B;
  for (int s = 0; s < sys.N; ++s) {
    if (out[s] < 0 || in[s] < 0) throw DomainError("negative occupation");
    if (out[s] > sys.n_max || in[s] > sys.n_max) return 0.0;
    m = m * sys.op(s, out[s], in[s]);
    factor *= std::sqrt(factorial(out[s]) * factorial(in[s]));
  }
  return factor * m.trace();
}

Complex lattice_amplitude(const LatticeSystem& sys, std::span<const int> occ) {
  if (!sys.is_state) throw DomainError("lattice_amplitude: system is an operator");
  if (occ.size() != static_cast<std::size_t>(sys.N))
    throw DimensionError("lattice_amplitude: occupation list needs one entry per site");
  double factor = 1.0;
  ComplexMatrix m = sys.B;
  for (int s = 0; s < sys.N; ++s) {
    if (occ[s] < 0) throw DomainError("negative occupation");
    if (occ[s] > sys.n_max) return 0.0;
    m = m * sys.state(s, occ[s]);
    factor *= std::sqrt(factorial(occ[s]));
  }
  return factor * m.trace();
}

ComplexMatrix dense_assemble(const LatticeSystem& sys) {
  const int p = sys.n_max + 1;
  const double log2dim = sys.N * std::log2(static_cast<double>(p));
  const double limit = sys.is_state ? 20.0 : 10.0;
  if (log2dim > limit + 1e-9)
    throw CapacityError("dense_assemble: (n_max+1)^N = " + std::to_string(p) + "^" +
                        std::to_string(sys.N) + " exceeds the size guard");
  const auto dim = static_cast<Eigen::Index>(std::llround(std::pow(p, sys.N)));
  ComplexMatrix out = sys.is_state ? ComplexMatrix::Zero(dim, 1) : ComplexMatrix::Zero(dim, dim);
  std::vector<double> sqf(static_cast<std::size_t>(p));
  for (int n = 0; n < p; ++n) sqf[n] = std::sqrt(factorial(n));

  std::function<void(int, const ComplexMatrix&, Eigen::Index, Eigen::Index, double)> dfs =
      [&](int s, const ComplexMatrix& m, Eigen::Index row, Eigen::Index col, double f) {
        if (s == sys.N) {
          out(row, col) = f * m.trace();
          return;
        }
        for (int n = 0; n < p; ++n) {
          if (sys.is_state) {
            dfs(s + 1, m * sys.state(s, n), row * p + n, 0, f * sqf[n]);
          } else {
            for (int k = 0; k < p; ++k)
              dfs(s + 1, m * sys.op(s, n, k), row * p + n, col * p + k, f * sqf[n] * sqf[k]);
          }
        }
      };
  dfs(0, sys.B, 0, 0, 1.0);
  return out;
}

const ProbeFit& ConvergenceTable::fit(const std::string& probe_id) const {
  for (const auto& f : fits)
    if (f.probe_id == probe_id) return f;
  throw DomainError("no fit for probe " + probe_id);
}

std::string ConvergenceTable::to_csv() const {
  std::ostringstream os;
  os << "probe_id,N,epsilon,lattice_value_re,lattice_value_im,continuum_re,continuum_im,"
        "abs_error,slope\n";
  for (const auto& r : rows) {
    const auto& f = fit(r.probe_id);
    os << r.probe_id << ',' << r.N << ',' << fmt(r.epsilon) << ',' << fmt(r.lattice_value.real())
       << ',' << fmt(r.lattice_value.imag()) << ',' << fmt(r.continuum_value.real()) << ','
       << fmt(r.continuum_value.imag()) << ',' << fmt(r.abs_error) << ','
       << (f.exact ? std::string("exact") : fmt(f.slope)) << '\n';
  }
  return os.str();
}

ConvergenceTable convergence_study(const Cmpo& O, std::span<const LatticeProbe> probes,
                                   std::span<const int> Ns, const ConvergenceOptions& opt) {
  if (Ns.size() < 3) throw DomainError("convergence_study: need at least three lattice sizes");
  for (std::size_t i = 1; i < Ns.size(); ++i)
    if (Ns[i] <= Ns[i - 1]) throw DomainError("convergence_study: Ns must be increasing");
  for (const auto& pr : probes)
    if (pr.labels.size() != pr.xs.size())
      throw DomainError("convergence_study: probe " + pr.id + " has mismatched labels and points");

  ConvergenceTable table;
  std::vector<std::vector<double>> errors(probes.size());
  for (int N : Ns) {
    const LatticeSystem sys = opt.lattice ? opt.lattice(N) : discretize(O, N, opt.n_max);
    if (sys.N != N || !(sys.interval == O.interval()))
      throw DomainError("convergence_study: lattice factory returned the wrong lattice");
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const auto& pr = probes[p];
      std::vector<int> out(static_cast<std::size_t>(N), 0), in(static_cast<std::size_t>(N), 0);
      std::vector<double> snapped;
      int prev = -1;
      int links = 0;
      for (std::size_t i = 0; i < pr.xs.size(); ++i) {
        const int k = sys.site_of(pr.xs[i]);
        if (k <= prev)
          throw DomainError("convergence_study: probe " + pr.id + " points share a site at N = " +
                            std::to_string(N));
        prev = k;
        snapped.push_back(sys.site_position(k));
        const CoeffLabel l = pr.labels[i];
        if (l != CoeffLabel::R) out[k] = 1;
        if (l != CoeffLabel::L) in[k] = 1;
        if (l != CoeffLabel::A) ++links;
      }
      const Complex element = lattice_matrix_element(sys, out, in);
      const Complex lat = element / std::pow(sys.epsilon, 0.5 * links);
      const Complex cont = cmpo_coefficient(O, pr.labels, snapped, opt.propagator);
      const double err = std::abs(lat - cont);
      errors[p].push_back(err);
      table.rows.push_back({pr.id, N, sys.epsilon, lat, cont, err});
    }
  }
  for (std::size_t p = 0; p < probes.size(); ++p) {
    ProbeFit f{probes[p].id, 0.0, false};
    double scale = 0.0;
    for (const auto& r : table.rows)
      if (r.probe_id == probes[p].id) scale = std::max(scale, std::abs(r.continuum_value));
    const double floor = 1e-13 * std::max(1.0, scale);
    f.exact = std::all_of(errors[p].begin(), errors[p].end(), [&](double e) { return e <= floor; });
    if (!f.exact) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const double n = static_cast<double>(Ns.size());
      for (std::size_t i = 0; i < Ns.size(); ++i) {
        const double x = std::log(static_cast<double>(Ns[i]));
        const double y = std::log(std::max(errors[p][i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
      }
      f.slope = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    table.fits.push_back(f);
  }
  return table;
}

}  // namespace fieldtn
