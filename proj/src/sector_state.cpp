#include "fieldtn/sector_state.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "fieldtn/errors.hpp"
#include "fieldtn/parallel.hpp"

namespace fieldtn {

namespace {

std::size_t binom(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Propagators between grid nodes and insertion values at nodes.
class NodeTable {
 public:
  NodeTable(const ComplexMatrix& B, const MatrixFunction& Q, const std::vector<MatrixFunction>& ins,
            const SectorState& grid, const PropagatorConfig& cfg)
      : B_(B), m_(grid.m()) {
    const PropagatorTable table(Q, cfg);
    const Interval& d = grid.interval();
    for (int a = 0; a < m_; ++a) {
      start_.push_back(table(d.x_minus(), grid.node(a)));
      end_.push_back(table(grid.node(a), d.x_plus()));
    }
    full_ = table(d.x_minus(), d.x_plus());
    mid_.resize(static_cast<std::size_t>(m_) * m_);
    for (int a = 0; a < m_; ++a)
      for (int b = a + 1; b < m_; ++b) mid_[a * m_ + b] = table(grid.node(a), grid.node(b));
    for (const auto& f : ins) {
      std::vector<ComplexMatrix> vals;
      for (int a = 0; a < m_; ++a) vals.push_back(f(grid.node(a)));
      values_.push_back(std::move(vals));
    }
  }

  const ComplexMatrix& value(int label, int node) const { return values_[label][node]; }

  struct Event {
    int node;
    ComplexMatrix g;
  };

  // Tr(B V(x-, u_1) G_1 V(u_1, u_2) ... G_n V(u_n, x+)) for events at increasing nodes.
  Complex chain(const std::vector<Event>& ev) const {
    if (ev.empty()) return (B_.transpose().cwiseProduct(full_)).sum();
    ComplexMatrix m = B_ * start_[ev.front().node];
    for (std::size_t i = 0; i < ev.size(); ++i) {
      m = m * ev[i].g;
      if (i + 1 < ev.size()) m = m * mid_[ev[i].node * m_ + ev[i + 1].node];
    }
    m = m * end_[ev.back().node];
    return m.trace();
  }

 private:
  ComplexMatrix B_;
  int m_;
  std::vector<ComplexMatrix> start_;
  std::vector<ComplexMatrix> end_;
  std::vector<ComplexMatrix> mid_;
  ComplexMatrix full_;
  std::vector<std::vector<ComplexMatrix>> values_;
};

}  // namespace

std::size_t MultisetIndex::count(int m, int j) {
  if (j == 0) return 1;
  return binom(static_cast<std::size_t>(m + j - 1), static_cast<std::size_t>(j));
}

std::size_t MultisetIndex::rank(std::span<const int> tuple) {
  std::size_t r = 0;
  for (std::size_t i = 0; i < tuple.size(); ++i)
    r += binom(static_cast<std::size_t>(tuple[i]) + i, i + 1);
  return r;
}

void MultisetIndex::unrank(std::size_t rank, int j, std::span<int> out) {
  for (int i = j - 1; i >= 0; --i) {
    const auto k = static_cast<std::size_t>(i + 1);
    std::size_t c = static_cast<std::size_t>(i);
    while (binom(c + 1, k) <= rank) ++c;
    rank -= binom(c, k);
    out[static_cast<std::size_t>(i)] = static_cast<int>(c) - i;
  }
}

SectorState::SectorState(Interval interval, int j_max, int m)
    : interval_(interval), j_max_(j_max), m_(m) {
  if (j_max < 0) throw DomainError("SectorState: j_max must be non-negative");
  if (m < 1) throw DomainError("SectorState: need at least one node per axis");
  for (int j = 0; j <= j_max; ++j) sectors_.emplace_back(MultisetIndex::count(m, j), Complex(0.0));
}

std::vector<int> SectorState::tuple(int j, std::size_t rank) const {
  std::vector<int> t(static_cast<std::size_t>(j));
  MultisetIndex::unrank(rank, j, t);
  return t;
}

std::vector<double> SectorState::points(int j, std::size_t rank) const {
  std::vector<double> xs;
  for (int k : tuple(j, rank)) xs.push_back(node(k));
  return xs;
}

Complex SectorState::amplitude(std::span<const int> tuple) const {
  const auto j = static_cast<int>(tuple.size());
  if (j > j_max_) return 0.0;
  return sector(j)[MultisetIndex::rank(tuple)];
}

double SectorState::weight(std::span<const int> tuple) const {
  double w = std::pow(h(), static_cast<double>(tuple.size()));
  std::size_t i = 0;
  while (i < tuple.size()) {
    std::size_t k = i;
    while (k < tuple.size() && tuple[k] == tuple[i]) ++k;
    w /= factorial(static_cast<int>(k - i));
    i = k;
  }
  return w;
}

double SectorState::sector_norm_squared(int j) const {
  double acc = 0.0;
  const auto& s = sector(j);
  for (std::size_t r = 0; r < s.size(); ++r)
    if (s[r] != Complex(0.0)) acc += weight(tuple(j, r)) * std::norm(s[r]);
  return acc;
}

double SectorState::norm_squared() const {
  double acc = 0.0;
  for (int j = 0; j <= j_max_; ++j) acc += sector_norm_squared(j);
  return acc;
}

Complex SectorState::inner(const SectorState& other) const {
  if (!(interval_ == other.interval_) || m_ != other.m_)
    throw DomainError("SectorState::inner: grids differ");
  Complex acc = 0.0;
  for (int j = 0; j <= std::min(j_max_, other.j_max_); ++j)
    for (std::size_t r = 0; r < size(j); ++r)
      acc += weight(tuple(j, r)) * std::conj(sector(j)[r]) * other.sector(j)[r];
  return acc;
}

SectorState SectorState::from_function(Interval interval, int j_max, int m, const Amplitude& amp) {
  SectorState s(interval, j_max, m);
  for (int j = 0; j <= j_max; ++j)
    for (std::size_t r = 0; r < s.size(j); ++r) s.sector(j)[r] = amp(s.points(j, r));
  return s;
}

SectorState SectorState::from_cmps(const Cmps& psi, int j_max, int m, const PropagatorConfig& cfg) {
  SectorState s(psi.interval(), j_max, m);
  const NodeTable nt(psi.B(), psi.Q(), {psi.L()}, s, cfg);
  for (int j = 0; j <= j_max; ++j) {
    for (std::size_t r = 0; r < s.size(j); ++r) {
      const auto t = s.tuple(j, r);
      std::vector<NodeTable::Event> ev;
      for (int k : t) {
        if (!ev.empty() && ev.back().node == k)
          ev.back().g = ev.back().g * nt.value(0, k);
        else
          ev.push_back({k, nt.value(0, k)});
      }
      s.sector(j)[r] = nt.chain(ev);
    }
  }
  return s;
}

SectorState truncated_apply(const Cmpo& O, const SectorState& s, const TruncationOptions& opt) {
  if (!(O.interval() == s.interval())) throw DomainError("truncated_apply: mismatched intervals");
  constexpr int kL = 0, kR = 1, kA = 2;
  const NodeTable nt(O.B(), O.Q(), {O.L(), O.R(), O.T()}, s, opt.propagator);
  const bool l_zero = O.L().is_zero();
  const bool r_zero = O.R().is_zero();
  const bool t_zero = O.T().is_zero();
  const int jm = s.j_max();
  const int m = s.m();
  std::vector<bool> live(static_cast<std::size_t>(jm) + 1);
  for (int j = 0; j <= jm; ++j)
    live[j] = std::any_of(s.sector(j).begin(), s.sector(j).end(),
                          [](Complex c) { return c != Complex(0.0); });

  // Pre-enumerated annihilation tuples and their weights per size r.
  std::vector<std::vector<std::vector<int>>> wtuples(static_cast<std::size_t>(jm) + 1);
  std::vector<std::vector<double>> wweights(static_cast<std::size_t>(jm) + 1);
  for (int r = 0; r <= jm; ++r) {
    if (r > 0 && r_zero) break;
    for (std::size_t k = 0; k < MultisetIndex::count(m, r); ++k) {
      std::vector<int> w(static_cast<std::size_t>(r));
      MultisetIndex::unrank(k, r, w);
      wweights[r].push_back(s.weight(w));
      wtuples[r].push_back(std::move(w));
    }
  }

  const auto output_amplitude = [&](const std::vector<int>& y) {
    const int jp = static_cast<int>(y.size());
    Complex acc = 0.0;
    std::vector<int> in;
    std::vector<NodeTable::Event> ev;
    for (unsigned mask = 0; mask < (1u << jp); ++mask) {
      const int a = std::popcount(mask);
      if (l_zero && a != jp) continue;
      if (t_zero && a != 0) continue;
      for (int r = 0; a + r <= jm; ++r) {
        if (r > 0 && r_zero) break;
        if (!live[a + r]) continue;
        for (std::size_t wi = 0; wi < wtuples[r].size(); ++wi) {
          const auto& w = wtuples[r][wi];
          in.clear();
          for (int i = 0; i < jp; ++i)
            if (mask >> i & 1u) in.push_back(y[i]);
          in.insert(in.end(), w.begin(), w.end());
          std::sort(in.begin(), in.end());
          const Complex amp = s.amplitude(in);
          if (amp == Complex(0.0)) continue;
          // Walk the union of nodes in increasing order.
          ev.clear();
          std::size_t yi = 0;
          std::size_t wj = 0;
          while (yi < y.size() || wj < w.size()) {
            const int u = std::min(yi < y.size() ? y[yi] : m, wj < w.size() ? w[wj] : m);
            ComplexMatrix zblock;
            bool has_z = false;
            while (yi < y.size() && y[yi] == u) {
              const ComplexMatrix& k = nt.value((mask >> yi & 1u) ? kA : kL, u);
              zblock = has_z ? ComplexMatrix(zblock * k) : k;
              has_z = true;
              ++yi;
            }
            int b = 0;
            while (wj < w.size() && w[wj] == u) {
              ++b;
              ++wj;
            }
            const ComplexMatrix& R = nt.value(kR, u);
            ComplexMatrix g;
            if (!has_z) {
              g = R;
              for (int i = 1; i < b; ++i) g = g * R;
            } else if (b == 0) {
              g = zblock;
            } else {
              std::vector<ComplexMatrix> rp{identity_matrix(static_cast<int>(R.rows()))};
              for (int i = 1; i <= b; ++i) rp.push_back(rp.back() * R);
              g = ComplexMatrix::Zero(R.rows(), R.cols());
              for (int k = 0; k <= b; ++k)
                g += (static_cast<double>(binom(b, k)) / std::ldexp(1.0, b)) * (rp[k] * zblock * rp[b - k]);
            }
            ev.push_back({u, std::move(g)});
          }
          acc += wweights[r][wi] * nt.chain(ev) * amp;
        }
      }
    }
    return acc;
  };

  SectorState out(s.interval(), jm, m);
  const int top = opt.measure_leakage ? jm + 1 : jm;
  for (int jp = 0; jp <= top; ++jp) {
    const std::size_t n = MultisetIndex::count(m, jp);
    std::vector<Complex> values(n);
    parallel_for(n, opt.threads, [&](std::size_t r) {
      std::vector<int> y(static_cast<std::size_t>(jp));
      MultisetIndex::unrank(r, jp, y);
      values[r] = output_amplitude(y);
    });
    if (jp <= jm) {
      out.sector(jp) = std::move(values);
    } else {
      double leak = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        std::vector<int> y(static_cast<std::size_t>(jp));
        MultisetIndex::unrank(r, jp, y);
        leak += s.weight(y) * std::norm(values[r]);
      }
      out.truncation_leakage = leak;
    }
  }
  return out;
}

SectorState string_phase_apply(const SectorState& s, double omega) {
  SectorState out = s;
  for (int N = 1; N <= s.j_max(); ++N) {
    for (std::size_t r = 0; r < s.size(N); ++r) {
      const auto xs = s.points(N, r);
      double k = 0.0;
      for (int j = 0; j < N; ++j) k += xs[j] * (((N - 1 - j) % 2 == 0) ? 1.0 : -1.0);
      out.sector(N)[r] = s.sector(N)[r] * std::exp(-kI * (omega * k));
    }
  }
  return out;
}

}  // namespace fieldtn
