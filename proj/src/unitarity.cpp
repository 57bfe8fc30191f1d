#include "fieldtn/unitarity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fieldtn/errors.hpp"
#include "fieldtn/parallel.hpp"
#include "fieldtn/random.hpp"

namespace fieldtn {

std::vector<double> unitarity_sample_points(const Interval& interval, std::uint64_t seed, int j,
                                            int sample) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(sample)));
  std::vector<double> xs(static_cast<std::size_t>(j));
  for (auto& x : xs) x = rng.uniform(interval.x_minus(), interval.x_plus());
  std::sort(xs.begin(), xs.end());
  return xs;
}

UnitarityReport check_unitary(const Cmpo& O, const UnitarityOptions& opt) {
  if (opt.j_max < 1) throw DomainError("check_unitary: j_max must be at least 1");
  if (opt.samples_per_j < 1) throw DomainError("check_unitary: samples_per_j must be at least 1");
  if (!(opt.tol > 0.0)) throw DomainError("check_unitary: tol must be positive");

  std::vector<ChainEvaluator> sides;
  const Cmpo Od = adjoint(O);
  if (opt.sides != UnitaritySides::kRightOnly)
    sides.push_back(cmpo_evaluator(compose(Od, O), opt.propagator));
  if (opt.sides != UnitaritySides::kLeftOnly)
    sides.push_back(cmpo_evaluator(compose(O, Od), opt.propagator));

  struct Task {
    int j;
    int sample;
  };
  std::vector<Task> tasks{{0, 0}};
  for (int j = 1; j <= opt.j_max; ++j)
    for (int s = 0; s < opt.samples_per_j; ++s) tasks.push_back({j, s});

  struct Result {
    double a_dev = 0.0;
    double off = 0.0;
  };
  std::vector<Result> results(tasks.size());
  parallel_for(tasks.size(), opt.threads, [&](std::size_t t) {
    const auto xs = unitarity_sample_points(O.interval(), opt.seed, tasks[t].j, tasks[t].sample);
    Result r;
    for (const auto& ev : sides) {
      const auto values = ev.trace_all(xs);
      const std::size_t all_a = values.size() - 1;  // every digit is A = 2
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (i == all_a)
          r.a_dev = std::max(r.a_dev, std::abs(values[i] - 1.0));
        else
          r.off = std::max(r.off, std::abs(values[i]));
      }
    }
    results[t] = r;
  });

  UnitarityReport rep;
  rep.j_max = opt.j_max;
  rep.tol = opt.tol;
  rep.seed = opt.seed;
  rep.probes.assign(static_cast<std::size_t>(opt.j_max) + 1, 0);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    // A NaN deviation sticks, so the check fails.
    const auto worse = [](double cur, double v) { return std::isnan(v) || v > cur ? v : cur; };
    rep.max_A_deviation = worse(rep.max_A_deviation, results[t].a_dev);
    rep.max_offdiag = worse(rep.max_offdiag, results[t].off);
    long long strings = 1;
    for (int k = 0; k < tasks[t].j; ++k) strings *= 3;
    rep.probes[static_cast<std::size_t>(tasks[t].j)] += strings * static_cast<long long>(sides.size());
  }
  rep.passed = rep.max_A_deviation <= opt.tol && rep.max_offdiag <= opt.tol;
  return rep;
}

UnitarityReport check_unitary(const Cmpo& O, int j_max, int samples_per_j, double tol,
                              std::uint64_t seed) {
  UnitarityOptions opt;
  opt.j_max = j_max;
  opt.samples_per_j = samples_per_j;
  opt.tol = tol;
  opt.seed = seed;
  return check_unitary(O, opt);
}

const MatrixFunction& InteractionPicture::dressed(CoeffLabel label) const noexcept {
  switch (label) {
    case CoeffLabel::L: return K_L;
    case CoeffLabel::R: return K_R;
    case CoeffLabel::A: return K_A;
  }
  return K_A;
}

Complex InteractionPicture::trace(std::span<const CoeffLabel> labels,
                                  std::span<const double> xs) const {
  if (labels.size() != xs.size()) throw DomainError("trace: labels and points differ in length");
  ComplexMatrix m = boundary;
  for (std::size_t i = 0; i < xs.size(); ++i) m = m * dressed(labels[i])(xs[i]);
  return m.trace();
}

namespace {

ComplexMatrix uniform_value(const MatrixFunction& f, const char* name) {
  if (const auto c = f.constant_value()) return *c;
  const Interval& d = f.domain();
  const ComplexMatrix ref = f(d.x_minus());
  for (int k = 1; k < 8; ++k) {
    const double x = d.x_minus() + d.length() * k / 7.0;
    if ((f(x) - ref).norm() > 1e-12 * std::max(1.0, ref.norm()))
      throw DomainError(std::string("interaction_picture: ") + name + " is not bulk-uniform");
  }
  return ref;
}

}  // namespace

InteractionPicture interaction_picture(const Cmpo& O) {
  const Interval& d = O.interval();
  const ComplexMatrix Q = uniform_value(O.Q(), "Q");
  const ComplexMatrix L = uniform_value(O.L(), "L");
  const ComplexMatrix R = uniform_value(O.R(), "R");
  const ComplexMatrix T = uniform_value(O.T(), "T");
  // V(x_-, x) = exp((x - x_-) Q) for a constant generator.
  const MatrixFunction fwd = MatrixFunction::affine(-d.x_minus() * Q, Q, d).exp();
  const MatrixFunction bwd = MatrixFunction::affine(d.x_minus() * Q, -Q, d).exp();
  const auto dress = [&](const ComplexMatrix& k) {
    const auto kk = MatrixFunction::constant(k, d);
    if (kk.is_zero()) return kk;
    return fwd * kk * bwd;
  };
  return {mat_exp(d.length() * Q) * O.B(), dress(L), dress(R), dress(T)};
}

}  // namespace fieldtn
