#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/constants/constants.hpp>

#include "rootflow/error.hpp"
#include "rootflow/polynomial.hpp"

namespace rootflow {

using cplx = std::complex<double>;

/// One frame of the flow: the roots of the k-th derivative, in a fixed
/// coordinate frame. `time` is k / n0 with n0 the degree of the initial frame.
struct RootSet {
  std::vector<cplx> roots;
  int degree = 0;
  double time = 0.0;
  /// Set when the source polynomial has real coefficients.
  bool conjugate_symmetric = false;

  static RootSet make(std::vector<cplx> roots, double time = 0.0,
                      bool conjugate_symmetric = false) {
    RootSet rs;
    rs.degree = static_cast<int>(roots.size());
    rs.roots = std::move(roots);
    rs.time = time;
    rs.conjugate_symmetric = conjugate_symmetric;
    return rs;
  }

  std::size_t size() const noexcept { return roots.size(); }
};

enum class Precision { standard, extended, automatic };

struct RootOptions {
  /// Backward-error target; 0 selects max(1e-12, 8 n eps) for the working type.
  double tol = 0.0;
  int max_iterations = 2000;
};

namespace detail {

template <class Real>
struct AberthEval {
  std::complex<Real> newton;  // p / p'
  Real backward;              // |p(z)| / sum |c_k| |z|^k
};

template <class Real>
AberthEval<Real> aberth_eval(const std::vector<std::complex<Real>>& c,
                             const std::complex<Real>& z) {
  using std::abs;
  using C = std::complex<Real>;
  const std::size_t n = c.size() - 1;
  const Real az = abs(z);
  if (az <= Real(1)) {
    C p = c[n], dp(0);
    Real s = abs(c[n]);
    for (std::size_t k = n; k-- > 0;) {
      dp = dp * z + p;
      p = p * z + c[k];
      s = s * az + abs(c[k]);
    }
    if (p == C(0)) return {C(0), Real(0)};
    return {p / dp, abs(p) / s};
  }
  // |z| > 1: evaluate the reversed polynomial at y = 1/z.
  const C y = C(1) / z;
  const Real ay = abs(y);
  C q = c[0], dq(0);
  Real s = abs(c[0]);
  for (std::size_t k = 1; k <= n; ++k) {
    dq = dq * y + q;
    q = q * y + c[k];
    s = s * ay + abs(c[k]);
  }
  if (q == C(0)) return {C(0), Real(0)};
  return {z / (Real(n) - y * dq / q), abs(q) / s};
}

}  // namespace detail

/// Result of the coefficient-domain solver in the working precision.
template <class Real>
struct RootsResult {
  std::vector<std::complex<Real>> roots;
  std::vector<Real> backward_errors;
  int iterations = 0;
};

/// All roots of p by Ehrlich-Aberth simultaneous iteration (Gauss-Seidel
/// sweep). Initial guesses lie on a circle of radius |c0/cn|^(1/n) with a
/// fixed angular offset, so the result is deterministic. Each returned root
/// satisfies |p(r)| <= tol * sum |c_k| |r|^k.
template <class Real>
RootsResult<Real> find_roots_in(const BasicPolynomial<Real>& p, Real tol, int max_iterations) {
  using std::abs;
  using std::pow;
  using std::isfinite;
  using std::cos;
  using std::sin;
  using C = std::complex<Real>;
  if (p.degree() < 1) throw DomainError("find_roots: degree must be at least 1");
  for (const auto& a : p.coeffs())
    if (!isfinite(a.real()) || !isfinite(a.imag()))
      throw DomainError("find_roots: NaN or Inf coefficient");

  RootsResult<Real> out;
  std::vector<C> c = p.coeffs();
  // Exact zero roots.
  std::size_t zeros = 0;
  while (zeros < c.size() && c[zeros] == C(0)) ++zeros;
  c.erase(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(zeros));
  for (std::size_t k = 0; k < zeros; ++k) {
    out.roots.push_back(C(0));
    out.backward_errors.push_back(Real(0));
  }
  const std::size_t n = c.size() - 1;
  if (n == 0) return out;
  if (n == 1) {
    out.roots.push_back(-c[0] / c[1]);
    out.backward_errors.push_back(detail::aberth_eval(c, out.roots.back()).backward);
    return out;
  }

  const Real radius = pow(abs(c[0]) / abs(c[n]), Real(1) / Real(n));
  const Real two_pi = boost::math::constants::two_pi<Real>();
  std::vector<C> z(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Real phi = two_pi * Real(k) / Real(n) + Real(0.4);
    z[k] = C(radius * cos(phi), radius * sin(phi));
  }

  std::vector<char> done(n, 0);
  std::vector<Real> backward(n, Real(0));
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    bool all_done = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      const auto ev = detail::aberth_eval(c, z[i]);
      backward[i] = ev.backward;
      if (ev.backward <= tol) {
        done[i] = 1;
        continue;
      }
      all_done = false;
      C repulsion(0);
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) repulsion += C(1) / (z[i] - z[j]);
      const C step = ev.newton / (C(1) - ev.newton * repulsion);
      z[i] -= step;
    }
    if (all_done) break;
  }
  if (iter == max_iterations) {
    Real worst(0);
    for (std::size_t i = 0; i < n; ++i)
      if (!done[i]) worst = std::max(worst, detail::aberth_eval(c, z[i]).backward);
    throw ConvergenceError("find_roots: no convergence, worst backward error " +
                               std::to_string(static_cast<double>(worst)),
                           static_cast<double>(worst), iter);
  }
  out.iterations = iter;
  for (std::size_t i = 0; i < n; ++i) {
    out.roots.push_back(z[i]);
    out.backward_errors.push_back(backward[i]);
  }
  return out;
}

/// Conjugation clean-up for roots of real polynomials: near-real roots are
/// put on the axis and the remaining roots are averaged with their mirror
/// partner, so the set is exactly closed under conjugation.
inline void symmetrize_conjugates(std::vector<cplx>& roots, double tol) {
  double scale = 1.0;
  for (const auto& r : roots) scale = std::max(scale, std::abs(r));
  const double snap = tol * scale;
  std::vector<std::size_t> upper, lower;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (std::abs(roots[i].imag()) <= snap)
      roots[i].imag(0.0);
    else if (roots[i].imag() > 0)
      upper.push_back(i);
    else
      lower.push_back(i);
  }
  std::vector<char> used(lower.size(), 0);
  for (std::size_t ui : upper) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = lower.size();
    for (std::size_t k = 0; k < lower.size(); ++k) {
      if (used[k]) continue;
      const double d = std::abs(roots[ui] - std::conj(roots[lower[k]]));
      if (d < best) {
        best = d;
        best_k = k;
      }
    }
    if (best_k == lower.size()) continue;
    used[best_k] = 1;
    const cplx avg = 0.5 * (roots[ui] + std::conj(roots[lower[best_k]]));
    roots[ui] = avg;
    roots[lower[best_k]] = std::conj(avg);
  }
}

/// Roots of a double-precision polynomial. Precision::extended runs the
/// iteration in long double; automatic switches to it above degree 300.
inline RootSet find_roots(const Polynomial& p, RootOptions opt = {},
                          Precision precision = Precision::automatic) {
  const bool extended = precision == Precision::extended ||
                        (precision == Precision::automatic && p.degree() > 300);
  const int n = p.degree();
  std::vector<cplx> roots;
  if (extended) {
    using LD = long double;
    const LD tol = opt.tol > 0 ? static_cast<LD>(opt.tol)
                               : std::max<LD>(1e-12L, 8 * n * std::numeric_limits<LD>::epsilon());
    auto res = find_roots_in<LD>(p.cast<LD>(), tol, opt.max_iterations);
    for (const auto& r : res.roots)
      roots.emplace_back(static_cast<double>(r.real()), static_cast<double>(r.imag()));
  } else {
    const double tol = opt.tol > 0 ? opt.tol
                                   : std::max(1e-12, 8 * n * std::numeric_limits<double>::epsilon());
    roots = find_roots_in<double>(p, tol, opt.max_iterations).roots;
  }
  if (p.is_real()) symmetrize_conjugates(roots, 1e-10);
  return RootSet::make(std::move(roots), 0.0, p.is_real());
}

/// Backward error |p(r)| / sum |c_k| |r|^k of a candidate root.
inline double backward_error(const Polynomial& p, cplx r) {
  return detail::aberth_eval(p.coeffs(), r).backward;
}

/// Shift and scale of the normalized frame: z_normalized = (z - shift) / scale.
struct Normalized {
  RootSet roots;
  cplx shift{0.0, 0.0};
  double scale = 1.0;
};

inline RootSet apply_frame(const RootSet& rs, cplx shift, double scale) {
  RootSet out = rs;
  for (auto& r : out.roots) r = (r - shift) / scale;
  return out;
}

inline RootSet undo_frame(const RootSet& rs, cplx shift, double scale) {
  RootSet out = rs;
  for (auto& r : out.roots) r = r * scale + shift;
  return out;
}

/// Centre at the centroid and scale the farthest root onto the unit circle.
/// A set that is already centred (|sum| <= 1e-12 n) inside the closed unit
/// disk is returned unchanged with the identity transform.
inline Normalized normalize(const RootSet& rs) {
  if (rs.roots.empty()) throw DomainError("normalize: empty root set");
  const double n = static_cast<double>(rs.roots.size());
  cplx sum(0.0, 0.0);
  double max_mod = 0.0;
  for (const auto& r : rs.roots) {
    sum += r;
    max_mod = std::max(max_mod, std::abs(r));
  }
  if (std::abs(sum) <= 1e-12 * n && max_mod <= 1.0) return {rs, cplx(0.0, 0.0), 1.0};

  cplx shift = sum / n;
  if (rs.conjugate_symmetric) shift.imag(0.0);
  double scale = 0.0;
  for (const auto& r : rs.roots) scale = std::max(scale, std::abs(r - shift));
  if (!(scale > 0.0)) throw DomainError("degenerate point mass");
  return {apply_frame(rs, shift, scale), shift, scale};
}

struct CriticalOptions {
  /// Relative Newton-step size at which a critical point is frozen.
  double step_tol = 1e-13;
  int max_iterations = 100;
  /// Accepted certificate |L(w)| / sum 1/|w - y_j| when the step test stalls.
  double certificate_tol = 1e-10;
  double conjugate_tol = 1e-10;
};

namespace detail {

// s1 = sum 1/(z - y_j), s2 = sum 1/(z - y_j)^2 over j in [begin, end).
inline void log_derivative_sums(const double* yr, const double* yi, std::size_t begin,
                                std::size_t end, double zr, double zi, double& s1r,
                                double& s1i, double& s2r, double& s2i) {
  double ar = 0.0, ai = 0.0, br = 0.0, bi = 0.0;
#pragma omp simd reduction(+ : ar, ai, br, bi)
  for (std::size_t j = begin; j < end; ++j) {
    const double dx = zr - yr[j];
    const double dy = zi - yi[j];
    const double inv = 1.0 / (dx * dx + dy * dy);
    const double re = dx * inv;
    const double im = -dy * inv;
    ar += re;
    ai += im;
    br += re * re - im * im;
    bi += 2.0 * re * im;
  }
  s1r += ar;
  s1i += ai;
  s2r += br;
  s2i += bi;
}

inline cplx reciprocal_sum(const double* yr, const double* yi, std::size_t begin,
                           std::size_t end, double zr, double zi) {
  double ar = 0.0, ai = 0.0;
#pragma omp simd reduction(+ : ar, ai)
  for (std::size_t j = begin; j < end; ++j) {
    const double dx = zr - yr[j];
    const double dy = zi - yi[j];
    const double inv = 1.0 / (dx * dx + dy * dy);
    ar += dx * inv;
    ai -= dy * inv;
  }
  return {ar, ai};
}

inline double abs_reciprocal_sum(const std::vector<cplx>& y, cplx z) {
  double s = 0.0;
  for (const auto& v : y) s += 1.0 / std::abs(z - v);
  return s;
}

// Critical points of a polynomial with only real roots: one per gap, found by
// Newton on P' safeguarded by bisection on the sign of P'/P.
inline std::vector<cplx> real_critical_points(const std::vector<cplx>& roots,
                                              const CriticalOptions& opt) {
  std::vector<double> x;
  x.reserve(roots.size());
  for (const auto& r : roots) x.push_back(r.real());
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  std::vector<double> zeros(n, 0.0);
  std::vector<cplx> out;
  out.reserve(n - 1);
  for (std::size_t g = 0; g + 1 < n; ++g) {
    double lo = x[g], hi = x[g + 1];
    if (!(hi > lo)) {
      out.emplace_back(lo, 0.0);
      continue;
    }
    double w = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      double s1r = 0.0, s1i = 0.0, s2r = 0.0, s2i = 0.0;
      log_derivative_sums(x.data(), zeros.data(), 0, n, w, 0.0, s1r, s1i, s2r, s2i);
      if (s1r > 0.0)
        lo = w;
      else if (s1r < 0.0)
        hi = w;
      else
        break;
      // P'/P'' = L / (L^2 + L') with L' = -s2.
      const double step = s1r / (s1r * s1r - s2r);
      double next = w - step;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const double moved = std::abs(next - w);
      w = next;
      if (moved <= opt.step_tol * (1.0 + std::abs(w)) || hi - lo <= 4e-16 * (1.0 + std::abs(w)))
        break;
    }
    out.emplace_back(w, 0.0);
  }
  return out;
}

}  // namespace detail

/// Roots of P' computed from the roots of P, as zeros of
/// L(z) = sum 1/(z - y_j). Seeds come from the first-order pairing estimate
/// eta = xi - 1 / sum_{j != i} 1/(xi - xj), dropping the seed that moves
/// farthest; they are refined by an Aberth iteration on P'. This avoids
/// forming coefficients, which overflow double precision at degree ~1000.
inline RootSet critical_points(const RootSet& rs, const CriticalOptions& opt = {}) {
  const std::size_t n = rs.roots.size();
  if (n < 2) throw DomainError("critical_points: need at least two roots");
  RootSet out;
  out.degree = static_cast<int>(n) - 1;
  out.time = rs.time;
  out.conjugate_symmetric = rs.conjugate_symmetric;

  const bool all_real = std::all_of(rs.roots.begin(), rs.roots.end(),
                                    [](const cplx& r) { return r.imag() == 0.0; });
  if (all_real) {
    out.roots = detail::real_critical_points(rs.roots, opt);
    return out;
  }

  std::vector<double> yr(n), yi(n);
  for (std::size_t j = 0; j < n; ++j) {
    yr[j] = rs.roots[j].real();
    yi[j] = rs.roots[j].imag();
  }

  // Seeds.
  std::vector<cplx> seeds(n);
  std::size_t drop = 0;
  double worst = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    cplx sigma = detail::reciprocal_sum(yr.data(), yi.data(), 0, i, yr[i], yi[i]) +
                 detail::reciprocal_sum(yr.data(), yi.data(), i + 1, n, yr[i], yi[i]);
    const double move = 1.0 / std::abs(sigma);
    if (!std::isfinite(sigma.real()) || !std::isfinite(sigma.imag()))
      throw DomainError("critical_points: repeated roots");
    seeds[i] = rs.roots[i] - 1.0 / sigma;
    if (!(move <= worst)) {
      worst = move;
      drop = i;
    }
  }
  seeds.erase(seeds.begin() + static_cast<std::ptrdiff_t>(drop));

  const std::size_t m = n - 1;
  std::vector<double> wr(m), wi(m);
  for (std::size_t i = 0; i < m; ++i) {
    wr[i] = seeds[i].real();
    wi[i] = seeds[i].imag();
  }
  std::vector<char> done(m, 0);
  std::size_t remaining = m;
  for (int it = 0; it < opt.max_iterations && remaining > 0; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      if (done[i]) continue;
      double s1r = 0.0, s1i = 0.0, s2r = 0.0, s2i = 0.0;
      detail::log_derivative_sums(yr.data(), yi.data(), 0, n, wr[i], wi[i], s1r, s1i, s2r, s2i);
      const cplx L(s1r, s1i);
      const cplx newton = L / (L * L - cplx(s2r, s2i));
      const cplx rep = detail::reciprocal_sum(wr.data(), wi.data(), 0, i, wr[i], wi[i]) +
                       detail::reciprocal_sum(wr.data(), wi.data(), i + 1, m, wr[i], wi[i]);
      const cplx step = newton / (1.0 - newton * rep);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag()))
        throw ConvergenceError("critical_points: non-finite Aberth step", INFINITY, it);
      wr[i] -= step.real();
      wi[i] -= step.imag();
      if (std::abs(step) <= opt.step_tol * (1.0 + std::hypot(wr[i], wi[i]))) {
        done[i] = 1;
        --remaining;
      }
    }
  }

  out.roots.resize(m);
  for (std::size_t i = 0; i < m; ++i) out.roots[i] = cplx(wr[i], wi[i]);
  if (remaining > 0) {
    double worst_cert = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (done[i]) continue;
      double s1r = 0.0, s1i = 0.0, s2r = 0.0, s2i = 0.0;
      detail::log_derivative_sums(yr.data(), yi.data(), 0, n, wr[i], wi[i], s1r, s1i, s2r, s2i);
      const double cert =
          std::hypot(s1r, s1i) / detail::abs_reciprocal_sum(rs.roots, out.roots[i]);
      worst_cert = std::max(worst_cert, cert);
    }
    if (!(worst_cert <= opt.certificate_tol))
      throw ConvergenceError("critical_points: no convergence, worst certificate " +
                                 std::to_string(worst_cert),
                             worst_cert, opt.max_iterations);
  }
  if (rs.conjugate_symmetric) symmetrize_conjugates(out.roots, opt.conjugate_tol);
  return out;
}

/// Relative residual |L(w)| / sum 1/|w - y_j| of a candidate critical point.
inline double critical_certificate(const RootSet& rs, cplx w) {
  cplx L(0.0, 0.0);
  for (const auto& y : rs.roots) L += 1.0 / (w - y);
  return std::abs(L) / detail::abs_reciprocal_sum(rs.roots, w);
}

enum class FlowEngine {
  /// Critical points from roots (critical_points); scales to large degree.
  roots,
  /// Exact coefficient differentiation plus find_roots on every frame.
  coefficients,
};

struct FlowOptions {
  FlowEngine engine = FlowEngine::roots;
  RootOptions root_options{};
  Precision precision = Precision::automatic;
  CriticalOptions critical{};
};

namespace detail {

inline void check_schedule(std::span<const int> steps, int degree) {
  long total = 0;
  for (int s : steps) {
    if (s < 0) throw DomainError("iterate_flow: negative step count");
    total += s;
  }
  if (total >= degree)
    throw DomainError("iterate_flow: schedule of " + std::to_string(total) +
                      " derivatives needs degree > " + std::to_string(total));
}

inline int initial_degree(const RootSet& rs) {
  if (rs.time <= 0.0) return rs.degree;
  return static_cast<int>(std::lround(rs.degree / (1.0 - rs.time)));
}

}  // namespace detail

/// Frames after cumulative differentiation counts, starting from a root set
/// already in the working frame. Time stamps use the initial degree n0.
inline std::vector<RootSet> iterate_flow(const RootSet& initial, std::span<const int> steps,
                                         const CriticalOptions& opt = {}) {
  detail::check_schedule(steps, initial.degree);
  const int n0 = detail::initial_degree(initial);
  std::vector<RootSet> frames{initial};
  RootSet current = initial;
  int order = 0;
  for (int s : steps) {
    for (int k = 0; k < s; ++k) {
      ++order;
      try {
        current = critical_points(current, opt);
      } catch (const Error& e) {
        throw FlowError(std::string(e.what()) + " (derivative order " + std::to_string(order) + ")",
                        order);
      }
      current.time = initial.time + static_cast<double>(order) / n0;
    }
    frames.push_back(current);
  }
  return frames;
}

inline std::vector<RootSet> iterate_flow(const RootSet& initial, std::initializer_list<int> steps,
                                         const CriticalOptions& opt = {}) {
  return iterate_flow(initial, std::span<const int>(steps.begin(), steps.size()), opt);
}

/// Frames of the flow of p, all expressed in the frame fixed by normalizing
/// the roots of p.
inline std::vector<RootSet> iterate_flow(const Polynomial& p, std::span<const int> steps,
                                         const FlowOptions& opt = {}) {
  detail::check_schedule(steps, p.degree());
  const auto base = normalize(find_roots(p, opt.root_options, opt.precision));
  if (opt.engine == FlowEngine::roots) return iterate_flow(base.roots, steps, opt.critical);

  const int n0 = p.degree();
  std::vector<RootSet> frames{base.roots};
  Polynomial current = p;
  int order = 0;
  for (int s : steps) {
    for (int k = 0; k < s; ++k) {
      current = differentiate(current);
      ++order;
    }
    try {
      RootSet rs = apply_frame(find_roots(current, opt.root_options, opt.precision), base.shift,
                               base.scale);
      rs.time = static_cast<double>(order) / n0;
      frames.push_back(std::move(rs));
    } catch (const Error& e) {
      throw FlowError(std::string(e.what()) + " (derivative order " + std::to_string(order) + ")",
                      order);
    }
  }
  return frames;
}

inline std::vector<RootSet> iterate_flow(const Polynomial& p, std::initializer_list<int> steps,
                                         const FlowOptions& opt = {}) {
  return iterate_flow(p, std::span<const int>(steps.begin(), steps.size()), opt);
}

struct RootPair {
  cplx root;
  cplx critical;
  double distance;
};

struct Pairing {
  std::vector<RootPair> pairs;
  cplx unmatched;
};

/// Greedy matching by ascending distance: the globally closest free
/// (root, critical point) pair is taken first. Ties go to the root with the
/// smaller (Re, Im).
inline Pairing pair_roots_critical_points(const RootSet& rs, const RootSet& crit) {
  const std::size_t n = rs.roots.size();
  if (crit.roots.size() + 1 != n)
    throw DomainError("pair_roots_critical_points: expected " + std::to_string(n - 1) +
                      " critical points, got " + std::to_string(crit.roots.size()));
  struct Edge {
    double d;
    std::size_t r, c;
  };
  auto less = [&](const Edge& a, const Edge& b) {
    if (a.d != b.d) return a.d < b.d;
    const cplx& x = rs.roots[a.r];
    const cplx& y = rs.roots[b.r];
    if (x.real() != y.real()) return x.real() < y.real();
    if (x.imag() != y.imag()) return x.imag() < y.imag();
    return a.c < b.c;
  };

  std::vector<char> root_used(n, 0), crit_used(n - 1, 0);
  Pairing out;
  std::size_t matched = 0;
  auto greedy = [&](std::vector<Edge>& edges) {
    std::sort(edges.begin(), edges.end(), less);
    for (const auto& e : edges) {
      if (root_used[e.r] || crit_used[e.c]) continue;
      root_used[e.r] = crit_used[e.c] = 1;
      out.pairs.push_back({rs.roots[e.r], crit.roots[e.c], e.d});
      ++matched;
    }
  };

  // Candidate edges from each critical point's nearest roots; the exact
  // greedy order is recovered by a full pass over whatever is left.
  const std::size_t k = std::min<std::size_t>(16, n);
  std::vector<Edge> edges;
  edges.reserve((n - 1) * k);
  std::vector<std::pair<double, std::size_t>> near(n);
  for (std::size_t c = 0; c + 1 < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) near[r] = {std::abs(crit.roots[c] - rs.roots[r]), r};
    std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(k), near.end());
    for (std::size_t q = 0; q < k; ++q) edges.push_back({near[q].first, near[q].second, c});
  }
  std::sort(edges.begin(), edges.end(), less);
  // Only the prefix that precedes the first edge whose critical point ran out
  // of candidates is guaranteed to agree with the full greedy order.
  std::vector<int> left(n - 1, static_cast<int>(k));
  for (const auto& e : edges) {
    if (crit_used[e.c]) continue;
    if (!root_used[e.r]) {
      root_used[e.r] = crit_used[e.c] = 1;
      out.pairs.push_back({rs.roots[e.r], crit.roots[e.c], e.d});
      ++matched;
      continue;
    }
    if (--left[e.c] == 0) break;
  }
  if (matched + 1 < n) {
    std::vector<Edge> rest;
    for (std::size_t c = 0; c + 1 < n; ++c) {
      if (crit_used[c]) continue;
      for (std::size_t r = 0; r < n; ++r)
        if (!root_used[r]) rest.push_back({std::abs(crit.roots[c] - rs.roots[r]), r, c});
    }
    greedy(rest);
  }
  for (std::size_t r = 0; r < n; ++r)
    if (!root_used[r]) out.unmatched = rs.roots[r];
  return out;
}

/// CSV with header `re,im,degree,time`, one root per line.
inline void write_csv(std::ostream& os, const RootSet& rs) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "re,im,degree,time\n";
  for (const auto& r : rs.roots)
    buf << r.real() << ',' << r.imag() << ',' << rs.degree << ',' << rs.time << '\n';
  os << buf.str();
}

inline RootSet read_csv(std::istream& is) {
  std::string line;
  // Leading '#' lines carry provenance.
  while (std::getline(is, line) && line.rfind('#', 0) == 0) {
  }
  if (line.rfind("re,im,degree,time", 0) != 0)
    throw DomainError("root CSV: missing header re,im,degree,time");
  RootSet rs;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double re = 0.0, im = 0.0, time = 0.0;
    int degree = 0;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(row >> re >> c1 >> im >> c2 >> degree >> c3 >> time) || c1 != ',' || c2 != ',' ||
        c3 != ',')
      throw DomainError("root CSV: malformed row '" + line + "'");
    if (first) {
      rs.degree = degree;
      rs.time = time;
      first = false;
    }
    rs.roots.emplace_back(re, im);
  }
  if (static_cast<int>(rs.roots.size()) != rs.degree)
    throw DomainError("root CSV: degree column does not match the row count");
  return rs;
}

}  // namespace rootflow
