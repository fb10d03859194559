#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>

#include "rootflow/error.hpp"

namespace rootflow {

/// Lattice Lambda(c) = Z + i c Z. F_c(z) = sum 1/(z - lambda) is summed over
/// the index window |l| <= L, |k| <= L (lambda = l + i c k) in the odd form
/// 1/z + sum z / (z^2 - lambda^2). It is quasi-periodic: F(z + 1) - F(z) and
/// F(z + ic) - F(z) are constants A, B with i c A - B = 2 pi i.
inline constexpr int default_truncation = 64;
inline constexpr double delta_pole = 1e-9;

/// Riemann zeta for s > 1: partial sum plus an Euler-Maclaurin tail.
inline double zeta(double s, int n = 32) {
  if (!(s > 1.0)) throw DomainError("zeta: s must exceed 1");
  double sum = 0.0;
  for (int k = n - 1; k >= 1; --k) sum += std::pow(k, -s);
  const double N = n;
  sum += std::pow(N, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(N, -s) +
         s * std::pow(N, -s - 1.0) / 12.0 - s * (s + 1.0) * (s + 2.0) * std::pow(N, -s - 3.0) / 720.0;
  return sum;
}

namespace detail {

inline void check_lattice_args(double c, int L) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("lattice: c must be positive");
  if (L < 8) throw DomainError("lattice: truncation L must be at least 8");
}

// F and F' over the window.
inline std::pair<std::complex<double>, std::complex<double>> eval_F_and_derivative(
    double c, std::complex<double> z, int L, bool want_derivative) {
  check_lattice_args(c, L);
  const double kr = std::round(z.imag() / c);
  const double lr = std::round(z.real());
  if (std::abs(kr) <= L && std::abs(lr) <= L) {
    const std::complex<double> lambda(lr, c * kr);
    if (std::abs(z - lambda) < delta_pole)
      throw PoleError("eval_F: z is within delta_pole of a lattice point", lambda);
  }
  const std::complex<double> z2 = z * z;
  std::complex<double> f = 1.0 / z;
  std::complex<double> df = -1.0 / z2;
  // One representative of each +-lambda pair: l > 0, or l == 0 and k > 0.
  // The conjugate representatives k and -k are added together first, so F is
  // exactly real on the real axis.
  auto term = [&](const std::complex<double>& lambda, std::complex<double>& tf,
                  std::complex<double>& tdf) {
    const std::complex<double> l2 = lambda * lambda;
    const std::complex<double> d = z2 - l2;
    tf = 2.0 * z / d;
    if (want_derivative) tdf = -2.0 * (z2 + l2) / (d * d);
  };
  std::complex<double> a, da, b, db;
  for (int l = 0; l <= L; ++l) {
    if (l > 0) {
      term({static_cast<double>(l), 0.0}, a, da);
      f += a;
      if (want_derivative) df += da;
    }
    for (int k = 1; k <= L; ++k) {
      term({static_cast<double>(l), c * k}, a, da);
      if (l == 0) {
        f += a;
        if (want_derivative) df += da;
        continue;
      }
      term({static_cast<double>(l), -c * k}, b, db);
      f += a + b;
      if (want_derivative) df += da + db;
    }
  }
  return {f, df};
}

}  // namespace detail

/// Truncated F_c(z). Exactly odd in z.
inline std::complex<double> eval_F(double c, std::complex<double> z, int L = default_truncation) {
  return detail::eval_F_and_derivative(c, z, L, false).first;
}

inline std::complex<double> eval_F_derivative(double c, std::complex<double> z,
                                              int L = default_truncation) {
  return detail::eval_F_and_derivative(c, z, L, true).second;
}

/// Expansion z F_c(z) = 1 - g z^2 - h z^4 + O(z^6), with g = sum 1/lambda^2
/// and h = sum 1/lambda^4 over the same window as eval_F.
struct LatticeConstants {
  double c = 1.0;
  double g = 0.0;
  double h = 0.0;
  /// Off-axis quadrant sums; g = 2 (1 - 1/c^2) sum_{l<=L} 1/l^2 + 4 g1 and
  /// h = 2 (1 + 1/c^4) sum_{l<=L} 1/l^4 + 4 h1.
  double g1 = 0.0;
  double h1 = 0.0;
  int truncation = default_truncation;
  /// Richardson estimate of |g_L - g_inf| and |h_L - h_inf| (the larger).
  double tail_bound = 0.0;
};

namespace detail {

struct WindowSums {
  double g, h, g1, h1;
};

inline WindowSums window_sums(double c, int L) {
  double s2 = 0.0, s4 = 0.0;
  for (int l = L; l >= 1; --l) {
    const double x = static_cast<double>(l) * l;
    s2 += 1.0 / x;
    s4 += 1.0 / (x * x);
  }
  double g1 = 0.0, h1 = 0.0;
  const double c2 = c * c;
  for (int l = 1; l <= L; ++l) {
    const double l2 = static_cast<double>(l) * l;
    for (int k = 1; k <= L; ++k) {
      const double k2c2 = static_cast<double>(k) * k * c2;
      const double r = l2 + k2c2;
      const double r2 = r * r;
      g1 += (l2 - k2c2) / r2;
      h1 += (l2 * l2 - 6.0 * l2 * k2c2 + k2c2 * k2c2) / (r2 * r2);
    }
  }
  const double ic2 = 1.0 / c2;
  return {2.0 * (1.0 - ic2) * s2 + 4.0 * g1, 2.0 * (1.0 + ic2 * ic2) * s4 + 4.0 * h1, g1, h1};
}

}  // namespace detail

inline LatticeConstants lattice_constants(double c, int L = default_truncation) {
  detail::check_lattice_args(c, L);
  const auto full = detail::window_sums(c, L);
  const auto half = detail::window_sums(c, L / 2);
  LatticeConstants out;
  out.c = c;
  out.g = full.g;
  out.h = full.h;
  out.g1 = full.g1;
  out.h1 = full.h1;
  out.truncation = L;
  // Errors decay like 1/L^2, so g_L - g_inf ~ (g_{L/2} - g_L) / 3; the
  // factor 2/3 keeps a margin of two.
  out.tail_bound = 2.0 / 3.0 * std::max(std::abs(full.g - half.g), std::abs(full.h - half.h));
  return out;
}

/// Memoized lattice_constants, keyed by (c, L). Thread-safe.
inline LatticeConstants cached_lattice_constants(double c, int L = default_truncation) {
  static std::mutex mutex;
  static std::map<std::pair<double, int>, LatticeConstants> cache;
  {
    std::lock_guard lock(mutex);
    auto it = cache.find({c, L});
    if (it != cache.end()) return it->second;
  }
  const LatticeConstants value = lattice_constants(c, L);
  std::lock_guard lock(mutex);
  cache.emplace(std::make_pair(c, L), value);
  return value;
}

/// Validity radius of the fifth-order inverse series.
inline double w_max(double c) { return 0.2 * std::min(1.0, c); }

/// G_c(w) = w - g w^3 + (2 g^2 - h) w^5 + O(w^7), the series inverse of
/// 1 / F_c.
inline std::complex<double> eval_G_series(const LatticeConstants& k, std::complex<double> w) {
  const double radius = w_max(k.c);
  if (std::abs(w) > radius)
    throw OutOfRadius("eval_G_series: |w| = " + std::to_string(std::abs(w)) +
                          " exceeds w_max = " + std::to_string(radius),
                      radius);
  const std::complex<double> w2 = w * w;
  return w * (1.0 + w2 * (-k.g + w2 * (2.0 * k.g * k.g - k.h)));
}

inline std::complex<double> eval_G_series(double c, std::complex<double> w,
                                          int L = default_truncation) {
  return eval_G_series(cached_lattice_constants(c, L), w);
}

/// Solves F_c(z) = 1/w by Newton iteration on 1/F_c(z) - w, seeded by the
/// series. G_c(0) = 0.
inline std::complex<double> eval_G_newton(double c, std::complex<double> w,
                                          int L = default_truncation) {
  detail::check_lattice_args(c, L);
  if (w == std::complex<double>(0.0)) return 0.0;
  const double basin = 0.5 * std::min(1.0, c);
  if (std::abs(w) > basin)
    throw OutOfRadius("eval_G_newton: |w| beyond half the lattice spacing", basin);
  const auto k = cached_lattice_constants(c, L);
  std::complex<double> z = std::abs(w) <= w_max(c) ? eval_G_series(k, w) : w;
  const std::complex<double> target = 1.0 / w;
  int it = 0;
  for (; it < 60; ++it) {
    const auto [f, df] = detail::eval_F_and_derivative(c, z, L, true);
    const std::complex<double> residual = f - target;
    if (std::abs(residual) * std::abs(w) <= 1e-15) break;
    const std::complex<double> step = f * (1.0 - f * w) / df;
    z += step;
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || std::abs(z) > basin)
      throw ConvergenceError("eval_G_newton: iterate left the basin", std::abs(residual), it + 1);
    if (std::abs(step) <= 1e-16 * std::abs(z)) break;
  }
  if (it == 60) {
    const double r = std::abs(eval_F(c, z, L) - target) * std::abs(w);
    if (!(r <= 1e-10)) throw ConvergenceError("eval_G_newton: no convergence", r, it);
  }
  return z;
}

/// Lattice Lambda(a, ca, theta) = a e^{i theta} (Z + i c Z) centred at xi.
struct LatticeFrame {
  double a = 1.0;
  double c = 1.0;
  double theta = 0.0;
  std::complex<double> center{0.0, 0.0};

  LatticeFrame() = default;
  LatticeFrame(double a_, double c_, double theta_, std::complex<double> center_ = {})
      : a(a_), c(c_), theta(theta_), center(center_) {
    if (!(a > 0.0) || !(c > 0.0)) throw DomainError("LatticeFrame: a and c must be positive");
  }

  double b() const noexcept { return c * a; }
  std::complex<double> unit() const { return a * std::polar(1.0, theta); }
};

/// F_{a,ca,theta}(z - xi) = F_c((z - xi) / (a e^{i theta})) / (a e^{i theta}).
inline std::complex<double> eval_F_frame(const LatticeFrame& frame, std::complex<double> z,
                                         int L = default_truncation) {
  const std::complex<double> u = frame.unit();
  return eval_F(frame.c, (z - frame.center) / u, L) / u;
}

/// Offset z - xi solving F_{a,ca,theta}(z - xi) = 1/w.
inline std::complex<double> eval_G_frame(const LatticeFrame& frame, std::complex<double> w,
                                         int L = default_truncation) {
  const std::complex<double> u = frame.unit();
  return u * eval_G_newton(frame.c, w / u, L);
}

}  // namespace rootflow
