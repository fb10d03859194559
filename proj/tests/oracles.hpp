#pragma once

// Independent reference computations used by the tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

inline double cross(cplx o, cplx a, cplx b) {
  return (a - o).real() * (b - o).imag() - (a - o).imag() * (b - o).real();
}

/// Convex hull by Andrew's monotone chain, counter-clockwise.
inline std::vector<cplx> convex_hull(std::vector<cplx> p) {
  std::sort(p.begin(), p.end(), [](cplx a, cplx b) {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
  });
  if (p.size() < 3) return p;
  std::vector<cplx> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

/// Signed distance test: z lies in the hull up to `tol`.
inline bool in_hull(const std::vector<cplx>& hull, cplx z, double tol) {
  if (hull.size() < 3) {
    // Segment hull (collinear input).
    const cplx a = hull.front(), b = hull.back();
    const double len = std::abs(b - a);
    const double t = len > 0 ? ((z - a) * std::conj(b - a)).real() / (len * len) : 0.0;
    return std::abs(z - (a + std::clamp(t, 0.0, 1.0) * (b - a))) <= tol;
  }
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const cplx a = hull[i], b = hull[(i + 1) % hull.size()];
    if (cross(a, b, z) / std::abs(b - a) < -tol) return false;
  }
  return true;
}

/// F_c by summing square shells max(|l|, |k|) = s, s = 1..L, term 1/(z - lambda)
/// plus 1/(z - lambda) for the opposite point.
inline cplx lattice_F(double c, cplx z, int L) {
  cplx f = 1.0 / z;
  for (int s = 1; s <= L; ++s)
    for (int l = -s; l <= s; ++l)
      for (int k = -s; k <= s; ++k) {
        if (std::max(std::abs(l), std::abs(k)) != s) continue;
        f += 1.0 / (z - cplx(l, c * k));
      }
  return f;
}

/// g = sum' 1/lambda^2 and h = sum' 1/lambda^4 over the square window, summed
/// naively over all indices.
inline std::pair<double, double> lattice_gh(double c, int L) {
  cplx g = 0.0, h = 0.0;
  for (int l = -L; l <= L; ++l)
    for (int k = -L; k <= L; ++k) {
      if (l == 0 && k == 0) continue;
      const cplx lam(l, c * k);
      const cplx l2 = lam * lam;
      g += 1.0 / l2;
      h += 1.0 / (l2 * l2);
    }
  return {g.real(), h.real()};
}

/// Cauchy transform of the uniform probability measure on the disk of radius R.
inline cplx uniform_disk_S(cplx z, double R = 1.0) {
  return std::abs(z) >= R ? 1.0 / z : std::conj(z) / (R * R);
}

/// Radial model from psi = 2r on [0, 1]: mass inside radius r at time t.
inline double uniform_disk_radial_mass(double r, double t) {
  if (r >= 1.0 - t) return 1.0 - t;
  return 0.5 * (r * r + r * std::sqrt(r * r + 4.0 * t));
}

/// Cell averages of psi for the exact radial solution.
inline std::vector<double> uniform_disk_radial_psi(const std::vector<double>& edges, double t) {
  std::vector<double> psi(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    psi[i] = (uniform_disk_radial_mass(edges[i + 1], t) - uniform_disk_radial_mass(edges[i], t)) /
             (edges[i + 1] - edges[i]);
  return psi;
}

/// Free-compression of the semicircle: (2 / pi) sqrt(1 - t - x^2).
inline double semicircle(double x, double t) {
  const double r2 = 1.0 - t - x * x;
  return r2 > 0.0 ? 2.0 / std::numbers::pi * std::sqrt(r2) : 0.0;
}

/// Cell averages of the semicircle by its exact antiderivative.
inline std::vector<double> semicircle_cells(const std::vector<double>& edges, double t) {
  const double R = std::sqrt(1.0 - t);
  auto prim = [&](double x) {
    x = std::clamp(x, -R, R);
    return (x * std::sqrt(R * R - x * x) + R * R * std::asin(x / R)) / std::numbers::pi;
  };
  std::vector<double> u(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    u[i] = (prim(edges[i + 1]) - prim(edges[i])) / (edges[i + 1] - edges[i]);
  return u;
}

/// Hilbert transform (1/pi) pv int u(s) / (x - s) ds of the uniform density
/// 1/2 on [-1, 1].
inline double uniform_segment_hilbert(double x) {
  return std::log(std::abs((x + 1.0) / (x - 1.0))) / (2.0 * std::numbers::pi);
}

}  // namespace oracle
