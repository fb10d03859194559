#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "rootflow/density.hpp"
#include "rootflow/error.hpp"
#include "rootflow/grid.hpp"
#include "rootflow/lattice.hpp"
#include "rootflow/parallel.hpp"
#include "rootflow/roots.hpp"

namespace rootflow {

/// Cauchy transform S(z) = int u(zeta) / (z - zeta) dA, sampled at the cell
/// centres of a polar grid.
struct CauchyField {
  enum class Source { empirical, analytic, density_quadrature, density_modal };

  PolarGrid grid;
  std::vector<cplx> values;
  Source source = Source::density_modal;
  /// Sample size for empirical fields, otherwise 0.
  int n = 0;
  std::string name;

  const cplx& at(int i, int j) const { return values[grid.index(i, j)]; }
};

/// (1/n) sum 1/(z - X_j).
inline cplx cauchy_empirical(const RootSet& rs, cplx z) {
  if (rs.roots.empty()) throw DomainError("cauchy_empirical: empty root set");
  cplx s(0.0, 0.0);
  double nearest = std::numeric_limits<double>::infinity();
  cplx nearest_root;
  for (const auto& x : rs.roots) {
    const cplx d = z - x;
    const double ad = std::abs(d);
    if (ad < nearest) {
      nearest = ad;
      nearest_root = x;
    }
    s += 1.0 / d;
  }
  if (nearest <= delta_pole)
    throw PoleError("cauchy_empirical: z is within delta_pole of a root", nearest_root);
  return s / static_cast<double>(rs.roots.size());
}

inline CauchyField cauchy_empirical_field(const RootSet& rs, const PolarGrid& grid) {
  CauchyField f;
  f.grid = grid;
  f.source = CauchyField::Source::empirical;
  f.n = static_cast<int>(rs.roots.size());
  f.name = "empirical";
  f.values.resize(grid.size());
  parallel_for(static_cast<std::size_t>(grid.n_rho()), [&](std::size_t i) {
    for (int j = 0; j < grid.n_theta(); ++j)
      f.values[grid.index(static_cast<int>(i), j)] =
          cauchy_empirical(rs, grid.center(static_cast<int>(i), j));
  });
  return f;
}

namespace detail {

// Change of log(z - w) along the straight segment w: p -> q, assuming the
// segment does not pass through z. The argument change is below pi.
inline cplx log_change_segment(cplx z, cplx p, cplx q) {
  const cplx ratio = (z - q) / (z - p);
  return {std::log(std::abs(z - q) / std::abs(z - p)), std::arg(ratio)};
}

inline double distance_to_arc(cplx z, double r, double phi_a, double phi_b) {
  const double two_pi = 2.0 * std::numbers::pi;
  double t = std::arg(z) - phi_a;
  t -= two_pi * std::floor(t / two_pi);
  if (t <= phi_b - phi_a) return std::abs(std::abs(z) - r);
  return std::min(std::abs(z - std::polar(r, phi_a)), std::abs(z - std::polar(r, phi_b)));
}

inline double distance_to_segment(cplx z, cplx p, cplx q) {
  const cplx d = q - p;
  const double len2 = std::norm(d);
  double t = len2 > 0.0 ? ((z - p) * std::conj(d)).real() / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(z - (p + t * d));
}

// int zeta_bar dzeta / (z - zeta) along the ray zeta = rho e^{i alpha},
// rho: ra -> rb.
inline cplx ray_term(cplx z, double alpha, double ra, double rb) {
  const cplx e = std::polar(1.0, alpha);
  cplx out = -(rb - ra) / e;
  if (z != cplx(0.0, 0.0)) out -= z / (e * e) * log_change_segment(z, ra * e, rb * e);
  return out;
}

// int zeta_bar dzeta / (z - zeta) along the arc zeta = r e^{i phi},
// phi: pa -> pb (either orientation).
inline cplx arc_term(cplx z, double r, double pa, double pb) {
  if (r == 0.0) return 0.0;
  const cplx I(0.0, 1.0);
  const double az = std::abs(z);
  if (az <= 1e-3 * r) {
    // 1/(z - r e^{i phi}) = -sum_k z^k / (r e^{i phi})^{k+1}; the closed form
    // below loses digits as z -> 0.
    cplx acc(0.0, 0.0);
    cplx zk(1.0, 0.0);
    double q = 1.0;
    for (int k = 0; k < 8 && q > 1e-18; ++k) {
      const double m = k + 1.0;
      const cplx integral = (std::polar(1.0, -m * pb) - std::polar(1.0, -m * pa)) / (-I * m);
      acc -= zk / std::pow(r, m) * integral;
      zk *= z;
      q *= az / r;
    }
    return I * r * r * acc;
  }
  // i r^2 / z * (dphi + i * change of log(z - r e^{i phi})). Along the arc the
  // argument of z - r e^{i phi} changes by the principal value of the chord
  // plus a full turn when z lies in the circular segment cut off by the chord.
  const double span = pb - pa;
  if (std::abs(span) > std::numbers::pi) {
    const double mid = 0.5 * (pa + pb);
    return arc_term(z, r, pa, mid) + arc_term(z, r, mid, pb);
  }
  const cplx wa = z - std::polar(r, pa), wb = z - std::polar(r, pb);
  double turn = std::arg(wb / wa);
  const double phi_mid = 0.5 * (pa + pb);
  if (az < r && (z * std::polar(1.0, -phi_mid)).real() > r * std::cos(0.5 * span))
    turn += span > 0.0 ? 2.0 * std::numbers::pi : -2.0 * std::numbers::pi;
  const cplx dlog(std::log(std::abs(wb) / std::abs(wa)), turn);
  return I * r * r / z * (span + I * dlog);
}

}  // namespace detail

/// Exact int_cell dA / (z - zeta) for the polar cell [r0, r1] x [p0, p1],
/// from Green's formula int_D dA/(z - zeta) = (1/2i) oint zeta_bar/(z - zeta)
/// dzeta + pi conj(z) [z in D]. Throws RefinementNeeded when z lies on the
/// cell boundary.
inline cplx cell_cauchy_integral(cplx z, double r0, double r1, double p0, double p1) {
  const double scale = std::max(r1, 1e-300);
  const cplx e0 = std::polar(1.0, p0), e1 = std::polar(1.0, p1);
  double dist = std::min({detail::distance_to_segment(z, r0 * e0, r1 * e0),
                          detail::distance_to_segment(z, r0 * e1, r1 * e1),
                          detail::distance_to_arc(z, r1, p0, p1)});
  if (r0 > 0.0) dist = std::min(dist, detail::distance_to_arc(z, r0, p0, p1));
  const bool origin = z == cplx(0.0, 0.0);
  if (!origin && dist <= 1e-12 * scale)
    throw RefinementNeeded("cauchy_density: evaluation point on a cell edge");
  cplx loop = detail::ray_term(z, p0, r0, r1) + detail::arc_term(z, r1, p0, p1) -
              detail::ray_term(z, p1, r0, r1) - detail::arc_term(z, r0, p0, p1);
  cplx out = loop / cplx(0.0, 2.0);
  if (!origin) {
    const double az = std::abs(z);
    double t = std::arg(z) - p0;
    t -= 2.0 * std::numbers::pi * std::floor(t / (2.0 * std::numbers::pi));
    if (az > r0 && az < r1 && t < p1 - p0) out += std::numbers::pi * std::conj(z);
  }
  return out;
}

/// S_u(z) for the cellwise-constant density of df. Each cell's integral is
/// evaluated in closed form, so the result is exact for that density
/// (including the cell containing z, whose weak singularity is integrable).
/// S is continuous, so a point on a cell edge is moved off it by a relative
/// 1e-9.
inline cplx cauchy_density(const DensityField& df, cplx z) {
  const auto& g = df.grid;
  auto sum = [&](cplx p) {
    cplx s(0.0, 0.0);
    for (int i = 0; i < g.n_rho(); ++i)
      for (int j = 0; j < g.n_theta(); ++j) {
        const double u = df.u[g.index(i, j)];
        if (u == 0.0) continue;
        s += u * cell_cauchy_integral(p, g.rho_lo(i), g.rho_hi(i), g.theta_lo(j),
                                      g.theta_lo(j) + g.dtheta());
      }
    return s;
  };
  try {
    return sum(z);
  } catch (const RefinementNeeded&) {
    return sum(z * std::polar(1.0 + 1e-9, 1e-9));
  }
}

inline CauchyField cauchy_density_field(const DensityField& df) {
  CauchyField f;
  f.grid = df.grid;
  f.source = CauchyField::Source::density_quadrature;
  f.name = "density-quadrature";
  f.values.resize(df.grid.size());
  parallel_for(static_cast<std::size_t>(df.grid.n_rho()), [&](std::size_t i) {
    for (int j = 0; j < df.grid.n_theta(); ++j)
      f.values[df.grid.index(static_cast<int>(i), j)] =
          cauchy_density(df, df.grid.center(static_cast<int>(i), j));
  });
  return f;
}

/// Fast S_u from the angular Fourier modes U_m of each ring of a cellwise
/// constant density:
///   S = 2 pi sum_{k>=0} z^{-k-1} int_0^r s^{k+1} U_{-k} ds
///     - 2 pi sum_{m>=1} z^{m-1} int_r^R s^{1-m} U_m ds.
/// Modes |m| <= `modes` are kept (default n_theta).
class ModalCauchy {
 public:
  explicit ModalCauchy(const PolarGrid& grid, int modes = 0)
      : grid_(grid), modes_(modes > 0 ? modes : grid.n_theta()) {
    const int nt = grid_.n_theta();
    const double dt = grid_.dtheta();
    // (1/2pi) int_sector_j e^{-i m phi} dphi for m in [-M, M].
    sector_weight_.assign(static_cast<std::size_t>(2 * modes_ + 1) * nt, cplx(0.0, 0.0));
    for (int m = -modes_; m <= modes_; ++m)
      for (int j = 0; j < nt; ++j) {
        const double a = j * dt;
        const cplx w = m == 0 ? cplx(dt, 0.0)
                              : (std::polar(1.0, -m * (a + dt)) - std::polar(1.0, -m * a)) /
                                    cplx(0.0, -m);
        sector_weight_[static_cast<std::size_t>(m + modes_) * nt + j] =
            w / (2.0 * std::numbers::pi);
      }
  }

  int modes() const noexcept { return modes_; }
  const PolarGrid& grid() const noexcept { return grid_; }

  /// U[i * (2M + 1) + m + M].
  std::vector<cplx> ring_modes(std::span<const double> u) const {
    const int nr = grid_.n_rho(), nt = grid_.n_theta(), M = modes_;
    std::vector<cplx> U(static_cast<std::size_t>(nr) * (2 * M + 1), cplx(0.0, 0.0));
    for (int i = 0; i < nr; ++i)
      for (int m = -M; m <= M; ++m) {
        cplx acc(0.0, 0.0);
        const cplx* w = &sector_weight_[static_cast<std::size_t>(m + M) * nt];
        for (int j = 0; j < nt; ++j) acc += u[grid_.index(i, j)] * w[j];
        U[static_cast<std::size_t>(i) * (2 * M + 1) + (m + M)] = acc;
      }
    return U;
  }

  /// S at the points radii[a] e^{i angles[b]}, returned row-major in (a, b).
  std::vector<cplx> evaluate(std::span<const double> u, std::span<const double> radii,
                             std::span<const double> angles) const {
    const auto U = ring_modes(u);
    const int M = modes_;
    std::vector<std::vector<cplx>> phase_in(angles.size()), phase_out(angles.size());
    for (std::size_t b = 0; b < angles.size(); ++b) {
      phase_in[b].resize(static_cast<std::size_t>(M) + 1);
      phase_out[b].resize(static_cast<std::size_t>(M) + 1);
      for (int k = 0; k <= M; ++k) {
        phase_in[b][k] = std::polar(1.0, -(k + 1) * angles[b]);
        phase_out[b][k] = std::polar(1.0, (k - 1) * angles[b]);
      }
    }
    std::vector<cplx> out(radii.size() * angles.size());
    std::vector<cplx> c_in(static_cast<std::size_t>(M) + 1), c_out(static_cast<std::size_t>(M) + 1);
    for (std::size_t a = 0; a < radii.size(); ++a) {
      const double r = radii[a];
      if (r <= 0.0) {
        const cplx s0 = origin_from_modes(U);
        for (std::size_t b = 0; b < angles.size(); ++b) out[a * angles.size() + b] = s0;
        continue;
      }
      radial_coefficients(U, r, c_in, c_out);
      for (std::size_t b = 0; b < angles.size(); ++b) {
        cplx s(0.0, 0.0);
        for (int k = 0; k <= M; ++k) s += c_in[k] * phase_in[b][k];
        for (int m = 1; m <= M; ++m) s -= c_out[m] * phase_out[b][m];
        out[a * angles.size() + b] = 2.0 * std::numbers::pi * s;
      }
    }
    return out;
  }

  /// S at every cell centre.
  std::vector<cplx> operator()(std::span<const double> u) const {
    std::vector<double> radii(static_cast<std::size_t>(grid_.n_rho())),
        angles(static_cast<std::size_t>(grid_.n_theta()));
    for (int i = 0; i < grid_.n_rho(); ++i) radii[i] = grid_.rho_center(i);
    for (int j = 0; j < grid_.n_theta(); ++j) angles[j] = grid_.theta_center(j);
    return evaluate(u, radii, angles);
  }

  /// S(0) = -2 pi sum_rings U_1 (hi - lo).
  cplx at_origin(std::span<const double> u) const { return origin_from_modes(ring_modes(u)); }

 private:
  cplx mode(const std::vector<cplx>& U, int i, int m) const {
    return U[static_cast<std::size_t>(i) * (2 * modes_ + 1) + (m + modes_)];
  }

  cplx origin_from_modes(const std::vector<cplx>& U) const {
    cplx s(0.0, 0.0);
    if (modes_ < 1) return s;
    for (int i = 0; i < grid_.n_rho(); ++i) s += mode(U, i, 1) * grid_.drho(i);
    return -2.0 * std::numbers::pi * s;
  }

  // Radial integrals with the powers of r folded in, so that
  // S = 2 pi (sum_k c_in[k] e^{-i(k+1)theta} - sum_m c_out[m] e^{i(m-1)theta}).
  void radial_coefficients(const std::vector<cplx>& U, double r, std::vector<cplx>& c_in,
                           std::vector<cplx>& c_out) const {
    const int nr = grid_.n_rho(), M = modes_;
    std::fill(c_in.begin(), c_in.end(), cplx(0.0, 0.0));
    std::fill(c_out.begin(), c_out.end(), cplx(0.0, 0.0));
    for (int i = 0; i < nr; ++i) {
      const double lo = grid_.rho_lo(i), hi = grid_.rho_hi(i);
      if (lo < r) {
        // z^{-k-1} int s^{k+1} ds = r ((sb/r)^{k+2} - (sa/r)^{k+2}) / (k+2).
        const double qa = lo / r, qb = std::min(hi, r) / r;
        double pa = qa * qa, pb = qb * qb;
        for (int k = 0; k <= M; ++k) {
          c_in[k] += mode(U, i, -k) * (r * (pb - pa) / (k + 2.0));
          pa *= qa;
          pb *= qb;
          if (pb < 1e-300) break;
        }
      }
      if (hi > r) {
        const double sa = std::max(lo, r), sb = hi;
        c_out[1] += mode(U, i, 1) * (sb - sa);
        if (M >= 2) c_out[2] += mode(U, i, 2) * (r * std::log(sb / sa));
        // m >= 3: r ((r/sa)^{m-2} - (r/sb)^{m-2}) / (m-2).
        const double qa = r / sa, qb = r / sb;
        double pa = qa, pb = qb;
        for (int m = 3; m <= M; ++m) {
          c_out[m] += mode(U, i, m) * (r * (pa - pb) / (m - 2.0));
          pa *= qa;
          pb *= qb;
          if (pa < 1e-300) break;
        }
      }
    }
  }

  PolarGrid grid_;
  int modes_;
  std::vector<cplx> sector_weight_;
};

inline CauchyField cauchy_field(const DensityField& df, int modes = 0) {
  CauchyField f;
  f.grid = df.grid;
  f.source = CauchyField::Source::density_modal;
  f.name = "density-modal";
  f.values = ModalCauchy(df.grid, modes)(df.u);
  return f;
}

/// (1/pi) PV int u(s) / (x - s) ds for u piecewise linear through the nodes
/// (xs, us), by product integration. Exact for that interpolant. A node may
/// be repeated to represent a jump.
inline double hilbert_1d(std::span<const double> xs, std::span<const double> us, double x) {
  const std::size_t n = xs.size();
  if (n < 2 || us.size() != n) throw DomainError("hilbert_1d: need matching node arrays");
  if (x < xs.front() || x > xs.back())
    throw DomainError("hilbert_1d: x outside the grid (no extrapolation)");
  // u(x) by interpolation.
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t k = static_cast<std::size_t>(it - xs.begin());
  k = std::clamp<std::size_t>(k, 1, n - 1);
  const double width = xs[k] - xs[k - 1];
  const double ux = width > 0.0 ? us[k - 1] + (x - xs[k - 1]) / width * (us[k] - us[k - 1]) : us[k];

  auto log_ratio = [x](double a, double b) {
    return std::log(std::abs(x - a)) - std::log(std::abs(x - b));
  };
  double sum = 0.0;
  if (ux != 0.0) sum += ux * log_ratio(xs.front(), xs.back());
  for (std::size_t s = 0; s + 1 < n; ++s) {
    if (xs[s + 1] == xs[s]) continue;  // repeated node: a jump in u
    const double slope = (us[s + 1] - us[s]) / (xs[s + 1] - xs[s]);
    const double coeff = us[s] + slope * (x - xs[s]) - ux;
    if (coeff != 0.0) sum += coeff * log_ratio(xs[s], xs[s + 1]);
  }
  sum -= us[n - 1] - us[0];
  return sum / std::numbers::pi;
}

/// (1/pi) sum_k u_k ln|(x - a_k) / (x - b_k)|: Hilbert transform of a
/// cellwise-constant density with cell edges `edges`.
inline double hilbert_cells(std::span<const double> edges, std::span<const double> u, double x) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k] == 0.0) continue;
    const double da = std::abs(x - edges[k]), db = std::abs(x - edges[k + 1]);
    if (da == 0.0 || db == 0.0)
      throw RefinementNeeded("hilbert_cells: evaluation point on a cell edge");
    s += u[k] * std::log(da / db);
  }
  return s / std::numbers::pi;
}

}  // namespace rootflow
