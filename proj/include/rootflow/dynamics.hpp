#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rootflow/density.hpp"
#include "rootflow/error.hpp"
#include "rootflow/grid.hpp"
#include "rootflow/lattice.hpp"
#include "rootflow/roots.hpp"
#include "rootflow/transforms.hpp"

namespace rootflow {

inline constexpr double s_floor_default = 1e-8;
inline constexpr double eps_cum = 1e-12;

// ---------------------------------------------------------------------------
// Equilibrium and velocity

/// Offset eta - xi of the critical point next to a root xi whose neighbourhood
/// is the lattice Lambda(a, ca, theta): the solution of
///   F_{a,ca,theta}(eta - xi) = -S / (a^2 psi^2),
/// i.e. eta - xi = -a e^{i theta} G_c(a psi^2 e^{-i theta} / S).
inline cplx equilibrium_offset(double a, double c, double theta, double psi, cplx S,
                               double s_floor = s_floor_default, int L = default_truncation) {
  if (!(a > 0.0) || !(c > 0.0) || !(psi > 0.0))
    throw DomainError("equilibrium_offset: a, c and psi must be positive");
  if (!(std::abs(S) >= s_floor))
    throw DomainError("far-field vanishes: |S| below s_floor, no critical point nearby");
  const cplx e = std::polar(1.0, theta);
  return -a * e * eval_G_newton(c, a * psi * psi / (e * S), L);
}

enum class CellStatus : std::uint8_t { valid, u_floor, s_floor, basin };

inline const char* to_string(CellStatus s) {
  switch (s) {
    case CellStatus::valid: return "valid";
    case CellStatus::u_floor: return "u_floor";
    case CellStatus::s_floor: return "s_floor";
    case CellStatus::basin: return "basin";
  }
  return "unknown";
}

/// v = -(1/u) (1/(b e^{-i theta})) G_c(b e^{-i theta} u / S) per cell.
/// Cells below u_floor or s_floor hold NaN; cells whose G_c argument leaves
/// the series radius hold the linear limit -1/S and are flagged `basin`.
struct VelocityField {
  PolarGrid grid;
  std::vector<cplx> v;
  std::vector<CellStatus> status;

  bool valid(std::size_t k) const { return status[k] == CellStatus::valid; }
};

namespace detail {

// Lattice constants at c rounded to a log grid of relative step 1e-3, so a
// field touches a bounded number of distinct c values.
inline LatticeConstants model_constants(double c) {
  const double key = std::round(std::log(c) * 1000.0) / 1000.0;
  return cached_lattice_constants(std::exp(key));
}

// v = -(1/S) G_c(w) / w with w = (b u) e^{-i theta} / S.
inline std::pair<cplx, CellStatus> velocity_kernel(double bu, double c, double theta, cplx S,
                                                   double s_floor) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (!(std::abs(S) >= s_floor)) return {cplx(nan, nan), CellStatus::s_floor};
  const cplx linear = -1.0 / S;
  if (!(bu > 0.0) || !(c > 0.0) || !std::isfinite(c)) return {linear, CellStatus::u_floor};
  const cplx w = bu * std::polar(1.0, -theta) / S;
  const auto k = model_constants(c);
  if (std::abs(w) > w_max(k.c)) return {linear, CellStatus::basin};
  const cplx w2 = w * w;
  return {linear * (1.0 + w2 * (-k.g + w2 * (2.0 * k.g * k.g - k.h))), CellStatus::valid};
}

}  // namespace detail

inline VelocityField velocity_field(const DensityField& df, const CauchyField& S,
                                    double s_floor = s_floor_default) {
  if (!(df.grid == S.grid)) throw DomainError("velocity_field: density and S grids differ");
  const auto& g = df.grid;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  VelocityField out;
  out.grid = g;
  out.v.assign(g.size(), cplx(nan, nan));
  out.status.assign(g.size(), CellStatus::u_floor);
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_theta(); ++j) {
      const std::size_t k = g.index(i, j);
      if (!df.valid[k]) continue;
      const auto [v, st] = detail::velocity_kernel(df.b_field[k] * df.u[k], df.c_field[k],
                                                   g.theta_center(j), S.values[k], s_floor);
      out.status[k] = st;
      if (st != CellStatus::s_floor) out.v[k] = v;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Coupled 2D system

struct SchemeMeta {
  int steps = 0;
  double cfl = 0.4;
  int modes = 0;
  long clipped_cells = 0;
  long basin_faces = 0;
  long floor_faces = 0;
  double sink_removed = 0.0;
  double last_dt = 0.0;
};

/// Model state: u (inside df), the evolved angular spacing b per cell, and
/// the time. Mass is 1 - t.
struct PDEState {
  double t = 0.0;
  DensityField df;
  std::vector<double> b;
  double mass = 1.0;
  double dt = 0.0;
  SchemeMeta meta;
  /// Set when the initial u is mirror symmetric (theta -> -theta). The
  /// antisymmetric mode is unstable where mass piles up next to the real
  /// axis, so steps then average mirror pairs to keep the symmetry exact.
  bool mirror = false;
};

/// Where the mass lost at rate 1 is taken from: the cells of smallest |S_u|
/// (default), or every cell in proportion to u (du/dt -= u / (1 - t)).
enum class SinkMode { localized, uniform };

struct Step2DOptions {
  double cfl = 0.4;
  SinkMode sink = SinkMode::localized;
  double s_floor = s_floor_default;
  /// Fourier modes of the Cauchy transform; 0 means n_theta.
  int modes = 0;
  /// Keep u fixed and only advance b and t (consistency probe of the b law).
  bool freeze_u = false;
};

namespace detail {

inline bool is_mirror_symmetric(const DensityField& df, double rel = 1e-12) {
  const auto& g = df.grid;
  double peak = 0.0, diff = 0.0;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_theta(); ++j) {
      const double a = df.u[g.index(i, j)];
      peak = std::max(peak, std::abs(a));
      diff = std::max(diff, std::abs(a - df.u[g.index(i, g.mirror_sector(j))]));
    }
  return diff <= rel * peak;
}

inline void average_mirror(std::vector<double>& u, const PolarGrid& g) {
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_theta() / 2; ++j) {
      const std::size_t a = g.index(i, j), b = g.index(i, g.mirror_sector(j));
      const double m = 0.5 * (u[a] + u[b]);
      u[a] = m;
      u[b] = m;
    }
}

inline void average_ring0(DensityField& df) {
  const int nt = df.grid.n_theta();
  double s = 0.0;
  for (int j = 0; j < nt; ++j) s += df.u[df.grid.index(0, j)];
  for (int j = 0; j < nt; ++j) df.u[df.grid.index(0, j)] = s / nt;
}

// Transport coefficients (normal velocity times face length) on every face,
// oriented outward for radial faces and toward increasing theta for angular
// faces, plus S at cell centres and at the origin.
struct Faces {
  std::vector<double> radial;   // (n_rho + 1) x n_theta; face i is at rho_edges[i]
  std::vector<double> angular;  // n_rho x n_theta; face j is at theta = j dtheta
  std::vector<cplx> S_center;
  cplx S_origin;
  long basin = 0;
  long floor = 0;
  double dt_max = std::numeric_limits<double>::infinity();
};

inline Faces compute_faces(const PDEState& st, const Step2DOptions& opt) {
  const auto& df = st.df;
  const auto& g = df.grid;
  const int nr = g.n_rho(), nt = g.n_theta();
  const ModalCauchy modal(g, opt.modes);

  std::vector<double> r_edges(static_cast<std::size_t>(std::max(nr - 1, 0))), r_centers,
      th_centers(static_cast<std::size_t>(nt)), th_edges(static_cast<std::size_t>(nt));
  for (int i = 1; i < nr; ++i) r_edges[i - 1] = g.rho_lo(i);
  for (int i = 1; i < nr; ++i) r_centers.push_back(g.rho_center(i));
  for (int j = 0; j < nt; ++j) {
    th_centers[j] = g.theta_center(j);
    th_edges[j] = g.theta_lo(j);
  }
  const auto S_r = modal.evaluate(df.u, r_edges, th_centers);
  const auto S_a = modal.evaluate(df.u, r_centers, th_edges);

  Faces f;
  f.radial.assign(static_cast<std::size_t>(nr + 1) * nt, 0.0);
  f.angular.assign(static_cast<std::size_t>(nr) * nt, 0.0);
  f.S_center = modal(df.u);
  f.S_origin = modal.at_origin(df.u);

  // Lattice data at a face from the valid neighbours.
  auto face_params = [&](std::size_t k1, std::size_t k2, double& bu, double& c) {
    const bool v1 = df.valid[k1] && std::isfinite(st.b[k1]);
    const bool v2 = df.valid[k2] && std::isfinite(st.b[k2]);
    const double sqrt_n = std::sqrt(static_cast<double>(df.n_ref));
    auto cell_c = [&](std::size_t k, int ring) { return st.b[k] * sqrt_n * df.psi[ring]; };
    const int i1 = static_cast<int>(k1 / nt), i2 = static_cast<int>(k2 / nt);
    if (v1 && v2) {
      bu = 0.5 * (st.b[k1] * df.u[k1] + st.b[k2] * df.u[k2]);
      c = 0.5 * (cell_c(k1, i1) + cell_c(k2, i2));
    } else if (v1) {
      bu = st.b[k1] * df.u[k1];
      c = cell_c(k1, i1);
    } else if (v2) {
      bu = st.b[k2] * df.u[k2];
      c = cell_c(k2, i2);
    } else {
      bu = 0.0;
      c = 0.0;
    }
  };
  auto face_velocity = [&](std::size_t k1, std::size_t k2, double theta, cplx S) {
    double bu = 0.0, c = 0.0;
    face_params(k1, k2, bu, c);
    auto [v, status] = velocity_kernel(bu, c, theta, S, opt.s_floor);
    if (status == CellStatus::basin) ++f.basin;
    if (status == CellStatus::u_floor) ++f.floor;
    if (status == CellStatus::s_floor) {
      ++f.floor;
      v = cplx(0.0, 0.0);
    }
    return v;
  };

  for (int i = 1; i < nr; ++i)
    for (int j = 0; j < nt; ++j) {
      const double th = th_centers[j];
      const cplx v = face_velocity(g.index(i - 1, j), g.index(i, j), th,
                                   S_r[static_cast<std::size_t>(i - 1) * nt + j]);
      f.radial[static_cast<std::size_t>(i) * nt + j] =
          (v * std::polar(1.0, -th)).real() * g.rho_lo(i) * g.dtheta();
    }
  if (nt > 1)
    for (int i = 1; i < nr; ++i)
      for (int j = 0; j < nt; ++j) {
        const int jm = (j + nt - 1) % nt;
        const double th = th_edges[j];
        const cplx v = face_velocity(g.index(i, jm), g.index(i, j), th,
                                     S_a[static_cast<std::size_t>(i - 1) * nt + j]);
        f.angular[static_cast<std::size_t>(i) * nt + j] =
            (v * std::polar(1.0, -th)).imag() * g.drho(i);
      }

  // Explicit positivity limit: outflow coefficients of each cell.
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nt; ++j) {
      double out = 0.0;
      const double r_in = f.radial[static_cast<std::size_t>(i) * nt + j];
      const double r_out = f.radial[static_cast<std::size_t>(i + 1) * nt + j];
      out += std::max(-r_in, 0.0) + std::max(r_out, 0.0);
      const double a_lo = f.angular[static_cast<std::size_t>(i) * nt + j];
      const double a_hi = f.angular[static_cast<std::size_t>(i) * nt + (j + 1) % nt];
      out += std::max(-a_lo, 0.0) + std::max(a_hi, 0.0);
      if (out > 0.0) f.dt_max = std::min(f.dt_max, opt.cfl * g.area(i) / out);
    }
  return f;
}

// Removes `amount` of mass from the cells with the smallest |S| (the origin
// disk counts as one cell with S(0)). Cells whose |S| is within a relative
// 1e-6 of the current minimum share the removal in proportion to their mass.
inline double localized_sink(DensityField& df, const Faces& f, double amount) {
  const auto& g = df.grid;
  const int nr = g.n_rho(), nt = g.n_theta();
  struct Entry {
    double s;
    int ring;  // -1: origin disk (ring 0)
    int sector;
  };
  std::vector<Entry> entries;
  entries.push_back({std::abs(f.S_origin), -1, 0});
  for (int i = 1; i < nr; ++i)
    for (int j = 0; j < nt; ++j) entries.push_back({std::abs(f.S_center[g.index(i, j)]), i, j});
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.s != b.s) return a.s < b.s;
    if (a.ring != b.ring) return a.ring < b.ring;
    return a.sector < b.sector;
  });
  auto cells_of = [&](const Entry& e) {
    std::vector<std::size_t> ks;
    if (e.ring < 0)
      for (int j = 0; j < nt; ++j) ks.push_back(g.index(0, j));
    else
      ks.push_back(g.index(e.ring, e.sector));
    return ks;
  };
  double need = amount;
  std::size_t pos = 0;
  while (need > 0.0 && pos < entries.size()) {
    const double s0 = entries[pos].s;
    std::vector<std::size_t> group;
    while (pos < entries.size() && entries[pos].s <= s0 * (1.0 + 1e-6) + 1e-300) {
      for (auto k : cells_of(entries[pos])) group.push_back(k);
      ++pos;
    }
    double content = 0.0;
    for (auto k : group) content += df.u[k] * g.area(static_cast<int>(k / nt));
    if (!(content > 0.0)) continue;
    const double take = std::min(need, content);
    const double keep = 1.0 - take / content;
    for (auto k : group) df.u[k] *= keep;
    need -= take;
  }
  return amount - need;
}

inline PDEState step_2d_with(const PDEState& st, const Faces& f, double dt,
                             const Step2DOptions& opt) {
  const auto& g = st.df.grid;
  const int nr = g.n_rho(), nt = g.n_theta();
  PDEState next = st;
  next.meta.cfl = opt.cfl;
  next.meta.modes = opt.modes > 0 ? opt.modes : nt;
  auto& u = next.df.u;
  const std::vector<double>& u0 = st.df.u;

  if (!opt.freeze_u) {
    std::vector<double> delta(u.size(), 0.0);
    for (int i = 1; i < nr; ++i)
      for (int j = 0; j < nt; ++j) {
        const double coef = f.radial[static_cast<std::size_t>(i) * nt + j];
        const std::size_t kin = g.index(i - 1, j), kout = g.index(i, j);
        const double flux = coef * (coef > 0.0 ? u0[kin] : u0[kout]) * dt;
        delta[kin] -= flux;
        delta[kout] += flux;
      }
    if (nt > 1)
      for (int i = 1; i < nr; ++i)
        for (int j = 0; j < nt; ++j) {
          const double coef = f.angular[static_cast<std::size_t>(i) * nt + j];
          const std::size_t klo = g.index(i, (j + nt - 1) % nt), khi = g.index(i, j);
          const double flux = coef * (coef > 0.0 ? u0[klo] : u0[khi]) * dt;
          delta[klo] -= flux;
          delta[khi] += flux;
        }
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nt; ++j) u[g.index(i, j)] += delta[g.index(i, j)] / g.area(i);
    average_ring0(next.df);

    double peak = 0.0;
    for (double v : u) peak = std::max(peak, v);
    for (auto& v : u) {
      if (v >= 0.0) continue;
      if (v < -1e-10 * peak)
        throw StepRejected("step_2d: negative density after transport", 0.5 * dt);
      v = 0.0;
      ++next.meta.clipped_cells;
    }
    if (st.mirror) average_mirror(u, g);
    if (opt.sink == SinkMode::localized) {
      next.meta.sink_removed += localized_sink(next.df, f, dt);
    } else {
      const double keep = (1.0 - st.t - dt) / (1.0 - st.t);
      for (auto& v : u) v *= keep;
      next.meta.sink_removed += dt;
    }
    if (st.mirror) average_mirror(u, g);
  }

  // psi from u, then the b law db = b (dpsi/psi - du/u), integrated exactly
  // as b ~ psi / u along the step.
  const std::vector<double> psi0 = st.df.psi;
  next.df.update_derived();
  const double sqrt_n = std::sqrt(static_cast<double>(next.df.n_ref));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nt; ++j) {
      const std::size_t k = g.index(i, j);
      const double p0 = psi0[i], p1 = next.df.psi[i];
      if (std::isfinite(st.b[k]) && u0[k] > 0.0 && u[k] > 0.0 && p0 > 0.0 && p1 > 0.0)
        next.b[k] = st.b[k] * (p1 / p0) * (u0[k] / u[k]);
      else
        next.b[k] = (u[k] > 0.0 && p1 > 0.0) ? p1 / (sqrt_n * u[k]) : nan;
      if (next.df.valid[k]) {
        next.df.b_field[k] = next.b[k];
        next.df.c_field[k] = next.b[k] * sqrt_n * p1;
      }
    }
  next.t = st.t + dt;
  next.mass = 1.0 - next.t;
  next.dt = dt;
  next.meta.steps += 1;
  next.meta.last_dt = dt;
  next.meta.basin_faces += f.basin;
  next.meta.floor_faces += f.floor;
  return next;
}

}  // namespace detail

/// Initial model state from a density at time t0. The density must carry
/// mass 1 - t0.
inline PDEState make_pde_state(DensityField df, double t0 = 0.0) {
  if (std::abs(df.total_mass() - (1.0 - t0)) > 1e-6)
    throw DomainError("make_pde_state: density mass must equal 1 - t0");
  detail::average_ring0(df);
  PDEState st;
  st.mirror = detail::is_mirror_symmetric(df);
  if (st.mirror) detail::average_mirror(df.u, df.grid);
  df.update_derived();
  st.t = t0;
  st.mass = 1.0 - t0;
  st.b = df.b_field;
  st.df = std::move(df);
  return st;
}

/// Largest stable explicit step for the current state.
inline double max_stable_dt_2d(const PDEState& st, const Step2DOptions& opt = {}) {
  return detail::compute_faces(st, opt).dt_max;
}

/// One explicit step of
///   d_t u = div( (1/(b e^{-i theta})) G_c(b e^{-i theta} u / S_u) ),
///   d_t b = (b/psi) d_t psi - (b/u) d_t u,
/// by donor-cell finite volumes (theta periodic, zero flux at the outer
/// radius, ring 0 kept as one disk-average cell). S_u is recomputed from the
/// current u. The mass 1 - t lost per unit time is removed from the cells
/// where |S_u| is smallest, where no critical point pairs with a root.
inline PDEState step_2d(const PDEState& st, double dt, const Step2DOptions& opt = {}) {
  if (!(dt > 0.0)) throw DomainError("step_2d: dt must be positive");
  if (!(st.t + dt < 1.0)) throw DomainError("step_2d: the model mass vanishes at t = 1");
  const auto f = detail::compute_faces(st, opt);
  if (!opt.freeze_u && dt > f.dt_max * (1.0 + 1e-12))
    throw StepRejected("step_2d: dt exceeds the CFL limit", f.dt_max);
  return detail::step_2d_with(st, f, dt, opt);
}

/// Steps with the largest stable dt until t_end.
inline PDEState advance_2d(PDEState st, double t_end, const Step2DOptions& opt = {}) {
  if (!(t_end < 1.0)) throw DomainError("advance_2d: the model mass vanishes at t = 1");
  while (st.t < t_end - 1e-14) {
    const auto f = detail::compute_faces(st, opt);
    const double dt = std::min(f.dt_max, t_end - st.t);
    st = detail::step_2d_with(st, f, dt, opt);
  }
  return st;
}

// ---------------------------------------------------------------------------
// Radial baseline: d_t psi = d_r[ (1/r int_0^r psi)^{-1} psi ]

struct RadialState {
  std::vector<double> r_edges;
  /// Cell averages of psi.
  std::vector<double> psi;
  double t = 0.0;
  /// Faces where the cumulative mass fell below eps_cum.
  long regularized = 0;
};

inline double radial_mass(const RadialState& s) {
  double m = 0.0;
  for (std::size_t i = 0; i < s.psi.size(); ++i) m += s.psi[i] * (s.r_edges[i + 1] - s.r_edges[i]);
  return m;
}

/// Cell averages of psi(r) by 4-point Gauss-Legendre per cell.
inline RadialState make_radial_state(std::vector<double> edges,
                                     const std::function<double(double)>& psi, double t0 = 0.0) {
  if (edges.size() < 2) throw DomainError("make_radial_state: need at least one cell");
  static constexpr double x[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                  0.8611363115940526};
  static constexpr double w[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                  0.3478548451374538};
  RadialState s;
  s.t = t0;
  s.psi.resize(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i], b = edges[i + 1];
    double acc = 0.0;
    for (int q = 0; q < 4; ++q) acc += w[q] * psi(0.5 * (a + b) + 0.5 * (b - a) * x[q]);
    s.psi[i] = 0.5 * acc;
  }
  s.r_edges = std::move(edges);
  return s;
}

inline RadialState radial_from_density(const DensityField& df, double t0 = 0.0) {
  RadialState s;
  s.r_edges = df.grid.rho_edges();
  s.psi = df.psi;
  s.t = t0;
  return s;
}

namespace detail {

// Inward fluxes at every face; face 0 is the origin, where mass leaves at
// rate 1 while cell 0 holds mass.
inline std::vector<double> radial_fluxes(const RadialState& s, long* regularized) {
  const std::size_t n = s.psi.size();
  std::vector<double> f(n + 1, 0.0);
  double M = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    M += s.psi[i - 1] * (s.r_edges[i] - s.r_edges[i - 1]);
    if (M < eps_cum && s.psi[i] > 0.0 && regularized) ++*regularized;
    f[i] = s.r_edges[i] * s.psi[i] / (M + eps_cum);
  }
  f[0] = s.psi[0] > 0.0 ? 1.0 : 0.0;
  return f;
}

}  // namespace detail

inline double max_stable_dt_radial(const RadialState& s, double cfl = 0.4) {
  const auto f = detail::radial_fluxes(s, nullptr);
  double dt = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < s.psi.size(); ++i) {
    if (!(s.psi[i] > 0.0)) continue;
    const double dr = s.r_edges[i + 1] - s.r_edges[i];
    dt = std::min(dt, cfl * s.psi[i] * dr / f[i]);
  }
  return dt;
}

/// One conservative upwind step; mass changes only through the origin face.
inline RadialState step_radial(const RadialState& s, double dt, double cfl = 0.4) {
  if (!(dt > 0.0)) throw DomainError("step_radial: dt must be positive");
  const double limit = max_stable_dt_radial(s, cfl);
  if (dt > limit * (1.0 + 1e-12)) throw StepRejected("step_radial: dt exceeds the CFL limit", limit);
  RadialState next = s;
  auto f = detail::radial_fluxes(s, &next.regularized);
  const std::size_t n = s.psi.size();
  // The origin may not take more than cell 0 holds.
  const double dr0 = s.r_edges[1] - s.r_edges[0];
  const double in0 = n > 1 ? f[1] : 0.0;
  f[0] = std::min(f[0], (s.psi[0] * dr0) / dt + in0);
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = s.r_edges[i + 1] - s.r_edges[i];
    const double outer = i + 1 < n ? f[i + 1] : 0.0;
    next.psi[i] = std::max(0.0, s.psi[i] + dt / dr * (outer - f[i]));
  }
  next.t = s.t + dt;
  return next;
}

inline RadialState advance_radial(RadialState s, double t_end, double cfl = 0.4) {
  while (s.t < t_end - 1e-14) {
    const double dt = std::min(max_stable_dt_radial(s, cfl), t_end - s.t);
    s = step_radial(s, dt, cfl);
  }
  return s;
}

// ---------------------------------------------------------------------------
// 1D baseline: d_t u = -(1/pi) d_x arctan(Hu / u)

struct Line1DState {
  std::vector<double> x_edges;
  /// Cell averages.
  std::vector<double> u;
  double t = 0.0;
  /// Faces where u = Hu = 0 and the flux was set to its limit 0.
  long degenerate_faces = 0;
};

inline double line_mass(const Line1DState& s) {
  double m = 0.0;
  for (std::size_t k = 0; k < s.u.size(); ++k) m += s.u[k] * (s.x_edges[k + 1] - s.x_edges[k]);
  return m;
}

inline Line1DState make_line_state(std::vector<double> edges,
                                   const std::function<double(double)>& u, double t0 = 0.0) {
  if (edges.size() < 2) throw DomainError("make_line_state: need at least one cell");
  Line1DState s;
  s.t = t0;
  s.u.resize(edges.size() - 1);
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    // Simpson on the cell.
    const double a = edges[k], b = edges[k + 1];
    s.u[k] = (u(a) + 4.0 * u(0.5 * (a + b)) + u(b)) / 6.0;
  }
  s.x_edges = std::move(edges);
  return s;
}

namespace detail {

struct LineFluxes {
  std::vector<double> flux;  // per face, left to right
  double max_speed = 0.0;
  long degenerate = 0;
};

// Face flux F = atan2(Hu, u) / pi with Hu averaged from the adjacent centres
// and u taken upwind: dF/du has the sign of -Hu, so the upwind cell is the
// right one where Hu > 0. Outside the support F = -1/2 (left), +1/2 (right).
inline LineFluxes line_fluxes(const Line1DState& s) {
  const std::size_t n = s.u.size();
  std::vector<double> centers(n), hu(n);
  for (std::size_t k = 0; k < n; ++k) centers[k] = 0.5 * (s.x_edges[k] + s.x_edges[k + 1]);
  for (std::size_t k = 0; k < n; ++k) hu[k] = hilbert_cells(s.x_edges, s.u, centers[k]);
  LineFluxes out;
  out.flux.assign(n + 1, 0.0);
  out.flux[0] = -0.5;
  out.flux[n] = 0.5;
  for (std::size_t f = 1; f < n; ++f) {
    const double h = 0.5 * (hu[f - 1] + hu[f]);
    const double up = h > 0.0 ? s.u[f] : h < 0.0 ? s.u[f - 1] : 0.5 * (s.u[f - 1] + s.u[f]);
    if (up == 0.0 && h == 0.0) {
      ++out.degenerate;
      out.flux[f] = 0.0;
      continue;
    }
    out.flux[f] = std::atan2(h, up) / std::numbers::pi;
    if (s.u[f - 1] > 0.0 || s.u[f] > 0.0)
      out.max_speed = std::max(out.max_speed, 1.0 / (std::numbers::pi * std::hypot(h, up)));
  }
  return out;
}

}  // namespace detail

inline double max_stable_dt_1d(const Line1DState& s, double cfl = 0.4) {
  const auto f = detail::line_fluxes(s);
  double dx = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.u.size(); ++k) dx = std::min(dx, s.x_edges[k + 1] - s.x_edges[k]);
  return f.max_speed > 0.0 ? cfl * dx / f.max_speed : std::numeric_limits<double>::infinity();
}

/// One conservative step. Mass leaves at the two support edges at a total
/// rate of 1.
inline Line1DState step_1d(const Line1DState& s, double dt, double cfl = 0.4) {
  if (!(dt > 0.0)) throw DomainError("step_1d: dt must be positive");
  const auto f = detail::line_fluxes(s);
  double dx = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.u.size(); ++k) dx = std::min(dx, s.x_edges[k + 1] - s.x_edges[k]);
  const double limit = f.max_speed > 0.0 ? cfl * dx / f.max_speed : dt;
  if (dt > limit * (1.0 + 1e-12)) throw StepRejected("step_1d: dt exceeds the CFL limit", limit);
  Line1DState next = s;
  next.degenerate_faces += f.degenerate;
  for (std::size_t k = 0; k < s.u.size(); ++k) {
    const double width = s.x_edges[k + 1] - s.x_edges[k];
    next.u[k] = std::max(0.0, s.u[k] - dt / width * (f.flux[k + 1] - f.flux[k]));
  }
  next.t = s.t + dt;
  return next;
}

inline Line1DState advance_1d(Line1DState s, double t_end, double cfl = 0.4) {
  while (s.t < t_end - 1e-14) {
    const double dt = std::min(max_stable_dt_1d(s, cfl), t_end - s.t);
    s = step_1d(s, dt, cfl);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Statistics and comparison

/// Mean over roots of min(|theta|, pi - |theta|), the angular distance to
/// the real axis.
inline double mean_axis_angle(const RootSet& rs) {
  double s = 0.0;
  for (const auto& r : rs.roots) {
    const double a = std::abs(std::arg(r));
    s += std::min(a, std::numbers::pi - a);
  }
  return s / static_cast<double>(rs.roots.size());
}

inline double mean_axis_angle(const DensityField& df) {
  const auto& g = df.grid;
  double s = 0.0, m = 0.0;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_theta(); ++j) {
      double th = g.theta_center(j);
      if (th > std::numbers::pi) th = 2.0 * std::numbers::pi - th;
      const double w = df.u[g.index(i, j)] * g.area(i);
      s += w * std::min(th, std::numbers::pi - th);
      m += w;
    }
  return m > 0.0 ? s / m : 0.0;
}

/// psi per ring from a root histogram, each root carrying mass 1/n_ref.
inline std::vector<double> radial_histogram(const RootSet& rs, const std::vector<double>& edges,
                                            int n_ref) {
  std::vector<double> psi(edges.size() - 1, 0.0);
  for (const auto& r : rs.roots) {
    const double rho = std::abs(r);
    auto it = std::upper_bound(edges.begin(), edges.end(), rho);
    if (it == edges.begin() || rho > edges.back()) continue;
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - edges.begin()) - 1,
                                                psi.size() - 1);
    psi[i] += 1.0;
  }
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] /= n_ref * (edges[i + 1] - edges[i]);
  return psi;
}

/// sum |p - q| dr over the cells of `edges`.
inline double l1_distance(const std::vector<double>& p, const std::vector<double>& q,
                          const std::vector<double>& edges) {
  if (p.size() != q.size() || p.size() + 1 != edges.size())
    throw DomainError("l1_distance: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]) * (edges[i + 1] - edges[i]);
  return d;
}

enum class Metric { L1, wasserstein1_radial };

inline std::string to_string(Metric m) { return m == Metric::L1 ? "L1" : "wasserstein-1-radial"; }

struct FrameComparison {
  double t_empirical = 0.0;
  double t_model = 0.0;
  double distance = 0.0;
};

struct ComparisonReport {
  Metric metric = Metric::L1;
  double budget = 0.0;
  std::vector<FrameComparison> frames;
  double max_distance = 0.0;
  bool pass = false;
};

inline nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : r.frames)
    frames.push_back({{"t_empirical", f.t_empirical}, {"t_model", f.t_model}, {"distance", f.distance}});
  return {{"metric", to_string(r.metric)}, {"budget", r.budget},         {"frames", frames},
          {"max_distance", r.max_distance}, {"pass", r.pass}};
}

struct CompareOptions {
  /// Kernel bandwidth for the empirical frames; 0 uses the default of frame 0.
  double bandwidth = 0.0;
  /// Allowed |t_empirical - t_model|.
  double time_tol = 1e-9;
  /// Reference degree n0; 0 uses the degree of frame 0 at t = 0.
  int n_ref = 0;
};

/// Distance between each smoothed empirical frame and the model state at the
/// same time: L1 of u, or the W1 distance of the radial mass profiles.
inline ComparisonReport compare_model_empirical(const std::vector<RootSet>& flow,
                                                const std::vector<PDEState>& model, Metric metric,
                                                double budget, CompareOptions opt = {}) {
  if (flow.size() != model.size() || flow.empty())
    throw DomainError("compare_model_empirical: need one model state per frame");
  std::string mismatch;
  for (std::size_t k = 0; k < flow.size(); ++k)
    if (std::abs(flow[k].time - model[k].t) > opt.time_tol)
      mismatch += " " + std::to_string(k) + " (" + std::to_string(flow[k].time) + " vs " +
                  std::to_string(model[k].t) + ")";
  if (!mismatch.empty())
    throw DomainError("compare_model_empirical: time mismatch in frames" + mismatch);
  const int n_ref = opt.n_ref > 0 ? opt.n_ref : detail::initial_degree(flow.front());
  const double bw = opt.bandwidth > 0.0 ? opt.bandwidth : default_bandwidth(flow.front());

  ComparisonReport rep;
  rep.metric = metric;
  rep.budget = budget;
  for (std::size_t k = 0; k < flow.size(); ++k) {
    const auto& g = model[k].df.grid;
    DensityOptions dopt;
    dopt.n_ref = n_ref;
    const auto emp = estimate_density(flow[k], g, bw, dopt);
    double d = 0.0;
    if (metric == Metric::L1) {
      for (int i = 0; i < g.n_rho(); ++i)
        for (int j = 0; j < g.n_theta(); ++j)
          d += std::abs(emp.u[g.index(i, j)] - model[k].df.u[g.index(i, j)]) * g.area(i);
    } else {
      double ce = 0.0, cm = 0.0;
      for (int i = 0; i < g.n_rho(); ++i) {
        ce += emp.psi[i] * g.drho(i);
        cm += model[k].df.psi[i] * g.drho(i);
        d += std::abs(ce - cm) * g.drho(i);
      }
    }
    rep.frames.push_back({flow[k].time, model[k].t, d});
    rep.max_distance = std::max(rep.max_distance, d);
  }
  rep.pass = rep.max_distance <= budget;
  return rep;
}

}  // namespace rootflow
