#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "rootflow/error.hpp"
#include "rootflow/grid.hpp"
#include "rootflow/parallel.hpp"
#include "rootflow/roots.hpp"

namespace rootflow {

inline constexpr double u_floor_relative = 1e-6;

/// Spacing fields at reference degree n: a per ring, b and c per cell.
/// Masked entries (u below the floor, or psi = 0) hold NaN.
struct SpacingFields {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;
  std::vector<char> valid;
};

/// Area density u(rho, theta) on a polar grid with its derived fields:
/// psi(rho) = int u rho dtheta, U = rho u / psi, a = 1/(sqrt(n) psi),
/// b = psi / (sqrt(n) u), c = psi^2 / u.
struct DensityField {
  PolarGrid grid;
  std::vector<double> u;
  double mass = 0.0;
  std::vector<double> psi;
  std::vector<double> U_cond;
  std::vector<double> a_field;
  std::vector<double> b_field;
  std::vector<double> c_field;
  std::vector<char> valid;
  int n_ref = 1;
  double bandwidth = 0.0;
  bool bandwidth_warning = false;

  double u_at(int i, int j) const { return u[grid.index(i, j)]; }

  double total_mass() const {
    double m = 0.0;
    for (int i = 0; i < grid.n_rho(); ++i) {
      double ring = 0.0;
      for (int j = 0; j < grid.n_theta(); ++j) ring += u[grid.index(i, j)];
      m += ring * grid.area(i);
    }
    return m;
  }

  /// Recomputes mass, psi, U_cond and the spacing fields from u.
  void update_derived();
};

inline std::vector<double> radial_marginal(const PolarGrid& g, const std::vector<double>& u) {
  std::vector<double> psi(static_cast<std::size_t>(g.n_rho()), 0.0);
  for (int i = 0; i < g.n_rho(); ++i) {
    double s = 0.0;
    for (int j = 0; j < g.n_theta(); ++j) s += u[g.index(i, j)];
    psi[i] = s * g.rho_center(i) * g.dtheta();
  }
  return psi;
}

inline SpacingFields spacing_fields(const DensityField& df, int n) {
  if (n < 1) throw DomainError("spacing_fields: n must be at least 1");
  const auto& g = df.grid;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double peak = df.u.empty() ? 0.0 : *std::max_element(df.u.begin(), df.u.end());
  const double floor = u_floor_relative * peak;
  SpacingFields out;
  out.a.assign(static_cast<std::size_t>(g.n_rho()), nan);
  out.b.assign(g.size(), nan);
  out.c.assign(g.size(), nan);
  out.valid.assign(g.size(), 0);
  for (int i = 0; i < g.n_rho(); ++i) {
    const double psi = df.psi[i];
    if (!(psi > 0.0)) continue;
    out.a[i] = 1.0 / (sqrt_n * psi);
    for (int j = 0; j < g.n_theta(); ++j) {
      const std::size_t k = g.index(i, j);
      const double uk = df.u[k];
      if (!(uk > floor) || !(uk > 0.0)) continue;
      out.b[k] = psi / (sqrt_n * uk);
      out.c[k] = psi * psi / uk;
      out.valid[k] = 1;
    }
  }
  return out;
}

inline void DensityField::update_derived() {
  mass = total_mass();
  psi = radial_marginal(grid, u);
  U_cond.assign(grid.size(), 0.0);
  for (int i = 0; i < grid.n_rho(); ++i) {
    if (!(psi[i] > 0.0)) continue;
    for (int j = 0; j < grid.n_theta(); ++j) {
      const std::size_t k = grid.index(i, j);
      U_cond[k] = grid.rho_center(i) * u[k] / psi[i];
    }
  }
  auto s = spacing_fields(*this, n_ref);
  a_field = std::move(s.a);
  b_field = std::move(s.b);
  c_field = std::move(s.c);
  valid = std::move(s.valid);
}

/// Density from a function u(rho, theta) sampled at cell centres. When
/// `mass` is positive the field is rescaled to that total.
inline DensityField density_from_function(const PolarGrid& grid,
                                          const std::function<double(double, double)>& f,
                                          int n_ref, double mass = -1.0) {
  DensityField df;
  df.grid = grid;
  df.n_ref = n_ref;
  df.u.assign(grid.size(), 0.0);
  for (int i = 0; i < grid.n_rho(); ++i)
    for (int j = 0; j < grid.n_theta(); ++j) {
      const double v = f(grid.rho_center(i), grid.theta_center(j));
      if (!(v >= 0.0)) throw DomainError("density_from_function: negative or NaN density");
      df.u[grid.index(i, j)] = v;
    }
  if (mass > 0.0) {
    const double m = df.total_mass();
    if (!(m > 0.0)) throw DomainError("density_from_function: zero mass");
    for (auto& v : df.u) v *= mass / m;
  }
  df.update_derived();
  return df;
}

/// Default bandwidth: sigma_hat * n^(-1/6), sigma_hat the pooled coordinate
/// standard deviation of the sample.
inline double default_bandwidth(const RootSet& rs) {
  const double n = static_cast<double>(rs.roots.size());
  cplx mean(0.0, 0.0);
  for (const auto& r : rs.roots) mean += r;
  mean /= n;
  double var = 0.0;
  for (const auto& r : rs.roots) var += std::norm(r - mean);
  const double sigma = std::sqrt(var / (2.0 * n));
  return std::max(sigma, 1e-3) * std::pow(n, -1.0 / 6.0);
}

struct DensityOptions {
  /// Reference degree for mass and spacings; 0 means |roots|.
  int n_ref = 0;
  /// Average u(rho, theta) with u(rho, -theta).
  bool symmetrize = false;
};

/// Gaussian kernel estimate on the grid. Each root's kernel is reflected
/// radially at rho_max and renormalized over the grid, so every root carries
/// exactly 1/n_ref of mass.
inline DensityField estimate_density(const RootSet& rs, const PolarGrid& grid, double bandwidth,
                                     DensityOptions opt = {}) {
  if (rs.roots.empty()) throw DomainError("estimate_density: empty root set");
  if (!(bandwidth > 0.0)) throw DomainError("estimate_density: bandwidth must be positive");
  const int n_ref = opt.n_ref > 0 ? opt.n_ref : static_cast<int>(rs.roots.size());
  const double R = grid.rho_max();
  for (const auto& r : rs.roots)
    if (std::abs(r) > R * (1.0 + 1e-12))
      throw DomainError("estimate_density: root outside the grid; normalize first");

  const std::size_t cells = grid.size();
  std::vector<std::complex<double>> centers(cells);
  std::vector<double> areas(cells);
  for (int i = 0; i < grid.n_rho(); ++i)
    for (int j = 0; j < grid.n_theta(); ++j) {
      centers[grid.index(i, j)] = grid.center(i, j);
      areas[grid.index(i, j)] = grid.area(i);
    }
  const double inv2s2 = 1.0 / (2.0 * bandwidth * bandwidth);
  const double cutoff2 = 64.0 * bandwidth * bandwidth;

  // Per-root contributions are accumulated in blocks so the sum order does
  // not depend on the thread count.
  const std::size_t n = rs.roots.size();
  const std::size_t block = 64;
  const std::size_t blocks = (n + block - 1) / block;
  std::vector<std::vector<double>> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> acc(cells, 0.0), w(cells);
    for (std::size_t r = b * block; r < std::min(n, (b + 1) * block); ++r) {
      const cplx x = rs.roots[r];
      const double rx = std::abs(x);
      const cplx image = rx > 0.0 ? x * ((2.0 * R - rx) / rx) : cplx(2.0 * R, 0.0);
      double total = 0.0;
      for (std::size_t k = 0; k < cells; ++k) {
        const double d1 = std::norm(centers[k] - x);
        const double d2 = std::norm(centers[k] - image);
        double v = 0.0;
        if (d1 < cutoff2) v += std::exp(-d1 * inv2s2);
        if (d2 < cutoff2) v += std::exp(-d2 * inv2s2);
        w[k] = v;
        total += v * areas[k];
      }
      if (!(total > 0.0)) {
        // Bandwidth far below the cell size: deposit into the containing cell.
        auto cell = grid.cell_of(x);
        const std::size_t k = grid.index(cell->first, cell->second);
        acc[k] += 1.0 / areas[k];
        continue;
      }
      for (std::size_t k = 0; k < cells; ++k) acc[k] += w[k] / total;
    }
    partial[b] = std::move(acc);
  });

  DensityField df;
  df.grid = grid;
  df.n_ref = n_ref;
  df.bandwidth = bandwidth;
  df.bandwidth_warning = bandwidth < 1.0 / std::sqrt(static_cast<double>(n));
  df.u.assign(cells, 0.0);
  for (const auto& p : partial)
    for (std::size_t k = 0; k < cells; ++k) df.u[k] += p[k];
  for (auto& v : df.u) v /= n_ref;
  if (opt.symmetrize) {
    std::vector<double> s = df.u;
    for (int i = 0; i < grid.n_rho(); ++i)
      for (int j = 0; j < grid.n_theta(); ++j)
        s[grid.index(i, j)] =
            0.5 * (df.u[grid.index(i, j)] + df.u[grid.index(i, grid.mirror_sector(j))]);
    df.u = std::move(s);
  }
  df.update_derived();
  return df;
}

inline DensityField estimate_density(const RootSet& rs, const PolarGrid& grid) {
  return estimate_density(rs, grid, default_bandwidth(rs));
}

/// CSV `rho,theta,u,psi,a,b,c`, one row per cell; masked values print as nan.
inline void write_csv(std::ostream& os, const DensityField& df) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "rho,theta,u,psi,a,b,c\n";
  const auto& g = df.grid;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_theta(); ++j) {
      const std::size_t k = g.index(i, j);
      buf << g.rho_center(i) << ',' << g.theta_center(j) << ',' << df.u[k] << ',' << df.psi[i]
          << ',' << df.a_field[i] << ',' << df.b_field[k] << ',' << df.c_field[k] << '\n';
    }
  os << buf.str();
}

struct HistogramSector {
  double theta_lo, theta_hi;
  int count;
};

struct HistogramRing {
  double rho_lo, rho_hi;
  int count;
  std::vector<HistogramSector> sectors;
};

struct Histogram2D {
  std::vector<HistogramRing> rings;
  int m = 1;
  /// Points per bin per axis, floor(sqrt(n) / m).
  int s = 1;
};

namespace detail {

// Splits [0, count) into m rank blocks; block k is [bounds[k], bounds[k+1]).
inline std::vector<std::size_t> rank_blocks(std::size_t count, int m) {
  std::vector<std::size_t> bounds(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k <= m; ++k) bounds[k] = count * static_cast<std::size_t>(k) / m;
  return bounds;
}

}  // namespace detail

/// Equal-probability histogram: m rings at the empirical radial quantiles,
/// each cut into m sectors at the angular quantiles of its own points.
/// Edges sit halfway between the neighbouring order statistics.
inline Histogram2D build_histogram(const RootSet& rs, int m) {
  if (m < 1) throw DomainError("build_histogram: m must be at least 1");
  const std::size_t n = rs.roots.size();
  if (n < static_cast<std::size_t>(m) * static_cast<std::size_t>(m))
    throw DomainError("build_histogram: need at least m^2 roots");
  struct P {
    double rho, theta;
    std::size_t index;
  };
  std::vector<P> pts(n);
  for (std::size_t k = 0; k < n; ++k) {
    double t = std::arg(rs.roots[k]);
    if (t < 0.0) t += 2.0 * std::numbers::pi;
    pts[k] = {std::abs(rs.roots[k]), t, k};
  }
  auto by_rho = [](const P& a, const P& b) {
    if (a.rho != b.rho) return a.rho < b.rho;
    if (a.theta != b.theta) return a.theta < b.theta;
    return a.index < b.index;
  };
  auto by_theta = [](const P& a, const P& b) {
    if (a.theta != b.theta) return a.theta < b.theta;
    return a.index < b.index;
  };
  std::sort(pts.begin(), pts.end(), by_rho);
  const auto rb = detail::rank_blocks(n, m);
  Histogram2D h;
  h.m = m;
  h.s = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n))) / m);
  for (int k = 0; k < m; ++k) {
    HistogramRing ring;
    ring.rho_lo = k == 0 ? 0.0 : 0.5 * (pts[rb[k] - 1].rho + pts[rb[k]].rho);
    ring.rho_hi = k == m - 1 ? pts[n - 1].rho : 0.5 * (pts[rb[k + 1] - 1].rho + pts[rb[k + 1]].rho);
    ring.count = static_cast<int>(rb[k + 1] - rb[k]);
    std::vector<P> in(pts.begin() + static_cast<std::ptrdiff_t>(rb[k]),
                      pts.begin() + static_cast<std::ptrdiff_t>(rb[k + 1]));
    std::sort(in.begin(), in.end(), by_theta);
    const auto sb = detail::rank_blocks(in.size(), m);
    for (int j = 0; j < m; ++j) {
      HistogramSector s;
      s.theta_lo = (j == 0 || sb[j] == 0) ? 0.0 : 0.5 * (in[sb[j] - 1].theta + in[sb[j]].theta);
      s.theta_hi = (j == m - 1 || sb[j + 1] >= in.size())
                       ? 2.0 * std::numbers::pi
                       : 0.5 * (in[sb[j + 1] - 1].theta + in[sb[j + 1]].theta);
      s.count = static_cast<int>(sb[j + 1] - sb[j]);
      ring.sectors.push_back(s);
    }
    h.rings.push_back(std::move(ring));
  }
  return h;
}

inline nlohmann::json to_json(const Histogram2D& h) {
  nlohmann::json rings = nlohmann::json::array();
  for (const auto& r : h.rings) {
    nlohmann::json sectors = nlohmann::json::array();
    for (const auto& s : r.sectors)
      sectors.push_back({{"theta_lo", s.theta_lo}, {"theta_hi", s.theta_hi}, {"count", s.count}});
    rings.push_back(
        {{"rho_lo", r.rho_lo}, {"rho_hi", r.rho_hi}, {"count", r.count}, {"sectors", sectors}});
  }
  return {{"m", h.m}, {"s", h.s}, {"rings", rings}};
}

}  // namespace rootflow
