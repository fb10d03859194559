#include <cmath>
#include <numbers>

#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "rootflow/dynamics.hpp"
#include "rootflow/ensembles.hpp"

using namespace rootflow;
using Catch::Approx;

namespace {

DensityField disk(const PolarGrid& g, int n_ref = 1000) {
  return density_from_function(
      g, [](double rho, double) { return rho <= 1.0 ? 1.0 : 0.0; }, n_ref, 1.0);
}

// Smooth, mirror-symmetric, not rotation invariant.
DensityField lopsided(const PolarGrid& g) {
  return density_from_function(
      g,
      [](double rho, double th) {
        return rho <= 0.9 ? (1.0 + 0.5 * std::cos(th) + 0.2 * std::cos(2.0 * th)) * (1.0 - rho * rho)
                          : 0.0;
      },
      1000, 1.0);
}

double mean_rho(const DensityField& df) {
  const auto& g = df.grid;
  double s = 0.0, m = 0.0;
  for (int i = 0; i < g.n_rho(); ++i) {
    s += df.psi[i] * g.drho(i) * g.rho_center(i);
    m += df.psi[i] * g.drho(i);
  }
  return s / m;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace

TEST_CASE("equilibrium offset solves the frame equation") {
  const double a = 0.05, c = 1.7, theta = 0.4, psi = 1.3;
  const cplx S(0.8, -0.3);
  const cplx off = equilibrium_offset(a, c, theta, psi, S);
  const LatticeFrame f(a, c, theta);
  const double scale = std::abs(S) / (a * a * psi * psi);
  CHECK(std::abs(eval_F_frame(f, off) + S / (a * a * psi * psi)) <= 1e-8 * scale);

  // Linear regime.
  const double a2 = 1e-4;
  const cplx lin = equilibrium_offset(a2, c, theta, psi, S);
  const cplx expect = -a2 * a2 * psi * psi / S;
  CHECK(std::abs(lin - expect) <= 1e-6 * std::abs(expect));

  // Real data on the square lattice give a real offset.
  CHECK(equilibrium_offset(0.1, 1.0, 0.0, 1.0, 2.0).imag() == 0.0);

  // Two roots at +-1: from the root at 1 the other root gives S = 1/2 and
  // the critical point 0 lies toward the origin.
  const cplx toy = equilibrium_offset(0.1, 1.0, 0.0, 1.0, 0.5);
  CHECK(toy.real() < 0.0);
  CHECK(toy.imag() == 0.0);

  CHECK_THROWS_WITH(equilibrium_offset(0.1, 1.0, 0.0, 1.0, 1e-12),
                    Catch::Matchers::ContainsSubstring("far-field vanishes"));
  CHECK_THROWS_AS(equilibrium_offset(-1.0, 1.0, 0.0, 1.0, 1.0), DomainError);
}

TEST_CASE("velocity of the uniform disk") {
  const auto g = PolarGrid::uniform(20, 64, 1.0);
  const auto df = disk(g, 1000000);
  const auto S = cauchy_field(df);
  const auto v = velocity_field(df, S);
  // Ring 9 is centred at rho = 0.475, sector 0 at theta = pi / 64.
  const std::size_t k = g.index(9, 0);
  REQUIRE(v.valid(k));
  CHECK(std::abs(v.v[k] + 1.0 / std::conj(g.center(9, 0))) <= 1e-3);
  CHECK(v.v[k].real() < 0.0);
  for (int i = 2; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_theta(); ++j) {
      const std::size_t kk = g.index(i, j);
      if (!v.valid(kk)) continue;
      const cplx polar = v.v[kk] * std::polar(1.0, -g.theta_center(j));
      CHECK(std::abs(polar.imag()) <= 0.05 * std::abs(polar.real()));
    }
}

TEST_CASE("velocity far-field limit and symmetry") {
  const auto g = PolarGrid::uniform(16, 32, 1.0);
  const auto df = lopsided(g);
  const auto S = cauchy_field(df);
  const auto v = velocity_field(df, S);
  int valid = 0;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_theta(); ++j) {
      const std::size_t k = g.index(i, j), m = g.index(i, g.mirror_sector(j));
      if (v.status[k] == CellStatus::s_floor || v.status[k] == CellStatus::u_floor) {
        CHECK(std::isnan(v.v[k].real()));
        continue;
      }
      CHECK(std::abs(v.v[k] - std::conj(v.v[m])) <= 1e-12 * std::abs(v.v[k]));
      if (!v.valid(k)) continue;
      ++valid;
      const cplx w = df.b_field[k] * df.u[k] * std::polar(1.0, -g.theta_center(j)) / S.values[k];
      const auto lc = detail::model_constants(df.c_field[k]);
      const double bound = std::abs(lc.g) * std::norm(w) +
                           std::abs(2.0 * lc.g * lc.g - lc.h) * std::norm(w) * std::norm(w);
      CHECK(std::abs(-v.v[k] * S.values[k] - 1.0) <= bound * (1.0 + 1e-9) + 1e-15);
    }
  CHECK(valid > 0);
}

TEST_CASE("2D mass audit and positivity") {
  const auto g = PolarGrid::uniform(16, 16, 1.0);
  auto st = make_pde_state(lopsided(g));
  for (int s = 0; s < 100; ++s) {
    const double before = st.df.total_mass();
    const double dt = 0.5 * max_stable_dt_2d(st);
    st = step_2d(st, dt);
    CHECK(std::abs(before - st.df.total_mass() - dt) <= 1e-8);
    for (double u : st.df.u) CHECK(u >= 0.0);
  }
  CHECK(std::abs(st.df.total_mass() - (1.0 - st.t)) <= 1e-6);
  CHECK(st.meta.steps == 100);
  CHECK(st.meta.sink_removed == Approx(st.t).margin(1e-12));
}

TEST_CASE("2D step keeps mirror symmetry") {
  const auto g = PolarGrid::uniform(16, 24, 1.0);
  auto st = make_pde_state(lopsided(g));
  for (int s = 0; s < 10; ++s) st = step_2d(st, max_stable_dt_2d(st));
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_theta(); ++j)
      CHECK(std::abs(st.df.u[g.index(i, j)] - st.df.u[g.index(i, g.mirror_sector(j))]) <= 1e-10);
}

TEST_CASE("2D step commutes with rotation by whole sectors") {
  const auto g = PolarGrid::uniform(12, 16, 1.0);
  const auto base = lopsided(g);
  auto rotated = base;
  const int shift = 3;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_theta(); ++j)
      rotated.u[g.index(i, (j + shift) % 16)] = base.u[g.index(i, j)];
  rotated.update_derived();
  const auto a = make_pde_state(base), b = make_pde_state(rotated);
  const double dt = 0.5 * std::min(max_stable_dt_2d(a), max_stable_dt_2d(b));
  const auto a1 = step_2d(a, dt), b1 = step_2d(b, dt);
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_theta(); ++j)
      CHECK(std::abs(b1.df.u[g.index(i, (j + shift) % 16)] - a1.df.u[g.index(i, j)]) <= 1e-8);
}

TEST_CASE("2D step moves the disk inward and rejects large steps") {
  const auto g = PolarGrid::uniform(16, 16, 1.0);
  const auto st = make_pde_state(disk(g));
  const double dt = max_stable_dt_2d(st);
  const auto next = step_2d(st, dt);
  CHECK(mean_rho(next.df) < mean_rho(st.df));
  try {
    step_2d(st, 4.0 * dt);
    FAIL("expected StepRejected");
  } catch (const StepRejected& e) {
    CHECK(e.suggested_dt() == Approx(dt));
  }
  CHECK_THROWS_AS(step_2d(st, -1.0), DomainError);
  CHECK_THROWS_AS(make_pde_state(disk(g), 0.5), DomainError);
}

TEST_CASE("frozen u leaves b unchanged") {
  const auto g = PolarGrid::uniform(12, 12, 1.0);
  const auto st = make_pde_state(lopsided(g));
  Step2DOptions opt;
  opt.freeze_u = true;
  auto next = st;
  for (int s = 0; s < 5; ++s) next = step_2d(next, 1e-3, opt);
  CHECK(next.df.u == st.df.u);
  for (std::size_t k = 0; k < st.b.size(); ++k)
    if (std::isfinite(st.b[k])) CHECK(std::abs(next.b[k] - st.b[k]) <= 1e-15 * st.b[k]);
}

TEST_CASE("b follows psi / u") {
  const auto g = PolarGrid::uniform(12, 16, 1.0);
  auto st = make_pde_state(lopsided(g));
  st = advance_2d(st, 0.05);
  const double sqrt_n = std::sqrt(1000.0);
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_theta(); ++j) {
      const std::size_t k = g.index(i, j);
      if (!st.df.valid[k]) continue;
      CHECK(st.b[k] == Approx(st.df.psi[i] / (sqrt_n * st.df.u[k])).epsilon(1e-9));
    }
}

TEST_CASE("2D agrees with the radial model for the disk") {
  const auto g = PolarGrid::uniform(48, 16, 1.0);
  auto st = make_pde_state(disk(g));
  auto rad = radial_from_density(st.df);
  for (double t : {0.1, 0.2}) {
    st = advance_2d(st, t);
    rad = advance_radial(rad, t);
    CHECK(l1_distance(st.df.psi, rad.psi, g.rho_edges()) <= 0.05);
  }
}

TEST_CASE("uniform sink option") {
  const auto g = PolarGrid::uniform(12, 12, 1.0);
  Step2DOptions opt;
  opt.sink = SinkMode::uniform;
  auto st = make_pde_state(lopsided(g));
  st = advance_2d(st, 0.1, opt);
  CHECK(st.df.total_mass() == Approx(0.9).margin(1e-10));
}

TEST_CASE("2D scheme is first order in dt") {
  const auto g = PolarGrid::uniform(12, 12, 1.0);
  const auto st0 = make_pde_state(lopsided(g));
  const double dt0 = 0.05 / std::ceil(0.05 / max_stable_dt_2d(st0)) ;
  auto run = [&](double dt) {
    auto st = st0;
    const int steps = static_cast<int>(std::lround(0.05 / dt));
    for (int s = 0; s < steps; ++s) st = step_2d(st, dt);
    return st.df.u;
  };
  // The smallest step must stay stable over the run; start well below the limit.
  const auto u1 = run(dt0 / 2), u2 = run(dt0 / 4), u3 = run(dt0 / 8);
  const double e1 = max_diff(u1, u2), e2 = max_diff(u2, u3);
  CHECK(e2 < e1);
  CHECK(e1 / e2 >= 1.5);
}

TEST_CASE("radial solver") {
  std::vector<double> edges;
  for (int i = 0; i <= 120; ++i) edges.push_back(i / 100.0);
  auto st = make_radial_state(edges, [](double r) { return r <= 1.0 ? 2.0 * r : 0.0; });
  CHECK(radial_mass(st) == Approx(1.0).margin(1e-12));

  // Uniform disk is steady in the interior up to the upwind error h / r^2.
  const double dt = max_stable_dt_radial(st);
  const auto next = step_radial(st, dt);
  for (int i = 30; i < 98; ++i) {
    const double r = 0.01 * i;
    CHECK(std::abs(next.psi[i] - st.psi[i]) <= 1.5 * dt * 0.01 / (r * r));
  }
  for (int i = 100; i < 120; ++i) CHECK(next.psi[i] == 0.0);
  CHECK(radial_mass(next) == Approx(1.0 - dt).margin(1e-12));
  CHECK_THROWS_AS(step_radial(st, 10.0 * dt), StepRejected);

  // Exact solution.
  st = advance_radial(st, 0.2);
  CHECK(radial_mass(st) == Approx(0.8).margin(1e-10));
  const auto exact = oracle::uniform_disk_radial_psi(edges, 0.2);
  CHECK(l1_distance(st.psi, exact, edges) <= 0.06);
}

TEST_CASE("radial solver converges to the exact solution") {
  std::vector<double> err;
  for (int n : {50, 200, 800}) {
    std::vector<double> edges;
    for (int i = 0; i <= n; ++i) edges.push_back(static_cast<double>(i) / n);
    auto st = make_radial_state(edges, [](double r) { return 2.0 * r; });
    st = advance_radial(st, 0.2);
    err.push_back(l1_distance(st.psi, oracle::uniform_disk_radial_psi(edges, 0.2), edges));
  }
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
  CHECK(err[2] <= 0.03);
}

TEST_CASE("radial regularization is logged") {
  const std::vector<double> edges{0.0, 0.25, 0.5, 0.75, 1.0};
  RadialState st;
  st.r_edges = edges;
  st.psi = {0.0, 0.0, 2.0, 2.0};
  const double dt = max_stable_dt_radial(st);
  const auto next = step_radial(st, dt);
  CHECK(next.regularized > 0);
  CHECK(radial_mass(next) == Approx(radial_mass(st)).margin(1e-12));
}

TEST_CASE("1D solver: semicircle") {
  std::vector<double> edges;
  for (int i = 0; i <= 120; ++i) edges.push_back(-1.2 + 2.4 * i / 120.0);
  auto st = Line1DState{edges, oracle::semicircle_cells(edges, 0.0), 0.0, 0};
  CHECK(line_mass(st) == Approx(1.0).margin(1e-12));
  st = advance_1d(st, 0.2);
  CHECK(line_mass(st) == Approx(0.8).margin(1e-10));
  const auto exact = oracle::semicircle_cells(edges, 0.2);
  CHECK(l1_distance(st.u, exact, edges) <= 0.05);
  for (std::size_t k = 0; k < st.u.size(); ++k) {
    CHECK(st.u[k] >= 0.0);
    CHECK(std::abs(st.u[k] - st.u[st.u.size() - 1 - k]) <= 1e-12);
  }
  // The support shrinks.
  CHECK(st.u.front() == 0.0);
  CHECK(st.u.back() == 0.0);
}

TEST_CASE("1D solver: uniform segment and errors") {
  std::vector<double> edges;
  for (int i = 0; i <= 60; ++i) edges.push_back(-1.5 + 3.0 * i / 60.0);
  auto st = make_line_state(edges, [](double x) { return std::abs(x) < 1.0 ? 0.5 : 0.0; });
  const double dt = max_stable_dt_1d(st);
  CHECK_THROWS_AS(step_1d(st, 10.0 * dt), StepRejected);
  const auto next = step_1d(st, dt);
  CHECK(line_mass(next) == Approx(line_mass(st) - dt).margin(1e-12));
  // Exterior cells away from the support keep zero density.
  CHECK(next.u.front() == 0.0);
}

TEST_CASE("comparison harness") {
  const auto rs = normalize(sample_roots({EnsembleKind::uniform_disk, 400, 5})).roots;
  const auto g = PolarGrid::uniform(12, 16, 1.0);
  DensityOptions opt;
  opt.n_ref = 400;
  const double bw = default_bandwidth(rs);
  auto st = make_pde_state(estimate_density(rs, g, bw, opt));
  const auto self = compare_model_empirical({rs}, {st}, Metric::L1, 0.05, {bw});
  CHECK(self.pass);
  CHECK(self.max_distance <= 0.02);
  const auto w1 = compare_model_empirical({rs}, {st}, Metric::wasserstein1_radial, 0.05, {bw});
  CHECK(w1.max_distance <= 1e-3);

  const auto fail = compare_model_empirical({rs}, {st}, Metric::L1, 0.0, {bw});
  CHECK(!fail.pass);
  CHECK(to_json(fail)["pass"] == false);

  auto late = st;
  late.t = 0.3;
  CHECK_THROWS_WITH(compare_model_empirical({rs}, {late}, Metric::L1, 0.1),
                    Catch::Matchers::ContainsSubstring("frames 0"));
}

TEST_CASE("axis angle statistics") {
  const auto rs = RootSet::make({cplx(1.0, 0.0), cplx(0.0, 1.0), cplx(-1.0, 0.0)});
  CHECK(mean_axis_angle(rs) == Approx(std::numbers::pi / 6.0));
  const auto g = PolarGrid::uniform(8, 32, 1.0);
  const auto df = density_from_function(g, [](double, double) { return 1.0; }, 10, 1.0);
  CHECK(mean_axis_angle(df) == Approx(std::numbers::pi / 4.0).margin(1e-3));
}
