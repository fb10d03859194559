#include <cmath>
#include <numbers>

#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "rootflow/ensembles.hpp"
#include "rootflow/transforms.hpp"

using namespace rootflow;
using Catch::Approx;

namespace {

DensityField uniform_disk(const PolarGrid& g, double R = 1.0) {
  return density_from_function(
      g, [R](double rho, double) { return rho <= R ? 1.0 : 0.0; }, 1000, 1.0);
}

}  // namespace

TEST_CASE("empirical Cauchy transform") {
  const auto rs = RootSet::make({1.0, -1.0});
  CHECK(std::abs(cauchy_empirical(rs, 2.0) - 2.0 / 3.0) <= 1e-15);
  try {
    cauchy_empirical(rs, cplx(1.0, 1e-12));
    FAIL("expected PoleError");
  } catch (const PoleError& e) {
    CHECK(e.pole() == cplx(1.0));
  }

  const auto a = sample_roots({EnsembleKind::uniform_disk, 30, 1});
  const auto b = sample_roots({EnsembleKind::uniform_disk, 50, 2});
  std::vector<cplx> both = a.roots;
  both.insert(both.end(), b.roots.begin(), b.roots.end());
  const cplx z(0.3, 1.7);
  const cplx lhs = cauchy_empirical(RootSet::make(both), z);
  const cplx rhs = (30.0 * cauchy_empirical(a, z) + 50.0 * cauchy_empirical(b, z)) / 80.0;
  CHECK(std::abs(lhs - rhs) <= 1e-15);

  for (double R : {10.0, 100.0}) {
    const cplx zz = std::polar(R, 0.4);
    CHECK(std::abs(zz * cauchy_empirical(a, zz) - 1.0) <= 2.0 / R);
  }

  const auto sym = sample_roots({EnsembleKind::conjugate_pairs, 40, 3, 0.5});
  const cplx w(0.2, 0.35);
  CHECK(std::abs(cauchy_empirical(sym, std::conj(w)) - std::conj(cauchy_empirical(sym, w))) <= 1e-13);
}

TEST_CASE("empirical transform of a uniform disk sample") {
  // S averaged over 10 seeds. Inside the support single samples fluctuate
  // through the nearest roots.
  cplx s2 = 0.0, s05 = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto rs = sample_roots({EnsembleKind::uniform_disk, 2000, seed});
    s2 += cauchy_empirical(rs, 2.0) / 10.0;
    s05 += cauchy_empirical(rs, 0.5) / 10.0;
  }
  CHECK(std::abs(s2 - 0.5) <= 2e-2);
  CHECK(std::abs(s05 - 0.5) <= 5e-2);
}

TEST_CASE("density transform: uniform disk and annulus") {
  const auto g = PolarGrid::uniform(16, 16, 1.0);
  const auto df = uniform_disk(g);
  CHECK(std::abs(cauchy_density(df, 2.0) - 0.5) <= 1e-3);
  CHECK(std::abs(cauchy_density(df, 0.0)) <= 1e-12);
  const cplx z(0.31, 0.22);
  CHECK(std::abs(cauchy_density(df, z) - oracle::uniform_disk_S(z)) <= 1e-10);
  // A point on a ring edge is nudged off it.
  CHECK(std::abs(cauchy_density(df, 0.5) - 0.5) <= 1e-6);

  const auto g2 = PolarGrid::uniform(20, 16, 1.0);
  const auto ann = density_from_function(
      g2, [](double rho, double) { return rho >= 0.5 ? 1.0 : 0.0; }, 1000, 1.0);
  CHECK(std::abs(cauchy_density(ann, 0.25)) <= 1e-12);
  const auto g3 = PolarGrid::uniform(40, 32, 1.0);
  const auto ann2 = density_from_function(
      g3, [](double rho, double) { return rho >= 0.5 ? 1.0 : 0.0; }, 1000, 1.0);
  CHECK(std::abs(cauchy_density(ann2, cplx(0.1, 0.2))) <= 1e-12);

  const auto field = cauchy_density_field(df);
  for (int j = 0; j < g.n_theta(); ++j) {
    const cplx c = g.center(15, j);
    CHECK(std::abs(field.at(15, j) - std::conj(c)) <= 1e-10);
  }
}

TEST_CASE("cell integral refuses points on an edge") {
  CHECK_THROWS_AS(cell_cauchy_integral(cplx(0.5, 0.0), 0.5, 1.0, 0.0, 1.0),
                  RefinementNeeded);
}

TEST_CASE("modal transform agrees with the direct transform") {
  const auto g = PolarGrid::uniform(32, 32, 1.0);
  const auto df = density_from_function(
      g,
      [](double rho, double th) {
        return rho <= 1.0 ? (1.0 + 0.5 * std::cos(th) + 0.3 * std::sin(2.0 * th)) * (1.0 - rho * rho)
                          : 0.0;
      },
      1000, 1.0);
  const auto modal = cauchy_field(df);
  const auto direct = cauchy_density_field(df);
  double worst = 0.0;
  for (std::size_t k = 0; k < modal.values.size(); ++k)
    worst = std::max(worst, std::abs(modal.values[k] - direct.values[k]));
  CHECK(worst <= 2e-3);
  const ModalCauchy mc(g);
  CHECK(std::abs(mc.at_origin(df.u) - cauchy_density(df, 0.0)) <= 1e-10);
  // Outside the support S = 1/z for rotation invariant data.
  const auto ud = uniform_disk(PolarGrid::uniform(16, 16, 1.0));
  const ModalCauchy m2(ud.grid);
  const std::vector<double> radii{1.5}, angles{0.3};
  CHECK(std::abs(m2.evaluate(ud.u, radii, angles)[0] - 1.0 / std::polar(1.5, 0.3)) <= 1e-12);
}

TEST_CASE("density transform matches a large sample") {
  const int n = 4000;
  const auto rs = sample_roots({EnsembleKind::uniform_disk, n, 21});
  const auto g = PolarGrid::uniform(32, 32, 1.0);
  const auto df = uniform_disk(g);
  double worst = 0.0;
  for (int k = 0; k < 16; ++k) {
    const cplx z = std::polar(1.3, 2.0 * std::numbers::pi * k / 16.0 + 0.1);
    worst = std::max(worst, std::abs(cauchy_density(df, z) - cauchy_empirical(rs, z)));
  }
  CHECK(worst <= 5.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("Hilbert transform") {
  std::vector<double> xs, semi;
  for (int k = 0; k <= 400; ++k) {
    const double x = -1.0 + k / 200.0;
    xs.push_back(x);
    semi.push_back(oracle::semicircle(x, 0.0));
  }
  CHECK(std::abs(hilbert_1d(xs, semi, 0.0)) <= 1e-12);
  CHECK(hilbert_1d(xs, semi, 0.5) == Approx(1.0 / std::numbers::pi).margin(5e-5));

  // Uniform 1/2 on [-1, 1] with explicit jumps at both ends.
  const std::vector<double> ux{-1.5, -1.0, -1.0, 1.0, 1.0, 2.5};
  const std::vector<double> uu{0.0, 0.0, 0.5, 0.5, 0.0, 0.0};
  CHECK(hilbert_1d(ux, uu, 2.0) == Approx(std::log(3.0) / (2.0 * std::numbers::pi)).margin(1e-12));
  CHECK(hilbert_1d(ux, uu, 0.3) == Approx(oracle::uniform_segment_hilbert(0.3)).margin(1e-12));
  CHECK_THROWS_AS(hilbert_1d(ux, uu, 3.0), DomainError);

  const std::vector<double> edges{-1.0, -0.5, 0.0, 0.5, 1.0};
  const std::vector<double> cells{0.5, 0.5, 0.5, 0.5};
  CHECK(hilbert_cells(edges, cells, 0.25) == Approx(oracle::uniform_segment_hilbert(0.25)).margin(1e-12));
  CHECK_THROWS_AS(hilbert_cells(edges, cells, 0.5), RefinementNeeded);
}
