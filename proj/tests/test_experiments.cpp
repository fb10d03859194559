#include <filesystem>
#include <fstream>
#include <sstream>

#include <catch_amalgamated.hpp>

#include "rootflow/experiments.hpp"

using namespace rootflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rootflow_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

ExperimentSpec snapshots_spec(const std::string& root) {
  ExperimentSpec s;
  s.name = "snap";
  s.kind = "snapshots";
  s.ensemble = {EnsembleKind::conjugate_pairs, 150, 11, 1.0 / 3.0};
  s.flow = {35, 35, 35, 35};
  s.output_root = root;
  return s;
}

}  // namespace

TEST_CASE("spec JSON round trip and hash") {
  auto s = snapshots_spec("out");
  s.pde.enabled = true;
  s.pde.model = "radial";
  s.seeds = {1, 2, 3};
  const auto back = experiment_from_json(to_json(s));
  CHECK(to_json(back) == to_json(s));
  CHECK(spec_hash(back) == spec_hash(s));
  CHECK(spec_hash(s).size() == 16);
  auto t = s;
  t.ensemble.seed = 12;
  CHECK(spec_hash(t) != spec_hash(s));
  CHECK(frame_colors()[0] == "black");
  CHECK(frame_color(5) == "black");
}

TEST_CASE("spec validation") {
  auto s = snapshots_spec("out");
  CHECK_NOTHROW(validate(s));
  s.flow = {100, 60};
  CHECK_THROWS_WITH(validate(s), Catch::Matchers::ContainsSubstring("needs degree > 160"));
  s = snapshots_spec("out");
  s.kind = "figure1";
  s.ensemble.kind = EnsembleKind::uniform_disk;
  CHECK_THROWS_AS(validate(s), DomainError);
  s = snapshots_spec("out");
  s.outputs = {"png"};
  CHECK_THROWS_AS(validate(s), DomainError);
  s = snapshots_spec("out");
  s.pde.enabled = true;
  s.pde.model = "3d";
  CHECK_THROWS_AS(validate(s), DomainError);
}

TEST_CASE("figure1: all-real polynomial and determinism") {
  const auto root = scratch("fig1");
  ExperimentSpec s;
  s.name = "fig1";
  s.kind = "figure1";
  s.ensemble = {EnsembleKind::conjugate_pairs, 60, 4, 1.0};
  s.output_root = root.string();
  const auto r = run_experiment(s);
  const auto csv = slurp(r.directory / "figure1.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2 + 60 * 61 / 2);
  CHECK(csv.rfind("# rootflow 0.1.0 spec " + spec_hash(s), 0) == 0);
  CHECK(slurp(r.directory / "manifest.json").find(spec_hash(s)) != std::string::npos);
  fs::remove_all(r.directory);
  const auto again = run_experiment(s);
  CHECK(slurp(again.directory / "figure1.csv") == csv);
  fs::remove_all(root);
}

TEST_CASE("figure1: complex pairs fall onto the axis") {
  const auto root = scratch("fig1c");
  ExperimentSpec s;
  s.name = "fig1c";
  s.kind = "figure1";
  s.ensemble = {EnsembleKind::conjugate_pairs, 60, 4, 1.0 / 3.0};
  s.output_root = root.string();
  const auto r = run_experiment(s);
  const auto& counts = r.manifest["real_root_counts"];
  const int r0 = counts[0]["real_roots"];
  bool extra = false;
  for (std::size_t k = 0; k < counts.size(); ++k)
    extra = extra || counts[k]["real_roots"].get<int>() > std::max(r0 - static_cast<int>(k), 0);
  CHECK(extra);
  fs::remove_all(root);
}

TEST_CASE("snapshots: schedule, colours and statistics") {
  const auto root = scratch("snap");
  const auto r = run_experiment(snapshots_spec(root.string()));
  const auto& frames = r.manifest["frames"];
  REQUIRE(frames.size() == 5);
  const int sizes[] = {150, 115, 80, 45, 10};
  for (int k = 0; k < 5; ++k) CHECK(frames[k]["degree"] == sizes[k]);
  CHECK(frames[4]["near_real_fraction"].get<double>() > frames[0]["near_real_fraction"].get<double>());
  const auto svg = slurp(r.directory / "snapshots.svg");
  for (int k = 0; k < 5; ++k) CHECK(svg.find(frame_color(k)) != std::string::npos);
  CHECK(fs::exists(r.directory / "frame_004.csv"));

  ExperimentSpec disk = snapshots_spec(root.string());
  disk.name = "disk";
  disk.ensemble = {EnsembleKind::uniform_disk, 150, 3};
  const auto d = run_experiment(disk);
  for (int k = 1; k < 5; ++k)
    CHECK(d.manifest["frames"][k]["mean_radius"].get<double>() <
          d.manifest["frames"][k - 1]["mean_radius"].get<double>());
  fs::remove_all(root);
}

TEST_CASE("snapshots with the 2D model") {
  const auto root = scratch("snap2d");
  auto s = snapshots_spec(root.string());
  s.ensemble.degree = 120;
  s.flow = {12, 12};
  s.grid = PolarGrid::uniform(16, 16, 1.2);
  s.pde.enabled = true;
  const auto r = run_experiment(s);
  const auto& mf = r.manifest["model_frames"];
  REQUIRE(mf.size() == 3);
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(std::abs(mf[k]["mass"].get<double>() - (1.0 - mf[k]["time"].get<double>())) <= 1e-6);
  CHECK(slurp(r.directory / "model_000.csv").find("rho,theta,u,re_v,im_v,status") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("kac: unit circle clustering and inward drift") {
  const auto root = scratch("kac");
  ExperimentSpec s;
  s.name = "kac";
  s.kind = "kac";
  s.ensemble = {EnsembleKind::kac, 200, 8};
  s.flow = {40, 40, 40};
  s.grid = PolarGrid::uniform(30, 8, 1.5);
  s.output_root = root.string();
  // Before normalization the roots sit near the unit circle.
  const auto raw = find_roots(sample_kac(s.ensemble));
  int near = 0;
  for (const auto& z : raw.roots) near += std::abs(std::abs(z) - 1.0) <= 0.1;
  CHECK(near > 100);
  const auto r = run_experiment(s);
  for (int k = 1; k < 4; ++k)
    CHECK(r.manifest["frames"][k]["mean_radius"].get<double>() <
          r.manifest["frames"][k - 1]["mean_radius"].get<double>());
  CHECK(r.manifest["radial_comparison"].size() == 4);
  CHECK(fs::exists(r.directory / "radial_003.csv"));
  fs::remove_all(root);
}

TEST_CASE("validation: pass, deliberate fail and stage errors") {
  const auto root = scratch("val");
  ExperimentSpec s;
  s.name = "self";
  s.kind = "validation";
  s.ensemble = {EnsembleKind::uniform_disk, 400, 2};
  s.flow = {0};
  s.grid = PolarGrid::uniform(20, 8, 1.2);
  s.pde.enabled = true;
  s.pde.model = "radial";
  s.output_root = root.string();
  const auto ok = run_experiment(s);
  CHECK(ok.pass);
  CHECK(ok.manifest["report"]["max_distance"].get<double>() == 0.0);
  CHECK(slurp(ok.directory / "summary.txt").find("PASS") != std::string::npos);

  s.name = "zero";
  s.flow = {40};
  s.pde.budget = 0.0;
  const auto bad = run_experiment(s);
  CHECK(!bad.pass);
  CHECK(slurp(bad.directory / "summary.txt").find("FAIL") != std::string::npos);

  s.name = "line";
  s.ensemble = {EnsembleKind::conjugate_pairs, 100, 2, 1.0};
  s.pde.model = "1d";
  s.pde.budget = 0.5;
  s.seeds = {1, 2, 3};
  CHECK(run_experiment(s).pass);

  s.name = "plane";
  s.ensemble = {EnsembleKind::uniform_disk, 400, 2};
  s.pde.model = "2d";
  s.seeds = {};
  s.flow = {0};
  s.pde.budget = 0.05;
  CHECK(run_experiment(s).pass);

  s.seeds = {1, 2};
  CHECK_THROWS_WITH(run_experiment(s), Catch::Matchers::StartsWith("stage compare"));
  fs::remove_all(root);
}
