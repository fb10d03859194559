#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rootflow/rootflow.hpp"

namespace {

rootflow::ExperimentSpec load_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw rootflow::DomainError("cannot open spec " + path);
  return rootflow::experiment_from_json(nlohmann::json::parse(is));
}

void report(const rootflow::RunResult& r) {
  std::cout << r.directory.string() << "\n";
  for (const auto& f : r.files) std::cout << "  " << f << "\n";
}

void lattice_table(double cmin, double cmax, int points, int L, bool log_spacing,
                   std::ostream& os) {
  if (!(cmin > 0.0) || !(cmax >= cmin) || points < 1)
    throw rootflow::DomainError("lattice-table: need 0 < cmin <= cmax and points >= 1");
  os.precision(17);
  os << "c,g,h,g1,h1,tail_bound\n";
  for (int k = 0; k < points; ++k) {
    const double s = points == 1 ? 0.0 : static_cast<double>(k) / (points - 1);
    const double c = log_spacing ? cmin * std::pow(cmax / cmin, s) : cmin + (cmax - cmin) * s;
    const auto lc = rootflow::lattice_constants(c, L);
    os << c << ',' << lc.g << ',' << lc.h << ',' << lc.g1 << ',' << lc.h1 << ',' << lc.tail_bound
       << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Root flow under iterated differentiation and its lattice model"};
  app.require_subcommand(1);

  std::string spec_path;
  auto* run = app.add_subcommand("run", "Run the experiment described by a spec JSON");
  run->add_option("spec", spec_path, "Experiment spec")->required()->check(CLI::ExistingFile);

  auto* validate = app.add_subcommand("validate", "Run the model-vs-empirical validation of a spec");
  validate->add_option("spec", spec_path, "Experiment spec")->required()->check(CLI::ExistingFile);

  double cmin = 0.2, cmax = 5.0;
  int points = 25, truncation = rootflow::default_truncation;
  bool log_spacing = false;
  std::string out_path;
  auto* table = app.add_subcommand("lattice-table", "CSV of c,g,h,g1,h1,tail_bound");
  table->add_option("--cmin", cmin, "Smallest c")->capture_default_str();
  table->add_option("--cmax", cmax, "Largest c")->capture_default_str();
  table->add_option("--points", points, "Number of c values")->capture_default_str();
  table->add_option("--truncation", truncation, "Index window L")->capture_default_str();
  table->add_flag("--log", log_spacing, "Geometric spacing in c");
  table->add_option("-o,--out", out_path, "Output file (default stdout)");

  std::string roots_path, ensemble = "uniform-disk", source = "empirical";
  int degree = 200, n_rho = 32, n_theta = 32;
  std::uint64_t seed = 0;
  double rho_max = 1.0, real_fraction = 0.0;
  auto* cmap = app.add_subcommand("cauchy-map", "CSV of rho,theta,re_S,im_S on a polar grid");
  cmap->add_option("--roots", roots_path, "Root CSV (re,im,degree,time)")->check(CLI::ExistingFile);
  cmap->add_option("--ensemble", ensemble, "Ensemble when no root file is given")
      ->capture_default_str();
  cmap->add_option("--degree", degree, "Ensemble degree")->capture_default_str();
  cmap->add_option("--seed", seed, "Ensemble seed")->capture_default_str();
  cmap->add_option("--real-fraction", real_fraction, "Real roots share (conjugate-pairs)");
  cmap->add_option("--source", source, "empirical or density")
      ->check(CLI::IsMember({"empirical", "density"}))
      ->capture_default_str();
  cmap->add_option("--n-rho", n_rho, "Rings")->capture_default_str();
  cmap->add_option("--n-theta", n_theta, "Sectors")->capture_default_str();
  cmap->add_option("--rho-max", rho_max, "Outer radius")->capture_default_str();
  cmap->add_option("-o,--out", out_path, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path);
      if (!file) throw rootflow::DomainError("cannot write " + out_path);
    }
    std::ostream& os = out_path.empty() ? std::cout : file;

    if (*run) {
      const auto r = rootflow::run_experiment(load_spec(spec_path));
      report(r);
      return r.pass ? 0 : 1;
    }
    if (*validate) {
      auto spec = load_spec(spec_path);
      spec.kind = "validation";
      const auto r = rootflow::run_validation(spec);
      report(r);
      std::cout << (r.pass ? "PASS" : "FAIL") << "\n";
      return r.pass ? 0 : 1;
    }
    if (*table) {
      lattice_table(cmin, cmax, points, truncation, log_spacing, os);
      return 0;
    }
    if (*cmap) {
      rootflow::RootSet rs;
      if (!roots_path.empty()) {
        std::ifstream is(roots_path);
        rs = rootflow::read_csv(is);
      } else {
        rootflow::EnsembleConfig cfg{rootflow::ensemble_kind_from_string(ensemble), degree, seed,
                                     real_fraction};
        cfg.validate();
        rs = rootflow::initial_frame(cfg).roots;
      }
      const auto grid = rootflow::PolarGrid::uniform(n_rho, n_theta, rho_max);
      const auto S = source == "empirical"
                         ? rootflow::cauchy_empirical_field(rs, grid)
                         : rootflow::cauchy_field(rootflow::estimate_density(rs, grid));
      os.precision(17);
      os << "rho,theta,re_S,im_S\n";
      for (int i = 0; i < grid.n_rho(); ++i)
        for (int j = 0; j < grid.n_theta(); ++j) {
          const auto s = S.values[grid.index(i, j)];
          os << grid.rho_center(i) << ',' << grid.theta_center(j) << ',' << s.real() << ','
             << s.imag() << '\n';
        }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "rootflow: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
