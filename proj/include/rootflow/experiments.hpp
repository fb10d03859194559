#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rootflow/density.hpp"
#include "rootflow/dynamics.hpp"
#include "rootflow/ensembles.hpp"
#include "rootflow/error.hpp"
#include "rootflow/grid.hpp"
#include "rootflow/roots.hpp"

namespace rootflow {

inline constexpr const char* version_string = "0.1.0";

/// PDE part of an experiment.
struct PdeSpec {
  bool enabled = false;
  /// "2d", "radial" or "1d".
  std::string model = "2d";
  /// "empirical" (from frame 0) or "analytic" (uniform disk / uniform segment).
  std::string initial = "empirical";
  double cfl = 0.4;
  /// Metric of the validation report: "L1" or "wasserstein-1-radial".
  std::string metric = "L1";
  double budget = 0.15;
  /// Real-line grid of the 1D model: cells on [-x_max, x_max].
  int cells = 80;
  double x_max = 1.2;
  /// Kernel bandwidth for empirical densities; 0 uses the default.
  double bandwidth = 0.0;
};

struct ExperimentSpec {
  std::string name = "experiment";
  /// "figure1", "snapshots", "kac" or "validation".
  std::string kind = "snapshots";
  EnsembleConfig ensemble;
  /// Derivatives taken between consecutive frames.
  std::vector<int> flow;
  PolarGrid grid = PolarGrid::uniform(32, 32, 1.0);
  PdeSpec pde;
  std::vector<std::string> outputs{"csv", "json", "svg"};
  std::vector<std::uint64_t> seeds;
  bool normalize = true;
  std::string output_root = "runs";

  bool wants(const std::string& kind_) const {
    return std::find(outputs.begin(), outputs.end(), kind_) != outputs.end();
  }
  std::vector<std::uint64_t> seed_list() const {
    return seeds.empty() ? std::vector<std::uint64_t>{ensemble.seed} : seeds;
  }
  int total_steps() const { return std::accumulate(flow.begin(), flow.end(), 0); }
};

inline nlohmann::json to_json(const ExperimentSpec& s) {
  return {{"name", s.name},
          {"kind", s.kind},
          {"ensemble",
           {{"kind", to_string(s.ensemble.kind)},
            {"degree", s.ensemble.degree},
            {"seed", s.ensemble.seed},
            {"real_fraction", s.ensemble.real_fraction}}},
          {"flow", s.flow},
          {"grid", to_json(s.grid)},
          {"pde",
           {{"enabled", s.pde.enabled},
            {"model", s.pde.model},
            {"initial", s.pde.initial},
            {"cfl", s.pde.cfl},
            {"metric", s.pde.metric},
            {"budget", s.pde.budget},
            {"cells", s.pde.cells},
            {"x_max", s.pde.x_max},
            {"bandwidth", s.pde.bandwidth}}},
          {"outputs", s.outputs},
          {"seeds", s.seeds},
          {"normalize", s.normalize},
          {"output_root", s.output_root}};
}

/// Parses and validates a spec. Missing fields take their defaults.
inline ExperimentSpec experiment_from_json(const nlohmann::json& j) {
  ExperimentSpec s;
  s.name = j.value("name", s.name);
  s.kind = j.value("kind", s.kind);
  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    s.ensemble.kind = ensemble_kind_from_string(e.value("kind", std::string("uniform-disk")));
    s.ensemble.degree = e.value("degree", s.ensemble.degree);
    s.ensemble.seed = e.value("seed", s.ensemble.seed);
    s.ensemble.real_fraction = e.value("real_fraction", s.ensemble.real_fraction);
  }
  s.flow = j.value("flow", s.flow);
  if (j.contains("grid")) s.grid = polar_grid_from_json(j.at("grid"));
  if (j.contains("pde")) {
    const auto& p = j.at("pde");
    s.pde.enabled = p.value("enabled", true);
    s.pde.model = p.value("model", s.pde.model);
    s.pde.initial = p.value("initial", s.pde.initial);
    s.pde.cfl = p.value("cfl", s.pde.cfl);
    s.pde.metric = p.value("metric", s.pde.metric);
    s.pde.budget = p.value("budget", s.pde.budget);
    s.pde.cells = p.value("cells", s.pde.cells);
    s.pde.x_max = p.value("x_max", s.pde.x_max);
    s.pde.bandwidth = p.value("bandwidth", s.pde.bandwidth);
  }
  s.outputs = j.value("outputs", s.outputs);
  s.seeds = j.value("seeds", s.seeds);
  s.normalize = j.value("normalize", s.normalize);
  s.output_root = j.value("output_root", s.output_root);
  return s;
}

inline void validate(const ExperimentSpec& s) {
  s.ensemble.validate();
  static const std::vector<std::string> kinds{"figure1", "snapshots", "kac", "validation"};
  if (std::find(kinds.begin(), kinds.end(), s.kind) == kinds.end())
    throw DomainError("experiment kind must be figure1, snapshots, kac or validation");
  if (s.kind == "figure1" && s.ensemble.kind == EnsembleKind::uniform_disk)
    throw DomainError("figure1 needs a real ensemble (conjugate-pairs or kac)");
  if (s.kind == "kac" && s.ensemble.kind != EnsembleKind::kac)
    throw DomainError("kac experiment needs the kac ensemble");
  if (s.kind != "figure1" && s.flow.empty()) throw DomainError("experiment flow schedule is empty");
  for (int k : s.flow)
    if (k < 0) throw DomainError("flow schedule entries must be non-negative");
  if (s.total_steps() >= s.ensemble.degree)
    throw DomainError("flow schedule of " + std::to_string(s.total_steps()) +
                      " derivatives needs degree > " + std::to_string(s.total_steps()));
  if (s.pde.enabled) {
    if (s.pde.model != "2d" && s.pde.model != "radial" && s.pde.model != "1d")
      throw DomainError("pde.model must be 2d, radial or 1d");
    if (s.pde.initial != "empirical" && s.pde.initial != "analytic")
      throw DomainError("pde.initial must be empirical or analytic");
    if (s.pde.metric != "L1" && s.pde.metric != "wasserstein-1-radial")
      throw DomainError("pde.metric must be L1 or wasserstein-1-radial");
    if (!(s.pde.budget >= 0.0)) throw DomainError("pde.budget must be non-negative");
    if (!(s.pde.cfl > 0.0 && s.pde.cfl <= 1.0)) throw DomainError("pde.cfl must lie in (0, 1]");
    if (s.pde.cells < 2 || !(s.pde.x_max > 0.0)) throw DomainError("pde line grid is empty");
    const double t_end = static_cast<double>(s.total_steps()) / s.ensemble.degree;
    if (t_end >= 1.0) throw DomainError("pde t_end must be below 1");
  }
  for (const auto& o : s.outputs)
    if (o != "csv" && o != "json" && o != "svg")
      throw DomainError("outputs may contain csv, json and svg only");
}

/// FNV-1a 64 of the canonical spec JSON, as 16 hex digits.
inline std::string spec_hash(const ExperimentSpec& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(s).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// Minimal SVG

/// Frame colours in order, cycling.
inline const std::vector<std::string>& frame_colors() {
  static const std::vector<std::string> colors{"black", "red", "blue", "pink", "green"};
  return colors;
}

inline const std::string& frame_color(std::size_t k) { return frame_colors()[k % frame_colors().size()]; }

class Svg {
 public:
  Svg(double x0, double x1, double y0, double y1, int width = 640, int height = 640)
      : x0_(x0), x1_(x1), y0_(y0), y1_(y1), w_(width), h_(height) {}

  void point(double x, double y, const std::string& color, double r = 2.0) {
    body_ << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"" << r << "\" fill=\""
          << color << "\"/>\n";
  }
  void square(double x, double y, const std::string& color, double side = 4.0) {
    body_ << "<rect x=\"" << px(x) - side / 2 << "\" y=\"" << py(y) - side / 2 << "\" width=\"" << side
          << "\" height=\"" << side << "\" fill=\"" << color << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color) {
    body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << px(x) << ',' << py(y) << ' ';
    body_ << "\"/>\n";
  }
  void text(double x, double y, const std::string& s) {
    body_ << "<text x=\"" << px(x) << "\" y=\"" << py(y) << "\" font-size=\"12\">" << s << "</text>\n";
  }
  void comment(const std::string& s) { body_ << "<!-- " << s << " -->\n"; }

  std::string str() const {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
       << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << body_.str() << "</svg>\n";
    return os.str();
  }

 private:
  double px(double x) const { return (x - x0_) / (x1_ - x0_) * w_; }
  double py(double y) const { return (y1_ - y) / (y1_ - y0_) * h_; }

  double x0_, x1_, y0_, y1_;
  int w_, h_;
  std::ostringstream body_;
};

// ---------------------------------------------------------------------------
// Runs

struct RunResult {
  std::filesystem::path directory;
  std::vector<std::string> files;
  nlohmann::json manifest;
  bool pass = true;
};

namespace detail {

class RunWriter {
 public:
  RunWriter(const ExperimentSpec& spec) : spec_(spec), hash_(spec_hash(spec)) {
    dir_ = std::filesystem::path(spec.output_root) / (spec.name + "-" + hash_);
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
      throw DomainError("output directory not writable: " + dir_.string());
  }

  const std::string& hash() const { return hash_; }
  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

  std::string provenance() const {
    return std::string("rootflow ") + version_string + " spec " + hash_;
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw DomainError("cannot write " + (dir_ / name).string());
    os << content;
    files_.push_back(name);
  }
  // CSV with a leading provenance comment.
  void csv(const std::string& name, const std::string& body) {
    if (spec_.wants("csv")) write(name, "# " + provenance() + "\n" + body);
  }
  void json(const std::string& name, nlohmann::json j) {
    if (!spec_.wants("json")) return;
    j["spec_hash"] = hash_;
    j["version"] = version_string;
    write(name, j.dump(2) + "\n");
  }
  void svg(const std::string& name, Svg& s) {
    if (!spec_.wants("svg")) return;
    s.comment(provenance());
    write(name, s.str());
  }

 private:
  const ExperimentSpec& spec_;
  std::string hash_;
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

inline std::string stage_error(const std::string& stage, const std::exception& e) {
  return "stage " + stage + ": " + e.what();
}

// Initial working-frame roots of one seed.
inline RootSet initial_roots(const ExperimentSpec& spec, std::uint64_t seed) {
  EnsembleConfig cfg = spec.ensemble;
  cfg.seed = seed;
  if (cfg.kind == EnsembleKind::kac) return initial_frame(cfg).roots;
  RootSet rs = sample_roots(cfg);
  return spec.normalize ? normalize(rs).roots : rs;
}

inline std::vector<RootSet> run_flow(const ExperimentSpec& spec, std::uint64_t seed) {
  RootSet rs;
  try {
    rs = initial_roots(spec, seed);
  } catch (const std::exception& e) {
    throw Error(stage_error("ensemble", e));
  }
  try {
    return iterate_flow(rs, std::span<const int>(spec.flow));
  } catch (const std::exception& e) {
    throw Error(stage_error("flow", e));
  }
}

inline std::string roots_csv(const RootSet& rs) {
  std::ostringstream os;
  write_csv(os, rs);
  return os.str();
}

inline Svg snapshot_svg(const std::vector<RootSet>& frames) {
  Svg svg(-1.1, 1.1, -1.1, 1.1);
  for (std::size_t k = 0; k < frames.size(); ++k)
    for (const auto& r : frames[k].roots) {
      if (k == 0)
        svg.square(r.real(), r.imag(), frame_color(k));
      else
        svg.point(r.real(), r.imag(), frame_color(k));
    }
  return svg;
}

inline double mean_radius(const RootSet& rs) {
  double s = 0.0;
  for (const auto& r : rs.roots) s += std::abs(r);
  return s / static_cast<double>(rs.roots.size());
}

// Fraction of roots within angle 0.1 of the real axis.
inline double near_real_fraction(const RootSet& rs) {
  int k = 0;
  for (const auto& r : rs.roots) {
    const double a = std::abs(std::arg(r));
    if (std::min(a, std::numbers::pi - a) <= 0.1) ++k;
  }
  return static_cast<double>(k) / static_cast<double>(rs.roots.size());
}

inline nlohmann::json frame_stats(const std::vector<RootSet>& frames) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : frames)
    out.push_back({{"degree", f.degree},
                   {"time", f.time},
                   {"mean_radius", mean_radius(f)},
                   {"mean_axis_angle", mean_axis_angle(f)},
                   {"near_real_fraction", near_real_fraction(f)}});
  return out;
}

inline std::string radial_csv(const std::vector<double>& edges, const std::vector<double>& psi) {
  std::ostringstream os;
  os.precision(17);
  os << "rho_lo,rho_hi,psi\n";
  for (std::size_t i = 0; i < psi.size(); ++i)
    os << edges[i] << ',' << edges[i + 1] << ',' << psi[i] << '\n';
  return os.str();
}

inline std::string model_csv(const PDEState& st) {
  const auto S = cauchy_field(st.df);
  const auto v = velocity_field(st.df, S);
  const auto& g = st.df.grid;
  std::ostringstream os;
  os.precision(17);
  os << "rho,theta,u,re_v,im_v,status\n";
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_theta(); ++j) {
      const std::size_t k = g.index(i, j);
      os << g.rho_center(i) << ',' << g.theta_center(j) << ',' << st.df.u[k] << ','
         << v.v[k].real() << ',' << v.v[k].imag() << ',' << to_string(v.status[k]) << '\n';
    }
  return os.str();
}

inline nlohmann::json scheme_json(const SchemeMeta& m) {
  return {{"steps", m.steps},
          {"cfl", m.cfl},
          {"modes", m.modes},
          {"clipped_cells", m.clipped_cells},
          {"basin_faces", m.basin_faces},
          {"floor_faces", m.floor_faces},
          {"sink_removed", m.sink_removed},
          {"last_dt", m.last_dt}};
}

inline nlohmann::json manifest(const ExperimentSpec& spec, const RunWriter& w) {
  const double t_end = static_cast<double>(spec.total_steps()) / spec.ensemble.degree;
  return {{"name", spec.name},
          {"kind", spec.kind},
          {"ensemble", to_json(spec)["ensemble"]},
          {"grid", to_json(spec.grid)},
          {"dt", nullptr},
          {"t_end", t_end},
          {"seeds", spec.seed_list()},
          {"spec_hash", w.hash()},
          {"version", version_string}};
}

inline std::string pad(std::size_t k) {
  std::ostringstream os;
  os << std::setw(3) << std::setfill('0') << k;
  return os.str();
}

// 2D model snapshots at the frame times, from the smoothed frame 0.
inline std::vector<PDEState> run_model_2d(const ExperimentSpec& spec,
                                          const std::vector<RootSet>& frames) {
  try {
    const double bw = spec.pde.bandwidth > 0.0 ? spec.pde.bandwidth : default_bandwidth(frames[0]);
    DensityOptions opt;
    opt.n_ref = frames[0].degree;
    opt.symmetrize = frames[0].conjugate_symmetric;
    DensityField df;
    if (spec.pde.initial == "analytic") {
      df = density_from_function(
          spec.grid, [](double rho, double) { return rho <= 1.0 ? 1.0 / std::numbers::pi : 0.0; },
          opt.n_ref, 1.0);
    } else {
      df = estimate_density(frames[0], spec.grid, bw, opt);
    }
    Step2DOptions sopt;
    sopt.cfl = spec.pde.cfl;
    std::vector<PDEState> out{make_pde_state(std::move(df), frames[0].time)};
    for (std::size_t k = 1; k < frames.size(); ++k)
      out.push_back(advance_2d(out.back(), frames[k].time, sopt));
    return out;
  } catch (const std::exception& e) {
    throw Error(stage_error("pde", e));
  }
}

}  // namespace detail

/// Real-axis trajectory diagram: the real roots of every derivative against
/// its degree. CSV `x,degree` and a scatter SVG.
inline RunResult run_figure1(const ExperimentSpec& spec) {
  validate(spec);
  if (spec.kind != "figure1") throw DomainError("run_figure1: spec kind is " + spec.kind);
  detail::RunWriter w(spec);
  ExperimentSpec single = spec;
  const int total = spec.flow.empty() ? spec.ensemble.degree - 1 : spec.total_steps();
  single.flow.assign(static_cast<std::size_t>(total), 1);
  const auto frames = detail::run_flow(single, spec.ensemble.seed);

  std::ostringstream csv;
  csv.precision(17);
  csv << "x,degree\n";
  Svg svg(-1.1, 1.1, 0.0, spec.ensemble.degree + 1.0);
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& f : frames) {
    std::vector<double> xs;
    for (const auto& r : f.roots)
      if (std::abs(r.imag()) <= 1e-9 * std::max(1.0, std::abs(r))) xs.push_back(r.real());
    std::sort(xs.begin(), xs.end());
    for (double x : xs) {
      csv << x << ',' << f.degree << '\n';
      svg.point(x, f.degree, "black", 1.5);
    }
    counts.push_back({{"degree", f.degree}, {"real_roots", xs.size()}});
  }
  w.csv("figure1.csv", csv.str());
  w.svg("figure1.svg", svg);
  auto m = detail::manifest(spec, w);
  m["real_root_counts"] = counts;
  w.json("manifest.json", m);
  return {w.dir(), w.files(), m, true};
}

/// Coloured snapshots of the flow frames, with per-frame statistics and,
/// if requested, the 2D model at the same times.
inline RunResult run_snapshots(const ExperimentSpec& spec) {
  validate(spec);
  detail::RunWriter w(spec);
  const auto frames = detail::run_flow(spec, spec.ensemble.seed);
  for (std::size_t k = 0; k < frames.size(); ++k)
    w.csv("frame_" + detail::pad(k) + ".csv", detail::roots_csv(frames[k]));
  auto svg = detail::snapshot_svg(frames);
  w.svg("snapshots.svg", svg);
  auto m = detail::manifest(spec, w);
  m["frames"] = detail::frame_stats(frames);
  if (spec.pde.enabled && spec.pde.model == "2d") {
    const auto model = detail::run_model_2d(spec, frames);
    nlohmann::json mf = nlohmann::json::array();
    for (std::size_t k = 0; k < model.size(); ++k) {
      w.csv("model_" + detail::pad(k) + ".csv", detail::model_csv(model[k]));
      mf.push_back({{"time", model[k].t},
                    {"mass", model[k].df.total_mass()},
                    {"mean_axis_angle", mean_axis_angle(model[k].df)}});
    }
    m["model_frames"] = mf;
    m["scheme_meta"] = detail::scheme_json(model.back().meta);
  }
  w.json("manifest.json", m);
  return {w.dir(), w.files(), m, true};
}

/// Kac snapshots with the radial histogram per frame and the radial model
/// started from the frame-0 histogram.
inline RunResult run_kac(const ExperimentSpec& spec) {
  validate(spec);
  if (spec.ensemble.kind != EnsembleKind::kac) throw DomainError("run_kac: needs the kac ensemble");
  detail::RunWriter w(spec);
  const auto frames = detail::run_flow(spec, spec.ensemble.seed);
  const auto& edges = spec.grid.rho_edges();
  const int n0 = frames[0].degree;
  RadialState radial;
  radial.r_edges = edges;
  radial.psi = radial_histogram(frames[0], edges, n0);
  radial.t = frames[0].time;
  nlohmann::json cmp = nlohmann::json::array();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    w.csv("frame_" + detail::pad(k) + ".csv", detail::roots_csv(frames[k]));
    const auto psi = radial_histogram(frames[k], edges, n0);
    w.csv("radial_" + detail::pad(k) + ".csv", detail::radial_csv(edges, psi));
    try {
      if (k > 0) radial = advance_radial(radial, frames[k].time, spec.pde.cfl);
    } catch (const std::exception& e) {
      throw Error(detail::stage_error("pde", e));
    }
    cmp.push_back({{"time", frames[k].time}, {"L1", l1_distance(psi, radial.psi, edges)}});
  }
  auto svg = detail::snapshot_svg(frames);
  w.svg("snapshots.svg", svg);
  auto m = detail::manifest(spec, w);
  m["frames"] = detail::frame_stats(frames);
  m["radial_comparison"] = cmp;
  w.json("manifest.json", m);
  return {w.dir(), w.files(), m, true};
}

namespace detail {

// Real parts histogrammed on the line grid, u = count / (n0 dx).
inline std::vector<double> line_histogram(const RootSet& rs, const std::vector<double>& edges,
                                          int n0) {
  std::vector<double> u(edges.size() - 1, 0.0);
  for (const auto& r : rs.roots) {
    const double x = r.real();
    if (x < edges.front() || x > edges.back()) continue;
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    const std::size_t k =
        std::min<std::size_t>(static_cast<std::size_t>(it - edges.begin()) - 1, u.size() - 1);
    u[k] += 1.0;
  }
  for (std::size_t k = 0; k < u.size(); ++k) u[k] /= n0 * (edges[k + 1] - edges[k]);
  return u;
}

}  // namespace detail

/// Empirical flow over all seeds against the chosen model; the report lists
/// the distance per frame and passes when every frame is within budget.
inline RunResult run_validation(const ExperimentSpec& spec) {
  validate(spec);
  if (!spec.pde.enabled) throw DomainError("run_validation: pde section required");
  detail::RunWriter w(spec);
  const auto seeds = spec.seed_list();
  std::vector<std::vector<RootSet>> runs;
  for (auto s : seeds) runs.push_back(detail::run_flow(spec, s));
  const std::size_t nf = runs[0].size();
  const int n0 = runs[0][0].degree;

  ComparisonReport rep;
  rep.budget = spec.pde.budget;
  rep.metric = spec.pde.metric == "L1" ? Metric::L1 : Metric::wasserstein1_radial;
  auto m = detail::manifest(spec, w);

  auto seed_average = [&](auto histogram, std::size_t k) {
    std::vector<double> acc;
    for (const auto& run : runs) {
      const auto h = histogram(run[k]);
      if (acc.empty()) acc.assign(h.size(), 0.0);
      for (std::size_t i = 0; i < h.size(); ++i) acc[i] += h[i] / static_cast<double>(runs.size());
    }
    return acc;
  };
  auto distance = [&](const std::vector<double>& p, const std::vector<double>& q,
                      const std::vector<double>& edges) {
    if (rep.metric == Metric::L1) return l1_distance(p, q, edges);
    double cp = 0.0, cq = 0.0, d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double dr = edges[i + 1] - edges[i];
      cp += p[i] * dr;
      cq += q[i] * dr;
      d += std::abs(cp - cq) * dr;
    }
    return d;
  };

  try {
    if (spec.pde.model == "radial") {
      const auto& edges = spec.grid.rho_edges();
      auto hist = [&](const RootSet& rs) { return radial_histogram(rs, edges, n0); };
      RadialState st;
      if (spec.pde.initial == "analytic") {
        st = make_radial_state(edges, [](double r) { return r <= 1.0 ? 2.0 * r : 0.0; });
      } else {
        st.r_edges = edges;
        st.psi = seed_average(hist, 0);
      }
      st.t = runs[0][0].time;
      for (std::size_t k = 0; k < nf; ++k) {
        if (k > 0) st = advance_radial(st, runs[0][k].time, spec.pde.cfl);
        const auto emp = seed_average(hist, k);
        const double d = distance(emp, st.psi, edges);
        rep.frames.push_back({runs[0][k].time, st.t, d});
        w.csv("radial_" + detail::pad(k) + ".csv", detail::radial_csv(edges, emp));
      }
    } else if (spec.pde.model == "1d") {
      std::vector<double> edges(static_cast<std::size_t>(spec.pde.cells) + 1);
      for (int k = 0; k <= spec.pde.cells; ++k)
        edges[k] = -spec.pde.x_max + 2.0 * spec.pde.x_max * k / spec.pde.cells;
      auto hist = [&](const RootSet& rs) { return detail::line_histogram(rs, edges, n0); };
      Line1DState st;
      if (spec.pde.initial == "analytic") {
        st = make_line_state(edges, [](double x) { return std::abs(x) <= 1.0 ? 0.5 : 0.0; });
      } else {
        st.x_edges = edges;
        st.u = seed_average(hist, 0);
      }
      st.t = runs[0][0].time;
      for (std::size_t k = 0; k < nf; ++k) {
        if (k > 0) st = advance_1d(st, runs[0][k].time, spec.pde.cfl);
        const auto emp = seed_average(hist, k);
        rep.frames.push_back({runs[0][k].time, st.t, distance(emp, st.u, edges)});
      }
    } else {
      if (seeds.size() != 1) throw DomainError("2d validation takes a single seed");
      const auto model = detail::run_model_2d(spec, runs[0]);
      CompareOptions opt;
      opt.bandwidth = spec.pde.bandwidth;
      opt.time_tol = 1e-9;
      rep = compare_model_empirical(runs[0], model, rep.metric, spec.pde.budget, opt);
      for (std::size_t k = 0; k < model.size(); ++k)
        w.csv("model_" + detail::pad(k) + ".csv", detail::model_csv(model[k]));
      m["scheme_meta"] = detail::scheme_json(model.back().meta);
    }
  } catch (const std::exception& e) {
    if (std::string(e.what()).rfind("stage ", 0) == 0) throw;
    throw Error(detail::stage_error("compare", e));
  }
  rep.max_distance = 0.0;
  for (const auto& f : rep.frames) rep.max_distance = std::max(rep.max_distance, f.distance);
  rep.pass = rep.max_distance <= rep.budget;

  m["report"] = to_json(rep);
  w.json("report.json", to_json(rep));
  std::ostringstream summary;
  summary << spec.name << ": " << spec.pde.model << " model, " << to_string(rep.metric)
          << " budget " << rep.budget << "\n";
  for (const auto& f : rep.frames)
    summary << "  t = " << f.t_empirical << "  distance = " << f.distance << "\n";
  summary << (rep.pass ? "PASS" : "FAIL") << " (max " << rep.max_distance << ")\n";
  w.write("summary.txt", summary.str());
  w.json("manifest.json", m);
  return {w.dir(), w.files(), m, rep.pass};
}

/// Dispatches on spec.kind.
inline RunResult run_experiment(const ExperimentSpec& spec) {
  if (spec.kind == "figure1") return run_figure1(spec);
  if (spec.kind == "kac") return run_kac(spec);
  if (spec.kind == "validation") return run_validation(spec);
  return run_snapshots(spec);
}

}  // namespace rootflow
