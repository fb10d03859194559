#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rootflow/error.hpp"

namespace rootflow {

/// Polar grid on the disk rho <= rho_edges.back(): n_rho rings times n_theta
/// uniform sectors, sector j covering [j, j+1) * 2 pi / n_theta. Cell (i, j)
/// is stored at i * n_theta + j.
class PolarGrid {
 public:
  PolarGrid() = default;

  PolarGrid(std::vector<double> rho_edges, int n_theta)
      : rho_edges_(std::move(rho_edges)), n_theta_(n_theta) {
    if (rho_edges_.size() < 2) throw DomainError("PolarGrid: need at least one ring");
    if (n_theta_ < 1) throw DomainError("PolarGrid: need at least one sector");
    if (rho_edges_.front() < 0.0) throw DomainError("PolarGrid: negative radius");
    for (std::size_t i = 1; i < rho_edges_.size(); ++i)
      if (!(rho_edges_[i] > rho_edges_[i - 1]))
        throw DomainError("PolarGrid: rho edges must be strictly increasing");
  }

  static PolarGrid uniform(int n_rho, int n_theta, double rho_max = 1.0) {
    if (n_rho < 1) throw DomainError("PolarGrid: need at least one ring");
    std::vector<double> e(static_cast<std::size_t>(n_rho) + 1);
    for (int i = 0; i <= n_rho; ++i) e[i] = rho_max * i / n_rho;
    return PolarGrid(std::move(e), n_theta);
  }

  int n_rho() const noexcept { return static_cast<int>(rho_edges_.size()) - 1; }
  int n_theta() const noexcept { return n_theta_; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(n_rho()) * static_cast<std::size_t>(n_theta_);
  }
  const std::vector<double>& rho_edges() const noexcept { return rho_edges_; }
  double rho_max() const noexcept { return rho_edges_.back(); }

  double rho_lo(int i) const { return rho_edges_[i]; }
  double rho_hi(int i) const { return rho_edges_[i + 1]; }
  double rho_center(int i) const { return 0.5 * (rho_edges_[i] + rho_edges_[i + 1]); }
  double drho(int i) const { return rho_edges_[i + 1] - rho_edges_[i]; }
  double dtheta() const noexcept { return 2.0 * std::numbers::pi / n_theta_; }
  double theta_lo(int j) const noexcept { return j * dtheta(); }
  double theta_center(int j) const noexcept { return (j + 0.5) * dtheta(); }

  /// Exact cell area rho_c * drho * dtheta.
  double area(int i) const { return rho_center(i) * drho(i) * dtheta(); }
  double ring_area(int i) const { return rho_center(i) * drho(i) * 2.0 * std::numbers::pi; }

  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_theta_) +
           static_cast<std::size_t>(j);
  }

  std::complex<double> center(int i, int j) const {
    return std::polar(rho_center(i), theta_center(j));
  }

  int ring_of(double rho) const {
    if (rho < rho_edges_.front() || rho > rho_edges_.back()) return -1;
    auto it = std::upper_bound(rho_edges_.begin(), rho_edges_.end(), rho);
    const int i = static_cast<int>(it - rho_edges_.begin()) - 1;
    return std::min(i, n_rho() - 1);
  }

  int sector_of(double theta) const {
    double t = std::fmod(theta, 2.0 * std::numbers::pi);
    if (t < 0.0) t += 2.0 * std::numbers::pi;
    return std::min(static_cast<int>(t / dtheta()), n_theta_ - 1);
  }

  /// Cell containing z, if inside the grid.
  std::optional<std::pair<int, int>> cell_of(std::complex<double> z) const {
    const int i = ring_of(std::abs(z));
    if (i < 0) return std::nullopt;
    return std::make_pair(i, sector_of(std::arg(z)));
  }

  /// Sector index mirrored across the real axis.
  int mirror_sector(int j) const noexcept { return n_theta_ - 1 - j; }

  friend bool operator==(const PolarGrid&, const PolarGrid&) = default;

 private:
  std::vector<double> rho_edges_{0.0, 1.0};
  int n_theta_ = 1;
};

inline nlohmann::json to_json(const PolarGrid& g) {
  return {{"rho_edges", g.rho_edges()}, {"n_theta", g.n_theta()}};
}

inline PolarGrid polar_grid_from_json(const nlohmann::json& j) {
  if (j.contains("rho_edges"))
    return PolarGrid(j.at("rho_edges").get<std::vector<double>>(), j.at("n_theta").get<int>());
  return PolarGrid::uniform(j.at("n_rho").get<int>(), j.at("n_theta").get<int>(),
                            j.value("rho_max", 1.0));
}

}  // namespace rootflow
