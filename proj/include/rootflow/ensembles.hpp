#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rootflow/error.hpp"
#include "rootflow/polynomial.hpp"
#include "rootflow/random.hpp"
#include "rootflow/roots.hpp"

namespace rootflow {

enum class EnsembleKind {
  /// i.i.d. roots, uniform on the unit disk.
  uniform_disk,
  /// Real polynomial with i.i.d. standard normal coefficients.
  kac,
  /// Real polynomial: k real roots uniform on [-1, 1] and (n-k)/2 conjugate
  /// pairs uniform on the disk, with k = real_fraction * n.
  conjugate_pairs,
};

inline std::string to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::uniform_disk: return "uniform-disk";
    case EnsembleKind::kac: return "kac";
    case EnsembleKind::conjugate_pairs: return "conjugate-pairs";
  }
  return "unknown";
}

inline EnsembleKind ensemble_kind_from_string(const std::string& s) {
  if (s == "uniform-disk") return EnsembleKind::uniform_disk;
  if (s == "kac") return EnsembleKind::kac;
  if (s == "conjugate-pairs") return EnsembleKind::conjugate_pairs;
  throw DomainError("unknown ensemble kind '" + s + "'");
}

struct EnsembleConfig {
  EnsembleKind kind = EnsembleKind::uniform_disk;
  int degree = 2;
  std::uint64_t seed = 0;
  double real_fraction = 0.0;

  /// Number of real roots of a conjugate-pair sample.
  int real_count() const { return static_cast<int>(std::lround(real_fraction * degree)); }

  void validate() const {
    if (degree < 2) throw DomainError("ensemble degree must be at least 2");
    if (kind != EnsembleKind::conjugate_pairs) return;
    if (!(real_fraction >= 0.0 && real_fraction <= 1.0))
      throw DomainError("real_fraction must lie in [0, 1]");
    if ((degree - real_count()) % 2 != 0)
      throw DomainError("real_fraction * degree = " + std::to_string(real_count()) +
                        " real roots leaves an odd number of complex roots");
  }
};

/// Rejection sampling from the square [-1, 1]^2.
inline cplx sample_unit_disk(CounterRng& rng) {
  for (;;) {
    const double x = rng.uniform(-1.0, 1.0);
    const double y = rng.uniform(-1.0, 1.0);
    if (x * x + y * y < 1.0) return {x, y};
  }
}

/// Roots of a root-defined ensemble, in sampling order (not normalized).
inline RootSet sample_roots(const EnsembleConfig& cfg) {
  cfg.validate();
  CounterRng rng(cfg.seed, static_cast<std::uint64_t>(cfg.kind));
  std::vector<cplx> roots;
  roots.reserve(static_cast<std::size_t>(cfg.degree));
  switch (cfg.kind) {
    case EnsembleKind::uniform_disk:
      for (int i = 0; i < cfg.degree; ++i) roots.push_back(sample_unit_disk(rng));
      return RootSet::make(std::move(roots));
    case EnsembleKind::conjugate_pairs: {
      const int k = cfg.real_count();
      for (int i = 0; i < k; ++i) roots.emplace_back(rng.uniform(-1.0, 1.0), 0.0);
      for (int i = 0; i < (cfg.degree - k) / 2; ++i) {
        cplx z = sample_unit_disk(rng);
        if (z.imag() < 0.0) z = std::conj(z);
        if (z.imag() == 0.0) z.imag(0x1.0p-53);
        roots.push_back(z);
        roots.push_back(std::conj(z));
      }
      return RootSet::make(std::move(roots), 0.0, true);
    }
    case EnsembleKind::kac:
      break;
  }
  throw DomainError("sample_roots: the Kac ensemble is defined by coefficients");
}

/// Kac polynomial sum_{k<=n} a_k z^k with a_k ~ N(0, 1).
inline Polynomial sample_kac(const EnsembleConfig& cfg) {
  cfg.validate();
  CounterRng rng(cfg.seed, static_cast<std::uint64_t>(EnsembleKind::kac));
  std::vector<double> c(static_cast<std::size_t>(cfg.degree) + 1);
  for (auto& a : c) a = rng.normal();
  while (c.back() == 0.0) c.back() = rng.normal();
  return Polynomial::from_real(c);
}

/// Normalized initial frame of any ensemble.
inline Normalized initial_frame(const EnsembleConfig& cfg, RootOptions opt = {}) {
  if (cfg.kind == EnsembleKind::kac) return normalize(find_roots(sample_kac(cfg), opt));
  return normalize(sample_roots(cfg));
}

}  // namespace rootflow
