#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rootflow/error.hpp"

namespace rootflow {

/// Dense univariate polynomial with complex coefficients; coeffs()[k] is the
/// coefficient of z^k. `Real` selects the working precision (double, long
/// double, or a Boost.Multiprecision float).
///
/// Invariant: the leading coefficient is nonzero. The zero polynomial cannot
/// be represented.
template <class Real>
class BasicPolynomial {
 public:
  using real_type = Real;
  using value_type = std::complex<Real>;

  explicit BasicPolynomial(std::vector<value_type> coeffs) : coeffs_(std::move(coeffs)) {
    while (!coeffs_.empty() && coeffs_.back() == value_type(0)) coeffs_.pop_back();
    if (coeffs_.empty()) throw DomainError("zero polynomial has no degree");
    update_real_flag();
  }

  /// Real coefficients, ascending degree.
  static BasicPolynomial from_real(std::span<const Real> coeffs) {
    std::vector<value_type> c;
    c.reserve(coeffs.size());
    for (const auto& x : coeffs) c.emplace_back(x, Real(0));
    return BasicPolynomial(std::move(c));
  }

  /// lead * prod (z - r).
  static BasicPolynomial from_roots(std::span<const value_type> roots,
                                    value_type lead = value_type(1)) {
    std::vector<value_type> c{lead};
    c.reserve(roots.size() + 1);
    for (const auto& r : roots) {
      c.push_back(value_type(0));
      for (std::size_t k = c.size() - 1; k > 0; --k) c[k] = c[k - 1] - r * c[k];
      c[0] = -r * c[0];
    }
    return BasicPolynomial(std::move(c));
  }

  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<value_type>& coeffs() const noexcept { return coeffs_; }
  const value_type& operator[](std::size_t k) const { return coeffs_.at(k); }
  const value_type& leading() const noexcept { return coeffs_.back(); }

  /// True when every coefficient has an exactly zero imaginary part.
  bool is_real() const noexcept { return is_real_; }

  /// Horner evaluation.
  value_type operator()(const value_type& z) const {
    value_type acc = coeffs_.back();
    for (std::size_t k = coeffs_.size() - 1; k-- > 0;) acc = acc * z + coeffs_[k];
    return acc;
  }

  template <class Other>
  BasicPolynomial<Other> cast() const {
    std::vector<std::complex<Other>> c;
    c.reserve(coeffs_.size());
    for (const auto& a : coeffs_)
      c.emplace_back(static_cast<Other>(a.real()), static_cast<Other>(a.imag()));
    return BasicPolynomial<Other>(std::move(c));
  }

  friend BasicPolynomial operator+(const BasicPolynomial& p, const BasicPolynomial& q) {
    std::vector<value_type> c(std::max(p.coeffs_.size(), q.coeffs_.size()), value_type(0));
    for (std::size_t k = 0; k < p.coeffs_.size(); ++k) c[k] += p.coeffs_[k];
    for (std::size_t k = 0; k < q.coeffs_.size(); ++k) c[k] += q.coeffs_[k];
    return BasicPolynomial(std::move(c));
  }

  friend BasicPolynomial operator*(const value_type& s, const BasicPolynomial& p) {
    std::vector<value_type> c = p.coeffs_;
    for (auto& a : c) a *= s;
    return BasicPolynomial(std::move(c));
  }

  friend bool operator==(const BasicPolynomial& p, const BasicPolynomial& q) {
    return p.coeffs_ == q.coeffs_;
  }

 private:
  void update_real_flag() {
    is_real_ = std::all_of(coeffs_.begin(), coeffs_.end(),
                           [](const value_type& a) { return a.imag() == Real(0); });
  }

  std::vector<value_type> coeffs_;
  bool is_real_ = true;
};

using Polynomial = BasicPolynomial<double>;

/// Exact coefficient-domain derivative: coeffs'[k] = (k+1) coeffs[k+1].
template <class Real>
BasicPolynomial<Real> differentiate(const BasicPolynomial<Real>& p) {
  if (p.degree() < 1) throw DomainError("constant polynomial");
  const auto& c = p.coeffs();
  std::vector<std::complex<Real>> d(c.size() - 1);
  for (std::size_t k = 0; k + 1 < c.size(); ++k) d[k] = c[k + 1] * Real(k + 1);
  return BasicPolynomial<Real>(std::move(d));
}

/// JSON: array of [re, im] pairs, ascending degree.
inline nlohmann::json to_json(const Polynomial& p) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& a : p.coeffs()) j.push_back({a.real(), a.imag()});
  return j;
}

inline Polynomial polynomial_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw DomainError("polynomial JSON must be an array of [re, im] pairs");
  std::vector<std::complex<double>> c;
  c.reserve(j.size());
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2)
      throw DomainError("polynomial JSON entries must be [re, im] pairs");
    c.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  return Polynomial(std::move(c));
}

}  // namespace rootflow
