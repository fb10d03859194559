#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace rootflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (c <= 0, empty input, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Evaluation point too close to a singularity.
class PoleError : public Error {
 public:
  PoleError(const std::string& what, std::complex<double> pole)
      : Error(what), pole_(pole) {}
  std::complex<double> pole() const noexcept { return pole_; }

 private:
  std::complex<double> pole_;
};

/// An iterative solver ran out of iterations.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double worst_residual, int iterations)
      : Error(what), worst_residual_(worst_residual), iterations_(iterations) {}
  double worst_residual() const noexcept { return worst_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double worst_residual_;
  int iterations_;
};

/// Root finding failed while computing the k-th derivative of a flow.
class FlowError : public Error {
 public:
  FlowError(const std::string& what, int derivative_order)
      : Error(what), order_(derivative_order) {}
  int derivative_order() const noexcept { return order_; }

 private:
  int order_;
};

/// Explicit time step too large for the current velocity field.
class StepRejected : public Error {
 public:
  StepRejected(const std::string& what, double suggested_dt)
      : Error(what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const noexcept { return suggested_dt_; }

 private:
  double suggested_dt_;
};

/// Argument outside the validity radius of a truncated series.
class OutOfRadius : public DomainError {
 public:
  OutOfRadius(const std::string& what, double radius) : DomainError(what), radius_(radius) {}
  double radius() const noexcept { return radius_; }

 private:
  double radius_;
};

/// Quadrature cannot resolve the integrand at the requested point.
class RefinementNeeded : public Error {
 public:
  using Error::Error;
};

}  // namespace rootflow
