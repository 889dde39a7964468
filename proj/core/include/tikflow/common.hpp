#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace tikflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Bad arguments: dimension mismatches, inadmissible parameters, malformed configs.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solver ran out of iterations; carries the last residual.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& msg, double residual)
      : std::runtime_error(msg), residual(residual) {}
  double residual;
};

/// Adaptive integration failed (step-size underflow); carries the last good state.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& msg, double t_last, Vector x_last = {}, Vector v_last = {})
      : std::runtime_error(msg), t_last(t_last), x_last(std::move(x_last)),
        v_last(std::move(v_last)) {}
  double t_last;
  Vector x_last;
  Vector v_last;
};

/// NaN/Inf encountered in a numeric pipeline.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Not enough usable points for a statistical fit.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Discrete iteration exceeded the divergence threshold.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& msg, long iteration, double norm)
      : std::runtime_error(msg), iteration(iteration), norm(norm) {}
  long iteration;
  double norm;
};

}  // namespace tikflow
