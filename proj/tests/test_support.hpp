#pragma once

#include <atomic>

#include "tikflow/problems.hpp"

namespace tikflow::test {

/// Forwarding wrapper that counts value/gradient evaluations.
class CountingObjective : public problems::Objective {
 public:
  explicit CountingObjective(const problems::Objective& inner)
      : Objective(inner.id() + "_counted", inner.dim()), inner_(inner) {
    set_minimum(inner.min_value(), inner.minimal_norm_minimizer(), inner.argmin_description());
  }

  Matrix hessian(const Vector& x) const override { return inner_.hessian(x); }
  std::optional<Vector> tikhonov_point_exact(double eps) const override {
    return inner_.tikhonov_point_exact(eps);
  }

  long value_calls() const { return value_calls_.load(); }
  long gradient_calls() const { return gradient_calls_.load(); }
  void reset() {
    value_calls_ = 0;
    gradient_calls_ = 0;
  }

 protected:
  double value_impl(const Vector& x) const override {
    ++value_calls_;
    return inner_.value(x);
  }
  Vector gradient_impl(const Vector& x) const override {
    ++gradient_calls_;
    return inner_.gradient(x);
  }

 private:
  const problems::Objective& inner_;
  mutable std::atomic<long> value_calls_{0};
  mutable std::atomic<long> gradient_calls_{0};
};

inline std::shared_ptr<problems::QuadraticObjective> quad_1d() {
  Matrix a(1, 1);
  a << 1.0;
  return problems::QuadraticObjective::centered("quad_1d", a, Vector::Zero(1));
}

inline std::shared_ptr<problems::QuadraticObjective> identity_quad(int dim) {
  return problems::QuadraticObjective::centered("identity_quad", Matrix::Identity(dim, dim),
                                                Vector::Zero(dim));
}

}  // namespace tikflow::test
