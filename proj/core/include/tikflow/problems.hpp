#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tikflow/common.hpp"

namespace tikflow::problems {

/// How the argmin set of an objective looks: a single point, or an affine set
/// `base + span(directions)` with orthonormal directions.
struct ArgminDescription {
  enum class Kind { UniquePoint, AffineSet };
  Kind kind = Kind::UniquePoint;
  Vector base;                       // a particular minimizer (== x* for corpus members)
  std::vector<Vector> directions;    // orthonormal, empty for UniquePoint
};

struct Evaluation {
  double value = 0.0;
  Vector gradient;
};

/// A smooth convex objective with gradient, known minimum value and
/// minimal-norm minimizer. Immutable after construction; all member
/// functions are const and safe to call concurrently.
class Objective {
 public:
  virtual ~Objective() = default;

  const std::string& id() const { return id_; }
  int dim() const { return dim_; }
  double min_value() const { return min_value_; }
  const Vector& minimal_norm_minimizer() const { return x_star_; }
  const ArgminDescription& argmin_description() const { return argmin_; }

  /// Value and gradient at the same point, one call.
  Evaluation eval(const Vector& x) const;
  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;

  /// Hessian, used by the Newton path of tikhonov_point. Default is a central
  /// finite difference of the gradient; corpus members override analytically.
  virtual Matrix hessian(const Vector& x) const;

  /// Closed-form Tikhonov point when available (quadratics). nullopt means
  /// "use the Newton solver".
  virtual std::optional<Vector> tikhonov_point_exact(double /*eps*/) const { return std::nullopt; }

 protected:
  Objective(std::string id, int dim);
  void set_minimum(double g_star, Vector x_star, ArgminDescription argmin);
  void check_dim(const Vector& x) const;

  virtual double value_impl(const Vector& x) const = 0;
  virtual Vector gradient_impl(const Vector& x) const = 0;

 private:
  std::string id_;
  int dim_;
  double min_value_ = 0.0;
  Vector x_star_;
  ArgminDescription argmin_;
};

/// g(x) = 1/2 <Ax,x> - <b,x> + c with A symmetric PSD and b in range(A).
/// Internally evaluated in the centered form 1/2 <A(x-z),x-z> + g(z), where z
/// is the least-norm solution of Az = b, so values near the minimum do not
/// suffer catastrophic cancellation.
class QuadraticObjective : public Objective {
 public:
  QuadraticObjective(std::string id, Matrix A, Vector b, double c);

  /// Build from the centered data directly: g(x) = 1/2 <A(x-z),x-z> + min_value.
  static std::shared_ptr<QuadraticObjective> centered(std::string id, Matrix A, Vector z,
                                                      double min_value = 0.0);

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  double c() const { return c_; }

  Matrix hessian(const Vector&) const override { return A_; }
  std::optional<Vector> tikhonov_point_exact(double eps) const override;

 protected:
  double value_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;

 private:
  Matrix A_;
  Vector b_;
  double c_ = 0.0;
  Vector z_;  // least-norm solution of Az = b
};

/// g(x) = log sum_j exp(<a_j,x> + offset_j), rows of `forms` are the a_j.
/// Coercive with a unique minimizer when the a_j positively span the space;
/// the minimizer and minimum value are computed at construction (tol 1e-12).
class LogSumExpObjective : public Objective {
 public:
  LogSumExpObjective(std::string id, Matrix forms, Vector offsets);

  Matrix hessian(const Vector& x) const override;

 protected:
  double value_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;

 private:
  Vector softmax(const Vector& x) const;  // weights p_j at x
  Matrix forms_;
  Vector offsets_;
};

/// x_eps with ||grad g(x_eps) + eps x_eps|| <= tol. Quadratics solve
/// (A + eps I) x = b directly; otherwise damped Newton on the eps-strongly
/// convex g_eps, warm-started from `warm_start` when given.
Vector tikhonov_point(const Objective& obj, double eps, double tol = 1e-12,
                      const Vector* warm_start = nullptr);

/// The built-in corpus: "quad_pd_5", "quad_line_2", "quad_deg_5", "lse_5".
const Objective& corpus(const std::string& id);
std::vector<std::string> corpus_ids();

}  // namespace tikflow::problems
