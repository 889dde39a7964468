#include "tikflow/problems.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <sstream>

namespace tikflow::problems {

namespace {

// Damped Newton (Levenberg) on a stationarity system F(x) = 0 with SPD-ish
// Jacobian. Accepts a trial point only if it reduces ||F||.
template <typename GradFn, typename HessFn>
Vector newton_stationary(const GradFn& grad, const HessFn& hess, Vector x, double tol,
                         int max_iter, const char* what) {
  Vector f = grad(x);
  double fn = f.norm();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    if (fn <= tol) return x;
    Matrix h = hess(x);
    for (int attempt = 0; attempt < 60; ++attempt) {
      Matrix hl = h;
      if (lambda > 0.0) hl.diagonal().array() += lambda;
      Eigen::LDLT<Matrix> ldlt(hl);
      Vector cand;
      bool usable = ldlt.info() == Eigen::Success;
      if (usable) {
        cand = x - ldlt.solve(f);
        usable = cand.allFinite();
      }
      if (usable) {
        Vector fc = grad(cand);
        double fcn = fc.norm();
        if (fcn < fn) {
          x = std::move(cand);
          f = std::move(fc);
          fn = fcn;
          lambda = (lambda == 0.0) ? 0.0 : lambda * 0.25;
          break;
        }
      }
      lambda = (lambda == 0.0) ? 1e-8 : lambda * 4.0;
    }
  }
  std::ostringstream msg;
  msg << what << ": no convergence after " << max_iter << " iterations, residual " << fn;
  throw ConvergenceError(msg.str(), fn);
}

Matrix givens_rotation(int dim, int i, int j, double theta) {
  Matrix g = Matrix::Identity(dim, dim);
  g(i, i) = g(j, j) = std::cos(theta);
  g(i, j) = -std::sin(theta);
  g(j, i) = std::sin(theta);
  return g;
}

}  // namespace

Objective::Objective(std::string id, int dim) : id_(std::move(id)), dim_(dim) {
  if (dim <= 0) throw InputError("objective dimension must be positive");
}

void Objective::set_minimum(double g_star, Vector x_star, ArgminDescription argmin) {
  min_value_ = g_star;
  x_star_ = std::move(x_star);
  argmin_ = std::move(argmin);
}

void Objective::check_dim(const Vector& x) const {
  if (x.size() != dim_) {
    std::ostringstream msg;
    msg << "objective '" << id_ << "' expects dimension " << dim_ << ", got " << x.size();
    throw InputError(msg.str());
  }
}

Evaluation Objective::eval(const Vector& x) const {
  check_dim(x);
  return {value_impl(x), gradient_impl(x)};
}

double Objective::value(const Vector& x) const {
  check_dim(x);
  return value_impl(x);
}

Vector Objective::gradient(const Vector& x) const {
  check_dim(x);
  return gradient_impl(x);
}

Matrix Objective::hessian(const Vector& x) const {
  check_dim(x);
  Matrix h(dim_, dim_);
  Vector xp = x, xm = x;
  for (int j = 0; j < dim_; ++j) {
    const double step = 1e-6 * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + step;
    xm[j] = x[j] - step;
    h.col(j) = (gradient_impl(xp) - gradient_impl(xm)) / (2.0 * step);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return 0.5 * (h + h.transpose());
}

QuadraticObjective::QuadraticObjective(std::string id, Matrix A, Vector b, double c)
    : Objective(std::move(id), static_cast<int>(A.rows())),
      A_(std::move(A)),
      b_(std::move(b)),
      c_(c) {
  if (A_.rows() != A_.cols() || b_.size() != A_.rows())
    throw InputError("quadratic objective: A must be square and match b");
  if ((A_ - A_.transpose()).cwiseAbs().maxCoeff() > 1e-14)
    throw InputError("quadratic objective: A is not symmetric");

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A_);
  z_ = cod.solve(b_);  // least-norm solution
  if ((A_ * z_ - b_).norm() > 1e-10 * (1.0 + b_.norm()))
    throw InputError("quadratic objective: b is not in the range of A (argmin empty)");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(A_);
  if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff()))
    throw InputError("quadratic objective: A is not positive semidefinite");

  ArgminDescription argmin;
  argmin.base = z_;
  const double null_tol = 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff());
  for (int i = 0; i < eig.eigenvalues().size(); ++i) {
    if (eig.eigenvalues()[i] <= null_tol) argmin.directions.push_back(eig.eigenvectors().col(i));
  }
  argmin.kind = argmin.directions.empty() ? ArgminDescription::Kind::UniquePoint
                                          : ArgminDescription::Kind::AffineSet;
  set_minimum(c_ - 0.5 * z_.dot(A_ * z_), z_, std::move(argmin));
}

std::shared_ptr<QuadraticObjective> QuadraticObjective::centered(std::string id, Matrix A,
                                                                 Vector z, double min_value) {
  Vector b = A * z;
  const double c = min_value + 0.5 * z.dot(b);
  auto obj = std::make_shared<QuadraticObjective>(std::move(id), std::move(A), std::move(b), c);
  if ((z - obj->z_).norm() > 1e-8 * (1.0 + z.norm()))
    throw InputError("quadratic objective: center is not the least-norm solution of Az = b");
  // Pin the exact centered data; the decomposition in the constructor only
  // reproduces it to rounding.
  obj->z_ = std::move(z);
  ArgminDescription argmin = obj->argmin_description();
  argmin.base = obj->z_;
  obj->set_minimum(min_value, obj->z_, std::move(argmin));
  return obj;
}

double QuadraticObjective::value_impl(const Vector& x) const {
  const Vector d = x - z_;
  return 0.5 * d.dot(A_ * d) + min_value();
}

Vector QuadraticObjective::gradient_impl(const Vector& x) const { return A_ * (x - z_); }

std::optional<Vector> QuadraticObjective::tikhonov_point_exact(double eps) const {
  Matrix m = A_;
  m.diagonal().array() += eps;
  return Eigen::LDLT<Matrix>(m).solve(b_);
}

LogSumExpObjective::LogSumExpObjective(std::string id, Matrix forms, Vector offsets)
    : Objective(std::move(id), static_cast<int>(forms.cols())),
      forms_(std::move(forms)),
      offsets_(std::move(offsets)) {
  if (offsets_.size() != forms_.rows())
    throw InputError("log-sum-exp objective: offsets must match the number of forms");

  Vector x_bar = newton_stationary([this](const Vector& x) { return gradient_impl(x); },
                                   [this](const Vector& x) { return hessian(x); },
                                   Vector::Zero(dim()), 1e-12, 200, "log-sum-exp minimizer");
  ArgminDescription argmin;
  argmin.kind = ArgminDescription::Kind::UniquePoint;
  argmin.base = x_bar;
  set_minimum(value_impl(x_bar), x_bar, std::move(argmin));
}

Vector LogSumExpObjective::softmax(const Vector& x) const {
  Vector z = forms_ * x + offsets_;
  const double m = z.maxCoeff();
  Vector e = (z.array() - m).exp();
  return e / e.sum();
}

double LogSumExpObjective::value_impl(const Vector& x) const {
  Vector z = forms_ * x + offsets_;
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

Vector LogSumExpObjective::gradient_impl(const Vector& x) const {
  return forms_.transpose() * softmax(x);
}

Matrix LogSumExpObjective::hessian(const Vector& x) const {
  check_dim(x);
  Vector p = softmax(x);
  Matrix weighted = forms_.transpose() * p.asDiagonal() * forms_;
  Vector mean = forms_.transpose() * p;
  return weighted - mean * mean.transpose();
}

Vector tikhonov_point(const Objective& obj, double eps, double tol, const Vector* warm_start) {
  if (!(eps > 0.0)) throw InputError("tikhonov_point: eps must be positive");
  if (!(tol > 0.0)) throw InputError("tikhonov_point: tol must be positive");
  if (auto exact = obj.tikhonov_point_exact(eps)) return *exact;

  Vector x0 = warm_start ? *warm_start : obj.minimal_norm_minimizer();
  return newton_stationary(
      [&](const Vector& x) -> Vector { return obj.gradient(x) + eps * x; },
      [&](const Vector& x) -> Matrix {
        Matrix h = obj.hessian(x);
        h.diagonal().array() += eps;
        return h;
      },
      std::move(x0), tol, 200, "tikhonov_point");
}

namespace {

std::map<std::string, std::shared_ptr<const Objective>> build_corpus() {
  std::map<std::string, std::shared_ptr<const Objective>> corpus;

  // PD quadratic in R^5, eigenvalues log-spaced in [0.1, 10] (condition number
  // 100), mixed by fixed Givens rotations so the system does not decouple.
  {
    Vector eigs(5);
    for (int i = 0; i < 5; ++i) eigs[i] = std::pow(10.0, -1.0 + 0.5 * i);
    Matrix rot = givens_rotation(5, 0, 1, 0.3) * givens_rotation(5, 1, 2, 0.7) *
                 givens_rotation(5, 2, 3, 1.1) * givens_rotation(5, 3, 4, 1.5) *
                 givens_rotation(5, 0, 4, 0.9);
    Matrix a = rot * eigs.asDiagonal() * rot.transpose();
    a = 0.5 * (a + a.transpose());
    corpus["quad_pd_5"] = QuadraticObjective::centered("quad_pd_5", a, Vector::Zero(5));
  }

  // g(x) = 1/2 (x2 - 1)^2: argmin is the line x2 = 1, x* = (0, 1).
  {
    Matrix a = Matrix::Zero(2, 2);
    a(1, 1) = 1.0;
    Vector z(2);
    z << 0.0, 1.0;
    corpus["quad_line_2"] = QuadraticObjective::centered("quad_line_2", a, z);
  }

  // Degenerate quadratic A = diag(0,1,2,3,4).
  {
    Vector d(5);
    d << 0.0, 1.0, 2.0, 3.0, 4.0;
    Vector z(5);
    z << 0.0, 1.0, 1.0, 1.0, 1.0;
    corpus["quad_deg_5"] = QuadraticObjective::centered("quad_deg_5", Matrix(d.asDiagonal()), z);
  }

  // log sum_i [exp(x_i - o_i) + exp(-x_i)]; minimizer x* = o/2,
  // min value log(2 sum_i exp(-o_i/2)).
  {
    Matrix forms(10, 5);
    forms << Matrix::Identity(5, 5), -Matrix::Identity(5, 5);
    Vector o(5);
    o << 2.0, 1.0, 0.6, 0.2, -1.0;
    Vector offsets(10);
    offsets << -o, Vector::Zero(5);
    corpus["lse_5"] = std::make_shared<LogSumExpObjective>("lse_5", forms, offsets);
  }

  return corpus;
}

const std::map<std::string, std::shared_ptr<const Objective>>& corpus_registry() {
  static const auto registry = build_corpus();
  return registry;
}

}  // namespace

const Objective& corpus(const std::string& id) {
  const auto& registry = corpus_registry();
  auto it = registry.find(id);
  if (it == registry.end()) throw InputError("unknown corpus objective '" + id + "'");
  return *it->second;
}

std::vector<std::string> corpus_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, obj] : corpus_registry()) ids.push_back(id);
  return ids;
}

}  // namespace tikflow::problems
