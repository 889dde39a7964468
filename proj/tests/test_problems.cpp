#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "test_support.hpp"
#include "tikflow/problems.hpp"

using namespace tikflow;
using problems::corpus;
using problems::QuadraticObjective;
using problems::tikhonov_point;

TEST_CASE("eval on quadratics matches hand values") {
  auto id2 = test::identity_quad(2);
  Vector zero2 = Vector::Zero(2);
  auto e0 = id2->eval(zero2);
  CHECK(e0.value == 0.0);
  CHECK(e0.gradient.norm() == 0.0);

  Vector x(2);
  x << 3.0, 4.0;
  auto e1 = id2->eval(x);
  CHECK(e1.value == doctest::Approx(12.5).epsilon(1e-15));
  CHECK(e1.gradient[0] == doctest::Approx(3.0));
  CHECK(e1.gradient[1] == doctest::Approx(4.0));

  const auto& line = corpus("quad_line_2");
  Vector y(2);
  y << 5.0, 3.0;
  auto e2 = line.eval(y);
  CHECK(e2.value == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(e2.gradient[0] == 0.0);
  CHECK(e2.gradient[1] == doctest::Approx(2.0));
}

TEST_CASE("eval rejects dimension mismatches") {
  CHECK_THROWS_AS(corpus("quad_line_2").eval(Vector::Zero(3)), InputError);
  CHECK_THROWS_AS(corpus("lse_5").gradient(Vector::Zero(2)), InputError);
}

TEST_CASE("minimal-norm minimizers") {
  CHECK(test::identity_quad(3)->minimal_norm_minimizer().norm() == 0.0);

  const auto& line = corpus("quad_line_2");
  CHECK(line.minimal_norm_minimizer()[0] == doctest::Approx(0.0));
  CHECK(line.minimal_norm_minimizer()[1] == doctest::Approx(1.0));

  // Degenerate quadratic through the public (A, b, c) constructor: the
  // least-norm solution comes from the pseudoinverse.
  Matrix a = Matrix::Zero(2, 2);
  a(1, 1) = 1.0;
  Vector b(2);
  b << 0.0, 1.0;
  QuadraticObjective deg("deg", a, b, 0.5);
  CHECK(deg.minimal_norm_minimizer()[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(deg.minimal_norm_minimizer()[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(deg.min_value() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(deg.argmin_description().kind == problems::ArgminDescription::Kind::AffineSet);
}

TEST_CASE("quadratic constructor enforces its invariants") {
  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(QuadraticObjective("bad", asym, Vector::Zero(2), 0.0), InputError);

  Matrix a = Matrix::Zero(2, 2);
  a(1, 1) = 1.0;
  Vector b(2);
  b << 1.0, 0.0;  // not in range(A)
  CHECK_THROWS_AS(QuadraticObjective("bad", a, b, 0.0), InputError);

  Matrix neg(2, 2);
  neg << -1.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(QuadraticObjective("bad", neg, Vector::Zero(2), 0.0), InputError);

  // centered() rejects a center with a component in the null space
  Matrix degenerate = Matrix::Zero(2, 2);
  degenerate(1, 1) = 1.0;
  Vector off_center(2);
  off_center << 2.0, 1.0;  // (0,1) is the least-norm center
  CHECK_THROWS_AS(QuadraticObjective::centered("bad", degenerate, off_center), InputError);
}

TEST_CASE("corpus members satisfy the gradient finite-difference check") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-4;
  for (const auto& id : problems::corpus_ids()) {
    const auto& obj = corpus(id);
    for (int rep = 0; rep < 5; ++rep) {
      Vector x(obj.dim()), u(obj.dim());
      for (int i = 0; i < obj.dim(); ++i) {
        x[i] = 2.0 * normal(rng);
        u[i] = normal(rng);
      }
      u.normalize();
      const double fd = (obj.value(x + h * u) - obj.value(x - h * u)) / (2.0 * h);
      const double directional = obj.gradient(x).dot(u);
      CHECK(fd == doctest::Approx(directional).epsilon(1e-5));
    }
  }
}

TEST_CASE("corpus minimum values and stationarity") {
  for (const auto& id : problems::corpus_ids()) {
    const auto& obj = corpus(id);
    const Vector& xs = obj.minimal_norm_minimizer();
    CHECK(obj.value(xs) == doctest::Approx(obj.min_value()).epsilon(1e-12));
    CHECK(obj.gradient(xs).norm() <= 1e-12);
  }
}

TEST_CASE("x* has minimal norm within the argmin set") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  for (const auto& id : problems::corpus_ids()) {
    const auto& obj = corpus(id);
    const auto& argmin = obj.argmin_description();
    if (argmin.kind != problems::ArgminDescription::Kind::AffineSet) continue;
    for (int rep = 0; rep < 20; ++rep) {
      Vector y = argmin.base;
      for (const auto& dir : argmin.directions) y += unif(rng) * dir;
      CHECK(obj.value(y) == doctest::Approx(obj.min_value()).epsilon(1e-10));
      CHECK(obj.minimal_norm_minimizer().norm() <= y.norm() + 1e-12);
    }
  }
}

TEST_CASE("lse_5 matches its closed-form minimizer") {
  // forms +/- e_i with offsets -o_i and 0 give per-coordinate stationarity
  // x_i = o_i / 2 and minimum value log(2 sum_i exp(-o_i/2)).
  const auto& lse = corpus("lse_5");
  Vector o(5);
  o << 2.0, 1.0, 0.6, 0.2, -1.0;
  const Vector expected = o / 2.0;
  CHECK((lse.minimal_norm_minimizer() - expected).norm() <= 1e-10);
  const double expected_min = std::log(2.0 * (-o / 2.0).array().exp().sum());
  CHECK(lse.min_value() == doctest::Approx(expected_min).epsilon(1e-12));
}

TEST_CASE("lse_5 analytic hessian agrees with finite differences") {
  const auto& lse = corpus("lse_5");
  Vector x(5);
  x << 0.3, -0.5, 1.0, 0.1, -0.2;
  const Matrix h = lse.hessian(x);
  Matrix fd(5, 5);
  const double step = 1e-6;
  for (int j = 0; j < 5; ++j) {
    Vector xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    fd.col(j) = (lse.gradient(xp) - lse.gradient(xm)) / (2.0 * step);
  }
  CHECK((h - fd).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("tikhonov_point hand values") {
  const auto& line = corpus("quad_line_2");
  const Vector x1 = tikhonov_point(line, 1.0);
  CHECK(x1[0] == doctest::Approx(0.0));
  CHECK(x1[1] == doctest::Approx(0.5).epsilon(1e-14));

  auto id3 = test::identity_quad(3);
  for (double eps : {1.0, 0.01, 1e-6}) CHECK(tikhonov_point(*id3, eps).norm() <= 1e-14);

  CHECK_THROWS_AS(tikhonov_point(line, 0.0), InputError);
  CHECK_THROWS_AS(tikhonov_point(line, 1.0, -1.0), InputError);
}

TEST_CASE("tikhonov curve approaches x* monotonically from below in norm") {
  for (const auto& id : problems::corpus_ids()) {
    const auto& obj = corpus(id);
    const double norm_star = obj.minimal_norm_minimizer().norm();
    double prev_dist = std::numeric_limits<double>::infinity();
    double prev_norm = -1.0;
    Vector warm = obj.minimal_norm_minimizer();
    for (int k = 0; k <= 6; ++k) {
      const double eps = std::pow(10.0, -k);
      const Vector xe = tikhonov_point(obj, eps, 1e-12, &warm);
      warm = xe;
      CHECK(xe.norm() <= norm_star + 1e-10);
      CHECK((obj.gradient(xe) + eps * xe).norm() <= 1e-10);
      const double dist = (xe - obj.minimal_norm_minimizer()).norm();
      CHECK(dist <= prev_dist + 1e-15);
      CHECK(xe.norm() >= prev_norm - 1e-12);  // ||x_eps|| grows toward ||x*||
      prev_dist = dist;
      prev_norm = xe.norm();
    }
  }
}

TEST_CASE("quad_line_2 curve matches the closed form x_eps = (0, 1/(1+eps))") {
  const auto& line = corpus("quad_line_2");
  for (double eps : {1.0, 0.1, 0.01}) {
    const Vector xe = tikhonov_point(line, eps);
    CHECK(xe[1] == doctest::Approx(1.0 / (1.0 + eps)).epsilon(1e-14));
  }
}

TEST_CASE("strong-convexity gap of the regularized objective") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (const auto& id : problems::corpus_ids()) {
    const auto& obj = corpus(id);
    for (double eps : {1.0, 0.01}) {
      const Vector xe = tikhonov_point(obj, eps);
      const auto g_eps = [&](const Vector& y) {
        return obj.value(y) + 0.5 * eps * y.squaredNorm();
      };
      for (int rep = 0; rep < 10; ++rep) {
        Vector y(obj.dim());
        for (int i = 0; i < obj.dim(); ++i) y[i] = normal(rng);
        CHECK(g_eps(y) - g_eps(xe) >= 0.5 * eps * (y - xe).squaredNorm() - 1e-10);
      }
    }
  }
}

TEST_CASE("quad_pd_5 has condition number 100") {
  const auto* quad = dynamic_cast<const QuadraticObjective*>(&corpus("quad_pd_5"));
  REQUIRE(quad != nullptr);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(quad->A());
  CHECK(eig.eigenvalues().minCoeff() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(eig.eigenvalues().maxCoeff() == doctest::Approx(10.0).epsilon(1e-12));
  CHECK((quad->A() - quad->A().transpose()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("unknown corpus id is an input error") {
  CHECK_THROWS_AS(corpus("nope"), InputError);
  CHECK(problems::corpus_ids().size() == 4);
}

namespace {

// Stationarity system 1 + x^2 + eps x = 0 has no solution for small eps, so
// the Newton solver must hit its iteration limit.
class NoRootObjective : public problems::Objective {
 public:
  NoRootObjective() : Objective("no_root", 1) {
    problems::ArgminDescription argmin;
    argmin.base = Vector::Zero(1);
    set_minimum(0.0, Vector::Zero(1), argmin);
  }
  Matrix hessian(const Vector& x) const override {
    Matrix h(1, 1);
    h << 2.0 * x[0];
    return h;
  }

 protected:
  double value_impl(const Vector& x) const override { return x[0] + x[0] * x[0] * x[0] / 3.0; }
  Vector gradient_impl(const Vector& x) const override {
    Vector g(1);
    g << 1.0 + x[0] * x[0];
    return g;
  }
};

}  // namespace

TEST_CASE("tikhonov_point reports an iteration limit with its residual") {
  NoRootObjective obj;
  try {
    tikhonov_point(obj, 0.5, 1e-12);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual > 0.0);
    CHECK(std::isfinite(e.residual));
  }
}
