#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spinn/optim.hpp"

using namespace spinn;

namespace {

// Convex quadratic with known minimizer.
double quadratic(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  static const Eigen::Vector3d target(1.0, -2.0, 0.5);
  static const Eigen::Vector3d scale(1.0, 4.0, 0.25);
  g = (scale.array() * 2.0 * (x.array() - target.array())).matrix();
  return (scale.array() * (x.array() - target.array()).square()).sum();
}

double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  const double a = 1.0, b = 100.0;
  g.resize(2);
  g[0] = -2.0 * (a - x[0]) - 4.0 * b * x[0] * (x[1] - x[0] * x[0]);
  g[1] = 2.0 * b * (x[1] - x[0] * x[0]);
  const double t1 = a - x[0];
  const double t2 = x[1] - x[0] * x[0];
  return t1 * t1 + b * t2 * t2;
}

}  // namespace

TEST_CASE("adam walks a quadratic to its minimizer") {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  AdamOptions opt;
  opt.iters = 8000;
  opt.lr = 5e-3;
  int calls = 0;
  adam_minimize(quadratic, x, opt, [&](int, double) { ++calls; });
  CHECK(calls == opt.iters);
  CHECK((x - Eigen::Vector3d(1.0, -2.0, 0.5)).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("adam with zero iterations leaves the point unchanged") {
  Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 0.7);
  AdamOptions opt;
  opt.iters = 0;
  adam_minimize(quadratic, x, opt);
  CHECK((x.array() == 0.7).all());
}

TEST_CASE("lbfgs converges on a quadratic to the gradient tolerance") {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  LbfgsOptions opt;
  opt.grad_tol = 1e-10;
  const LbfgsResult res = lbfgs_minimize(quadratic, x, opt);
  CHECK(res.converged);
  CHECK((x - Eigen::Vector3d(1.0, -2.0, 0.5)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("lbfgs minimizes the Rosenbrock valley") {
  Eigen::VectorXd x(2);
  x << -1.2, 1.0;
  LbfgsOptions opt;
  opt.grad_tol = 1e-9;
  opt.max_iters = 500;
  const LbfgsResult res = lbfgs_minimize(rosenbrock, x, opt);
  CHECK(res.final_value < 1e-15);
  CHECK((x - Eigen::Vector2d(1.0, 1.0)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("lbfgs backs away from non-finite regions") {
  // Log barrier: finite only for x < 1; large steps overshoot into NaN.
  auto barrier = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(1);
    const double t = 1.0 - x[0];
    if (t <= 0.0) {
      g[0] = std::numeric_limits<double>::quiet_NaN();
      return std::numeric_limits<double>::quiet_NaN();
    }
    g[0] = 1.0 / t + 2.0 * (x[0] + 3.0);
    return -std::log(t) + (x[0] + 3.0) * (x[0] + 3.0);
  };
  Eigen::VectorXd x(1);
  x << 0.0;
  LbfgsOptions opt;
  opt.grad_tol = 1e-8;
  const LbfgsResult res = lbfgs_minimize(barrier, x, opt);
  CHECK(std::isfinite(res.final_value));
  CHECK(x[0] < 1.0);
  // Stationary point of -log(1-x) + (x+3)^2.
  Eigen::VectorXd g(1);
  barrier(x, g);
  CHECK(std::abs(g[0]) < 1e-6);
}
