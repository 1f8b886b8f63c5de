#pragma once

#include <Eigen/Dense>
#include <functional>

namespace spinn {

// Evaluates the objective at x, fills grad, returns the value.
using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Called after each accepted iterate with (iteration, objective value).
using IterCallback = std::function<void(int, double)>;

struct AdamOptions {
  int iters = 10000;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Full-batch Adam with bias-corrected moments; deterministic.
void adam_minimize(const ObjectiveFn& f, Eigen::VectorXd& x, const AdamOptions& opt,
                   const IterCallback& on_iter = {});

struct LbfgsOptions {
  int max_iters = 5000;
  int history = 10;
  double grad_tol = 1e-9;  // stop when the max-norm of the gradient drops below
  double c1 = 1e-4;        // Armijo (sufficient decrease)
  double c2 = 0.9;         // strong Wolfe curvature
  int max_linesearch = 40;
};

struct LbfgsResult {
  int iters = 0;
  double final_value = 0.0;
  bool converged = false;  // true when grad_tol was reached
};

// Limited-memory BFGS with two-loop recursion and a strong-Wolfe line search.
// Non-finite trial values are treated as sufficient-decrease failures, so the
// search backs away from blow-up regions. Stops early if no acceptable step
// exists.
LbfgsResult lbfgs_minimize(const ObjectiveFn& f, Eigen::VectorXd& x, const LbfgsOptions& opt,
                           const IterCallback& on_iter = {});

}  // namespace spinn
