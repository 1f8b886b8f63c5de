#include "spinn/optim.hpp"

#include <cmath>
#include <deque>
#include <vector>

namespace spinn {

void adam_minimize(const ObjectiveFn& f, Eigen::VectorXd& x, const AdamOptions& opt,
                   const IterCallback& on_iter) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n);
  Eigen::ArrayXd m = Eigen::ArrayXd::Zero(n);
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(n);
  double b1t = 1.0, b2t = 1.0;
  for (int t = 1; t <= opt.iters; ++t) {
    const double fx = f(x, g);
    if (on_iter) on_iter(t, fx);
    m = opt.beta1 * m + (1.0 - opt.beta1) * g.array();
    v = opt.beta2 * v + (1.0 - opt.beta2) * g.array().square();
    b1t *= opt.beta1;
    b2t *= opt.beta2;
    const Eigen::ArrayXd mhat = m / (1.0 - b1t);
    const Eigen::ArrayXd vhat = v / (1.0 - b2t);
    x.array() -= opt.lr * mhat / (vhat.sqrt() + opt.eps);
  }
}

namespace {

struct Probe {
  double f = 0.0;
  double slope = 0.0;  // g . d at the trial point
};

// Strong Wolfe line search (bracket + zoom). Returns the accepted step length
// or 0 on failure; on success x, fx, g hold the accepted point.
double wolfe_search(const ObjectiveFn& f, Eigen::VectorXd& x, double& fx, Eigen::VectorXd& g,
                    const Eigen::VectorXd& d, const LbfgsOptions& opt) {
  const double f0 = fx;
  const double slope0 = g.dot(d);
  if (!(slope0 < 0.0)) return 0.0;

  const Eigen::VectorXd x0 = x;
  Eigen::VectorXd xt(x.size()), gt(x.size());
  int evals = 0;

  auto probe = [&](double a) {
    xt = x0 + a * d;
    Probe p;
    p.f = f(xt, gt);
    p.slope = gt.dot(d);
    ++evals;
    return p;
  };
  auto armijo_fail = [&](const Probe& p, double a) {
    return !std::isfinite(p.f) || p.f > f0 + opt.c1 * a * slope0;
  };
  auto accept = [&](double a, const Probe& p) {
    x = xt;
    fx = p.f;
    g = gt;
    return a;
  };

  auto zoom = [&](double lo, double hi, Probe plo) -> double {
    while (evals < opt.max_linesearch) {
      const double a = 0.5 * (lo + hi);
      const Probe p = probe(a);
      if (armijo_fail(p, a) || p.f >= plo.f) {
        hi = a;
      } else {
        if (std::abs(p.slope) <= -opt.c2 * slope0) return accept(a, p);
        if (p.slope * (hi - lo) >= 0.0) hi = lo;
        lo = a;
        plo = p;
      }
      if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    // Fall back to the best sufficient-decrease point found, if any.
    if (plo.f < f0) {
      const Probe p = probe(lo);
      if (std::isfinite(p.f) && p.f < f0) return accept(lo, p);
    }
    return 0.0;
  };

  double a_prev = 0.0;
  Probe p_prev{f0, slope0};
  double a = 1.0;
  while (evals < opt.max_linesearch) {
    const Probe p = probe(a);
    if (armijo_fail(p, a) || (a_prev > 0.0 && p.f >= p_prev.f)) {
      return zoom(a_prev, a, p_prev);
    }
    if (std::abs(p.slope) <= -opt.c2 * slope0) return accept(a, p);
    if (p.slope >= 0.0) return zoom(a, a_prev, p);
    a_prev = a;
    p_prev = p;
    a = std::min(2.0 * a, 1e10);
  }
  return 0.0;
}

}  // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& f, Eigen::VectorXd& x, const LbfgsOptions& opt,
                           const IterCallback& on_iter) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n);
  double fx = f(x, g);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  LbfgsResult res;
  res.final_value = fx;
  for (int iter = 0; iter < opt.max_iters; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion for the search direction.
    Eigen::VectorXd q = g;
    const int mhist = static_cast<int>(s_hist.size());
    std::vector<double> alpha(mhist);
    for (int i = mhist - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (mhist > 0) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (int i = 0; i < mhist; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd d = -q;
    if (!(g.dot(d) < 0.0)) {
      d = -g;  // history produced a non-descent direction; restart from steepest
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    const Eigen::VectorXd x_old = x;
    const Eigen::VectorXd g_old = g;
    const double step = wolfe_search(f, x, fx, g, d, opt);
    if (step == 0.0) break;  // no acceptable step; stationary for our purposes

    res.iters = iter + 1;
    res.final_value = fx;
    if (on_iter) on_iter(iter + 1, fx);

    const Eigen::VectorXd s = x - x_old;
    const Eigen::VectorXd y = g - g_old;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
  }
  res.final_value = fx;
  return res;
}

}  // namespace spinn
