#include "spinn/spinn.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "spinn/rng.hpp"

namespace spinn {

namespace {

void check_variant(const LossVariant& v) {
  if (v.recursion_depth < 1) {
    throw ValidationError("loss: recursion depth K must be at least 1");
  }
  if (v.anchor_weight < 0.0) {
    throw ValidationError("loss: anchor weight must be non-negative");
  }
}

Field pointwise_vjp(const MlpParams& theta, const ModelSpec& m, const Field& a, const Field& y,
                    ParamGrad& grad) {
  Field dx = mlp_vjp_field(theta, a, y, grad);
  if (m.ng_deriv) {
    dx.values += a.values.unaryExpr([&](double v) { return m.ng_deriv(v); }) * y.values;
  }
  return dx;
}

// Reverse pass through K stabilized substeps. u holds the forward states
// u[0..K]; w_out is dL/d(u[K]). Every linear piece (resolvent, mobility,
// stabilizer, L_g) has a real mode symbol and is self-adjoint, so the adjoint
// reuses the forward multipliers; the cotangent is carried in spectral form
// between substeps, which costs two transforms per substep.
void linear_pair_backward(const std::vector<Field>& u, double h, const ModelSpec& m,
                          const MlpParams& theta, const Field& w_out, ParamGrad& grad) {
  const GridSpec& g = *w_out.grid;
  const RealGrid gs = mobility_symbol(g, m.mobility);
  const RealGrid cs = poly_symbol(g, m.stabilizer);
  const RealGrid D = resolvent_denominator(g, h, m.mobility, m.stabilizer, m.lg_poly);

  ComplexGrid W = fft2(w_out).coeffs;
  ComplexGrid V(g.nx, g.ny), Yspec(g.nx, g.ny);
  for (int j = static_cast<int>(u.size()) - 2; j >= 0; --j) {
    for (Eigen::Index i = 0; i < W.size(); ++i) {
      V.data()[i] = W.data()[i] / D.data()[i];
      Yspec.data()[i] = h * gs.data()[i] * V.data()[i];
    }
    const Field y = ifft2({w_out.grid, Yspec});
    const Field dx = pointwise_vjp(theta, m, u[j], y, grad);
    const ComplexGrid Q = fft2(dx).coeffs;
    for (Eigen::Index i = 0; i < W.size(); ++i) {
      W.data()[i] = V.data()[i] - cs.data()[i] * Yspec.data()[i] + Q.data()[i];
    }
  }
}

// Adjoint of one RK4 substep. w is dL/d(output) on entry and dL/d(input) on
// exit. Stage inputs come from the forward trace.
void rk4_substep_backward(const Field& a1, const Rk4Trace& tr, double h, const ModelSpec& m,
                          const MlpParams& theta, Field& w, ParamGrad& grad) {
  const GridSpec& g = *w.grid;
  const RealGrid gs = mobility_symbol(g, m.mobility);
  const RealGrid lgs = poly_symbol(g, m.lg_poly);

  // B(a, z) = (L_g + diag(n'(a))) G_h z, plus the theta contribution of the
  // stage evaluated at a with cotangent G_h z.
  auto B = [&](const Field& a, const Field& z) {
    const SpectralField Z = fft2(z);
    ComplexGrid GZ(g.nx, g.ny), LgGZ(g.nx, g.ny);
    for (Eigen::Index i = 0; i < GZ.size(); ++i) {
      GZ.data()[i] = gs.data()[i] * Z.coeffs.data()[i];
      LgGZ.data()[i] = lgs.data()[i] * GZ.data()[i];
    }
    const Field gz = ifft2({z.grid, GZ});
    Field da = pointwise_vjp(theta, m, a, gz, grad);
    da.values += ifft2({z.grid, LgGZ}).values;
    return da;
  };

  const Field t4{w.grid, (h / 6.0) * w.values};
  const Field da4 = B(tr.a4, t4);
  const Field t3{w.grid, (h / 3.0) * w.values + h * da4.values};
  const Field da3 = B(tr.a3, t3);
  const Field t2{w.grid, (h / 3.0) * w.values + (h / 2.0) * da3.values};
  const Field da2 = B(tr.a2, t2);
  const Field t1{w.grid, (h / 6.0) * w.values + (h / 2.0) * da2.values};
  const Field da1 = B(a1, t1);
  w.values += da1.values + da2.values + da3.values + da4.values;
}

}  // namespace

Field map_linear(const Field& phi1, double delta, int K, const ModelSpec& m) {
  if (K < 1) throw ValidationError("map_linear: K must be at least 1");
  const double h = delta / K;
  Field u = phi1;
  for (int j = 0; j < K; ++j) {
    try {
      u = step_stabilized(u, h, m);
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << "map_linear: substep " << j + 1 << " of " << K << ": " << e.what();
      throw NumericalError(msg.str());
    }
  }
  return u;
}

Field map_rk4(const Field& phi1, double delta, int K, const ModelSpec& m) {
  if (K < 1) throw ValidationError("map_rk4: K must be at least 1");
  const double h = delta / K;
  Field u = phi1;
  for (int j = 0; j < K; ++j) {
    try {
      u = step_rk4(u, h, m);
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << "map_rk4: substep " << j + 1 << " of " << K << ": " << e.what();
      throw NumericalError(msg.str());
    }
  }
  return u;
}

double loss_with_bulk(const BulkFunction& bulk, const Dataset& data, const LossVariant& v,
                      const ModelSpec& model_template) {
  check_variant(v);
  ModelSpec m = model_template;
  m.bulk = bulk;

  double acc = 0.0;
  for (std::size_t i = 0; i < data.pairs.size(); ++i) {
    const SnapshotPair& pair = data.pairs[i];
    check_same_grid(pair.phi1, pair.phi2, "loss");
    Field pred;
    try {
      pred = (v.family == LossFamily::Linear)
                 ? map_linear(pair.phi1, pair.delta, v.recursion_depth, m)
                 : map_rk4(pair.phi1, pair.delta, v.recursion_depth, m);
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << "loss: pair " << i << ": " << e.what();
      throw NumericalError(msg.str());
    }
    acc += (pred.values - pair.phi2.values).square().sum() /
           static_cast<double>(pair.phi1.values.size());
  }
  double total = data.pairs.empty() ? 0.0 : acc / static_cast<double>(data.pairs.size());
  if (v.anchor_weight != 0.0) {
    const double f0 = bulk_eval(bulk, 0.0);
    total += v.anchor_weight * f0 * f0;
  }
  return total;
}

double loss(const MlpParams& theta, const Dataset& data, const LossVariant& v,
            const ModelSpec& model_template) {
  return loss_with_bulk(Learned{theta}, data, v, model_template);
}

double loss_and_grad(const MlpParams& theta, const Dataset& data, const LossVariant& v,
                     const ModelSpec& model_template, ParamGrad& grad) {
  check_variant(v);
  ModelSpec m = model_template;
  m.bulk = Learned{theta};
  grad = zero_like(theta);
  const int K = v.recursion_depth;
  const double npairs = static_cast<double>(data.pairs.size());

  double acc = 0.0;
  for (std::size_t i = 0; i < data.pairs.size(); ++i) {
    const SnapshotPair& pair = data.pairs[i];
    check_same_grid(pair.phi1, pair.phi2, "loss_and_grad");
    const double h = pair.delta / K;
    const double n_nodes = static_cast<double>(pair.phi1.values.size());

    try {
      if (v.family == LossFamily::Linear) {
        std::vector<Field> u(K + 1);
        u[0] = pair.phi1;
        for (int j = 0; j < K; ++j) u[j + 1] = step_stabilized(u[j], h, m);
        acc += (u[K].values - pair.phi2.values).square().sum() / n_nodes;
        const Field w{pair.phi1.grid,
                      (2.0 / (npairs * n_nodes)) * (u[K].values - pair.phi2.values)};
        linear_pair_backward(u, h, m, theta, w, grad);
      } else {
        std::vector<Field> u(K + 1);
        std::vector<Rk4Trace> traces(K);
        u[0] = pair.phi1;
        for (int j = 0; j < K; ++j) u[j + 1] = step_rk4_traced(u[j], h, m, traces[j]);
        acc += (u[K].values - pair.phi2.values).square().sum() / n_nodes;
        Field w{pair.phi1.grid,
                (2.0 / (npairs * n_nodes)) * (u[K].values - pair.phi2.values)};
        for (int j = K - 1; j >= 0; --j) {
          rk4_substep_backward(u[j], traces[j], h, m, theta, w, grad);
        }
      }
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << "loss_and_grad: pair " << i << ": " << e.what();
      throw NumericalError(msg.str());
    }
  }

  double total = data.pairs.empty() ? 0.0 : acc / npairs;
  if (v.anchor_weight != 0.0) {
    const double f0 = mlp_forward(theta, 0.0);
    total += v.anchor_weight * f0 * f0;
    mlp_vjp(theta, 0.0, 2.0 * v.anchor_weight * f0, grad);
  }
  return total;
}

TrainReport train(const Dataset& data, const ModelSpec& model_template, const TrainConfig& cfg,
                  const MlpParams* init_params, const IterCallback& on_iter) {
  if (data.pairs.empty()) throw ValidationError("train: dataset is empty");
  check_variant(cfg.variant);
  if (cfg.adam_iters < 0 || !(cfg.adam_lr > 0.0)) {
    throw ValidationError("train: adam_iters must be non-negative and adam_lr positive");
  }
  if (cfg.lbfgs_enabled && (cfg.lbfgs_max_iters < 0 || !(cfg.lbfgs_grad_tol > 0.0) ||
                            cfg.lbfgs_history < 1)) {
    throw ValidationError("train: invalid L-BFGS configuration");
  }

  const auto t0 = std::chrono::steady_clock::now();
  const MlpParams proto = init_params ? *init_params : mlp_init(cfg.layer_sizes, cfg.seed);
  Eigen::VectorXd x = flatten(proto);
  Eigen::VectorXd x_last_finite = x;
  std::vector<double> history;

  auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& gout) {
    const MlpParams p = unflatten_like(proto, v);
    ParamGrad pg;
    double L = 0.0;
    try {
      L = loss_and_grad(p, data, cfg.variant, model_template, pg);
    } catch (const NumericalError& e) {
      const int iter = static_cast<int>(history.size()) + 1;
      throw TrainingDiverged(iter, unflatten_like(proto, x_last_finite),
                             "train: numerical failure at iteration " + std::to_string(iter) +
                                 ": " + e.what());
    }
    gout = flatten(pg);
    return L;
  };
  auto record = [&](int t, double fx) {
    if (!std::isfinite(fx)) {
      throw TrainingDiverged(t, unflatten_like(proto, x_last_finite),
                             "train: non-finite loss at iteration " + std::to_string(t));
    }
    history.push_back(fx);
    x_last_finite = x;
    if (on_iter) on_iter(t, fx);
  };

  AdamOptions aopt;
  aopt.iters = cfg.adam_iters;
  aopt.lr = cfg.adam_lr;
  aopt.beta1 = cfg.adam_beta1;
  aopt.beta2 = cfg.adam_beta2;
  aopt.eps = cfg.adam_eps;
  adam_minimize(objective, x, aopt, record);

  LbfgsResult lres;
  if (cfg.lbfgs_enabled) {
    LbfgsOptions lopt;
    lopt.max_iters = cfg.lbfgs_max_iters;
    lopt.history = cfg.lbfgs_history;
    lopt.grad_tol = cfg.lbfgs_grad_tol;
    lres = lbfgs_minimize(objective, x, lopt,
                          [&](int t, double fx) { record(cfg.adam_iters + t, fx); });
  }

  const auto t1 = std::chrono::steady_clock::now();

  double phi_lo = 0.0, phi_hi = 0.0;
  bool first = true;
  for (const SnapshotPair& p : data.pairs) {
    for (const Field* f : {&p.phi1, &p.phi2}) {
      const double mn = f->values.minCoeff();
      const double mx = f->values.maxCoeff();
      phi_lo = first ? mn : std::min(phi_lo, mn);
      phi_hi = first ? mx : std::max(phi_hi, mx);
      first = false;
    }
  }

  TrainReport rep;
  rep.final_params = unflatten_like(proto, x);
  rep.loss_history = std::move(history);
  rep.wall_time_sec = std::chrono::duration<double>(t1 - t0).count();
  rep.metadata = {
      {"loss",
       {{"family", cfg.variant.family == LossFamily::Linear ? "linear" : "rk4"},
        {"recursion_depth", cfg.variant.recursion_depth},
        {"anchor_weight", cfg.variant.anchor_weight},
        {"normalization", "per-pair per-node mean"}}},
      {"optimizer",
       {{"adam_iters", cfg.adam_iters},
        {"adam_lr", cfg.adam_lr},
        {"adam_betas", {cfg.adam_beta1, cfg.adam_beta2}},
        {"adam_eps", cfg.adam_eps},
        {"lbfgs_enabled", cfg.lbfgs_enabled},
        {"lbfgs_max_iters", cfg.lbfgs_max_iters},
        {"lbfgs_grad_tol", cfg.lbfgs_grad_tol},
        {"lbfgs_history", cfg.lbfgs_history},
        {"lbfgs_iters_used", lres.iters},
        {"lbfgs_converged", lres.converged}}},
      {"seed", cfg.seed},
      {"prng", Xoshiro256pp::kName},
      {"layer_sizes", cfg.layer_sizes},
      {"data_phi_range", {phi_lo, phi_hi}},
      {"dataset",
       {{"pairs", data.pairs.size()},
        {"grid", {data.grid->nx, data.grid->ny}},
        {"meta", data.meta}}},
  };
  return rep;
}

ErrorReport evaluate_f(const MlpParams& theta, const BulkFunction* truth, double lo, double hi,
                       int npoints) {
  if (npoints < 2) throw ValidationError("evaluate_f: need at least two sample points");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
    throw ValidationError("evaluate_f: invalid phi range");
  }
  if (truth && std::holds_alternative<FloryHuggins>(*truth) && (lo <= 0.0 || hi >= 1.0)) {
    throw ValidationError("evaluate_f: Flory-Huggins truth is only defined on (0, 1)");
  }
  ErrorReport rep;
  rep.has_truth = truth != nullptr;
  rep.table.reserve(npoints);
  double sum2 = 0.0;
  for (int i = 0; i < npoints; ++i) {
    const double phi = lo + (hi - lo) * static_cast<double>(i) / (npoints - 1);
    CurvePoint pt;
    pt.phi = phi;
    pt.f_learned = mlp_forward(theta, phi);
    if (truth) {
      pt.f_true = bulk_eval(*truth, phi);
      const double d = std::abs(pt.f_learned - *pt.f_true);
      rep.linf = std::max(rep.linf, d);
      sum2 += d * d;
    }
    rep.table.push_back(pt);
  }
  if (truth) rep.l2 = std::sqrt(sum2 / npoints);
  return rep;
}

}  // namespace spinn
