#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spinn/dataio.hpp"
#include "spinn/dataset.hpp"
#include "spinn/model.hpp"
#include "spinn/optim.hpp"
#include "spinn/stepper.hpp"

namespace spinn {

enum class LossFamily { Linear, RK4 };

struct LossVariant {
  LossFamily family = LossFamily::Linear;
  int recursion_depth = 1;     // K; depth 1 is the single-step loss
  double anchor_weight = 0.0;  // mu in mu * N_f(0)^2, pins the CH additive constant
};

struct TrainConfig {
  LossVariant variant;
  std::vector<int> layer_sizes = {1, 20, 20, 1};
  int adam_iters = 10000;
  double adam_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool lbfgs_enabled = true;
  int lbfgs_max_iters = 5000;
  double lbfgs_grad_tol = 1e-9;
  int lbfgs_history = 10;
  std::uint64_t seed = 0;
};

struct TrainReport {
  MlpParams final_params;
  std::vector<double> loss_history;  // one entry per accepted iteration
  double wall_time_sec = 0.0;
  json metadata;
};

// Thrown when training reaches a non-finite loss; carries the last finite
// parameters so a run can be inspected post mortem.
struct TrainingDiverged : NumericalError {
  TrainingDiverged(int iter, MlpParams params, const std::string& what)
      : NumericalError(what), iteration(iter), last_params(std::move(params)) {}
  int iteration;
  MlpParams last_params;
};

// K stabilized substeps of size delta/K (the recursive linear map); K = 1 is
// exactly step_stabilized. Works with any bulk, learned or known.
Field map_linear(const Field& phi1, double delta, int K, const ModelSpec& m);

// K classical RK4 substeps of size delta/K; K = 1 is exactly step_rk4.
Field map_rk4(const Field& phi1, double delta, int K, const ModelSpec& m);

// Mean over pairs of the per-node mean squared mismatch between phi2 and the
// mapped phi1, plus anchor_weight * f(0)^2. The per-node/per-pair mean rescales
// the plain sum of squares by 1/(N*nx*ny) for a fixed dataset, leaving the
// argmin unchanged.
double loss_with_bulk(const BulkFunction& bulk, const Dataset& data, const LossVariant& v,
                      const ModelSpec& model_template);
double loss(const MlpParams& theta, const Dataset& data, const LossVariant& v,
            const ModelSpec& model_template);

// Loss value plus its exact reverse-mode gradient through every substep.
double loss_and_grad(const MlpParams& theta, const Dataset& data, const LossVariant& v,
                     const ModelSpec& model_template, ParamGrad& grad);

// Full-batch Adam followed (optionally) by L-BFGS. Deterministic for a fixed
// seed. model_template supplies the mobility, stabilizer and L_g; its bulk is
// replaced by the network being trained.
TrainReport train(const Dataset& data, const ModelSpec& model_template, const TrainConfig& cfg,
                  const MlpParams* init_params = nullptr, const IterCallback& on_iter = {});

struct ErrorReport {
  double linf = 0.0;
  double l2 = 0.0;  // root mean square difference over the sample grid
  bool has_truth = false;
  std::vector<CurvePoint> table;
};

// Samples N_f (and optionally a reference bulk) on npoints uniformly spaced
// values of phi in [lo, hi].
ErrorReport evaluate_f(const MlpParams& theta, const BulkFunction* truth, double lo, double hi,
                       int npoints);

}  // namespace spinn
