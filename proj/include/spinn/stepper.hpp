#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "spinn/dataset.hpp"
#include "spinn/model.hpp"

namespace spinn {

enum class SchemeKind { StabilizedFirstOrder, PredictorCorrector, ExplicitRK4 };

struct SimulationPlan {
  Field initial;
  double dt = 0.0;
  int n_steps = 0;
  SchemeKind scheme = SchemeKind::StabilizedFirstOrder;
  std::vector<int> record_at;  // sorted step indices in [0, n_steps]
};

// One step of the stabilized semi-implicit scheme:
//   phi' = (1 - delta*G_h(C+L_g))^{-1} ( phi + delta*G_h[N_g(phi) + f(phi) - C phi] ).
// This is also the substep the linear SPINN map composes.
Field step_stabilized(const Field& phi, double delta, const ModelSpec& m);

// Stabilized predictor (half step) + midpoint-linear corrector; second order.
Field step_predictor_corrector(const Field& phi, double delta, const ModelSpec& m);

// Stage inputs of one classical RK4 step, kept for reverse mode.
struct Rk4Trace {
  Field a2, a3, a4;
};

// Classical four-stage explicit step with K_i = G_h[g(.) + f(.)].
Field step_rk4(const Field& phi, double delta, const ModelSpec& m);
Field step_rk4_traced(const Field& phi, double delta, const ModelSpec& m, Rk4Trace& trace);

struct Snapshot {
  double time = 0.0;
  Field state;
};

std::vector<Snapshot> simulate(const SimulationPlan& plan, const ModelSpec& m);

// Initial conditions used by the worked examples.
struct UniformRandomInit {
  double amplitude = 0.0;  // offset + amplitude * rand(), rand() uniform in [-1, 1]
  double offset = 0.0;
};
struct TanhDiskInit {
  double radius = 0.0;  // (1 + tanh((radius - sqrt(x^2+y^2)) / (sqrt(2)*eps))) / 2
  double eps = 0.0;
};
using InitKind = std::variant<UniformRandomInit, TanhDiskInit>;

// Random node values are drawn i.i.d. in row-major node order from the seeded
// generator, so initial states reproduce byte for byte.
Field make_initial_condition(const GridPtr& g, const InitKind& init, std::uint64_t seed);

struct PairRequest {
  double t_start = 0.0;
  double delta = 0.0;
};

// Integrates the model at fine_dt from the seeded initial condition and
// extracts (phi(t), phi(t+delta), delta) for every request. Allen-Cahn runs
// use explicit RK4; Cahn-Hilliard runs use the predictor-corrector scheme,
// whose implicit part absorbs the stiff biharmonic term. Every t_start and
// delta must sit on the fine_dt lattice to within 1e-12.
Dataset generate_dataset(const ModelSpec& m, const GridPtr& g, const InitKind& init,
                         double fine_dt, std::span<const PairRequest> requests,
                         std::uint64_t seed);

}  // namespace spinn
