#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "spinn/grid.hpp"

namespace spinn {

// Parameters of the pointwise scalar network N_f(phi; theta): affine layers
// with tanh on the hidden layers and a linear output. weights[l] maps layer l
// to layer l+1 and has shape layer_sizes[l+1] x layer_sizes[l].
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Gradient of a scalar loss with respect to MlpParams; shape-congruent.
using ParamGrad = MlpParams;

// Glorot-uniform weights, zero biases; deterministic for a fixed seed
// (xoshiro256++, draws in layer order, row-major within each weight matrix).
MlpParams mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed);

ParamGrad zero_like(const MlpParams& p);
Eigen::Index param_count(const MlpParams& p);

// Packing order: per layer, weight rows then bias.
Eigen::VectorXd flatten(const MlpParams& p);
MlpParams unflatten_like(const MlpParams& proto, const Eigen::VectorXd& v);

double mlp_forward(const MlpParams& p, double x);
Field mlp_forward_field(const MlpParams& p, const Field& x);

// Reverse mode. Returns dx = cotangent * dN_f/dx and accumulates
// cotangent * dN_f/dtheta into dtheta. The field version sums the theta
// gradient over nodes in row-major order.
double mlp_vjp(const MlpParams& p, double x, double cotangent, ParamGrad& dtheta);
Field mlp_vjp_field(const MlpParams& p, const Field& x, const Field& cotangent,
                    ParamGrad& dtheta);

}  // namespace spinn
