#include "spinn/mlp.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>

#include "spinn/rng.hpp"

namespace spinn {

namespace {

void validate_shape(const MlpParams& p, const char* where) {
  const std::size_t L = p.weights.size();
  if (p.layer_sizes.size() < 2 || L != p.layer_sizes.size() - 1 || p.biases.size() != L) {
    throw ValidationError(std::string(where) + ": inconsistent layer structure");
  }
  for (std::size_t l = 0; l < L; ++l) {
    if (p.weights[l].rows() != p.layer_sizes[l + 1] || p.weights[l].cols() != p.layer_sizes[l] ||
        p.biases[l].size() != p.layer_sizes[l + 1]) {
      throw ValidationError(std::string(where) + ": weight/bias shapes do not match layer_sizes");
    }
  }
}

// Structure-of-arrays evaluation over a batch of n scalar inputs. act[l]
// holds the output of layer l as n_l contiguous lanes of length n; act[0] is
// the input. The scalar entry points call this with n = 1, so field and
// scalar evaluation share one arithmetic path and agree bitwise.
void forward_batch(const MlpParams& p, const double* x, std::ptrdiff_t n,
                   std::vector<std::vector<double>>& act) {
  const int L = static_cast<int>(p.weights.size());
  act.resize(L + 1);
  act[0].assign(x, x + n);
  for (int l = 0; l < L; ++l) {
    const int n_in = p.layer_sizes[l];
    const int n_out = p.layer_sizes[l + 1];
    act[l + 1].resize(static_cast<std::size_t>(n_out) * n);
    const Eigen::MatrixXd& W = p.weights[l];
    const Eigen::VectorXd& b = p.biases[l];
    for (int i = 0; i < n_out; ++i) {
      double* o = act[l + 1].data() + static_cast<std::ptrdiff_t>(i) * n;
      const double bi = b[i];
      for (std::ptrdiff_t t = 0; t < n; ++t) o[t] = bi;
      for (int j = 0; j < n_in; ++j) {
        const double w = W(i, j);
        const double* aj = act[l].data() + static_cast<std::ptrdiff_t>(j) * n;
        for (std::ptrdiff_t t = 0; t < n; ++t) o[t] += w * aj[t];
      }
    }
    if (l + 1 < L) {
      double* data = act[l + 1].data();
      const std::ptrdiff_t sz = static_cast<std::ptrdiff_t>(n_out) * n;
      for (std::ptrdiff_t t = 0; t < sz; ++t) data[t] = std::tanh(data[t]);
    }
  }
}

// Backprop over the same batch. cot is dL/d(output); dx receives
// dL/d(input); dtheta accumulates over lanes in index order.
void vjp_batch(const MlpParams& p, const double* x, const double* cot, std::ptrdiff_t n,
               double* dx, ParamGrad& dtheta) {
  const int L = static_cast<int>(p.weights.size());
  std::vector<std::vector<double>> act;
  forward_batch(p, x, n, act);

  // delta = dL/d(pre-activation) of the layer being processed; the output
  // layer is linear so it starts as the cotangent itself.
  std::vector<double> delta(cot, cot + n);
  std::vector<double> delta_prev;
  for (int l = L - 1; l >= 0; --l) {
    const int n_in = p.layer_sizes[l];
    const int n_out = p.layer_sizes[l + 1];
    Eigen::MatrixXd& dW = dtheta.weights[l];
    Eigen::VectorXd& db = dtheta.biases[l];
    for (int i = 0; i < n_out; ++i) {
      const double* di = delta.data() + static_cast<std::ptrdiff_t>(i) * n;
      double acc_b = 0.0;
      for (std::ptrdiff_t t = 0; t < n; ++t) acc_b += di[t];
      db[i] += acc_b;
      for (int j = 0; j < n_in; ++j) {
        const double* aj = act[l].data() + static_cast<std::ptrdiff_t>(j) * n;
        double acc = 0.0;
        for (std::ptrdiff_t t = 0; t < n; ++t) acc += di[t] * aj[t];
        dW(i, j) += acc;
      }
    }
    delta_prev.assign(static_cast<std::size_t>(n_in) * n, 0.0);
    for (int j = 0; j < n_in; ++j) {
      double* dj = delta_prev.data() + static_cast<std::ptrdiff_t>(j) * n;
      for (int i = 0; i < n_out; ++i) {
        const double w = p.weights[l](i, j);
        const double* di = delta.data() + static_cast<std::ptrdiff_t>(i) * n;
        for (std::ptrdiff_t t = 0; t < n; ++t) dj[t] += w * di[t];
      }
      if (l > 0) {
        // act[l] is a tanh output for hidden layers.
        const double* aj = act[l].data() + static_cast<std::ptrdiff_t>(j) * n;
        for (std::ptrdiff_t t = 0; t < n; ++t) dj[t] *= 1.0 - aj[t] * aj[t];
      }
    }
    delta.swap(delta_prev);
  }
  for (std::ptrdiff_t t = 0; t < n; ++t) dx[t] = delta[t];
}

}  // namespace

MlpParams mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw ValidationError("mlp_init: need at least an input and an output layer");
  }
  if (layer_sizes.front() != 1 || layer_sizes.back() != 1) {
    throw ValidationError("mlp_init: the bulk network is scalar to scalar; layer_sizes must start and end with 1");
  }
  for (int s : layer_sizes) {
    if (s < 1) throw ValidationError("mlp_init: layer sizes must be positive");
  }
  MlpParams p;
  p.layer_sizes = layer_sizes;
  Xoshiro256pp rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int n_in = layer_sizes[l];
    const int n_out = layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / (n_in + n_out));
    Eigen::MatrixXd W(n_out, n_in);
    for (int i = 0; i < n_out; ++i)
      for (int j = 0; j < n_in; ++j) W(i, j) = limit * rng.uniform_sym();
    p.weights.push_back(std::move(W));
    p.biases.push_back(Eigen::VectorXd::Zero(n_out));
  }
  return p;
}

ParamGrad zero_like(const MlpParams& p) {
  ParamGrad g;
  g.layer_sizes = p.layer_sizes;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(p.biases[l].size()));
  }
  return g;
}

Eigen::Index param_count(const MlpParams& p) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l) n += p.weights[l].size() + p.biases[l].size();
  return n;
}

Eigen::VectorXd flatten(const MlpParams& p) {
  Eigen::VectorXd v(param_count(p));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const Eigen::MatrixXd& W = p.weights[l];
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) v[at++] = W(i, j);
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) v[at++] = p.biases[l][i];
  }
  return v;
}

MlpParams unflatten_like(const MlpParams& proto, const Eigen::VectorXd& v) {
  if (v.size() != param_count(proto)) {
    throw ValidationError("unflatten_like: vector length does not match the parameter count");
  }
  MlpParams p = proto;
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    Eigen::MatrixXd& W = p.weights[l];
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = v[at++];
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) p.biases[l][i] = v[at++];
  }
  return p;
}

double mlp_forward(const MlpParams& p, double x) {
  validate_shape(p, "mlp_forward");
  std::vector<std::vector<double>> act;
  forward_batch(p, &x, 1, act);
  return act.back()[0];
}

Field mlp_forward_field(const MlpParams& p, const Field& x) {
  validate_shape(p, "mlp_forward_field");
  Field out;
  out.grid = x.grid;
  out.values.resize(x.values.rows(), x.values.cols());
  std::vector<std::vector<double>> act;
  forward_batch(p, x.values.data(), x.values.size(), act);
  std::copy(act.back().begin(), act.back().end(), out.values.data());
  return out;
}

double mlp_vjp(const MlpParams& p, double x, double cotangent, ParamGrad& dtheta) {
  validate_shape(p, "mlp_vjp");
  double dx = 0.0;
  vjp_batch(p, &x, &cotangent, 1, &dx, dtheta);
  return dx;
}

Field mlp_vjp_field(const MlpParams& p, const Field& x, const Field& cotangent,
                    ParamGrad& dtheta) {
  validate_shape(p, "mlp_vjp_field");
  check_same_grid(x, cotangent, "mlp_vjp_field");
  Field dx;
  dx.grid = x.grid;
  dx.values.resize(x.values.rows(), x.values.cols());
  vjp_batch(p, x.values.data(), cotangent.values.data(), x.values.size(), dx.values.data(),
            dtheta);
  return dx;
}

}  // namespace spinn
