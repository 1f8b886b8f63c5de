#include "spinn/model.hpp"

#include <algorithm>
#include <cmath>

namespace spinn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Flory-Huggins arguments are clamped away from the log singularities so
// rollouts that overshoot [0, 1] stay finite.
constexpr double kFhClamp = 1e-12;

double fh_clamp(double phi) { return std::clamp(phi, kFhClamp, 1.0 - kFhClamp); }

}  // namespace

double bulk_eval(const BulkFunction& b, double phi) {
  return std::visit(
      Overloaded{
          [&](const DoubleWell&) { return phi * phi * phi - phi; },
          [&](const FloryHuggins&) {
            const double p = fh_clamp(phi);
            return std::log(p) - 0.5 * std::log(1.0 - p) + 1.5 - 2.0 * p;
          },
          [&](const Learned& l) { return mlp_forward(l.params, phi); },
      },
      b);
}

double bulk_deriv(const BulkFunction& b, double phi) {
  return std::visit(
      Overloaded{
          [&](const DoubleWell&) { return 3.0 * phi * phi - 1.0; },
          [&](const FloryHuggins&) {
            const double p = fh_clamp(phi);
            return 1.0 / p + 0.5 / (1.0 - p) - 2.0;
          },
          [&](const Learned& l) {
            ParamGrad scratch = zero_like(l.params);
            return mlp_vjp(l.params, phi, 1.0, scratch);
          },
      },
      b);
}

Field bulk_eval_field(const BulkFunction& b, const Field& phi) {
  if (const auto* l = std::get_if<Learned>(&b)) return mlp_forward_field(l->params, phi);
  Field out;
  out.grid = phi.grid;
  out.values = phi.values.unaryExpr([&](double v) { return bulk_eval(b, v); });
  return out;
}

double bulk_primitive(const BulkFunction& b, double phi) {
  return std::visit(
      Overloaded{
          [&](const DoubleWell&) {
            const double w = 1.0 - phi * phi;
            return 0.25 * w * w;
          },
          [&](const FloryHuggins&) {
            const double p = fh_clamp(phi);
            return p * std::log(p) + 0.5 * (1.0 - p) * std::log(1.0 - p) + 2.0 * p * (1.0 - p);
          },
          [&](const Learned&) -> double {
            throw ValidationError("bulk_primitive: no antiderivative for a learned bulk");
          },
      },
      b);
}

std::vector<double> default_stabilizer(MobilityType kind) {
  if (kind == MobilityType::AllenCahn) return {2.0};
  return {0.0, -2.0};
}

std::string bulk_name(const BulkFunction& b) {
  return std::visit(Overloaded{
                        [](const DoubleWell&) { return std::string("double-well"); },
                        [](const FloryHuggins&) { return std::string("flory-huggins"); },
                        [](const Learned&) { return std::string("learned"); },
                    },
                    b);
}

std::string mobility_name(MobilityType kind) {
  return kind == MobilityType::AllenCahn ? "allen-cahn" : "cahn-hilliard";
}

ModelSpec make_model(double eps, MobilityKind mobility, std::vector<double> stabilizer,
                     BulkFunction bulk) {
  if (!(eps > 0.0)) throw ValidationError("make_model: eps must be positive");
  if (!(mobility.M > 0.0)) throw ValidationError("make_model: mobility M must be positive");
  if (stabilizer.size() > 5) {
    throw ValidationError("make_model: stabilizer polynomial degree must be at most 4");
  }
  ModelSpec m;
  m.eps = eps;
  m.mobility = mobility;
  m.stabilizer = std::move(stabilizer);
  m.bulk = std::move(bulk);
  m.lg_poly = {0.0, -eps * eps};
  return m;
}

double free_energy(const Field& phi, const ModelSpec& m) {
  if (std::holds_alternative<Learned>(m.bulk)) {
    throw ValidationError("free_energy: diagnostic is not defined for a learned bulk");
  }
  const GridSpec& g = *phi.grid;
  const SpectralField F = fft2(phi);

  ComplexGrid gx(g.nx, g.ny), gy(g.nx, g.ny);
  for (int j = 0; j < g.nx; ++j) {
    for (int k = 0; k < g.ny; ++k) {
      const std::complex<double> c = F.coeffs(j, k);
      gx(j, k) = std::complex<double>(0.0, g.kx[j]) * c;
      gy(j, k) = std::complex<double>(0.0, g.ky[k]) * c;
    }
  }
  const RealGrid dphidx = ifft2_complex({phi.grid, std::move(gx)}).real();
  const RealGrid dphidy = ifft2_complex({phi.grid, std::move(gy)}).real();

  const double grad2 = (dphidx * dphidx + dphidy * dphidy).sum();
  double bulk_sum = 0.0;
  for (Eigen::Index i = 0; i < phi.values.size(); ++i) {
    bulk_sum += bulk_primitive(m.bulk, phi.values.data()[i]);
  }
  return g.hx * g.hy * (0.5 * m.eps * m.eps * grad2 + bulk_sum);
}

Field rhs_eval(const Field& phi, const ModelSpec& m) {
  const GridSpec& g = *phi.grid;
  Field w = bulk_eval_field(m.bulk, phi);
  if (m.ng) w.values += phi.values.unaryExpr([&](double v) { return m.ng(v); });

  const SpectralField P = fft2(phi);
  const SpectralField W = fft2(w);
  const RealGrid gs = mobility_symbol(g, m.mobility);
  const RealGrid lgs = poly_symbol(g, m.lg_poly);

  ComplexGrid out(g.nx, g.ny);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out.data()[i] = gs.data()[i] * (lgs.data()[i] * P.coeffs.data()[i] + W.coeffs.data()[i]);
  }
  return ifft2({phi.grid, std::move(out)});
}

double total_mass(const Field& phi) {
  return phi.grid->hx * phi.grid->hy * phi.values.sum();
}

}  // namespace spinn
