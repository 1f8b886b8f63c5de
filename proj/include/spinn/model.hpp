#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "spinn/grid.hpp"
#include "spinn/mlp.hpp"

namespace spinn {

// Bulk chemical potential f(phi) = F'(phi).
struct DoubleWell {};     // f = phi^3 - phi, F = (1 - phi^2)^2 / 4
struct FloryHuggins {};   // f = ln(phi) - ln(1-phi)/2 + 3/2 - 2*phi on (0, 1)
struct Learned {          // f = N_f(phi; theta)
  MlpParams params;
};
using BulkFunction = std::variant<DoubleWell, FloryHuggins, Learned>;

double bulk_eval(const BulkFunction& b, double phi);
double bulk_deriv(const BulkFunction& b, double phi);  // df/dphi
Field bulk_eval_field(const BulkFunction& b, const Field& phi);

// Antiderivative F with F' = f as printed for the known bulks. For
// Flory-Huggins the printed F and printed f are kept as-is even though they
// disagree by 1 - 2*phi; f drives the dynamics, F is a monitor only.
double bulk_primitive(const BulkFunction& b, double phi);

// Full PDE specification: d(phi)/dt = G_h [ L_g phi + N_g(phi) + f(phi) ],
// with stabilizer C used by the semi-implicit schemes. C and L_g are
// polynomials in the discrete Laplacian of degree at most 4.
struct ModelSpec {
  double eps = 0.0;
  MobilityKind mobility;
  std::vector<double> stabilizer;
  BulkFunction bulk;
  std::vector<double> lg_poly;  // default (0, -eps^2), i.e. L_g = -eps^2 * Lap_h
  std::function<double(double)> ng;        // known pointwise nonlinearity; empty = zero
  std::function<double(double)> ng_deriv;  // its derivative; empty = zero
};

// Paper-default stabilizers: C = 2 for Allen-Cahn, C = -2 * Lap_h for
// Cahn-Hilliard.
std::vector<double> default_stabilizer(MobilityType kind);

std::string bulk_name(const BulkFunction& b);  // "double-well", "flory-huggins", "learned"
std::string mobility_name(MobilityType kind);  // "allen-cahn", "cahn-hilliard"

ModelSpec make_model(double eps, MobilityKind mobility, std::vector<double> stabilizer,
                     BulkFunction bulk);

// hx*hy * sum over nodes of [ eps^2/2 |grad_h phi|^2 + F(phi) ], gradient
// computed spectrally. Undefined for a Learned bulk.
double free_energy(const Field& phi, const ModelSpec& m);

// G_h [ L_g phi + N_g(phi) + f(phi) ].
Field rhs_eval(const Field& phi, const ModelSpec& m);

double total_mass(const Field& phi);

}  // namespace spinn
