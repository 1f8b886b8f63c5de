#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "spinn/errors.hpp"

namespace spinn {

using RealGrid = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexGrid =
    Eigen::Array<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Periodic uniform 2D grid with Fourier wavenumber tables and the Laplacian
// symbol. Node (x_i, y_j) sits at row i, column j of a RealGrid, so the
// flattened layout is row-major with linear index i*ny + j. The domain is
// centered: x_i = -lx/2 + i*hx, y_j = -ly/2 + j*hy.
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double lx = 0.0;
  double ly = 0.0;
  double hx = 0.0;
  double hy = 0.0;
  Eigen::ArrayXd kx;  // angular wavenumbers 2*pi*m/lx, FFT mode ordering
  Eigen::ArrayXd ky;
  RealGrid lam;  // lam(j,k) = -(kx[j]^2 + ky[k]^2), symbol of the Laplacian
};

using GridPtr = std::shared_ptr<const GridSpec>;

GridPtr make_grid(int nx, int ny, double lx, double ly);

// Real-valued grid function in V_h.
struct Field {
  GridPtr grid;
  RealGrid values;
};

// Full complex 2D transform of a Field; Hermitian-symmetric within round-off.
struct SpectralField {
  GridPtr grid;
  ComplexGrid coeffs;
};

Field make_field(const GridPtr& g);
Field constant_field(const GridPtr& g, double c);

Eigen::ArrayXd grid_x(const GridSpec& g);
Eigen::ArrayXd grid_y(const GridSpec& g);

// Samples f(x, y) at every node.
template <class F>
Field sample_field(const GridPtr& g, F&& f) {
  Field out = make_field(g);
  const Eigen::ArrayXd xs = grid_x(*g);
  const Eigen::ArrayXd ys = grid_y(*g);
  for (int i = 0; i < g->nx; ++i)
    for (int j = 0; j < g->ny; ++j) out.values(i, j) = f(xs[i], ys[j]);
  return out;
}

void check_same_grid(const Field& a, const Field& b, const char* where);

// Unnormalized forward DFT; the inverse divides by nx*ny, so
// ifft2(fft2(f)) == f to round-off and a constant field c transforms to a
// single DC coefficient c*nx*ny.
SpectralField fft2(const Field& f);
Field ifft2(const SpectralField& F);
// Inverse transform without truncation to real storage (diagnostic; the
// imaginary residue should stay below 1e-12 for Hermitian inputs).
ComplexGrid ifft2_complex(const SpectralField& F);

// Mobility operator G_h: -M pointwise (Allen-Cahn) or M*Lap_h (Cahn-Hilliard).
enum class MobilityType { AllenCahn, CahnHilliard };

struct MobilityKind {
  MobilityType kind = MobilityType::AllenCahn;
  double M = 1.0;
};

// Symbol of G_h per mode: -M for AC, M*lam for CH.
RealGrid mobility_symbol(const GridSpec& g, const MobilityKind& mob);

double poly_eval(std::span<const double> p, double x);

// Symbol of sum_m p[m] * Lap_h^m per mode.
RealGrid poly_symbol(const GridSpec& g, std::span<const double> p);

// Applies sum_m p[m] * Lap_h^m to f. Degree at most 4. Degree-0 polynomials
// (after dropping trailing zero coefficients) act pointwise, exactly.
Field apply_operator_poly(const Field& f, std::span<const double> p);

Field apply_mobility(const Field& f, const MobilityKind& mob);

// D(lam) = 1 - delta * g(lam) * (c(lam) + lg(lam)). Throws NumericalError
// naming the offending mode if any |D| < 1e-14.
RealGrid resolvent_denominator(const GridSpec& g, double delta, const MobilityKind& mob,
                               std::span<const double> c_poly,
                               std::span<const double> lg_poly);

// Applies (1 - delta*G_h(C + L_g))^{-1}, diagonal in Fourier space. delta == 0
// is the identity map, exactly.
Field solve_resolvent(const Field& rhs, double delta, const MobilityKind& mob,
                      std::span<const double> c_poly, std::span<const double> lg_poly);

// Unweighted sums over nodes; quadrature weights are the caller's business.
double inner(const Field& a, const Field& b);
double max_abs(const Field& a);

}  // namespace spinn
