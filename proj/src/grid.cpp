#include "spinn/grid.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <sstream>

namespace spinn {

namespace {

Eigen::FFT<double>& fft_engine() {
  // kissfft backend; plans are cached per length inside the engine.
  thread_local Eigen::FFT<double> engine;
  return engine;
}

Eigen::ArrayXd wavenumbers(int n, double length) {
  Eigen::ArrayXd k(n);
  const double scale = 2.0 * std::numbers::pi / length;
  for (int j = 0; j < n; ++j) {
    const int m = (j <= n / 2) ? j : j - n;
    k[j] = scale * m;
  }
  return k;
}

}  // namespace

GridPtr make_grid(int nx, int ny, double lx, double ly) {
  if (nx < 2 || ny < 2 || nx % 2 != 0 || ny % 2 != 0) {
    std::ostringstream msg;
    msg << "make_grid: nx and ny must be even and >= 2, got nx=" << nx << " ny=" << ny;
    throw ValidationError(msg.str());
  }
  if (!(lx > 0.0) || !(ly > 0.0)) {
    throw ValidationError("make_grid: domain lengths must be positive");
  }
  auto g = std::make_shared<GridSpec>();
  g->nx = nx;
  g->ny = ny;
  g->lx = lx;
  g->ly = ly;
  g->hx = lx / nx;
  g->hy = ly / ny;
  g->kx = wavenumbers(nx, lx);
  g->ky = wavenumbers(ny, ly);
  g->lam.resize(nx, ny);
  for (int j = 0; j < nx; ++j)
    for (int k = 0; k < ny; ++k) g->lam(j, k) = -(g->kx[j] * g->kx[j] + g->ky[k] * g->ky[k]);
  return g;
}

Field make_field(const GridPtr& g) {
  Field f;
  f.grid = g;
  f.values = RealGrid::Zero(g->nx, g->ny);
  return f;
}

Field constant_field(const GridPtr& g, double c) {
  Field f;
  f.grid = g;
  f.values = RealGrid::Constant(g->nx, g->ny, c);
  return f;
}

Eigen::ArrayXd grid_x(const GridSpec& g) {
  Eigen::ArrayXd xs(g.nx);
  for (int i = 0; i < g.nx; ++i) xs[i] = -0.5 * g.lx + i * g.hx;
  return xs;
}

Eigen::ArrayXd grid_y(const GridSpec& g) {
  Eigen::ArrayXd ys(g.ny);
  for (int j = 0; j < g.ny; ++j) ys[j] = -0.5 * g.ly + j * g.hy;
  return ys;
}

void check_same_grid(const Field& a, const Field& b, const char* where) {
  if (a.grid->nx != b.grid->nx || a.grid->ny != b.grid->ny) {
    std::ostringstream msg;
    msg << where << ": grid dimension mismatch (" << a.grid->nx << "x" << a.grid->ny << " vs "
        << b.grid->nx << "x" << b.grid->ny << ")";
    throw ValidationError(msg.str());
  }
}

SpectralField fft2(const Field& f) {
  const GridSpec& g = *f.grid;
  if (f.values.rows() != g.nx || f.values.cols() != g.ny) {
    throw ValidationError("fft2: field dimensions do not match its grid");
  }
  auto& engine = fft_engine();
  ComplexGrid out(g.nx, g.ny);

  Eigen::VectorXcd rin(g.ny), rout(g.ny);
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) rin[j] = std::complex<double>(f.values(i, j), 0.0);
    engine.fwd(rout, rin);
    for (int j = 0; j < g.ny; ++j) out(i, j) = rout[j];
  }
  Eigen::VectorXcd cin(g.nx), cout(g.nx);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) cin[i] = out(i, j);
    engine.fwd(cout, cin);
    for (int i = 0; i < g.nx; ++i) out(i, j) = cout[i];
  }
  return SpectralField{f.grid, std::move(out)};
}

ComplexGrid ifft2_complex(const SpectralField& F) {
  const GridSpec& g = *F.grid;
  if (F.coeffs.rows() != g.nx || F.coeffs.cols() != g.ny) {
    throw ValidationError("ifft2: coefficient dimensions do not match the grid");
  }
  auto& engine = fft_engine();
  ComplexGrid out = F.coeffs;

  Eigen::VectorXcd cin(g.nx), cout(g.nx);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) cin[i] = out(i, j);
    engine.inv(cout, cin);
    for (int i = 0; i < g.nx; ++i) out(i, j) = cout[i];
  }
  Eigen::VectorXcd rin(g.ny), rout(g.ny);
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) rin[j] = out(i, j);
    engine.inv(rout, rin);
    for (int j = 0; j < g.ny; ++j) out(i, j) = rout[j];
  }
  return out;
}

Field ifft2(const SpectralField& F) {
  Field f;
  f.grid = F.grid;
  f.values = ifft2_complex(F).real();
  return f;
}

RealGrid mobility_symbol(const GridSpec& g, const MobilityKind& mob) {
  if (!(mob.M > 0.0)) throw ValidationError("mobility constant M must be positive");
  if (mob.kind == MobilityType::AllenCahn) return RealGrid::Constant(g.nx, g.ny, -mob.M);
  return mob.M * g.lam;
}

double poly_eval(std::span<const double> p, double x) {
  double acc = 0.0;
  for (std::size_t m = p.size(); m-- > 0;) acc = acc * x + p[m];
  return acc;
}

RealGrid poly_symbol(const GridSpec& g, std::span<const double> p) {
  if (p.size() > 5) {
    throw ValidationError("operator polynomial degree must be at most 4");
  }
  RealGrid out(g.nx, g.ny);
  for (int j = 0; j < g.nx; ++j)
    for (int k = 0; k < g.ny; ++k) out(j, k) = poly_eval(p, g.lam(j, k));
  return out;
}

Field apply_operator_poly(const Field& f, std::span<const double> p) {
  if (p.size() > 5) {
    throw ValidationError("apply_operator_poly: polynomial degree must be at most 4");
  }
  while (p.size() > 1 && p.back() == 0.0) p = p.first(p.size() - 1);
  if (p.empty()) return make_field(f.grid);
  if (p.size() == 1) {
    // Degree zero is a pointwise scaling; no transform, exact.
    Field out;
    out.grid = f.grid;
    out.values = p[0] * f.values;
    return out;
  }
  SpectralField F = fft2(f);
  const RealGrid sym = poly_symbol(*f.grid, p);
  for (Eigen::Index i = 0; i < F.coeffs.size(); ++i) F.coeffs.data()[i] *= sym.data()[i];
  return ifft2(F);
}

Field apply_mobility(const Field& f, const MobilityKind& mob) {
  if (!(mob.M > 0.0)) throw ValidationError("apply_mobility: M must be positive");
  if (mob.kind == MobilityType::AllenCahn) {
    Field out;
    out.grid = f.grid;
    out.values = -mob.M * f.values;
    return out;
  }
  const double p[2] = {0.0, mob.M};
  return apply_operator_poly(f, p);
}

RealGrid resolvent_denominator(const GridSpec& g, double delta, const MobilityKind& mob,
                               std::span<const double> c_poly,
                               std::span<const double> lg_poly) {
  const RealGrid gs = mobility_symbol(g, mob);
  const RealGrid cs = poly_symbol(g, c_poly);
  const RealGrid lgs = poly_symbol(g, lg_poly);
  RealGrid d(g.nx, g.ny);
  for (int j = 0; j < g.nx; ++j) {
    for (int k = 0; k < g.ny; ++k) {
      d(j, k) = 1.0 - delta * gs(j, k) * (cs(j, k) + lgs(j, k));
      if (std::abs(d(j, k)) < 1e-14) {
        std::ostringstream msg;
        msg << "singular resolvent: |D| < 1e-14 at mode (" << j << ", " << k
            << "), lam = " << g.lam(j, k) << ", delta = " << delta;
        throw NumericalError(msg.str());
      }
    }
  }
  return d;
}

Field solve_resolvent(const Field& rhs, double delta, const MobilityKind& mob,
                      std::span<const double> c_poly, std::span<const double> lg_poly) {
  if (delta == 0.0) return rhs;
  const RealGrid d = resolvent_denominator(*rhs.grid, delta, mob, c_poly, lg_poly);
  SpectralField F = fft2(rhs);
  for (Eigen::Index i = 0; i < F.coeffs.size(); ++i) F.coeffs.data()[i] /= d.data()[i];
  return ifft2(F);
}

double inner(const Field& a, const Field& b) {
  check_same_grid(a, b, "inner");
  return (a.values * b.values).sum();
}

double max_abs(const Field& a) { return a.values.abs().maxCoeff(); }

}  // namespace spinn
