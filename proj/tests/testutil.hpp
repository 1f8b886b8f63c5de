#pragma once

#include <cmath>
#include <functional>

#include "spinn/grid.hpp"
#include "spinn/rng.hpp"

namespace spinn::testutil {

inline Field noise_field(const GridPtr& g, std::uint64_t seed, double amp = 1.0,
                         double offset = 0.0) {
  Xoshiro256pp rng(seed);
  Field f = make_field(g);
  for (Eigen::Index i = 0; i < f.values.size(); ++i) {
    f.values.data()[i] = offset + amp * rng.uniform_sym();
  }
  return f;
}

// Band-limited random field: a few of the lowest harmonics with random
// coefficients. Smooth and fully resolved on any grid used in the tests.
inline Field smooth_field(const GridPtr& g, std::uint64_t seed, double amp = 0.5) {
  Xoshiro256pp rng(seed);
  const double cx = 2.0 * M_PI / g->lx;
  const double cy = 2.0 * M_PI / g->ly;
  double a[3][3], b[3][3];
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) {
      a[p][q] = amp * rng.uniform_sym();
      b[p][q] = amp * rng.uniform_sym();
    }
  return sample_field(g, [&](double x, double y) {
    double v = 0.0;
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) {
        v += a[p][q] * std::cos(cx * p * x) * std::cos(cy * q * y) +
             b[p][q] * std::sin(cx * (p + 1) * x) * std::sin(cy * (q + 1) * y);
      }
    return v;
  });
}

inline double rel_err(double got, double want, double guard = 1e-12) {
  return std::abs(got - want) / std::max({std::abs(got), std::abs(want), guard});
}

// Mixed criterion for finite-difference comparisons: the absolute floor
// absorbs cancellation noise of the difference quotient near zeros.
inline bool fd_close(double got, double want, double rel_tol, double abs_tol) {
  return std::abs(got - want) <= abs_tol + rel_tol * std::max(std::abs(got), std::abs(want));
}

inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Scalar reductions of the time steppers for spatially constant Allen-Cahn
// states: every spectral symbol collapses to its value at lam = 0, so the
// grid schemes must match these to round-off. Kept independent of the field
// implementations.
struct ScalarAcModel {
  double M = 1.0;
  double c0 = 0.0;   // stabilizer constant term
  double lg0 = 0.0;  // L_g constant term (zero for L_g = -eps^2 * Lap)
  std::function<double(double)> f;
};

inline double scalar_step_stabilized(double phi, double h, const ScalarAcModel& m) {
  const double g0 = -m.M;
  return (phi + h * g0 * (m.f(phi) - m.c0 * phi)) / (1.0 - h * g0 * (m.c0 + m.lg0));
}

inline double scalar_step_pc(double phi, double h, const ScalarAcModel& m) {
  const double g0 = -m.M;
  const double dhalf = 1.0 - 0.5 * h * g0 * (m.c0 + m.lg0);
  const double phat = (phi + 0.5 * h * g0 * (m.f(phi) - m.c0 * phi)) / dhalf;
  return (phi + h * g0 * (0.5 * m.lg0 * phi + m.f(phat) + m.c0 * (0.5 * phi - phat))) / dhalf;
}

inline double scalar_step_rk4(double phi, double h, const ScalarAcModel& m) {
  const double g0 = -m.M;
  auto rhs = [&](double u) { return g0 * (m.lg0 * u + m.f(u)); };
  const double k1 = rhs(phi);
  const double k2 = rhs(phi + 0.5 * h * k1);
  const double k3 = rhs(phi + 0.5 * h * k2);
  const double k4 = rhs(phi + h * k3);
  return phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace spinn::testutil
