#include "spinn/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spinn/rng.hpp"

namespace spinn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Field nonlinear_terms(const Field& phi, const ModelSpec& m) {
  Field w = bulk_eval_field(m.bulk, phi);
  if (m.ng) w.values += phi.values.unaryExpr([&](double v) { return m.ng(v); });
  return w;
}

void check_finite(const Field& f, const char* where) {
  if (!f.values.allFinite()) {
    throw NumericalError(std::string(where) + ": non-finite field values (blow-up)");
  }
}

Field rk4_impl(const Field& phi, double delta, const ModelSpec& m, Rk4Trace* trace) {
  auto stage = [&](const Field& a, int idx) {
    Field k = rhs_eval(a, m);
    if (!k.values.allFinite()) {
      std::ostringstream msg;
      msg << "step_rk4: non-finite values at stage " << idx << " (blow-up)";
      throw NumericalError(msg.str());
    }
    return k;
  };
  const Field k1 = stage(phi, 1);
  Field a2{phi.grid, phi.values + 0.5 * delta * k1.values};
  const Field k2 = stage(a2, 2);
  Field a3{phi.grid, phi.values + 0.5 * delta * k2.values};
  const Field k3 = stage(a3, 3);
  Field a4{phi.grid, phi.values + delta * k3.values};
  const Field k4 = stage(a4, 4);

  Field out{phi.grid, phi.values + (delta / 6.0) * (k1.values + 2.0 * k2.values +
                                                    2.0 * k3.values + k4.values)};
  check_finite(out, "step_rk4");
  if (trace) {
    trace->a2 = std::move(a2);
    trace->a3 = std::move(a3);
    trace->a4 = std::move(a4);
  }
  return out;
}

}  // namespace

Field step_stabilized(const Field& phi, double delta, const ModelSpec& m) {
  const GridSpec& g = *phi.grid;
  const RealGrid gs = mobility_symbol(g, m.mobility);
  const RealGrid cs = poly_symbol(g, m.stabilizer);
  const RealGrid denom = resolvent_denominator(g, delta, m.mobility, m.stabilizer, m.lg_poly);

  const Field w = nonlinear_terms(phi, m);
  const SpectralField U = fft2(phi);
  const SpectralField W = fft2(w);

  ComplexGrid out(g.nx, g.ny);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const std::complex<double> u = U.coeffs.data()[i];
    out.data()[i] =
        (u + delta * gs.data()[i] * (W.coeffs.data()[i] - cs.data()[i] * u)) / denom.data()[i];
  }
  Field r = ifft2({phi.grid, std::move(out)});
  check_finite(r, "step_stabilized");
  return r;
}

Field step_predictor_corrector(const Field& phi, double delta, const ModelSpec& m) {
  const GridSpec& g = *phi.grid;
  const RealGrid gs = mobility_symbol(g, m.mobility);
  const RealGrid cs = poly_symbol(g, m.stabilizer);
  const RealGrid lgs = poly_symbol(g, m.lg_poly);
  const RealGrid dhalf =
      resolvent_denominator(g, 0.5 * delta, m.mobility, m.stabilizer, m.lg_poly);

  const SpectralField U = fft2(phi);
  const Field w1 = nonlinear_terms(phi, m);
  const SpectralField W1 = fft2(w1);

  // Predictor: stabilized half step.
  ComplexGrid phat_hat(g.nx, g.ny);
  for (Eigen::Index i = 0; i < phat_hat.size(); ++i) {
    const std::complex<double> u = U.coeffs.data()[i];
    phat_hat.data()[i] =
        (u + 0.5 * delta * gs.data()[i] * (W1.coeffs.data()[i] - cs.data()[i] * u)) /
        dhalf.data()[i];
  }
  Field phat = ifft2({phi.grid, phat_hat});
  check_finite(phat, "step_predictor_corrector (predictor)");

  // Corrector: L_g and C act on the averaged state, nonlinearities on the
  // midpoint predictor.
  const Field w2 = nonlinear_terms(phat, m);
  const SpectralField W2 = fft2(w2);
  ComplexGrid out(g.nx, g.ny);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const std::complex<double> u = U.coeffs.data()[i];
    out.data()[i] = (u + delta * gs.data()[i] *
                             (0.5 * lgs.data()[i] * u + W2.coeffs.data()[i] +
                              cs.data()[i] * (0.5 * u - phat_hat.data()[i]))) /
                    dhalf.data()[i];
  }
  Field r = ifft2({phi.grid, std::move(out)});
  check_finite(r, "step_predictor_corrector");
  return r;
}

Field step_rk4(const Field& phi, double delta, const ModelSpec& m) {
  return rk4_impl(phi, delta, m, nullptr);
}

Field step_rk4_traced(const Field& phi, double delta, const ModelSpec& m, Rk4Trace& trace) {
  return rk4_impl(phi, delta, m, &trace);
}

std::vector<Snapshot> simulate(const SimulationPlan& plan, const ModelSpec& m) {
  if (plan.n_steps < 0) throw ValidationError("simulate: n_steps must be non-negative");
  if (plan.n_steps > 0 && !(plan.dt > 0.0)) {
    throw ValidationError("simulate: dt must be positive");
  }
  for (std::size_t i = 0; i < plan.record_at.size(); ++i) {
    const int s = plan.record_at[i];
    if (s < 0 || s > plan.n_steps) {
      throw ValidationError("simulate: record index outside [0, n_steps]");
    }
    if (i > 0 && plan.record_at[i - 1] >= s) {
      throw ValidationError("simulate: record indices must be strictly increasing");
    }
  }

  auto advance = [&](const Field& u) {
    switch (plan.scheme) {
      case SchemeKind::StabilizedFirstOrder:
        return step_stabilized(u, plan.dt, m);
      case SchemeKind::PredictorCorrector:
        return step_predictor_corrector(u, plan.dt, m);
      case SchemeKind::ExplicitRK4:
        return step_rk4(u, plan.dt, m);
    }
    throw ValidationError("simulate: unknown scheme");
  };

  std::vector<Snapshot> out;
  std::size_t next = 0;
  Field u = plan.initial;
  if (next < plan.record_at.size() && plan.record_at[next] == 0) {
    out.push_back({0.0, u});
    ++next;
  }
  for (int s = 1; s <= plan.n_steps; ++s) {
    try {
      u = advance(u);
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << "simulate: failure at step " << s << " (t = " << s * plan.dt << "): " << e.what();
      throw NumericalError(msg.str());
    }
    if (next < plan.record_at.size() && plan.record_at[next] == s) {
      out.push_back({s * plan.dt, u});
      ++next;
    }
  }
  return out;
}

Field make_initial_condition(const GridPtr& g, const InitKind& init, std::uint64_t seed) {
  return std::visit(
      Overloaded{
          [&](const UniformRandomInit& u) {
            Xoshiro256pp rng(seed);
            Field f = make_field(g);
            double* v = f.values.data();  // row-major node order
            for (Eigen::Index i = 0; i < f.values.size(); ++i) {
              v[i] = u.offset + u.amplitude * rng.uniform_sym();
            }
            return f;
          },
          [&](const TanhDiskInit& d) {
            if (!(d.eps > 0.0)) {
              throw ValidationError("make_initial_condition: tanh-disk eps must be positive");
            }
            const double denom = std::sqrt(2.0) * d.eps;
            return sample_field(g, [&](double x, double y) {
              return 0.5 * (1.0 + std::tanh((d.radius - std::hypot(x, y)) / denom));
            });
          },
      },
      init);
}

Dataset generate_dataset(const ModelSpec& m, const GridPtr& g, const InitKind& init,
                         double fine_dt, std::span<const PairRequest> requests,
                         std::uint64_t seed) {
  if (!(fine_dt > 0.0)) throw ValidationError("generate_dataset: fine_dt must be positive");

  auto align = [&](double t, const char* what) -> long long {
    if (t < 0.0) {
      throw ValidationError(std::string("generate_dataset: negative ") + what);
    }
    const long long n = std::llround(t / fine_dt);
    if (std::abs(static_cast<double>(n) * fine_dt - t) > 1e-12) {
      std::ostringstream msg;
      msg << "generate_dataset: " << what << " = " << t
          << " does not sit on the fine_dt lattice (fine_dt = " << fine_dt << ")";
      throw ValidationError(msg.str());
    }
    return n;
  };

  std::vector<std::pair<long long, long long>> idx;
  std::vector<int> record;
  long long max_index = 0;
  for (const PairRequest& req : requests) {
    if (!(req.delta > 0.0)) throw ValidationError("generate_dataset: pair delta must be positive");
    const long long i1 = align(req.t_start, "t_start");
    const long long id = align(req.delta, "delta");
    if (id < 1) throw ValidationError("generate_dataset: delta is below fine_dt");
    const long long i2 = i1 + id;
    idx.emplace_back(i1, i2);
    max_index = std::max(max_index, i2);
    record.push_back(static_cast<int>(i1));
    record.push_back(static_cast<int>(i2));
  }
  if (max_index > (1LL << 30)) {
    throw ValidationError("generate_dataset: requested times need an unreasonable step count");
  }
  std::sort(record.begin(), record.end());
  record.erase(std::unique(record.begin(), record.end()), record.end());

  const SchemeKind scheme = (m.mobility.kind == MobilityType::AllenCahn)
                                ? SchemeKind::ExplicitRK4
                                : SchemeKind::PredictorCorrector;

  SimulationPlan plan;
  plan.initial = make_initial_condition(g, init, seed);
  plan.dt = fine_dt;
  plan.n_steps = static_cast<int>(max_index);
  plan.scheme = scheme;
  plan.record_at = record;
  const std::vector<Snapshot> snaps = simulate(plan, m);

  auto state_at = [&](long long step) -> const Field& {
    const auto it = std::lower_bound(record.begin(), record.end(), static_cast<int>(step));
    return snaps[static_cast<std::size_t>(it - record.begin())].state;
  };

  Dataset ds;
  ds.grid = g;
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    SnapshotPair pair;
    pair.phi1 = state_at(idx[i].first);
    pair.phi2 = state_at(idx[i].second);
    pair.delta = requests[i].delta;
    for (const Field* f : {&pair.phi1, &pair.phi2}) {
      const double mn = f->values.minCoeff();
      const double mx = f->values.maxCoeff();
      lo = first ? mn : std::min(lo, mn);
      hi = first ? mx : std::max(hi, mx);
      first = false;
    }
    ds.pairs.push_back(std::move(pair));
  }

  json init_meta = std::visit(
      Overloaded{
          [](const UniformRandomInit& u) {
            return json{{"type", "uniform-random"}, {"amplitude", u.amplitude}, {"offset", u.offset}};
          },
          [](const TanhDiskInit& d) {
            return json{{"type", "tanh-disk"}, {"radius", d.radius}, {"eps", d.eps}};
          },
      },
      init);
  json pair_meta = json::array();
  for (const PairRequest& req : requests) {
    pair_meta.push_back({{"t_start", req.t_start}, {"delta", req.delta}});
  }
  ds.meta = {
      {"generator",
       {{"scheme", scheme == SchemeKind::ExplicitRK4 ? "explicit-rk4" : "predictor-corrector"},
        {"fine_dt", fine_dt},
        {"seed", seed},
        {"prng", Xoshiro256pp::kName},
        {"init", init_meta},
        {"model",
         {{"mobility", mobility_name(m.mobility.kind)},
          {"M", m.mobility.M},
          {"eps", m.eps},
          {"stabilizer", m.stabilizer},
          {"lg_poly", m.lg_poly},
          {"bulk", bulk_name(m.bulk)}}}}},
      {"phi_range", {lo, hi}},
      {"pairs", pair_meta},
  };
  return ds;
}

}  // namespace spinn
