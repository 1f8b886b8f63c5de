#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spinn/model.hpp"
#include "spinn/stepper.hpp"
#include "testutil.hpp"

using namespace spinn;
namespace tu = spinn::testutil;

namespace {

ModelSpec ac_dw(double eps, double M) {
  return make_model(eps, {MobilityType::AllenCahn, M}, default_stabilizer(MobilityType::AllenCahn),
                    DoubleWell{});
}

ModelSpec ch_dw(double eps, double M) {
  return make_model(eps, {MobilityType::CahnHilliard, M},
                    default_stabilizer(MobilityType::CahnHilliard), DoubleWell{});
}

tu::ScalarAcModel scalar_of(const ModelSpec& m) {
  tu::ScalarAcModel s;
  s.M = m.mobility.M;
  s.c0 = m.stabilizer.empty() ? 0.0 : m.stabilizer[0];
  s.lg0 = m.lg_poly.empty() ? 0.0 : m.lg_poly[0];
  s.f = [bulk = m.bulk](double u) { return bulk_eval(bulk, u); };
  return s;
}

}  // namespace

TEST_CASE("pure phases are fixed points of every scheme") {
  const GridPtr g = make_grid(16, 16, 2.0, 2.0);
  const ModelSpec m = ac_dw(0.1, 10.0);
  const Field one = constant_field(g, 1.0);
  CHECK((step_stabilized(one, 0.01, m).values - 1.0).abs().maxCoeff() < 1e-13);
  CHECK((step_predictor_corrector(one, 0.01, m).values - 1.0).abs().maxCoeff() < 1e-13);
  CHECK((step_rk4(one, 0.01, m).values - 1.0).abs().maxCoeff() < 1e-13);
}

TEST_CASE("stabilized step matches the DC-mode hand computation") {
  // (0.5 - 0.1*(f(0.5) - 2*0.5)) / 1.2 = 0.53125
  const GridPtr g = make_grid(16, 16, 2.0, 2.0);
  const ModelSpec m = ac_dw(0.02, 10.0);
  const Field out = step_stabilized(constant_field(g, 0.5), 0.01, m);
  CHECK((out.values - 0.53125).abs().maxCoeff() < 1e-13);
}

TEST_CASE("constant-field reduction matches the scalar oracles") {
  const GridPtr g = make_grid(16, 16, 2.0, 2.0);
  const double h = 0.01;

  SUBCASE("double-well bulk") {
    const ModelSpec m = ac_dw(0.5, 10.0);
    const tu::ScalarAcModel s = scalar_of(m);
    for (double phi0 : {-0.8, 0.2, 0.5, 1.3}) {
      const Field u = constant_field(g, phi0);
      CHECK((step_stabilized(u, h, m).values - tu::scalar_step_stabilized(phi0, h, s))
                .abs()
                .maxCoeff() < 1e-12);
      CHECK((step_predictor_corrector(u, h, m).values - tu::scalar_step_pc(phi0, h, s))
                .abs()
                .maxCoeff() < 1e-12);
      CHECK((step_rk4(u, h, m).values - tu::scalar_step_rk4(phi0, h, s)).abs().maxCoeff() <
            1e-12);
    }
  }
  SUBCASE("Flory-Huggins bulk") {
    ModelSpec m = make_model(0.1, {MobilityType::AllenCahn, 10.0},
                             default_stabilizer(MobilityType::AllenCahn), FloryHuggins{});
    const tu::ScalarAcModel s = scalar_of(m);
    for (double phi0 : {0.3, 0.5, 0.7}) {
      const Field u = constant_field(g, phi0);
      CHECK((step_stabilized(u, h, m).values - tu::scalar_step_stabilized(phi0, h, s))
                .abs()
                .maxCoeff() < 1e-12);
      CHECK((step_rk4(u, h, m).values - tu::scalar_step_rk4(phi0, h, s)).abs().maxCoeff() <
            1e-12);
    }
  }
  SUBCASE("RK4 reproduces the quoted uniform-state value") {
    const ModelSpec m = ac_dw(0.73, 10.0);  // eps is irrelevant for uniform states
    const Field out = step_rk4(constant_field(g, 0.5), h, m);
    CHECK((out.values - 0.5378993776580041).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("stabilized step is first-order consistent with rhs_eval") {
  const GridPtr g = make_grid(32, 32, 2.0, 2.0);
  const ModelSpec m = ac_dw(0.1, 1.0);
  const Field phi = tu::smooth_field(g, 21, 0.3);
  const Field r = rhs_eval(phi, m);

  auto defect = [&](double delta) {
    const Field s = step_stabilized(phi, delta, m);
    return (s.values - phi.values - delta * r.values).abs().maxCoeff();
  };
  const double d1 = defect(2e-3);
  const double d2 = defect(1e-3);
  CHECK(d1 / d2 > 3.0);  // O(delta^2) defect quarters when delta halves
  CHECK(d1 / d2 < 5.0);
}

TEST_CASE("simulate with zero steps returns only the initial snapshot") {
  const GridPtr g = make_grid(8, 8, 2.0, 2.0);
  const ModelSpec m = ac_dw(0.1, 1.0);
  SimulationPlan plan;
  plan.initial = tu::noise_field(g, 3, 0.25);
  plan.dt = 0.01;
  plan.n_steps = 0;
  plan.record_at = {0};
  const auto snaps = simulate(plan, m);
  REQUIRE(snaps.size() == 1);
  CHECK(snaps[0].time == 0.0);
  CHECK((snaps[0].state.values == plan.initial.values).all());
}

TEST_CASE("simulate validates the record list") {
  const GridPtr g = make_grid(8, 8, 2.0, 2.0);
  const ModelSpec m = ac_dw(0.1, 1.0);
  SimulationPlan plan;
  plan.initial = constant_field(g, 0.0);
  plan.dt = 0.01;
  plan.n_steps = 10;
  plan.record_at = {0, 11};
  CHECK_THROWS_AS(simulate(plan, m), ValidationError);
  plan.record_at = {3, 3};
  CHECK_THROWS_AS(simulate(plan, m), ValidationError);
  plan.record_at = {};
  CHECK(simulate(plan, m).empty());
}

TEST_CASE("Cahn-Hilliard stabilized run conserves mass") {
  const GridPtr g = make_grid(32, 32, 2.0, 2.0);
  const ModelSpec m = ch_dw(0.05, 1.0);
  SimulationPlan plan;
  plan.initial = tu::noise_field(g, 4, 0.001, 0.2);
  plan.dt = 1e-3;
  plan.n_steps = 200;
  plan.scheme = SchemeKind::StabilizedFirstOrder;
  plan.record_at = {0, 50, 100, 150, 200};
  const auto snaps = simulate(plan, m);
  const double m0 = total_mass(snaps[0].state);
  for (const auto& s : snaps) CHECK(std::abs(total_mass(s.state) - m0) < 1e-10);
}

TEST_CASE("Allen-Cahn stabilized run dissipates free energy") {
  const GridPtr g = make_grid(32, 32, 2.0, 2.0);
  const ModelSpec m = ac_dw(0.1, 10.0);
  SimulationPlan plan;
  plan.initial = tu::noise_field(g, 5, 0.25);
  plan.dt = 1e-3;
  plan.n_steps = 300;
  plan.scheme = SchemeKind::StabilizedFirstOrder;
  for (int s = 0; s <= 300; s += 20) plan.record_at.push_back(s);
  const auto snaps = simulate(plan, m);
  double prev = free_energy(snaps[0].state, m);
  for (std::size_t i = 1; i < snaps.size(); ++i) {
    const double e = free_energy(snaps[i].state, m);
    CHECK(e <= prev + 1e-8);
    prev = e;
  }
}

TEST_CASE("blow-up is reported with the failing step") {
  const GridPtr g = make_grid(16, 16, 2.0, 2.0);
  const ModelSpec m = ac_dw(1.0, 10.0);
  SimulationPlan plan;
  plan.initial = tu::noise_field(g, 6, 2.0);
  plan.dt = 1.0;  // wildly unstable for explicit RK4
  plan.n_steps = 50;
  plan.scheme = SchemeKind::ExplicitRK4;
  plan.record_at = {50};
  CHECK_THROWS_WITH_AS(simulate(plan, m), doctest::Contains("step"), NumericalError);
}

TEST_CASE("make_initial_condition") {
  const GridPtr g = make_grid(16, 16, 2.0, 2.0);

  SUBCASE("uniform random is reproducible and respects amplitude/offset") {
    const Field a = make_initial_condition(g, UniformRandomInit{0.25, 0.0}, 7);
    const Field b = make_initial_condition(g, UniformRandomInit{0.25, 0.0}, 7);
    CHECK((a.values == b.values).all());
    CHECK(a.values.abs().maxCoeff() <= 0.25);
    const Field c = make_initial_condition(g, UniformRandomInit{0.001, 0.2}, 8);
    CHECK((c.values - 0.2).abs().maxCoeff() <= 0.001);
  }
  SUBCASE("tanh disk is radially symmetric with the right limits") {
    const Field d = make_initial_condition(g, TanhDiskInit{0.8, 0.1}, 0);
    // Center node value close to 1 (deep inside), corner close to 0.
    const auto xs = grid_x(*g);
    const auto ys = grid_y(*g);
    int ci = 8, cj = 8;  // x = y = 0 for this grid
    CHECK(xs[ci] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(ys[cj] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(d.values(ci, cj) > 0.99);
    CHECK(d.values(0, 0) < 0.01);
  }
}

TEST_CASE("generate_dataset extracts consistent pairs") {
  const GridPtr g = make_grid(16, 16, 2.0, 2.0);
  const ModelSpec m = ac_dw(0.1, 10.0);
  const InitKind init = UniformRandomInit{0.25, 0.0};
  const std::vector<PairRequest> reqs = {{0.01, 0.005}, {0.02, 0.01}};
  const Dataset ds = generate_dataset(m, g, init, 1e-3, reqs, 7);

  REQUIRE(ds.pairs.size() == 2);
  CHECK(ds.pairs[0].delta == 0.005);
  CHECK(ds.pairs[1].delta == 0.01);

  // An independent simulate run must land on the same states.
  SimulationPlan plan;
  plan.initial = make_initial_condition(g, init, 7);
  plan.dt = 1e-3;
  plan.n_steps = 30;
  plan.scheme = SchemeKind::ExplicitRK4;
  plan.record_at = {10, 15, 20, 30};
  const auto snaps = simulate(plan, m);
  CHECK((ds.pairs[0].phi1.values == snaps[0].state.values).all());
  CHECK((ds.pairs[0].phi2.values == snaps[1].state.values).all());
  CHECK((ds.pairs[1].phi1.values == snaps[2].state.values).all());
  CHECK((ds.pairs[1].phi2.values == snaps[3].state.values).all());

  CHECK(ds.meta["generator"]["scheme"] == "explicit-rk4");
  CHECK(ds.meta["generator"]["model"]["mobility"] == "allen-cahn");
  CHECK(ds.meta["generator"]["model"]["eps"] == doctest::Approx(0.1));
  CHECK(ds.meta.contains("phi_range"));
}

TEST_CASE("generate_dataset selects the semi-implicit generator for Cahn-Hilliard") {
  const GridPtr g = make_grid(16, 16, 2.0, 2.0);
  const ModelSpec m = ch_dw(0.05, 1.0);
  const std::vector<PairRequest> reqs = {{0.002, 0.002}};
  const Dataset ds = generate_dataset(m, g, UniformRandomInit{0.001, 0.2}, 1e-3, reqs, 11);
  CHECK(ds.meta["generator"]["scheme"] == "predictor-corrector");
  CHECK(ds.pairs.size() == 1);
}

TEST_CASE("generate_dataset rejects misaligned sample times") {
  const GridPtr g = make_grid(8, 8, 2.0, 2.0);
  const ModelSpec m = ac_dw(0.1, 1.0);
  const std::vector<PairRequest> bad_start = {{0.0105, 0.01}};
  CHECK_THROWS_AS(generate_dataset(m, g, UniformRandomInit{0.1, 0.0}, 1e-2, bad_start, 0),
                  ValidationError);
  const std::vector<PairRequest> bad_delta = {{0.01, 0.015}};
  CHECK_THROWS_AS(generate_dataset(m, g, UniformRandomInit{0.1, 0.0}, 1e-2, bad_delta, 0),
                  ValidationError);
  const std::vector<PairRequest> zero_delta = {{0.01, 0.0}};
  CHECK_THROWS_AS(generate_dataset(m, g, UniformRandomInit{0.1, 0.0}, 1e-2, zero_delta, 0),
                  ValidationError);
}
