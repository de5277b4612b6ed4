#include <gtest/gtest.h>

#include <cmath>

#include "nlw/diagnostics.hpp"
#include "nlw/evolution.hpp"
#include "nlw/scenarios.hpp"

using namespace nlw;

namespace {

double max_abs(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

FieldState advance(FieldState s, double dt, int steps) {
  for (int k = 0; k < steps; ++k) s = step(s, dt);
  return s;
}

double max_diff(const FieldState& a, const FieldState& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.v.size(); ++j) m = std::max(m, std::abs(a.v[j] - b.v[j]));
  return m;
}

// Share of sum v^2 carried by the grid-scale (second-difference) component.
double grid_scale_fraction(const FieldState& s) {
  double hi = 0.0, all = 0.0;
  for (std::size_t j = 1; j + 1 < s.v.size(); ++j) {
    const double d = (s.v[j + 1] - 2.0 * s.v[j] + s.v[j - 1]) / 4.0;
    hi += d * d;
    all += s.v[j] * s.v[j];
  }
  return all > 0.0 ? hi / all : 0.0;
}

}  // namespace

TEST(Evolution, ConfigValidation) {
  EvolveConfig c;
  EXPECT_NO_THROW(c.validate());
  c.cfl = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.cfl = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.u_stop = 10.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.max_refinements = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.t_horizon = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.sample_every = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Evolution, RhsZeroAndStatic) {
  const RadialGrid g(256, 10.0);
  const auto z = rhs(FieldState(0.0, g));
  EXPECT_EQ(max_abs(z.dv), 0.0);
  EXPECT_EQ(max_abs(z.dvt), 0.0);

  std::vector<double> errs;
  for (std::size_t n : {512u, 1024u, 2048u}) {
    const RadialGrid gw(n, 40.0);
    const auto d = rhs(make_scaled_ground(1.0, gw));
    double m = 0.0;  // interior only; the last node carries the boundary closure
    for (std::size_t j = 1; j < gw.n(); ++j) {
      m = std::max(m, std::abs(d.dvt[j]));
      ASSERT_EQ(d.dv[j], 0.0);
    }
    errs.push_back(m);
  }
  EXPECT_GE(observed_order(errs[0], errs[1]), 1.9);
  EXPECT_GE(observed_order(errs[1], errs[2]), 1.9);
}

TEST(Evolution, RhsInsideConeIsOde) {
  std::vector<double> errs;
  for (std::size_t n : {256u, 512u}) {
    const RadialGrid g(n, 8.0);
    const auto s = make_truncated_ode(1.0, g);
    const auto d = rhs(s);
    const double u = ode_amplitude;
    double m = 0.0;
    for (std::size_t j = 1; g.r(j) < 1.9; ++j) m = std::max(m, std::abs(d.dvt[j] / g.r(j) - std::pow(u, 5)));
    errs.push_back(m);
  }
  // Exactly constant u inside r < 2T: the reduced Laplacian of a linear v vanishes.
  EXPECT_LT(errs[1], 1e-9);
}

TEST(Evolution, StepPreservesZeroAndOrigin) {
  const RadialGrid g(128, 8.0);
  const auto z = advance(FieldState(0.0, g), 0.5 * g.dr(), 10);
  EXPECT_EQ(max_abs(z.v), 0.0);
  EXPECT_EQ(max_abs(z.vt), 0.0);
  EXPECT_DOUBLE_EQ(z.t, 10 * 0.5 * g.dr());

  const auto s = advance(make_small_bump(0.8, 2.0, g), 0.5 * g.dr(), 20);
  EXPECT_EQ(s.v[0], 0.0);
  EXPECT_EQ(s.vt[0], 0.0);
}

TEST(Evolution, TemporalOrder) {
  const RadialGrid g(512, 20.0);
  const auto s0 = make_small_bump(0.5, 4.0, g);
  const double dt = 0.5 * g.dr();
  const double T = 2.0;
  const int n1 = static_cast<int>(std::llround(T / dt));
  const auto a = advance(s0, dt, n1);
  const auto b = advance(s0, dt / 2, 2 * n1);
  const auto c = advance(s0, dt / 4, 4 * n1);
  ASSERT_TRUE(a.all_finite() && b.all_finite() && c.all_finite());
  const double order = observed_order(max_diff(a, b), max_diff(b, c));
  EXPECT_GE(order, 3.9);
}

TEST(Evolution, SchemeEnergyDriftPerUnitTime) {
  const RadialGrid g(4096, 40.0);
  const auto s0 = make_small_bump(0.1, 3.0, g);
  EvolveConfig c;
  c.t_horizon = 10.0;
  c.sample_every = 1000;
  const auto h = evolve(s0, c);
  const double e0 = scheme_energy(s0);
  EXPECT_LT(std::abs(scheme_energy(h.final_state) - e0) / e0 / c.t_horizon, 1e-8);
}

TEST(Evolution, OutgoingPulseLeavesWithoutReflection) {
  const RadialGrid g(2048, 20.0);
  const auto f = [](double x) { return 1e-3 * smooth_bump((x - 10.0) / 2.0); };
  FieldState s(0.0, g);
  for (std::size_t j = 1; j < g.size(); ++j) {
    const double r = g.r(j), h = 1e-6;
    s.v[j] = f(r);
    s.vt[j] = -(f(r + h) - f(r - h)) / (2 * h);
  }
  const double e0 = energy(s).E_free;
  EvolveConfig c;
  c.t_horizon = 16.0;
  c.sample_every = 1000;
  const auto h = evolve(s, c);
  EXPECT_LT(energy(h.final_state).E_free / e0, 1e-3);
}

TEST(Evolution, EnergyBalanceWithBoundaryFlux) {
  const RadialGrid g(2048, 20.0);
  const auto f = [](double x) { return 1e-2 * smooth_bump((x - 10.0) / 2.0); };
  FieldState s(0.0, g);
  for (std::size_t j = 1; j < g.size(); ++j) {
    const double r = g.r(j), h = 1e-6;
    s.v[j] = f(r);
    s.vt[j] = -(f(r + h) - f(r - h)) / (2 * h);
  }
  const double e0 = scheme_energy(s);
  double q = 0.0, tp = 0.0, fp = boundary_flux(s), worst = 0.0;
  EvolveConfig c;
  c.t_horizon = 16.0;
  const auto h = evolve(s, c, {[&](const FieldState& x) {
                          const double fx = boundary_flux(x);
                          q += 0.5 * (x.t - tp) * (fx + fp);
                          tp = x.t;
                          fp = fx;
                          worst = std::max(worst, std::abs(scheme_energy(x) - q - e0) / e0);
                        }});
  // Nearly all of the energy leaves, and the flux books for it.
  EXPECT_LT(scheme_energy(h.final_state) / e0, 1e-2);
  EXPECT_LT(worst, 1e-5);
}

TEST(Evolution, BoundaryPreservesZero) {
  const FieldState z(0.0, RadialGrid(64, 4.0));
  const auto [bv, bvt] = outer_boundary(z);
  EXPECT_EQ(bv, 0.0);
  EXPECT_EQ(bvt, 0.0);
}

TEST(Evolution, StaticGroundState) {
  const RadialGrid g(4096, 40.0);
  EvolveConfig c;
  c.t_horizon = 1.0;
  c.sample_every = 100;
  const auto h = evolve(make_scaled_ground(1.0, g), c);
  EXPECT_EQ(h.stop, StopReason::horizon);
  EXPECT_EQ(h.refinements, 0);
  const auto u = u_nodes(h.final_state);
  double m = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) m = std::max(m, std::abs(u[j] - eval_W(g.r(j))));
  EXPECT_LT(m, 1e-3);
  EXPECT_DOUBLE_EQ(h.final_state.t, 1.0);
}

TEST(Evolution, TruncatedOdeStopsNearT) {
  const RadialGrid g(2048, 10.0);
  EvolveConfig c;
  c.t_horizon = 2.0;
  const auto h = evolve(make_truncated_ode(1.0, g), c);
  EXPECT_EQ(h.stop, StopReason::u_stop);
  EXPECT_GE(h.samples.back().sup_u, c.u_stop);
  EXPECT_NEAR(h.final_state.t, 1.0, 0.01);
  EXPECT_LE(h.final_state.t, 1.0);
  // Uniform in the cone: no zoom is triggered.
  EXPECT_EQ(h.refinements, 0);
}

TEST(Evolution, TinyDataDisperses) {
  const RadialGrid g(1024, 20.0);
  const auto s0 = make_small_bump(1e-3, 1.0, g);
  EvolveConfig c;
  c.t_horizon = 10.0;
  c.sample_every = 10;
  const auto h = evolve(s0, c);
  EXPECT_EQ(h.stop, StopReason::horizon);
  EXPECT_LT(h.samples.back().sup_u, 0.5 * h.samples.front().sup_u);
  EXPECT_EQ(h.refinements, 0);
}

TEST(Evolution, FiniteSpeedOfPropagation) {
  const RadialGrid g(8192, 20.0);
  const double a = 2.0, T = 4.0;
  EvolveConfig c;
  c.t_horizon = T;
  c.sample_every = 1000;
  const auto h = evolve(make_small_bump(0.5, a, g), c);
  const auto u = u_nodes(h.final_state);
  double m = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (g.r(j) > a + T + 2.0 * g.dr()) m = std::max(m, std::abs(u[j]));
  }
  EXPECT_LE(m, 1e-10);
}

TEST(Evolution, NoGridScaleGrowth) {
  const RadialGrid g(1024, 20.0);
  EvolveConfig c;
  c.t_horizon = 8.0;
  c.sample_every = 20;
  double worst = 0.0;
  const auto h = evolve(make_small_bump(0.5, 4.0, g), c,
                        {[&](const FieldState& s) { worst = std::max(worst, grid_scale_fraction(s)); }});
  EXPECT_LT(worst, 1e-6);
}

TEST(Evolution, ObserversAndSampling) {
  const RadialGrid g(256, 10.0);
  EvolveConfig c;
  c.t_horizon = 1.0;
  c.sample_every = 4;
  c.snapshot_every = 3;
  int calls = 0;
  const auto h = evolve(make_small_bump(0.1, 2.0, g), c, {[&](const FieldState&) { ++calls; }});
  EXPECT_EQ(static_cast<std::size_t>(calls), h.samples.size());
  EXPECT_EQ(h.samples.front().t, 0.0);
  EXPECT_DOUBLE_EQ(h.samples.back().t, 1.0);
  // One sample every 4 steps plus the initial and final ones.
  EXPECT_EQ(h.samples.size(), 1 + (h.steps + 3) / 4);
  EXPECT_GE(h.snapshots.size(), h.samples.size() / 3);
  for (std::size_t k = 1; k < h.samples.size(); ++k) EXPECT_GT(h.samples[k].t, h.samples[k - 1].t);

  c.snapshot_every = 0;
  const auto h0 = evolve(make_small_bump(0.1, 2.0, g), c);
  ASSERT_EQ(h0.snapshots.size(), 2u);
  EXPECT_EQ(h0.snapshots.front().t, 0.0);
  EXPECT_DOUBLE_EQ(h0.snapshots.back().t, 1.0);
}

TEST(Evolution, ZoomOnConcentration) {
  const RadialGrid g(2048, 40.0);
  EvolveConfig c;
  c.t_horizon = 5.0;
  c.sample_every = 10;
  c.u_stop = 100.0;
  const auto h = evolve(make_scaled_ground(1.2, g), c);
  EXPECT_EQ(h.stop, StopReason::u_stop);
  EXPECT_GT(h.refinements, 0);
  EXPECT_DOUBLE_EQ(h.final_state.grid.r_max(), 40.0 / std::pow(2.0, h.refinements));
  EXPECT_EQ(h.final_state.grid.n(), 2048u);
  // After every sample the profile is resolved again.
  for (const auto& s : h.samples) {
    if (s.sup_u >= c.refine_min_sup) EXPECT_LE(s.lambda_fit * s.dr, c.refine_trigger * 1.0001) << s.t;
  }

  c.max_refinements = 0;
  const auto capped = evolve(make_scaled_ground(1.2, g), c);
  EXPECT_TRUE(capped.refinement_exhausted);
  EXPECT_EQ(capped.refinements, 0);
}

TEST(Evolution, NonfiniteRaisesIntegrationFailure) {
  const RadialGrid g(128, 8.0);
  EvolveConfig c;
  c.t_horizon = 10.0;
  c.u_stop = 1e300;
  c.nonlinear_dt = 1e300;
  c.max_refinements = 0;
  try {
    (void)evolve(make_scaled_ground(3.0, g), c);
    FAIL() << "expected IntegrationFailure";
  } catch (const IntegrationFailure& e) {
    EXPECT_TRUE(e.last_good().all_finite());
  }
}

TEST(Evolution, RejectsInvalidState) {
  FieldState s(0.0, RadialGrid(64, 4.0));
  s.v[0] = 1.0;
  EXPECT_THROW(evolve(s, EvolveConfig{}), std::invalid_argument);
}
