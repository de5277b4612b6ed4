#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nlw/classifier.hpp"
#include "nlw/constants.hpp"
#include "nlw/continuation.hpp"
#include "nlw/diagnostics.hpp"
#include "nlw/linearized.hpp"
#include "nlw/profile.hpp"
#include "nlw/scenarios.hpp"
#include "oracles/oracles.hpp"

using namespace nlw;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream msg;

  void require(bool cond, const std::string& what) {
    if (!cond) ok = false;
    msg << (cond ? "" : "!") << what << "; ";
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double rel(double a, double b) { return std::abs(a / b - 1.0); }

double max_diff_u(const FieldState& a, const FieldState& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.v.size(); ++j) m = std::max(m, std::abs(a.v[j] - b.v[j]));
  return m;
}

FieldState advance(FieldState s, double dt, int steps) {
  for (int k = 0; k < steps; ++k) s = step(s, dt);
  return s;
}

FieldState add_bubble(const FieldState& s, const SolitonProfile& p) {
  FieldState out = s;
  for (std::size_t j = 1; j < out.grid.size(); ++j) {
    const double r = out.grid.r(j);
    out.v[j] += r * eval_W_lambda(p, r);
  }
  return out;
}

FieldState bubbles(const RadialGrid& g, const std::vector<SolitonProfile>& ps, BumpSpec bump, double ut_amp = 0.0) {
  return sample_state(
      g,
      [&](double r) {
        double u = bump(r);
        for (const auto& p : ps) u += eval_W_lambda(p, r);
        return u;
      },
      [&](double r) { return ut_amp * smooth_bump(r / 0.4); });
}

// 1
void ground_state_constants(Check& c) {
  const SolitonProfile w(1, 1.0);
  const double g = ground_state::grad_norm_sq_quadrature(w);
  const double s = ground_state::sextic_quadrature(w);
  const double closed = 3.0 * std::sqrt(3.0) * std::numbers::pi * std::numbers::pi / 4.0;
  c.require(rel(g, closed) <= 1e-6, "grad rel " + fmt(rel(g, closed)));
  c.require(rel(s, g) <= 1e-6, "sextic/grad rel " + fmt(rel(s, g)));
  c.require(rel(soliton_energy(), std::sqrt(3.0) * std::numbers::pi * std::numbers::pi / 4.0) <= 1e-12, "E(W) closed form");
  c.require(rel(soliton_energy(), oracle::energy_W) <= 1e-12, "E(W) oracle");
}

// 2
void static_solution(Check& c) {
  // Budget: O(dr^2) truncation seeds the unstable mode, amplified by e^{2 k_d} ~ 9 over t = 2.
  const RadialGrid g(8192, 40.0);
  EvolveConfig cfg;
  cfg.t_horizon = 2.0;
  cfg.sample_every = 100;
  const auto h = evolve(make_scaled_ground(1.0, g), cfg);
  const auto u = u_nodes(h.final_state);
  double m = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) m = std::max(m, std::abs(u[j] - eval_W(g.r(j))));
  c.require(h.stop == StopReason::horizon && h.final_state.t == 2.0, "reached t=2");
  c.require(m <= 1e-3, "sup|u-W| " + fmt(m) + " (amplification " + fmt(std::exp(2.0 * frozen_k_d)) + ")");
}

// 3
void ode_blowup(Check& c) {
  const double T = 1.0;
  EvolveConfig cfg;
  cfg.t_horizon = 2.0 * T;
  double worst = 0.0;
  const auto h = evolve(make_truncated_ode(T, RadialGrid(2048, 8.0)), cfg, {[&](const FieldState& s) {
                          if (s.t > 0.9) return;
                          const auto u = u_nodes(s);
                          const double exact = ode_solution(T, s.t);
                          for (std::size_t j = 0; j < u.size() && s.grid.r(j) <= T - s.t; ++j)
                            worst = std::max(worst, std::abs(u[j] / exact - 1.0));
                        }});
  const auto v = classify(h);
  const auto* t1 = std::get_if<TypeI>(&v);
  c.require(t1 != nullptr, std::string("verdict ") + verdict_name(v));
  if (t1) {
    c.require(rel(t1->T_est, T) <= 0.01, "T_est rel " + fmt(rel(t1->T_est, T)));
    const double a = std::pow(0.75, 0.25);
    c.require(rel(t1->amp_fit, a) <= 0.02, "amp rel " + fmt(rel(t1->amp_fit, a)));
  }
  c.require(worst <= 0.01, "plateau " + fmt(worst));
}

// 4
void energy_and_orders(Check& c) {
  // Focusing run up to sup|u| = u_stop / 10. Each zoom starts a new fixed-grid epoch; within one,
  // scheme energy changes only by the flux through the open outer node.
  EvolveConfig cfg;
  cfg.t_horizon = 20.0;
  cfg.nonlinear_dt = 1e-3;
  double e0 = 0.0, q = 0.0, tp = 0.0, fp = 0.0, r_epoch = 0.0, drift = 0.0, sup_seen = 0.0;
  int epochs = 0;
  evolve(make_scaled_ground(1.2, RadialGrid(4096, 40.0)), cfg, {[&](const FieldState& s) {
           const double sup = sup_abs_u(s);
           if (sup > cfg.u_stop / 10.0) return;
           const double e = scheme_energy(s), f = boundary_flux(s);
           if (s.grid.r_max() != r_epoch) {
             r_epoch = s.grid.r_max();
             e0 = e;
             q = 0.0;
             ++epochs;
           } else {
             q += 0.5 * (s.t - tp) * (f + fp);
           }
           tp = s.t;
           fp = f;
           sup_seen = sup;
           drift = std::max(drift, std::abs(e - q - e0) / std::abs(e0));
         }});
  c.require(sup_seen > 0.9 * cfg.u_stop / 10.0 && drift <= 1e-6,
            "1.2W drift " + fmt(drift) + " over " + std::to_string(epochs) + " grids to sup " + fmt(sup_seen));

  EvolveConfig bc;
  bc.t_horizon = 10.0;
  bc.sample_every = 50;
  double b0 = NAN, bdrift = 0.0;
  evolve(make_small_bump(0.5, 4.0, RadialGrid(4096, 40.0)), bc, {[&](const FieldState& s) {
           const double e = scheme_energy(s);
           if (std::isnan(b0)) b0 = e;
           bdrift = std::max(bdrift, std::abs(e - b0) / std::abs(b0));
         }});
  c.require(bdrift <= 1e-6, "bump drift " + fmt(bdrift));

  // Time: fixed grid, dt halved twice.
  {
    const RadialGrid g(512, 20.0);
    const auto s0 = make_small_bump(0.5, 4.0, g);
    const double dt = 0.5 * g.dr();
    const int n1 = static_cast<int>(std::llround(2.0 / dt));
    const auto a = advance(s0, dt, n1), b = advance(s0, dt / 2, 2 * n1), d = advance(s0, dt / 4, 4 * n1);
    const double p = observed_order(max_diff_u(a, b), max_diff_u(b, d));
    c.require(p >= 3.9, "time order " + fmt(p));
  }
  // Space: dr halved twice at a common small dt, compared on the coarse nodes.
  {
    std::vector<FieldState> out;
    const double dt = 0.5 * (20.0 / 4096);
    const int steps = static_cast<int>(std::llround(2.0 / dt));
    for (std::size_t n : {1024u, 2048u, 4096u}) out.push_back(advance(make_small_bump(0.5, 4.0, RadialGrid(n, 20.0)), dt, steps));
    FieldState mid(0.0, out[0].grid), fine(0.0, out[0].grid);
    for (std::size_t j = 0; j < mid.v.size(); ++j) {
      mid.v[j] = out[1].v[2 * j];
      fine.v[j] = out[2].v[4 * j];
    }
    const double p = observed_order(max_diff_u(out[0], mid), max_diff_u(mid, fine));
    c.require(p >= 1.9, "space order " + fmt(p));
  }
}

// 5
void eigenpair(Check& c) {
  const auto tri = extrapolated_kd(40.0, 4096);
  const double shoot = shooting_eigen(40.0, 1e-13);
  c.require(rel(tri.k_extrapolated, shoot) <= 1e-6, "tri/shoot rel " + fmt(rel(tri.k_extrapolated, shoot)));
  const auto neg = negative_eigenvalue_count(RadialGrid(4096, 40.0));
  c.require(neg == 1, "negative count " + std::to_string(neg));

  std::vector<double> errs;
  for (std::size_t n : {256u, 512u, 1024u}) {
    const RadialGrid g(n, 20.0);
    std::vector<double> p(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) p[j] = g.r(j) * eval_scaling_mode(g.r(j));
    double m = 0.0;
    for (double x : apply_linearized(g, p)) m = std::max(m, std::abs(x));
    errs.push_back(m);
  }
  const double p1 = observed_order(errs[0], errs[1]), p2 = observed_order(errs[1], errs[2]);
  c.require(std::min(p1, p2) >= 1.9, "zero-mode order " + fmt(std::min(p1, p2)));

  const auto e = ground_eigen(RadialGrid(4096, 40.0));
  std::vector<double> r(e.grid.size());
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = e.grid.r(j);
  const double slope = log_slope(r, e.p, 20.0, 30.0);
  c.require(rel(slope, -e.k_d) <= 0.01, "tail slope rel " + fmt(rel(slope, -e.k_d)));
}

// 6
void virial_identity(Check& c) {
  const RadialGrid g(8192, 20.0);
  const auto s0 = make_small_bump(1.0, 3.0, g);
  const CutoffSpec cut(3.0);
  const double t0 = 1.0;
  std::vector<double> e2, e1;
  for (double H : {0.08, 0.04, 0.02}) {
    const int m = static_cast<int>(std::llround(H / 0.001));
    const double dt = H / m;
    FieldState s = advance(s0, dt, static_cast<int>(std::llround((t0 - 2 * H) / dt)));
    std::vector<VirialSample> v{virial(s, cut)};
    for (int k = 0; k < 4; ++k) {
      s = advance(s, dt, m);
      v.push_back(virial(s, cut));
    }
    e2.push_back(std::abs((v[3].y - 2 * v[2].y + v[1].y) / (H * H) - v[2].yddot));
    e1.push_back(std::abs((-v[4].y + 8 * v[3].y - 8 * v[1].y + v[0].y) / (12 * H) - v[2].ydot));
  }
  const double q2 = std::min(observed_order(e2[0], e2[1]), observed_order(e2[1], e2[2]));
  const double q1 = std::min(observed_order(e1[0], e1[1]), observed_order(e1[1], e1[2]));
  c.require(q2 >= 1.9, "yddot order " + fmt(q2));
  c.require(q1 >= 3.9, "ydot order " + fmt(q1));
}

CanonicalConfig staged_config() {
  CanonicalConfig cc;
  cc.evolve.t_horizon = 2.0;
  cc.evolve.sample_every = 16;
  cc.evolve.snapshot_every = 1;
  return cc;
}

// Annular pulse on [1.25, 2.75]; a W_100 placed at the empty origin at t = 1.
struct Staged {
  CanonicalTrajectory plain, tr;
};

const Staged& staged() {
  static const Staged st = [] {
    const RadialGrid g(16384, 8.0);
    const auto s0 = sample_state(g, [](double r) { return 0.3 * smooth_bump((r - 2.0) / 0.75); }, nullptr);
    const auto cc = staged_config();
    StagingHook hook = [](std::size_t i) -> std::optional<Staging> {
      if (i != 0) return std::nullopt;
      return Staging{1.0, [](const FieldState& s) { return add_bubble(s, SolitonProfile(1, 100.0)); }};
    };
    return Staged{run_canonical(s0, cc), run_canonical(s0, cc, hook)};
  }();
  return st;
}

// 7
void energy_ledger(Check& c) {
  const double ew = soliton_energy();
  {
    const RadialGrid g(1u << 20, 8.0);
    const auto bump = sample_state(g, [](double r) { return 0.5 * smooth_bump((r - 2.0) / 0.5); }, nullptr);
    const auto s = add_bubble(bump, SolitonProfile(1, 1e4));
    const auto d = extract_all(s);
    const auto next = continue_past(s, d);
    const double ein = ledger_energy(s), eout = ledger_energy(next);
    c.require(d.N == 1, "N=1 found " + std::to_string(d.N));
    c.require(std::abs(ein - ew - eout) <= 0.01 * ew, "N=1 gap/E(W) " + fmt(std::abs(ein - ew - eout) / ew));
    c.require(eout < ein, "N=1 decreases");
  }
  {
    const RadialGrid g(20000000, 0.5);
    SyntheticBubbles sb{{SolitonProfile(1, 10.0), SolitonProfile(-1, 1e7)}, BumpSpec{0.05, 0.125, 0.05}};
    const auto s = make_synthetic_bubbles(sb, g);
    const auto d = extract_all(s);
    const auto next = continue_past(s, d);
    const double ein = ledger_energy(s), eout = ledger_energy(next);
    c.require(d.N == 2, "N=2 found " + std::to_string(d.N));
    c.require(std::abs(ein - 2 * ew - eout) <= 0.01 * ew, "N=2 gap/E(W) " + fmt(std::abs(ein - 2 * ew - eout) / ew));
    c.require(eout < ein, "N=2 decreases");
  }
  const auto& tr = staged().tr;
  std::size_t events = 0;
  for (const auto& seg : tr.segments) {
    if (seg.end != SegmentEnd::continuation) continue;
    ++events;
    c.require(seg.energy_out < seg.energy_in, "staged event decreases");
    c.require(std::abs(seg.energy_in - seg.N * ew - seg.energy_out) <= 0.01 * ew,
              "staged gap/E(W) " + fmt(std::abs(seg.energy_in - seg.N * ew - seg.energy_out) / ew));
  }
  c.require(events == 1 && tr.violations.empty(), "staged events " + std::to_string(events));
}

// 8
void weak_identity(Check& c) {
  // Three cadence levels per estimate: the cadence-independent spatial part cancels.
  const auto& st = staged();
  const TestFunction phi(1.0, 2.0, 0.75, 1.25);
  std::vector<double> inside, across;
  for (std::size_t k : {16u, 8u, 4u, 2u}) {
    inside.push_back(weak_sides(snapshot_segments(st.plain, k), phi).signed_residual());
    across.push_back(weak_sides(snapshot_segments(st.tr, k), phi).signed_residual());
  }
  double qi = INFINITY, qa = INFINITY;
  for (std::size_t i = 0; i + 2 < inside.size(); ++i) {
    qi = std::min(qi, three_level_order(inside[i], inside[i + 1], inside[i + 2]));
    qa = std::min(qa, three_level_order(across[i], across[i + 1], across[i + 2]));
  }
  c.require(st.plain.segments.size() == 1 && st.tr.segments.size() == 2, "segment counts");
  c.require(qi >= 1.9, "inside order " + fmt(qi));
  c.require(qa >= 1.9, "straddling order " + fmt(qa));
  c.require(std::abs(across.back()) < std::abs(across.front()), "straddling residual " + fmt(std::abs(across.back())));
}

// 9
void profile_extraction(Check& c) {
  {
    const auto d = extract_all(bubbles(RadialGrid(8192, 8.0), {SolitonProfile(1, 30.0)}, BumpSpec{}));
    c.require(d.N == 1 && rel(d.profiles[0].lambda, 30.0) <= 0.02, "single bubble");
  }
  {
    const auto d = extract_all(bubbles(RadialGrid(8192, 8.0), {SolitonProfile(1, 30.0)}, BumpSpec{0.05, 3.0, 1.0}));
    c.require(d.N == 1 && rel(d.profiles[0].lambda, 30.0) <= 0.02, "bubble+bump");
  }
  {
    const auto d = extract_all(
        bubbles(RadialGrid(200000, 2.0), {SolitonProfile(1, 10.0), SolitonProfile(1, 1e4)}, BumpSpec{0.05, 0.3, 0.1}));
    c.require(d.N == 2 && rel(d.profiles[0].lambda, 10.0) <= 0.02 && rel(d.profiles[1].lambda, 1e4) <= 0.02,
              "two-scale");
  }
  {
    const auto s = bubbles(RadialGrid(200000, 2.0), {SolitonProfile(1, 10.0), SolitonProfile(-1, 1e4)},
                           BumpSpec{0.05, 0.3, 0.1}, 0.1);
    FieldState neg = s;
    for (auto& x : neg.v) x = -x;
    for (auto& x : neg.vt) x = -x;
    const auto a = extract_all(s), b = extract_all(neg);
    bool exact = a.N == b.N && a.N == 2;
    for (std::size_t k = 0; exact && k < a.N; ++k)
      exact = a.profiles[k].kappa == -b.profiles[k].kappa && a.profiles[k].lambda == b.profiles[k].lambda;
    for (std::size_t j = 0; exact && j < a.residual.v.size(); ++j) exact = a.residual.v[j] == -b.residual.v[j];
    c.require(exact, "sign equivariance");
  }
}

// 10
void dichotomy(Check& c) {
  const RadialGrid g(4096, 40.0);
  const auto e = ground_eigen(g);
  EvolveConfig cfg;
  cfg.t_horizon = 20.0;

  const auto up = evolve(make_threshold_perturbation(0.01, g, e), cfg);
  const auto vu = classify(up);
  const double growth = up.samples.back().e_free / up.samples.front().e_free;
  c.require(!std::holds_alternative<GlobalToHorizon>(vu), std::string("+0.01 ") + verdict_name(vu));
  c.require(growth >= 10.0, "+0.01 free-energy growth " + fmt(growth));

  const auto down = evolve(make_threshold_perturbation(-0.01, g, e), cfg);
  const auto vd = classify(down);
  const double decay = local_sup(down.final_state, 5.0) / local_sup(down.initial, 5.0);
  c.require(std::holds_alternative<GlobalToHorizon>(vd), std::string("-0.01 ") + verdict_name(vd));
  c.require(decay <= 0.5, "-0.01 local sup ratio " + fmt(decay));

  for (double delta : {1e-4, -1e-4}) {
    std::vector<std::pair<double, double>> a;
    EvolveConfig gc;
    gc.t_horizon = 12.0;
    evolve(make_threshold_perturbation(delta, g, e), gc, {[&](const FieldState& s) {
             if (s.grid == e.grid) a.emplace_back(s.t, unstable_projection(s, e));
           }});
    const double k = exponential_rate(a, 10.0 * std::abs(delta), 0.1);
    c.require(rel(k, frozen_k_d) <= 0.05, "rate(" + fmt(delta) + ") rel " + fmt(rel(k, frozen_k_d)));
  }
}

// 11
void scaled_ground(Check& c) {
  const double a = 1.2, G = ground_state::grad_norm_sq;
  const double e_closed = (a * a / 2.0 - std::pow(a, 6) / 6.0) * G;
  c.require(e_closed < soliton_energy(), "E " + fmt(e_closed) + " < E(W)");
  c.require(a * std::sqrt(G) > std::sqrt(G), "grad norm above W");
  EvolveConfig cfg;
  cfg.t_horizon = 20.0;
  const auto h = evolve(make_scaled_ground(a, RadialGrid(4096, 40.0)), cfg);
  const auto v = classify(h);
  c.require(std::holds_alternative<TypeI>(v), std::string("verdict ") + verdict_name(v));
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Check&)>>> criteria{
      {"ground_state_constants", ground_state_constants},
      {"static_solution", static_solution},
      {"ode_blowup", ode_blowup},
      {"energy_conservation_and_orders", energy_and_orders},
      {"eigenpair", eigenpair},
      {"virial_identity", virial_identity},
      {"energy_ledger", energy_ledger},
      {"weak_identity", weak_identity},
      {"profile_extraction", profile_extraction},
      {"dichotomy", dichotomy},
      {"scaled_ground_type_one", scaled_ground},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& ex) {
      c.ok = false;
      c.msg << "exception: " << ex.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!c.ok) ++failed;
    std::printf("%s %2zu %s (%.1fs): %s\n", c.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                c.msg.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
