#pragma once

// nlwlab command line: run | eigen | sweep | extract | report.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlw/config.hpp"
#include "nlw/constants.hpp"
#include "nlw/continuation.hpp"
#include "nlw/io.hpp"
#include "nlw/linearized.hpp"
#include "nlw/scenarios.hpp"

namespace nlw {

inline constexpr const char* version_tag = "nlwlab 1.0.0";

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// ---- eigen --------------------------------------------------------------------

struct EigenSettings {
  double r_max = 40.0;
  std::size_t n = 4096;
  double tol = 1e-13;
  double step = 1e-3;
};

struct EigenOutputs {
  std::string constants;
  EigenPair fine;
};

inline EigenOutputs compute_constants(const EigenSettings& es) {
  const auto coarse = ground_eigen(RadialGrid(es.n, es.r_max));
  const auto fine = ground_eigen(RadialGrid(2 * es.n, es.r_max));
  const double k_tri = std::sqrt(-richardson2(coarse.eigenvalue(), fine.eigenvalue()));
  const double k_shoot = shooting_eigen(es.r_max, es.tol, es.step);
  const auto lp = apply_linearized(fine.grid, fine.p);
  std::vector<double> res(lp.size());
  for (std::size_t j = 0; j < lp.size(); ++j) res[j] = lp[j] - fine.eigenvalue() * fine.p[j];
  const double residual = std::sqrt(reduced_inner(fine.grid, res, res));
  std::string t;
  t += "# k_d constants: -Delta - 5 W^4 has the single negative eigenvalue -k_d^2\n";
  t += "k_d = " + fmt(k_tri) + "\n";
  t += "k_d_tridiagonal_coarse = " + fmt(coarse.k_d) + "\n";
  t += "k_d_tridiagonal_fine = " + fmt(fine.k_d) + "\n";
  t += "k_d_shooting = " + fmt(k_shoot) + "\n";
  t += "relative_difference = " + fmt(std::abs(k_tri - k_shoot) / k_shoot) + "\n";
  t += "negative_eigenvalues = " + std::to_string(negative_eigenvalue_count(fine.grid)) + "\n";
  t += "eigen_residual_l2 = " + fmt(residual) + "\n";
  t += "scaling_mode_overlap = " + fmt(overlap_with_scaling_mode(fine)) + "\n";
  t += "r_max = " + fmt(es.r_max) + "\n";
  t += "n_coarse = " + std::to_string(es.n) + "\n";
  t += "n_fine = " + std::to_string(2 * es.n) + "\n";
  t += "shooting_step = " + fmt(es.step) + "\n";
  t += "shooting_tol = " + fmt(es.tol) + "\n";
  return {t, fine};
}

// ---- run ------------------------------------------------------------------------

inline EigenPair eigen_for(const RadialGrid& g) {
  if (g.dr() <= 1e-2 && g.r_max() >= 40.0) return ground_eigen(g);
  return ground_eigen(RadialGrid(8192, 40.0));
}

inline FieldState initial_state(const RunConfig& c) {
  const RadialGrid g(c.grid_n, c.grid_r_max);
  const auto sc = scenario_of(c);
  std::optional<EigenPair> e;
  if (std::holds_alternative<ThresholdPerturbation>(sc)) e = eigen_for(g);
  try {
    return make_initial(sc, g, e);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
}

struct RunOutputs {
  CanonicalTrajectory trajectory;
  std::vector<DiagnosticsRow> rows;
  json report;
};

inline json grid_json(const RadialGrid& g) { return {{"n", g.n()}, {"r_max", g.r_max()}, {"dr", g.dr()}}; }

inline json config_json(const RunConfig& c) {
  json j = json::object();
  for (const auto& spec : config_keys()) j[spec.key] = spec.get(c);
  return j;
}

/// Runs the configured scenario and writes history.csv, report.json and snapshot files under dir.
inline RunOutputs execute_run(const RunConfig& c, const fs::path& dir) {
  const auto s0 = initial_state(c);
  CanonicalConfig cc;
  cc.evolve = c.evolve;
  cc.classifier = c.classifier;
  cc.max_segments = c.max_segments;
  cc.ledger_tol = c.ledger_tol;

  StagingHook hook;
  if (!std::isnan(c.staging_time)) {
    const auto bubbles = parse_profiles("continuation.staging_bubbles", c.staging_bubbles);
    const double ts = c.staging_time;
    hook = [bubbles, ts](std::size_t seg) -> std::optional<Staging> {
      if (seg != 0) return std::nullopt;
      return Staging{ts, [bubbles](const FieldState& s) {
                       FieldState out = s;
                       for (const auto& p : bubbles) {
                         for (std::size_t j = 1; j < out.grid.size(); ++j) {
                           out.v[j] += out.grid.r(j) * eval_W_lambda(p, out.grid.r(j));
                         }
                       }
                       return out;
                     }};
    };
  }

  RunOutputs out;
  const CutoffSpec cut(c.tau);
  const Observer obs = [&](const FieldState& s) { out.rows.push_back(diagnostics_row(s, cut, c.eps_star)); };
  out.trajectory = run_canonical(s0, cc, hook, {obs});
  const auto& traj = out.trajectory;

  fs::create_directories(dir / "snapshots");
  write_text((dir / "history.csv").string(), diagnostics_csv(out.rows));

  json& rep = out.report;
  rep["version"] = version_tag;
  rep["constants_hash"] = constants_hash();
  rep["config"] = config_json(c);
  rep["grid"] = grid_json(s0.grid);
  rep["scenario"] = c.scenario;

  const auto e0 = energy(s0, cut, Tail::asymptotic);
  const double grad_W = std::sqrt(ground_state::grad_norm_sq);
  rep["initial"] = {{"E", e0.E},
                    {"E_free", e0.E_free},
                    {"E_ext", e0.E_ext},
                    {"h1", e0.h1},
                    {"E_W", ground_state::energy},
                    {"grad_W", grad_W},
                    {"energy_below_E_W", e0.E < ground_state::energy},
                    {"gradient_above_grad_W", e0.h1 > grad_W}};
  if (c.scenario == "scaled_ground") {
    const double cc2 = c.c * c.c;
    rep["initial"]["E_closed_form"] = (0.5 * cc2 - cc2 * cc2 * cc2 / 6.0) * ground_state::grad_norm_sq;
    rep["initial"]["h1_closed_form"] = c.c * grad_W;
  }
  const auto vf = virial_closed_forms(virial(s0, cut), energy(s0, cut));
  rep["virial_closed_form_residuals_t0"] = {{"coefficient_4", vf.residual_coeff4}, {"coefficient_2", vf.residual_coeff2}};

  json segs = json::array();
  std::size_t ev = 0;
  for (std::size_t i = 0; i < traj.segments.size(); ++i) {
    const auto& r = traj.segments[i];
    const auto& h = traj.histories[i];
    json js = {{"index", r.index}, {"t_start", r.t_start}, {"t_end", r.t_end},
               {"stop", to_string(h.stop)}, {"steps", h.steps}, {"refinements", h.refinements},
               {"verdict", r.verdict}, {"detail", r.detail}, {"end", to_string(r.end)},
               {"N", r.N}, {"energy_in", r.energy_in}, {"energy_out", r.energy_out}};
    json b = json::array();
    for (const auto& p : r.bubbles) b.push_back({{"kappa", p.kappa}, {"lambda", p.lambda}});
    js["bubbles"] = b;
    json snaps = json::array();
    for (std::size_t k = 0; k < h.snapshots.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "snapshots/seg%zu_%05zu.snap", i, k);
      save_snapshot((dir / name).string(), h.snapshots[k]);
      snaps.push_back(name);
    }
    js["snapshots"] = snaps;
    if (r.end == SegmentEnd::continuation) {
      const auto& e = traj.events.at(ev++);
      const std::string pre = "snapshots/event" + std::to_string(i) + "_before.snap";
      const std::string post = "snapshots/event" + std::to_string(i) + "_after.snap";
      save_snapshot((dir / pre).string(), e.before);
      save_snapshot((dir / post).string(), e.after);
      js["event_before"] = pre;
      js["event_after"] = post;
    }
    segs.push_back(js);
  }
  rep["segments"] = segs;
  rep["terminal"] = to_string(traj.terminal);
  rep["violations"] = traj.violations;
  rep["proxy_thresholds"] = {
      {"growth_factor", c.classifier.growth_factor},
      {"quality_min", c.classifier.quality_min},
      {"core_threshold", c.classifier.extract.core_threshold},
      {"sep_ratio", c.classifier.extract.sep_ratio},
      {"note", "type I / type II are asymptotic notions; these finite-run thresholds are configured proxies"}};
  write_text((dir / "report.json").string(), rep.dump(2) + "\n");
  return out;
}

// ---- report ---------------------------------------------------------------------

struct LedgerCheck {
  json result;
  bool ok = true;
};

/// Recomputes every continuation event from the stored snapshots and a weak residual per segment.
inline LedgerCheck check_run_dir(const fs::path& dir, double tol = 0.01) {
  const auto rep = json::parse(read_text((dir / "report.json").string()));
  LedgerCheck out;
  json events = json::array();
  for (const auto& seg : rep.at("segments")) {
    if (!seg.contains("event_before")) continue;
    const auto before = load_snapshot((dir / seg.at("event_before").get<std::string>()).string());
    const auto after = load_snapshot((dir / seg.at("event_after").get<std::string>()).string());
    const auto N = seg.at("N").get<std::size_t>();
    const double e_in = ledger_energy(before), e_out = ledger_energy(after);
    const double gap = e_in - static_cast<double>(N) * soliton_energy() - e_out;
    const bool ok = std::abs(gap) <= tol * soliton_energy() && e_out < e_in;
    const bool matches = std::abs(e_in - seg.at("energy_in").get<double>()) <= 1e-9 * std::max(1.0, std::abs(e_in)) &&
                         std::abs(e_out - seg.at("energy_out").get<double>()) <= 1e-9 * std::max(1.0, std::abs(e_out));
    if (!ok || !matches) out.ok = false;
    events.push_back({{"segment", seg.at("index")}, {"N", N}, {"energy_in", e_in}, {"energy_out", e_out},
                      {"gap_over_E_W", gap / soliton_energy()}, {"ledger_ok", ok}, {"matches_report", matches}});
  }
  json weak = json::array();
  std::vector<std::vector<FieldState>> segs;
  for (const auto& seg : rep.at("segments")) {
    std::vector<FieldState> list;
    for (const auto& f : seg.at("snapshots")) list.push_back(load_snapshot((dir / f.get<std::string>()).string()));
    segs.push_back(std::move(list));
  }
  if (!segs.empty() && segs.front().size() >= 3) {
    const double t0 = segs.front().front().t, t1 = segs.back().back().t;
    double r_min = INFINITY;
    for (const auto& l : segs)
      for (const auto& s : l) r_min = std::min(r_min, s.grid.r_max());
    const TestFunction phi(0.5 * (t0 + t1), 0.25 * r_min, 0.25 * (t1 - t0), 0.125 * r_min);
    try {
      const auto ws = weak_sides(segs, phi);
      weak.push_back({{"t_c", phi.t_c}, {"r_c", phi.r_c}, {"rho_t", phi.rho_t}, {"rho_r", phi.rho_r},
                      {"lhs", ws.lhs}, {"rhs", ws.rhs}, {"residual", ws.residual}});
    } catch (const std::invalid_argument& e) {
      weak.push_back({{"skipped", e.what()}});
    }
  }
  out.result = {{"run", dir.string()}, {"events", events}, {"weak_residuals", weak}, {"ledger_ok", out.ok}};
  return out;
}

// ---- sweep ----------------------------------------------------------------------

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Cartesian product of every "sweep.<key> = a, b, ..." line over the remaining base keys.
inline std::vector<KeyValues> expand_sweep(const KeyValues& kv) {
  KeyValues base;
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const auto& [k, v] : kv) {
    if (k.rfind("sweep.", 0) == 0) {
      auto values = split_list(v);
      if (values.empty()) throw ConfigError("sweep axis '" + k + "' has no values");
      axes.emplace_back(k.substr(6), std::move(values));
    } else {
      base[k] = v;
    }
  }
  std::vector<KeyValues> out{base};
  for (const auto& [key, values] : axes) {
    std::vector<KeyValues> next;
    for (const auto& partial : out) {
      for (const auto& v : values) {
        auto kv2 = partial;
        kv2[key] = v;
        next.push_back(std::move(kv2));
      }
    }
    out = std::move(next);
  }
  return out;
}

// ---- entry point ------------------------------------------------------------------

inline int cli_main(int argc, char** argv) {
  CLI::App app{"Numerical lab for the radial focusing quintic wave equation", "nlwlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_tag);

  std::string run_cfg;
  auto* run = app.add_subcommand("run", "run a scenario from a key-value config file");
  run->add_option("config", run_cfg, "config file")->required();
  bool list_keys = false;
  auto* keys = app.add_subcommand("keys", "list the accepted config keys");
  keys->callback([&] { list_keys = true; });

  EigenSettings es;
  std::string eigen_out = "constants.txt", eigen_profile;
  auto* eigen = app.add_subcommand("eigen", "compute k_d and g_d, write the constants file");
  eigen->add_option("--r-max", es.r_max, "outer radius (>= 40)");
  eigen->add_option("--n", es.n, "coarse intervals; the fine grid doubles them");
  eigen->add_option("--tol", es.tol, "shooting bisection tolerance");
  eigen->add_option("--out", eigen_out, "constants file");
  eigen->add_option("--profile", eigen_profile, "write g_d (reduced, r g_d) as a snapshot file");

  std::string sweep_cfg;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "cartesian parameter sweep with a manifest");
  sweep->add_option("config", sweep_cfg, "base config with sweep.<key> = v1, v2 lines")->required();
  sweep->add_option("--jobs", jobs, "concurrent runs");

  std::string snap_in, residual_out;
  ExtractConfig xc;
  auto* extract = app.add_subcommand("extract", "decompose a snapshot into bubbles and a residual");
  extract->add_option("snapshot", snap_in, "snapshot file")->required();
  extract->add_option("--residual", residual_out, "write the residual snapshot here");
  extract->add_option("--core-threshold", xc.core_threshold);
  extract->add_option("--sep-ratio", xc.sep_ratio);
  extract->add_option("--r-core", xc.r_core);
  extract->add_option("--max-bubbles", xc.max_bubbles);

  std::string report_dir;
  double report_tol = 0.01;
  auto* report = app.add_subcommand("report", "recompute ledger and weak residuals of a run directory");
  report->add_option("dir", report_dir, "run output directory")->required();
  report->add_option("--tol", report_tol, "ledger tolerance in units of E(W)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (list_keys) {
      for (const auto& k : config_keys()) std::cout << k.key << " = " << k.get(RunConfig{}) << "    # " << k.doc << "\n";
      return 0;
    }
    if (*run) {
      const auto cfg = config_from(read_key_values(run_cfg));
      const auto out = execute_run(cfg, cfg.output_dir);
      std::cout << "terminal: " << out.report["terminal"].get<std::string>() << "\n";
      for (const auto& s : out.report["segments"]) {
        std::cout << "segment " << s["index"] << ": " << s["verdict"].get<std::string>() << " at t = " << fmt(s["t_end"].get<double>())
                  << "\n";
      }
      return out.trajectory.violations.empty() ? 0 : 2;
    }
    if (*eigen) {
      const auto e = compute_constants(es);
      write_text(eigen_out, e.constants);
      if (!eigen_profile.empty()) {
        FieldState s(0.0, e.fine.grid);
        s.v = e.fine.p;
        save_snapshot(eigen_profile, s);
      }
      std::cout << e.constants;
      return 0;
    }
    if (*sweep) {
      const auto kv = read_key_values(sweep_cfg);
      auto runs = expand_sweep(kv);
      const std::string root = kv.count("output.dir") ? kv.at("output.dir") : "out";
      std::vector<RunConfig> cfgs;
      for (std::size_t i = 0; i < runs.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%03zu", i);
        runs[i]["output.dir"] = (fs::path(root) / name).string();
        cfgs.push_back(config_from(runs[i]));  // every config is validated before any compute
      }
      std::vector<json> results(cfgs.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cfgs.size();) {
          try {
            const auto o = execute_run(cfgs[i], cfgs[i].output_dir);
            results[i] = {{"terminal", o.report["terminal"]}, {"violations", o.report["violations"]}};
          } catch (const std::exception& e) {
            results[i] = {{"error", e.what()}};
          }
        }
      };
      std::vector<std::thread> pool;
      for (unsigned k = 0; k < std::max(1u, jobs); ++k) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      json manifest = {{"version", version_tag}, {"constants_hash", constants_hash()}, {"runs", json::array()}};
      for (std::size_t i = 0; i < cfgs.size(); ++i) {
        json params = json::object();
        for (const auto& [k, v] : kv) {
          if (k.rfind("sweep.", 0) == 0) params[k.substr(6)] = runs[i].at(k.substr(6));
        }
        manifest["runs"].push_back({{"dir", cfgs[i].output_dir}, {"parameters", params}, {"result", results[i]}});
      }
      fs::create_directories(root);
      write_text((fs::path(root) / "manifest.json").string(), manifest.dump(2) + "\n");
      std::cout << "wrote " << cfgs.size() << " runs to " << root << "\n";
      return 0;
    }
    if (*extract) {
      const auto s = load_snapshot(snap_in);
      const auto d = extract_all(s, xc);
      json j = {{"N", d.N}, {"truncated", d.truncated}, {"note", d.note}, {"profiles", json::array()}};
      for (std::size_t i = 0; i < d.N; ++i) {
        j["profiles"].push_back({{"kappa", d.profiles[i].kappa}, {"lambda", d.profiles[i].lambda}, {"misfit", d.fit_errors[i]}});
      }
      if (!residual_out.empty()) {
        save_snapshot(residual_out, d.residual);
        j["residual"] = residual_out;
      }
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (*report) {
      const auto chk = check_run_dir(report_dir, report_tol);
      std::cout << chk.result.dump(2) << "\n";
      if (!chk.ok) std::cerr << "ledger violation in " << report_dir << "\n";
      return chk.ok ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "nlwlab: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace nlw
