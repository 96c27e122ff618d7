// nlsx command line: ground states, constructions, raw evolution, modulation
// extraction, coercivity spectra, and report emission.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nlsx/experiments.hpp"

namespace fs = std::filesystem;
using namespace nlsx;

namespace {

RunConfig load_config(const std::string& path) {
  return RunConfig::from_json(json::parse(read_text_file(path)));
}

int cmd_groundstate(double p, int d, double omega, double r_max, int n_r,
                    const std::string& out) {
  GroundState gs = solve_ground_state_with_domega(p, d, omega, r_max, n_r);
  write_text_file(out, gs.to_json().dump(2) + "\n");
  std::printf("groundstate: peak %.12g, decay rate %.6g, mass %.12g -> %s\n", gs.peak(),
              gs.decay_rate, ground_state_mass(gs), out.c_str());
  return 0;
}

int cmd_construct(const std::string& config_path, const std::string& out_dir) {
  RunConfig cfg = load_config(config_path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  ConstructionReport rep = run_construction(cfg);
  std::printf("sigma0 = %.10g\n", rep.sigma0_value);
  for (const auto& e : rep.entries)
    std::printf("T_n = %-8g rate = %-12.6g R^2 = %-8.4f valid = %d  max|h|_H1 = %.3e\n", e.T_n,
                e.fit.rate, e.fit.r_squared, e.fit_valid ? 1 : 0, e.max_h_h1);
  for (std::size_t i = 0; i < rep.cauchy.successive.size(); ++i)
    std::printf("||u_%zu(T0) - u_%zu(T0)||_L2 = %.6e\n", i + 2, i + 1,
                rep.cauchy.successive[i]);
  if (!cfg.out_dir.empty()) std::printf("outputs in %s\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_evolve(const std::string& init, double t0, double t1, double dt, double c_stab,
               const std::string& out) {
  LoadedField lf = read_field(init);
  SchemeConfig cfg;
  cfg.dt = dt > 0.0 ? dt : 0.5 * lf.field.grid->h() * lf.field.grid->h();
  cfg.c_stab = c_stab;
  Trajectory traj = evolve(lf.field, t0, t1, lf.p, cfg);
  const Field& last = traj.snapshots.back();
  write_field(out, last, lf.p);
  const auto& d0 = traj.diagnostics.front();
  const auto& d1 = traj.diagnostics.back();
  std::printf("evolved t: %g -> %g, mass drift %.3e, energy drift %.3e -> %s.nlsfld\n", t0, t1,
              std::abs(d1.mass - d0.mass) / std::max(d0.mass, 1e-300),
              std::abs(d1.energy - d0.energy) / std::max(std::abs(d0.energy), 1e-300),
              out.c_str());
  return 0;
}

int cmd_modulate(const std::string& run_dir, const std::string& out) {
  RunConfig cfg = load_config((fs::path(run_dir) / "config.json").string());
  cfg.validate_and_normalize();

  // use the largest ladder entry whose snapshots were saved
  int entry = -1;
  for (int n = static_cast<int>(cfg.Tn_ladder.size()); n >= 1; --n)
    if (fs::exists(fs::path(run_dir) / ("snapshots_" + std::to_string(n)))) {
      entry = n;
      break;
    }
  if (entry < 0)
    throw ConfigRejected(
        "no saved snapshots in " + run_dir +
        " (set observers.save_snapshots = true in the config and re-run construct)");

  Trajectory traj;
  const fs::path dir = fs::path(run_dir) / ("snapshots_" + std::to_string(entry));
  std::vector<fs::path> bases;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".nlsfld") {
      fs::path b = e.path();
      b.replace_extension();
      bases.push_back(b);
    }
  }
  std::sort(bases.begin(), bases.end());
  for (const auto& b : bases) traj.snapshots.push_back(read_field(b).field);

  auto grid = traj.snapshots.front().grid;
  ModulationContext ctx;
  ctx.gss = detail::solve_ladder_ground_states(cfg);
  ctx.specs = cfg.solitons;
  ctx.psi = cfg.obstacle ? obstacle_cutoff(grid, *cfg.obstacle, cfg.cutoff_delta)
                         : unit_cutoff(grid);
  ctx.p = cfg.p;
  ModulationTrajectory mt = extract_trajectory(traj, ctx);

  const std::size_t K = cfg.solitons.size();
  std::vector<std::string> head{"t"};
  for (std::size_t k = 1; k <= K; ++k) {
    head.push_back("omega_t_" + std::to_string(k));
    for (int a = 0; a < cfg.d; ++a)
      head.push_back("y_" + std::to_string(k) + "_" + std::to_string(a + 1));
    head.push_back("mu_t_" + std::to_string(k));
  }
  head.insert(head.end(), {"residual_norm", "h_l2", "h_h1"});
  CsvWriter csv(head);
  for (const auto& st : mt.states) {
    std::vector<std::string> row{fmt_double(st.t)};
    for (std::size_t k = 0; k < K; ++k) {
      row.push_back(fmt_double(st.params.omega_tilde[k]));
      for (int a = 0; a < cfg.d; ++a) row.push_back(fmt_double(st.params.y[k][a]));
      row.push_back(fmt_double(st.params.mu_tilde[k]));
    }
    row.push_back(fmt_double(st.residual_norm));
    row.push_back(fmt_double(st.h_l2));
    row.push_back(fmt_double(st.h_h1));
    csv.row(row);
  }
  csv.save(out);
  std::printf("modulation trajectory (%zu states, entry %d) -> %s\n", mt.states.size(), entry,
              out.c_str());
  return 0;
}

int cmd_spectrum(const std::string& config_path, double t, const std::string& out) {
  RunConfig cfg = load_config(config_path);
  cfg.validate_and_normalize();
  auto grid = std::make_shared<ExteriorGrid>(cfg.d, cfg.L, cfg.h, cfg.obstacle);
  std::vector<GroundState> gss = detail::solve_ladder_ground_states(cfg);
  CutoffField psi = cfg.obstacle ? obstacle_cutoff(grid, *cfg.obstacle, cfg.cutoff_delta)
                                 : unit_cutoff(grid);
  ModulatedAnsatz ma = ansatz_R_modulated(gss, cfg.solitons,
                                          ModulatedParams::unmodulated(cfg.solitons), psi, t,
                                          grid);
  QuadraticForm form = assemble_HK(ma, cfg.solitons, cfg.Lambda, t, cfg.p);
  ConstrainedEig ce = constrained_min_eig(form);
  json j;
  j["lambda_min"] = double_as_json(ce.lambda_min);
  j["n_constraints"] = ce.n_constraints;
  j["N"] = ce.dim;
  j["residual"] = double_as_json(ce.residual);
  j["sym_defect"] = double_as_json(form.sym_defect);
  j["t"] = double_as_json(t);
  write_text_file(out, j.dump(2) + "\n");
  std::printf("lambda_min = %.10g (N = %ld, %ld constraints, residual %.2e) -> %s\n",
              ce.lambda_min, ce.dim, ce.n_constraints, ce.residual, out.c_str());
  return 0;
}

int cmd_report(const std::string& run_dir, const std::string& emit) {
  const json rep = json::parse(read_text_file((fs::path(run_dir) / "report.json").string()));
  if (emit == "csv") {
    CsvWriter csv({"T_n", "rate", "prefactor", "r_squared", "fit_valid", "max_drift",
                   "bootstrap_violations", "max_h_h1", "max_omega_dev"});
    for (const auto& e : rep.at("entries")) {
      double max_drift = 0.0;
      for (const auto& v : e.at("drift_max"))
        max_drift = std::max(max_drift, double_from_json(v));
      csv.row({e.at("T_n").get<std::string>(), e.at("rate").get<std::string>(),
               e.at("prefactor").get<std::string>(), e.at("r_squared").get<std::string>(),
               e.at("fit_valid").get<bool>() ? "1" : "0", fmt_double(max_drift),
               std::to_string(e.at("bootstrap_violations").get<int>()),
               e.at("max_h_h1").get<std::string>(), e.at("max_omega_dev").get<std::string>()});
    }
    const fs::path out = fs::path(run_dir) / "summary.csv";
    csv.save(out);
    std::cout << csv.text();
    std::printf("-> %s\n", out.string().c_str());
    return 0;
  }
  if (emit == "plotdata") {
    {
      CsvWriter csv({"M", "sup_tail_mass"});
      const auto& M = rep.at("tail_M");
      const auto& s = rep.at("tail_sup");
      for (std::size_t i = 0; i < M.size(); ++i)
        csv.row({M.at(i).get<std::string>(), s.at(i).get<std::string>()});
      csv.save(fs::path(run_dir) / "plot_tail.csv");
    }
    if (rep.contains("successive_l2")) {
      CsvWriter csv({"n", "d_n"});
      const auto& s = rep.at("successive_l2");
      for (std::size_t i = 0; i < s.size(); ++i)
        csv.row({std::to_string(i + 1), s.at(i).get<std::string>()});
      csv.save(fs::path(run_dir) / "plot_cauchy.csv");
    }
    {
      CsvWriter csv({"T_n", "rate", "r_squared"});
      for (const auto& e : rep.at("entries"))
        csv.row({e.at("T_n").get<std::string>(), e.at("rate").get<std::string>(),
                 e.at("r_squared").get<std::string>()});
      csv.save(fs::path(run_dir) / "plot_rates.csv");
    }
    std::printf("plot data in %s (plot_tail.csv, plot_cauchy.csv, plot_rates.csv)\n",
                run_dir.c_str());
    return 0;
  }
  throw ConfigRejected("--emit must be csv or plotdata");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-solitary-wave laboratory for NLS outside a convex obstacle"};
  app.require_subcommand(1);

  auto* gs = app.add_subcommand("groundstate", "solve a radial ground state profile");
  double gp = 3.0, gomega = 1.0, grmax = -1.0;
  int gd = 1, gnr = 32768;
  std::string gout = "groundstate.json";
  gs->add_option("--p", gp, "nonlinearity exponent");
  gs->add_option("--d", gd, "dimension (1 or 2)");
  gs->add_option("--omega", gomega, "frequency");
  gs->add_option("--r-max", grmax, "radial domain size (default 26/sqrt(omega))");
  gs->add_option("--n-r", gnr, "radial samples");
  gs->add_option("--out", gout, "output JSON path");

  auto* co = app.add_subcommand("construct", "run the backward final-data construction ladder");
  std::string cconfig, coutdir;
  co->add_option("--config", cconfig, "run config JSON")->required();
  co->add_option("--out-dir", coutdir, "output directory (overrides config)");

  auto* ev = app.add_subcommand("evolve", "time-step a stored field");
  std::string einit, eout = "evolved";
  double et0 = 0.0, et1 = 1.0, edt = -1.0, ecstab = 0.5;
  ev->add_option("--init", einit, "snapshot base path (without extension)")->required();
  ev->add_option("--t0", et0, "start time")->required();
  ev->add_option("--t1", et1, "end time")->required();
  ev->add_option("--dt", edt, "time step (default h^2/2)");
  ev->add_option("--c-stab", ecstab, "accuracy budget dt <= c_stab h^2");
  ev->add_option("--out", eout, "output snapshot base path");

  auto* mo = app.add_subcommand("modulate", "extract modulation parameters from saved snapshots");
  std::string mrun, mout = "mod.csv";
  mo->add_option("--run", mrun, "construction output directory")->required();
  mo->add_option("--out", mout, "output CSV path");

  auto* sp = app.add_subcommand("spectrum", "constrained coercivity spectrum of H_K");
  std::string sconfig, sout = "spec.json";
  double st = 0.0;
  sp->add_option("--config", sconfig, "run config JSON")->required();
  sp->add_option("--t", st, "evaluation time")->required();
  sp->add_option("--out", sout, "output JSON path");

  auto* re = app.add_subcommand("report", "emit summary CSV or plot data for a finished run");
  std::string rrun, remit = "csv";
  re->add_option("--run", rrun, "construction output directory")->required();
  re->add_option("--emit", remit, "csv or plotdata");

  try {
    app.parse(argc, argv);
    if (gs->parsed()) return cmd_groundstate(gp, gd, gomega, grmax, gnr, gout);
    if (co->parsed()) return cmd_construct(cconfig, coutdir);
    if (ev->parsed()) return cmd_evolve(einit, et0, et1, edt, ecstab, eout);
    if (mo->parsed()) return cmd_modulate(mrun, mout);
    if (sp->parsed()) return cmd_spectrum(sconfig, st, sout);
    if (re->parsed()) return cmd_report(rrun, remit);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
