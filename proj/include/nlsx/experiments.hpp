#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <future>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nlsx/field_io.hpp"
#include "nlsx/modulation.hpp"

namespace nlsx {

struct ObserverConfig {
  double snapshot_stride = 0.1;
  int diag_every = 1;
  bool save_snapshots = false;  // write every strided snapshot per entry
};

struct GroundStateConfig {
  double r_max = -1.0;  // negative: 26 / sqrt(omega)
  int n_r = 32768;
  double domega_rel_step = 1e-4;
};

// Full description of one construction run.
struct RunConfig {
  double p = 3.0;
  int d = 1;
  std::optional<Obstacle> obstacle;
  double L = 40.0;
  double h = 0.0625;
  double cutoff_delta = 2.0;
  std::vector<SolitonSpec> solitons;
  double Lambda = 0.25;
  double T0 = 8.0;
  std::vector<double> Tn_ladder;
  SchemeConfig scheme;
  ObserverConfig observers;
  GroundStateConfig groundstate;
  std::string out_dir;
  double alpha0 = 1.5;
  double eps_mod_factor = 0.1;  // modulation radius, fraction of min ||Q||_H1

  // Rotates to the separating frame if needed, sorts solitons by the first
  // velocity component, and checks every config invariant.
  void validate_and_normalize() {
    if (d != 1 && d != 2) throw ConfigRejected("d must be 1 or 2");
    if (!(p > 1.0) || p >= 1.0 + 4.0 / d)
      throw ConfigRejected("p must satisfy 1 < p < 1 + 4/d");
    if (solitons.empty()) throw ConfigRejected("at least one soliton required");
    for (const auto& s : solitons)
      if (!(s.omega > 0.0)) throw ConfigRejected("soliton frequencies must be positive");
    if (obstacle) obstacle->validate(d);

    std::vector<Coord> vel;
    for (const auto& s : solitons) vel.push_back(s.v);
    VelocityFrame frame = velocity_frame(vel, d);
    if (!frame.is_identity) {
      const bool rotation_safe =
          !obstacle || obstacle->kind == ObstacleKind::disc2d;
      if (!rotation_safe)
        throw ConfigRejected(
            "velocity frame rotation needed, but the obstacle is not rotation invariant");
      for (auto& s : solitons) {
        s.v = frame.apply(s.v);
        s.x0 = frame.apply(s.x0);
      }
    }
    std::stable_sort(solitons.begin(), solitons.end(),
                     [](const SolitonSpec& a, const SolitonSpec& b) { return a.v[0] < b.v[0]; });
    require_strictly_increasing(first_velocity_components(solitons));

    if (!(T0 >= 0.0)) throw ConfigRejected("T0 must be nonnegative");
    if (Tn_ladder.empty()) throw ConfigRejected("Tn ladder must not be empty");
    if (!(Tn_ladder.front() > T0)) throw ConfigRejected("T_1 must exceed T0");
    for (std::size_t i = 1; i < Tn_ladder.size(); ++i)
      if (!(Tn_ladder[i] > Tn_ladder[i - 1]))
        throw ConfigRejected("Tn ladder must be strictly increasing");

    if (solitons.size() >= 2) {
      if (!(Lambda > 0.0)) throw ConfigRejected("Lambda must be positive");
      const double s0 = sigma0(solitons);
      if (std::sqrt(s0) * T0 < 2.0 * Lambda)
        throw ConfigRejected("need sqrt(sigma0) * T0 >= 2 Lambda");
    }
    // phase resolution; box adequacy is checked once the grid exists
    ExteriorGrid probe(d, L, h, obstacle);
    detail::require_grid_resolves(probe, solitons);
    scheme.validate(h);
  }

  json to_json() const {
    json j;
    j["p"] = double_as_json(p);
    j["d"] = d;
    j["obstacle"] = obstacle_to_json(obstacle);
    j["grid"] = {{"L", double_as_json(L)}, {"h", double_as_json(h)}};
    j["cutoff_delta"] = double_as_json(cutoff_delta);
    json sols = json::array();
    for (const auto& s : solitons) {
      json js;
      js["omega"] = double_as_json(s.omega);
      json v = json::array({double_as_json(s.v[0])});
      json x0 = json::array({double_as_json(s.x0[0])});
      if (d == 2) {
        v.push_back(double_as_json(s.v[1]));
        x0.push_back(double_as_json(s.x0[1]));
      }
      js["v"] = v;
      js["x0"] = x0;
      js["mu"] = double_as_json(s.mu);
      sols.push_back(js);
    }
    j["solitons"] = sols;
    j["Lambda"] = double_as_json(Lambda);
    j["T0"] = double_as_json(T0);
    j["Tn_ladder"] = doubles_as_json(Tn_ladder);
    j["scheme"] = {{"dt", double_as_json(scheme.dt)},
                   {"tolerance", double_as_json(scheme.tolerance)},
                   {"max_inner", scheme.max_inner},
                   {"c_stab", double_as_json(scheme.c_stab)},
                   {"contamination_fraction", double_as_json(scheme.contamination_fraction)}};
    j["observers"] = {{"snapshot_stride", double_as_json(observers.snapshot_stride)},
                      {"diag_every", observers.diag_every},
                      {"save_snapshots", observers.save_snapshots}};
    j["groundstate"] = {{"r_max", double_as_json(groundstate.r_max)},
                        {"n_r", groundstate.n_r},
                        {"domega_rel_step", double_as_json(groundstate.domega_rel_step)}};
    j["out_dir"] = out_dir;
    j["alpha0"] = double_as_json(alpha0);
    j["eps_mod_factor"] = double_as_json(eps_mod_factor);
    return j;
  }

  static RunConfig from_json(const json& j) {
    RunConfig c;
    c.p = double_from_json(j.at("p"));
    c.d = j.at("d").get<int>();
    c.obstacle = obstacle_from_json(j.at("obstacle"));
    c.L = double_from_json(j.at("grid").at("L"));
    c.h = double_from_json(j.at("grid").at("h"));
    c.cutoff_delta = double_from_json(j.at("cutoff_delta"));
    for (const auto& js : j.at("solitons")) {
      SolitonSpec s;
      s.omega = double_from_json(js.at("omega"));
      s.v[0] = double_from_json(js.at("v").at(0));
      s.x0[0] = double_from_json(js.at("x0").at(0));
      if (c.d == 2) {
        s.v[1] = double_from_json(js.at("v").at(1));
        s.x0[1] = double_from_json(js.at("x0").at(1));
      }
      s.mu = js.contains("mu") ? double_from_json(js.at("mu")) : 0.0;
      c.solitons.push_back(s);
    }
    c.Lambda = double_from_json(j.at("Lambda"));
    c.T0 = double_from_json(j.at("T0"));
    c.Tn_ladder = doubles_from_json(j.at("Tn_ladder"));
    if (j.contains("scheme")) {
      const auto& js = j.at("scheme");
      if (js.contains("dt")) c.scheme.dt = double_from_json(js.at("dt"));
      if (js.contains("tolerance")) c.scheme.tolerance = double_from_json(js.at("tolerance"));
      if (js.contains("max_inner")) c.scheme.max_inner = js.at("max_inner").get<int>();
      if (js.contains("c_stab")) c.scheme.c_stab = double_from_json(js.at("c_stab"));
      if (js.contains("contamination_fraction"))
        c.scheme.contamination_fraction = double_from_json(js.at("contamination_fraction"));
    }
    if (j.contains("observers")) {
      const auto& js = j.at("observers");
      if (js.contains("snapshot_stride"))
        c.observers.snapshot_stride = double_from_json(js.at("snapshot_stride"));
      if (js.contains("diag_every")) c.observers.diag_every = js.at("diag_every").get<int>();
      if (js.contains("save_snapshots"))
        c.observers.save_snapshots = js.at("save_snapshots").get<bool>();
    }
    if (j.contains("groundstate")) {
      const auto& js = j.at("groundstate");
      if (js.contains("r_max")) c.groundstate.r_max = double_from_json(js.at("r_max"));
      if (js.contains("n_r")) c.groundstate.n_r = js.at("n_r").get<int>();
      if (js.contains("domega_rel_step"))
        c.groundstate.domega_rel_step = double_from_json(js.at("domega_rel_step"));
    }
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("alpha0")) c.alpha0 = double_from_json(j.at("alpha0"));
    if (j.contains("eps_mod_factor"))
      c.eps_mod_factor = double_from_json(j.at("eps_mod_factor"));
    return c;
  }

  std::uint64_t hash() const {
    const std::string s = to_json().dump();
    std::uint64_t h64 = 1469598103934665603ull;
    for (unsigned char ch : s) {
      h64 ^= ch;
      h64 *= 1099511628211ull;
    }
    return h64;
  }
};

// Least-squares fit of log(value) against time.
struct DecayFit {
  double rate = 0.0;
  double prefactor = 0.0;
  double r_squared = 0.0;
};

inline DecayFit fit_decay_rate(const std::vector<double>& times,
                               const std::vector<double>& values) {
  if (times.size() != values.size()) throw ConfigError("fit: size mismatch");
  if (times.size() < 5) throw DegenerateFit("fit needs at least 5 samples");
  for (double v : values)
    if (!(v > 0.0)) throw DegenerateFit("fit needs positive values");
  const std::size_t n = times.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += times[i];
    my += std::log(values[i]);
  }
  mx /= n;
  my /= n;
  double vx = 0, vy = 0, cov = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = times[i] - mx;
    const double dy = std::log(values[i]) - my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
  }
  const double floor_y = n * std::pow(1e-12 * std::max(1.0, std::abs(my)), 2.0);
  if (!(vx > 0.0) || vy <= floor_y) throw DegenerateFit("fit input is constant");
  DecayFit fit;
  const double slope = cov / vx;
  fit.rate = -slope;
  fit.prefactor = std::exp(my - slope * mx);
  fit.r_squared = cov * cov / (vx * vy);
  return fit;
}

struct EntryReport {
  double T_n = 0.0;
  std::vector<double> err_t;   // decreasing, T_n -> T_0
  std::vector<double> err_h1;
  DecayFit fit;
  bool fit_valid = false;      // R^2 >= 0.9 required to report the rate
  long fit_excluded = 0;       // nonpositive samples dropped from the fit
  std::vector<double> drift_max;      // per soliton: max_t |M_k(T_n) - M_k(t)|
  int bootstrap_violations = 0;
  double max_abs_domega = 0.0;
  double max_abs_dy = 0.0;
  double max_abs_dmu_comb = 0.0;
  double max_h_h1 = 0.0;
  double max_omega_dev = 0.0;  // max_t max_k |omega~_k - omega_k|
  double max_lipschitz = 0.0;  // measured modulation Lipschitz ratio
  bool modulation_complete = true;   // false if the state left the radius
  double modulation_stopped_at = 0.0;
  // frequency-control fit: |omega~ - omega| ~ c1 ||h||_H1^2 + c2 e^{-2 sigma0 t}
  double freq_c1 = 0.0;
  double freq_c2 = 0.0;
};

struct CauchyReport {
  bool empty_sentinel = false;         // single ladder entry
  std::vector<std::vector<double>> dist;  // pairwise L2 at T_0, n < m
  std::vector<double> successive;         // d_n = ||u_{n+1} - u_n||
};

inline CauchyReport cauchy_check(const std::vector<Field>& t0_fields) {
  CauchyReport rep;
  const std::size_t n = t0_fields.size();
  if (n < 2) {
    rep.empty_sentinel = true;
    return rep;
  }
  rep.dist.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      rep.dist[a][b] = rep.dist[b][a] = l2_distance(t0_fields[a], t0_fields[b]);
  for (std::size_t a = 0; a + 1 < n; ++a) rep.successive.push_back(rep.dist[a][a + 1]);
  return rep;
}

struct TailTable {
  std::vector<double> M;
  std::vector<double> sup_tail;  // sup over ladder entries
};

inline TailTable tail_mass_experiment(const std::vector<Field>& t0_fields,
                                      const std::vector<double>& M_grid) {
  if (t0_fields.size() < 2)
    throw ConfigRejected("tail experiment needs at least two ladder entries");
  TailTable table;
  table.M = M_grid;
  for (double M : M_grid) {
    double sup = 0.0;
    for (const Field& f : t0_fields) sup = std::max(sup, tail_mass(f, M));
    table.sup_tail.push_back(sup);
  }
  return table;
}

struct ConstructionReport {
  std::uint64_t config_hash = 0;
  double sigma0_value = 0.0;
  std::vector<EntryReport> entries;
  CauchyReport cauchy;
  TailTable tail;
  double mass_T0 = 0.0;  // mass of the largest-ladder state at T_0
  std::vector<Field> t0_fields;

  json to_json() const {
    json j;
    j["config_hash"] = config_hash;
    j["sigma0"] = double_as_json(sigma0_value);
    const StepRegularity reg = smooth_step_regularity();
    j["step_regularity"] = {{"sup_d1sq_over_s", double_as_json(reg.sup_d1sq_over_s)},
                            {"sup_d2sq_over_d1", double_as_json(reg.sup_d2sq_over_d1)}};
    json ent = json::array();
    for (const auto& e : entries) {
      json je;
      je["T_n"] = double_as_json(e.T_n);
      je["rate"] = double_as_json(e.fit.rate);
      je["prefactor"] = double_as_json(e.fit.prefactor);
      je["r_squared"] = double_as_json(e.fit.r_squared);
      je["fit_valid"] = e.fit_valid;
      je["fit_excluded"] = e.fit_excluded;
      je["drift_max"] = doubles_as_json(e.drift_max);
      je["bootstrap_violations"] = e.bootstrap_violations;
      je["max_abs_domega"] = double_as_json(e.max_abs_domega);
      je["max_abs_dy"] = double_as_json(e.max_abs_dy);
      je["max_abs_dmu_comb"] = double_as_json(e.max_abs_dmu_comb);
      je["max_h_h1"] = double_as_json(e.max_h_h1);
      je["max_omega_dev"] = double_as_json(e.max_omega_dev);
      je["modulation_complete"] = e.modulation_complete;
      je["modulation_stopped_at"] = double_as_json(e.modulation_stopped_at);
      je["freq_c1"] = double_as_json(e.freq_c1);
      je["freq_c2"] = double_as_json(e.freq_c2);
      je["max_lipschitz"] = double_as_json(e.max_lipschitz);
      ent.push_back(je);
    }
    j["entries"] = ent;
    if (!cauchy.empty_sentinel) {
      json rows = json::array();
      for (const auto& row : cauchy.dist) rows.push_back(doubles_as_json(row));
      j["pairwise_l2"] = rows;
      j["successive_l2"] = doubles_as_json(cauchy.successive);
    }
    j["tail_M"] = doubles_as_json(tail.M);
    j["tail_sup"] = doubles_as_json(tail.sup_tail);
    j["mass_T0"] = double_as_json(mass_T0);
    return j;
  }
};

namespace detail {

inline std::vector<GroundState> solve_ladder_ground_states(const RunConfig& cfg) {
  std::map<double, GroundState> cache;
  std::vector<GroundState> out;
  for (const auto& s : cfg.solitons) {
    auto it = cache.find(s.omega);
    if (it == cache.end()) {
      GroundState gs = solve_ground_state_with_domega(
          cfg.p, cfg.d, s.omega, cfg.groundstate.r_max, cfg.groundstate.n_r,
          cfg.groundstate.domega_rel_step);
      it = cache.emplace(s.omega, std::move(gs)).first;
    }
    out.push_back(it->second);
  }
  return out;
}

inline std::string fmt_cell(double x) { return fmt_double(x); }

}  // namespace detail

inline ConstructionReport run_construction(RunConfig cfg) {
  cfg.validate_and_normalize();
  namespace fs = std::filesystem;
  const bool emit = !cfg.out_dir.empty();
  if (emit) fs::create_directories(cfg.out_dir);
  if (emit) write_text_file(fs::path(cfg.out_dir) / "config.json", cfg.to_json().dump(2) + "\n");

  auto grid = std::make_shared<ExteriorGrid>(cfg.d, cfg.L, cfg.h, cfg.obstacle);
  require_box_adequacy(*grid, cfg.solitons, cfg.T0, cfg.Tn_ladder.back());
  const std::vector<GroundState> gss = detail::solve_ladder_ground_states(cfg);
  const CutoffField psi = cfg.obstacle ? obstacle_cutoff(grid, *cfg.obstacle, cfg.cutoff_delta)
                                       : unit_cutoff(grid);
  const std::size_t K = cfg.solitons.size();

  ConstructionReport report;
  report.config_hash = cfg.hash();
  report.sigma0_value = sigma0(cfg.solitons);

  ModulationContext mctx;
  mctx.gss = gss;
  mctx.specs = cfg.solitons;
  mctx.psi = psi;
  mctx.p = cfg.p;
  mctx.eps_mod_factor = cfg.eps_mod_factor;

  for (std::size_t n = 0; n < cfg.Tn_ladder.size(); ++n) {
    const double T_n = cfg.Tn_ladder[n];
    EvolveOptions opts;
    opts.snapshot_stride = cfg.observers.snapshot_stride;
    opts.diag_every = cfg.observers.diag_every;

    FinalDataRun run;
    try {
      run = final_data_run(gss, cfg.solitons, psi, T_n, cfg.T0, cfg.p, cfg.scheme,
                           K >= 2 ? cfg.Lambda : 0.0, opts);
    } catch (const NumericalError& e) {
      throw NumericalError("ladder entry " + std::to_string(n + 1) + ": " + e.what());
    }

    EntryReport entry;
    entry.T_n = T_n;
    entry.err_t = run.err_t;
    entry.err_h1 = run.err_h1;

    // log-linear fit over the inner 80% of [T_0, T_n], zero samples excluded
    const double dT = T_n - cfg.T0;
    const double lo = cfg.T0 + 0.1 * dT, hi = T_n - 0.1 * dT;
    std::vector<double> ft, fv;
    for (std::size_t i = 0; i < run.err_t.size(); ++i) {
      if (run.err_t[i] < lo || run.err_t[i] > hi) continue;
      if (!(run.err_h1[i] > 0.0)) {
        ++entry.fit_excluded;
        continue;
      }
      ft.push_back(run.err_t[i]);
      fv.push_back(run.err_h1[i]);
    }
    try {
      entry.fit = fit_decay_rate(ft, fv);
      entry.fit_valid = entry.fit.r_squared >= 0.9;
    } catch (const DegenerateFit&) {
      entry.fit_valid = false;
    }

    // localized drift per soliton (first recorded sample is t = T_n)
    entry.drift_max.assign(K, 0.0);
    if (!run.localized.empty()) {
      const LocalizedReport& ref = run.localized.front();
      for (const auto& rep : run.localized)
        for (std::size_t k = 0; k < K; ++k)
          entry.drift_max[k] = std::max(entry.drift_max[k], std::abs(rep.M[k] - ref.M[k]));
    }

    // bootstrap monitor: walking backward from T_n, once err e^{sigma0 t}
    // drops below alpha0 it must stay below
    bool armed = false;
    for (std::size_t i = 0; i < run.err_t.size(); ++i) {
      const double scaled = run.err_h1[i] * std::exp(report.sigma0_value * run.err_t[i]);
      if (!armed && scaled < cfg.alpha0) armed = true;
      else if (armed && scaled > cfg.alpha0) ++entry.bootstrap_violations;
    }

    // modulation along the stored snapshots; a state drifting outside the
    // modulation radius truncates the trajectory instead of failing the run
    double eps_mod = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      const double m = ground_state_mass(gss[k]);
      const double gsq = radial_integral(gss[k], [&](double, int i) {
        const double s = eval_profile_slope(gss[k], gss[k].r_samples[i]);
        return s * s;
      });
      const double vv = dot(cfg.solitons[k].v, cfg.solitons[k].v);
      eps_mod = std::min(eps_mod, std::sqrt(gsq + (1.0 + 0.25 * vv) * m));
    }
    eps_mod *= cfg.eps_mod_factor;
    Trajectory mod_input;
    for (const Field& snap : run.traj.snapshots) {
      Field R = ansatz_R(gss, cfg.solitons, psi, snap.t, grid);
      if (h1_distance(snap, R, cfg.p) > eps_mod) {
        entry.modulation_complete = false;
        entry.modulation_stopped_at = snap.t;
        break;
      }
      mod_input.snapshots.push_back(snap);
    }
    ModulationTrajectory mt;
    try {
      mt = extract_trajectory(mod_input, mctx);
    } catch (const NumericalError&) {
      entry.modulation_complete = false;
      mt = ModulationTrajectory{};
    }
    for (const auto& st : mt.states) {
      entry.max_h_h1 = std::max(entry.max_h_h1, st.h_h1);
      entry.max_lipschitz = std::max(entry.max_lipschitz, st.lipschitz_ratio);
      for (std::size_t k = 0; k < K; ++k)
        entry.max_omega_dev = std::max(
            entry.max_omega_dev, std::abs(st.params.omega_tilde[k] - cfg.solitons[k].omega));
    }
    for (std::size_t i = 0; i < mt.deriv_t.size(); ++i)
      for (std::size_t k = 0; k < K; ++k) {
        entry.max_abs_domega = std::max(entry.max_abs_domega, std::abs(mt.domega_dt[i][k]));
        entry.max_abs_dy = std::max(entry.max_abs_dy, std::abs(mt.dy_dt[i][k][0]));
        if (cfg.d == 2)
          entry.max_abs_dy = std::max(entry.max_abs_dy, std::abs(mt.dy_dt[i][k][1]));
        entry.max_abs_dmu_comb = std::max(entry.max_abs_dmu_comb, std::abs(mt.dmu_comb[i][k]));
      }

    // least-squares constants of the frequency-control bound
    // |omega~_k - omega_k| <= c1 ||h||_H1^2 + c2 e^{-2 sigma0 t}
    {
      double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
      for (const auto& st : mt.states) {
        const double x1 = st.h_h1 * st.h_h1;
        const double x2 = std::exp(-2.0 * report.sigma0_value * st.t);
        double dev = 0.0;
        for (std::size_t k = 0; k < K; ++k)
          dev = std::max(dev, std::abs(st.params.omega_tilde[k] - cfg.solitons[k].omega));
        a11 += x1 * x1;
        a12 += x1 * x2;
        a22 += x2 * x2;
        b1 += x1 * dev;
        b2 += x2 * dev;
      }
      const double det = a11 * a22 - a12 * a12;
      if (std::abs(det) > 1e-300) {
        entry.freq_c1 = std::max(0.0, (b1 * a22 - b2 * a12) / det);
        entry.freq_c2 = std::max(0.0, (a11 * b2 - a12 * b1) / det);
      }
    }

    report.t0_fields.push_back(run.traj.snapshots.back());

    if (emit) {
      const std::string tag = std::to_string(n + 1);
      CsvWriter err({"t", "h1_err"});
      for (std::size_t i = 0; i < run.err_t.size(); ++i)
        err.row({detail::fmt_cell(run.err_t[i]), detail::fmt_cell(run.err_h1[i])});
      err.save(fs::path(cfg.out_dir) / ("err_series_" + tag + ".csv"));

      if (!run.localized.empty()) {
        std::vector<std::string> head{"t"};
        for (std::size_t k = 1; k <= K; ++k) head.push_back("M_" + std::to_string(k));
        for (std::size_t k = 1; k <= K; ++k)
          for (int a = 0; a < cfg.d; ++a)
            head.push_back("P_" + std::to_string(k) + "_" + std::to_string(a + 1));
        head.insert(head.end(), {"J", "G", "mass", "energy", "h1_err"});
        CsvWriter loc(head);
        for (std::size_t i = 0; i < run.localized.size(); ++i) {
          const auto& r = run.localized[i];
          std::vector<std::string> row{detail::fmt_cell(r.t)};
          for (std::size_t k = 0; k < K; ++k) row.push_back(detail::fmt_cell(r.M[k]));
          for (std::size_t k = 0; k < K; ++k)
            for (int a = 0; a < cfg.d; ++a) row.push_back(detail::fmt_cell(r.P[k][a]));
          row.push_back(detail::fmt_cell(r.J));
          row.push_back(detail::fmt_cell(r.G));
          row.push_back(detail::fmt_cell(r.mass));
          row.push_back(detail::fmt_cell(r.energy));
          row.push_back(detail::fmt_cell(i < run.err_h1.size() ? run.err_h1[i] : 0.0));
          loc.row(row);
        }
        loc.save(fs::path(cfg.out_dir) / ("localized_" + tag + ".csv"));
      }

      {
        std::vector<std::string> head{"t"};
        for (std::size_t k = 1; k <= K; ++k) {
          head.push_back("omega_t_" + std::to_string(k));
          for (int a = 0; a < cfg.d; ++a)
            head.push_back("y_" + std::to_string(k) + "_" + std::to_string(a + 1));
          head.push_back("mu_t_" + std::to_string(k));
        }
        head.insert(head.end(), {"residual_norm", "h_l2", "h_h1"});
        for (std::size_t k = 1; k <= K; ++k) {
          head.push_back("domega_dt_" + std::to_string(k));
          head.push_back("dy_dt_" + std::to_string(k));
          head.push_back("dmu_comb_" + std::to_string(k));
        }
        CsvWriter mod(head);
        for (std::size_t i = 0; i < mt.states.size(); ++i) {
          const auto& st = mt.states[i];
          std::vector<std::string> row{detail::fmt_cell(st.t)};
          for (std::size_t k = 0; k < K; ++k) {
            row.push_back(detail::fmt_cell(st.params.omega_tilde[k]));
            for (int a = 0; a < cfg.d; ++a) row.push_back(detail::fmt_cell(st.params.y[k][a]));
            row.push_back(detail::fmt_cell(st.params.mu_tilde[k]));
          }
          row.push_back(detail::fmt_cell(st.residual_norm));
          row.push_back(detail::fmt_cell(st.h_l2));
          row.push_back(detail::fmt_cell(st.h_h1));
          const bool interior = i >= 1 && i + 1 < mt.states.size() && i - 1 < mt.deriv_t.size();
          for (std::size_t k = 0; k < K; ++k) {
            if (interior) {
              row.push_back(detail::fmt_cell(mt.domega_dt[i - 1][k]));
              row.push_back(detail::fmt_cell(mt.dy_dt[i - 1][k][0]));
              row.push_back(detail::fmt_cell(mt.dmu_comb[i - 1][k]));
            } else {
              row.insert(row.end(), {"", "", ""});
            }
          }
          mod.row(row);
        }
        mod.save(fs::path(cfg.out_dir) / ("modulation_" + tag + ".csv"));
      }

      fs::create_directories(fs::path(cfg.out_dir) / "t0_fields");
      write_field(fs::path(cfg.out_dir) / "t0_fields" / ("entry_" + tag),
                  run.traj.snapshots.back(), cfg.p);
      if (cfg.observers.save_snapshots) {
        const fs::path snapdir = fs::path(cfg.out_dir) / ("snapshots_" + tag);
        fs::create_directories(snapdir);
        for (std::size_t i = 0; i < run.traj.snapshots.size(); ++i) {
          char name[32];
          std::snprintf(name, sizeof(name), "snap_%05zu", i);
          write_field(snapdir / name, run.traj.snapshots[i], cfg.p);
        }
      }
    }
    report.entries.push_back(std::move(entry));
  }

  report.cauchy = cauchy_check(report.t0_fields);
  report.mass_T0 = mass_energy_h1(report.t0_fields.back(), cfg.p).mass;

  // sup-over-ladder tail-mass table on a fixed radius grid
  std::vector<double> Ms{0.0};
  const double mmax = cfg.L - 2.0 * cfg.h;
  for (int i = 1; i <= 10; ++i) Ms.push_back(mmax * i / 10.0);
  if (report.t0_fields.size() >= 2) report.tail = tail_mass_experiment(report.t0_fields, Ms);

  if (emit)
    write_text_file(fs::path(cfg.out_dir) / "report.json", report.to_json().dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------------------
// Sweep: independent constructions aggregated into one deterministic CSV.

struct SweepRow {
  std::uint64_t config_hash = 0;
  bool ok = false;
  std::string error;
  double sigma0_value = 0.0;
  double fitted_rate = 0.0;    // largest ladder entry
  double lambda_min = 0.0;     // constrained H_K minimum at t = T_0
  double max_drift = 0.0;      // over entries and solitons
};

inline SweepRow run_one_sweep_entry(RunConfig cfg) {
  SweepRow row;
  row.config_hash = cfg.hash();
  try {
    ConstructionReport rep = run_construction(cfg);
    row.sigma0_value = rep.sigma0_value;
    row.fitted_rate = rep.entries.back().fit.rate;
    for (const auto& e : rep.entries)
      for (double dmax : e.drift_max) row.max_drift = std::max(row.max_drift, dmax);

    cfg.validate_and_normalize();
    auto grid = std::make_shared<ExteriorGrid>(cfg.d, cfg.L, cfg.h, cfg.obstacle);
    const std::vector<GroundState> gss = detail::solve_ladder_ground_states(cfg);
    const CutoffField psi = cfg.obstacle
                                ? obstacle_cutoff(grid, *cfg.obstacle, cfg.cutoff_delta)
                                : unit_cutoff(grid);
    ModulatedAnsatz ma = ansatz_R_modulated(gss, cfg.solitons,
                                            ModulatedParams::unmodulated(cfg.solitons), psi,
                                            cfg.T0, grid);
    QuadraticForm form = assemble_HK(ma, cfg.solitons, cfg.Lambda, cfg.T0, cfg.p);
    row.lambda_min = constrained_min_eig(form).lambda_min;
    row.ok = true;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

inline std::string sweep(std::vector<RunConfig> cfgs, int parallelism = 1) {
  std::set<std::string> outs;
  for (const auto& c : cfgs) {
    if (c.out_dir.empty()) continue;
    if (!outs.insert(std::filesystem::absolute(c.out_dir).string()).second)
      throw OutputCollision("duplicate output directory: " + c.out_dir);
  }

  std::vector<SweepRow> rows(cfgs.size());
  if (parallelism < 1) parallelism = 1;
  std::size_t next = 0;
  while (next < cfgs.size()) {
    const std::size_t batch = std::min<std::size_t>(parallelism, cfgs.size() - next);
    std::vector<std::future<SweepRow>> futs;
    for (std::size_t i = 0; i < batch; ++i)
      futs.push_back(std::async(std::launch::async, run_one_sweep_entry, cfgs[next + i]));
    for (std::size_t i = 0; i < batch; ++i) rows[next + i] = futs[i].get();
    next += batch;
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const SweepRow& a, const SweepRow& b) { return a.config_hash < b.config_hash; });
  CsvWriter csv({"config_hash", "status", "sigma0", "fitted_rate", "lambda_min", "max_drift",
                 "error"});
  for (const auto& r : rows) {
    std::string err = r.error;
    for (char& c : err)
      if (c == ',' || c == '\n') c = ';';
    csv.row({std::to_string(r.config_hash), r.ok ? "ok" : "error",
             detail::fmt_cell(r.sigma0_value), detail::fmt_cell(r.fitted_rate),
             detail::fmt_cell(r.lambda_min), detail::fmt_cell(r.max_drift), err});
  }
  return csv.text();
}

}  // namespace nlsx
