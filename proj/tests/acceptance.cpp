// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each check restates its thresholds inline.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "nlsx/experiments.hpp"

using namespace nlsx;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %-28s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  if (!pass) ++g_failures;
}

double run_seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double closed_form_1d(double p, double w, double x) {
  const double amp = std::pow(w * (p + 1.0) / 2.0, 1.0 / (p - 1.0));
  return amp * std::pow(1.0 / std::cosh(std::sqrt(w) * (p - 1.0) * x / 2.0), 2.0 / (p - 1.0));
}

// Spearman rank correlation for strictly ordered x against values y.
double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  auto ranks = [&](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      double rank = 1.0;
      for (std::size_t j = 0; j < n; ++j)
        if (v[j] < v[i]) rank += 1.0;
      r[i] = rank;
    }
    return r;
  };
  const std::vector<double> rx = ranks(x), ry = ranks(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

Field random_field(const GridPtr& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss;
  Field f = Field::zero(g);
  for (long i = 0; i < g->total_nodes(); ++i)
    if (g->is_exterior(i)) f.v[i] = Complex(gauss(rng), gauss(rng));
  return f;
}

// ---------------------------------------------------------------------------

void criterion_1() {
  const auto t0 = Clock::now();
  bool pass = true;
  std::string detail;
  double worst_res = 0.0, worst_match = 0.0;
  for (double p : {2.0, 3.0}) {
    for (int d : {1, 2}) {
      if (p >= 1.0 + 4.0 / d) {
        try {
          solve_ground_state(p, d, 1.0);
          pass = false;
          detail += " (p=3,d=2 did not reject)";
        } catch (const SubcriticalityViolated&) {
        }
        continue;
      }
      for (double w : {0.5, 1.0, 4.0}) {
        GroundState gs = solve_ground_state(p, d, w, -1.0, d == 1 ? 32768 : 8192);
        // residual of the radial operator on the returned samples
        const double dr = gs.dr();
        double res = 0.0;
        for (int i = 1; i + 1 < gs.n_r; ++i) {
          double lap = (gs.q_samples[i + 1] - 2.0 * gs.q_samples[i] + gs.q_samples[i - 1]) /
                       (dr * dr);
          if (d == 2)
            lap += (gs.q_samples[i + 1] - gs.q_samples[i - 1]) / (2.0 * dr * gs.r_samples[i]);
          res = std::max(res,
                         std::abs(-lap + w * gs.q_samples[i] - std::pow(gs.q_samples[i], p)));
        }
        worst_res = std::max(worst_res, res / gs.peak());
        if (res > 1e-8 * gs.peak()) pass = false;
        if (d == 1) {
          double mis = 0.0;
          for (double x = 0.0; x <= 12.0 / std::sqrt(w); x += 0.0131)
            mis = std::max(mis, std::abs(eval_profile(gs, x) - closed_form_1d(p, w, x)));
          worst_match = std::max(worst_match, mis / gs.peak());
          if (mis > 1e-6 * gs.peak()) pass = false;
        }
      }
    }
  }
  const double secs = run_seconds(t0);
  if (secs > 5.0) pass = false;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max residual %.2e (<=1e-8), max 1D mismatch %.2e (<=1e-6), %.1f s (<=5)%s",
                worst_res, worst_match, secs, detail.c_str());
  report(1, "ground-state residual", pass, buf);
}

void criterion_2() {
  const auto t0 = Clock::now();
  GroundState gs = solve_ground_state(3.0, 1, 1.0);
  auto grid = std::make_shared<ExteriorGrid>(1, 25.0, 1.0 / 32.0);
  Field u0 = free_soliton(gs, SolitonSpec{}, 0.0, grid);
  SchemeConfig cfg;
  cfg.dt = 5e-4;
  cfg.c_stab = cfg.dt / (grid->h() * grid->h()) * 1.01;
  Trajectory fwd = evolve(u0, 0.0, 5.0, 3.0, cfg, EvolveOptions{.snapshot_stride = 5.0});
  double mass_drift = 0.0, energy_drift = 0.0;
  const double m0 = fwd.diagnostics.front().mass;
  const double e0 = fwd.diagnostics.front().energy;
  for (const auto& d : fwd.diagnostics) {
    mass_drift = std::max(mass_drift, std::abs(d.mass - m0) / m0);
    energy_drift = std::max(energy_drift, std::abs(d.energy - e0) / std::abs(e0));
  }
  Trajectory back =
      evolve(fwd.snapshots.back(), 5.0, 0.0, 3.0, cfg, EvolveOptions{.snapshot_stride = 5.0});
  const double rt = l2_distance(back.snapshots.back(), u0) / l2_norm(u0);
  const double secs = run_seconds(t0);
  const bool pass =
      mass_drift <= 1e-9 && energy_drift <= 1e-6 && rt <= 1e-9 && secs <= 60.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "mass drift %.2e (<=1e-9), energy drift %.2e (<=1e-6), round trip %.2e (<=1e-9), "
                "%.1f s (<=60)",
                mass_drift, energy_drift, rt, secs);
  report(2, "conservation/reversibility", pass, buf);
}

void criterion_3() {
  const auto t0 = Clock::now();
  GroundState gs = solve_ground_state(3.0, 1, 1.0);
  // fidelity against the exact traveling solution
  const double h = 1.0 / 224.0;
  auto grid = std::make_shared<ExteriorGrid>(1, 22.0, h);
  SolitonSpec spec;
  spec.v = {4.0, 0.0};
  spec.x0 = {-10.0, 0.0};
  Field u0 = free_soliton(gs, spec, 0.0, grid);
  SchemeConfig cfg;
  cfg.dt = 6.25e-4;
  cfg.c_stab = cfg.dt / (h * h) * 1.01;
  double worst = 0.0;
  EvolveOptions opts;
  opts.snapshot_stride = 0.25;
  opts.observer = [&](const Field& f) {
    worst = std::max(worst, l2_distance(f, free_soliton(gs, spec, f.t, grid)));
  };
  evolve(u0, 0.0, 5.0, 3.0, cfg, opts);
  const double budget = 1e-3 * l2_norm(u0);

  // dt halving against a fine-dt reference at fixed h
  const double h2 = 1.0 / 32.0;
  auto grid2 = std::make_shared<ExteriorGrid>(1, 16.0, h2);
  SolitonSpec sp2;
  sp2.v = {2.0, 0.0};
  sp2.x0 = {-3.0, 0.0};
  Field w0 = free_soliton(gs, sp2, 0.0, grid2);
  auto run_to = [&](double dt) {
    SchemeConfig c;
    c.dt = dt;
    c.c_stab = dt / (h2 * h2) * 1.01;
    Trajectory t = evolve(w0, 0.0, 1.6, 3.0, c, EvolveOptions{.snapshot_stride = 1.6});
    return t.snapshots.back();
  };
  Field ref = run_to(5e-4);
  const double e1 = l2_distance(run_to(8e-3), ref);
  const double e2 = l2_distance(run_to(4e-3), ref);
  const double ratio = e1 / e2;
  const double secs = run_seconds(t0);
  const bool pass = worst <= budget && ratio >= 3.4 && ratio <= 4.6 && secs <= 120.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max L2 err %.3e (<=%.3e), dt-halving ratio %.2f (in [3.4,4.6]), %.1f s (<=120)",
                worst, budget, ratio, secs);
  report(3, "soliton fidelity", pass, buf);
}

void criterion_4() {
  const auto t0 = Clock::now();
  auto grid = std::make_shared<ExteriorGrid>(1, 30.0, 1.0 / 16.0);
  GroundState gs = solve_ground_state(3.0, 1, 1.0, -1.0, 16384);
  ModulationContext ctx;
  ctx.p = 3.0;
  ctx.psi = unit_cutoff(grid);
  ctx.gss = {gs, gs};
  ctx.eps_mod_factor = 0.4;
  SolitonSpec s1, s2;
  s1.v = {-1.0, 0.0};
  s1.x0 = {-8.0, 0.0};
  s1.mu = 0.25;
  s2.v = {1.0, 0.0};
  s2.x0 = {8.0, 0.0};
  s2.mu = -0.4;
  ctx.specs = {s1, s2};

  ModulatedParams truth = ModulatedParams::unmodulated(ctx.specs);
  truth.omega_tilde = {1.1, 0.9};
  truth.y = {Coord{0.1, 0.0}, Coord{-0.1, 0.0}};
  truth.mu_tilde[0] += 0.1;
  truth.mu_tilde[1] -= 0.1;
  ModulatedAnsatz ma = ansatz_R_modulated(ctx.gss, ctx.specs, truth, ctx.psi, 0.4, grid);
  ModulationState st =
      decompose(ma.total, 0.4, ModulatedParams::unmodulated(ctx.specs), ctx);
  double perr = 0.0;
  for (int k = 0; k < 2; ++k) {
    perr = std::max(perr, std::abs(st.params.omega_tilde[k] - truth.omega_tilde[k]));
    perr = std::max(perr, std::abs(st.params.y[k][0] - truth.y[k][0]));
    perr = std::max(perr, std::abs(st.params.mu_tilde[k] - truth.mu_tilde[k]));
  }
  const double resid_rel = st.residual_norm / l2_norm(ma.total);

  // gauge covariance
  Field R = ansatz_R(ctx.gss, ctx.specs, ctx.psi, 0.0, grid);
  ModulationState base = decompose(R, 0.0, ModulatedParams::unmodulated(ctx.specs), ctx);
  const double gamma = 0.37;
  Field Rg = R;
  for (auto& z : Rg.v) z *= std::polar(1.0, gamma);
  ModulationState shifted =
      decompose(Rg, 0.0, ModulatedParams::unmodulated(ctx.specs), ctx, false);
  double gauge_err = 0.0;
  for (int k = 0; k < 2; ++k) {
    gauge_err = std::max(gauge_err,
                         std::abs(shifted.params.mu_tilde[k] - base.params.mu_tilde[k] - gamma));
    gauge_err = std::max(gauge_err,
                         std::abs(shifted.params.omega_tilde[k] - base.params.omega_tilde[k]));
    gauge_err = std::max(gauge_err, std::abs(shifted.params.y[k][0] - base.params.y[k][0]));
  }

  // translation covariance (grid-exact shift)
  const double shift = 0.5;
  const long off = std::lround(shift / grid->h());
  Field Rs = Field::zero(grid);
  for (long i = 0; i + off < grid->total_nodes(); ++i) Rs.v[i + off] = R.v[i];
  ModulationState tr = decompose(Rs, 0.0, ModulatedParams::unmodulated(ctx.specs), ctx, false);
  double tr_err = 0.0;
  for (int k = 0; k < 2; ++k) {
    tr_err = std::max(tr_err, std::abs(tr.params.y[k][0] - shift));
    tr_err = std::max(tr_err, std::abs(tr.params.omega_tilde[k] - 1.0));
  }

  const double secs = run_seconds(t0);
  const bool pass = perr <= 1e-8 && resid_rel <= 1e-10 && gauge_err <= 1e-8 &&
                    tr_err <= 1e-8 && secs <= 30.0;
  char buf[180];
  std::snprintf(buf, sizeof(buf),
                "recovery %.2e (<=1e-8), residual %.2e (<=1e-10), gauge %.2e, translation %.2e "
                "(<=1e-8), %.1f s (<=30)",
                perr, resid_rel, gauge_err, tr_err, secs);
  report(4, "modulation round trip", pass, buf);
}

void criterion_5() {
  const auto t0 = Clock::now();
  GroundState gs = solve_ground_state(3.0, 1, 1.0);

  // K = 1 at rest: Eq.-(4) constraints
  auto grid1 = std::make_shared<ExteriorGrid>(1, 15.0, 0.1);
  SolitonSpec rest;
  ModulatedAnsatz ma1 = ansatz_R_modulated({gs}, {rest}, ModulatedParams::unmodulated({rest}),
                                           unit_cutoff(grid1), 0.0, grid1);
  QuadraticForm f1 = assemble_HK(ma1, {rest}, 1.0, 0.0, 3.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> unconstrained((Eigen::MatrixXd(f1.A)));
  const double lam_unc = unconstrained.eigenvalues()(0) / f1.mass_scale;
  const double lam_one = constrained_min_eig(f1).lambda_min;

  // K = 2 boosted, separation ladder (decreasing separation)
  auto grid2 = std::make_shared<ExteriorGrid>(1, 25.0, 0.1);
  std::vector<double> half_seps{8.0, 6.0, 5.0, 4.0, 3.0};
  std::vector<double> lams;
  bool all_pos = true;
  for (double hs : half_seps) {
    SolitonSpec a, b;
    a.v = {-1.0, 0.0};
    a.x0 = {-hs, 0.0};
    b.v = {1.0, 0.0};
    b.x0 = {hs, 0.0};
    std::vector<SolitonSpec> specs{a, b};
    ModulatedAnsatz ma = ansatz_R_modulated({gs, gs}, specs,
                                            ModulatedParams::unmodulated(specs),
                                            unit_cutoff(grid2), 0.0, grid2);
    QuadraticForm form = assemble_HK(ma, specs, 1.0, 0.0, 3.0);
    const double lam_min = constrained_min_eig(form).lambda_min;
    lams.push_back(lam_min);
    if (!(lam_min > 0.0)) all_pos = false;
  }
  std::vector<double> order{1, 2, 3, 4, 5};
  const double rho = spearman(order, lams);
  bool monotone = true;
  for (std::size_t i = 1; i < lams.size(); ++i)
    if (!(lams[i] < lams[i - 1])) monotone = false;

  const double secs = run_seconds(t0);
  const bool pass = lam_unc < 0.0 && lam_one > 0.0 && all_pos && rho < -0.9 && secs <= 120.0;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "K=1 unconstrained %.3f (<0) constrained %.4f (>0); K=2 lambda %.4f..%.4f all>0, "
                "Spearman %.2f (<-0.9, monotone=%d), %.1f s (<=120)",
                lam_unc, lam_one, lams.front(), lams.back(), rho, monotone ? 1 : 0, secs);
  report(5, "coercivity", pass, buf);
}

RunConfig theorem1_config(double Lambda) {
  RunConfig cfg;
  cfg.p = 3.0;
  cfg.d = 1;
  cfg.obstacle = Obstacle::interval(0.0, 1.0);
  cfg.L = 180.0;
  cfg.h = 0.03125;
  cfg.cutoff_delta = 2.0;
  SolitonSpec s1, s2;
  s1.v = {-6.0, 0.0};
  s2.v = {6.0, 0.0};
  cfg.solitons = {s1, s2};
  cfg.Lambda = Lambda;
  cfg.T0 = 16.0;
  cfg.Tn_ladder = {20.0, 24.0, 28.0};
  cfg.scheme.dt = 0.005;
  cfg.scheme.c_stab = cfg.scheme.dt / (cfg.h * cfg.h) * 1.01;
  cfg.groundstate.n_r = 16384;
  return cfg;
}

ConstructionReport criterion_6() {
  const auto t0 = Clock::now();
  RunConfig cfg = theorem1_config(0.5);  // sqrt(sigma0) T0 = 1 >= 2 Lambda
  ConstructionReport rep = run_construction(cfg);
  bool pass = rep.sigma0_value == 1.0 / 256.0;
  std::string rates;
  for (const auto& e : rep.entries) {
    if (!(e.fit.rate >= rep.sigma0_value) || !(e.fit.r_squared >= 0.9)) pass = false;
    char b[64];
    std::snprintf(b, sizeof(b), " (T=%g rate=%.3f R2=%.3f)", e.T_n, e.fit.rate,
                  e.fit.r_squared);
    rates += b;
  }
  const double secs = run_seconds(t0);
  if (secs > 600.0) pass = false;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "sigma0=%.6g, rate >= sigma0 and R2 >= 0.9 per entry:%s, %.0f s (<=600)",
                rep.sigma0_value, rates.c_str(), secs);
  report(6, "theorem-1 decay", pass, buf);
  return rep;
}

void criterion_7(const ConstructionReport& rep6) {
  const auto t0 = Clock::now();
  // Same configuration as criterion 6; the Lambda=0.5 ladder entries are
  // reused as the doubled-Lambda runs and compared against Lambda=0.25.
  RunConfig cfg = theorem1_config(0.25);
  cfg.Tn_ladder = {28.0};
  ConstructionReport rep = run_construction(cfg);
  const double drift_small = *std::max_element(rep.entries[0].drift_max.begin(),
                                               rep.entries[0].drift_max.end());
  const auto& e6 = rep6.entries.back();
  const double drift_big = *std::max_element(e6.drift_max.begin(), e6.drift_max.end());
  const double ratio = drift_small / std::max(drift_big, 1e-300);
  const bool pass = ratio >= 1.6 && ratio <= 2.6;

  // diagnostic on a configuration with tail flux actually reaching the band:
  // the measured drift is the flux through the traveling band, which is
  // Lambda-independent at leading order
  GroundState gs = solve_ground_state(3.0, 1, 1.0, -1.0, 16384);
  auto grid = std::make_shared<ExteriorGrid>(1, 60.0, 0.0625, Obstacle::interval(0.0, 1.0));
  CutoffField psi = obstacle_cutoff(grid, *grid->obstacle(), 1.25);
  SolitonSpec a, b;
  a.v = {0.25, 0.0};
  a.x0 = {3.0, 0.0};
  b.v = {1.75, 0.0};
  std::vector<SolitonSpec> specs{a, b};
  SchemeConfig scheme;
  scheme.dt = 0.005;
  scheme.c_stab = scheme.dt / (0.0625 * 0.0625) * 1.01;
  double diag[2] = {0.0, 0.0};
  int slot = 0;
  for (double Lambda : {0.15, 0.30}) {
    FinalDataRun run = final_data_run({gs, gs}, specs, psi, 14.0, 10.0, 3.0, scheme, Lambda);
    const auto& l0 = run.localized.front();
    for (const auto& lc : run.localized)
      for (int k = 0; k < 2; ++k)
        diag[slot] = std::max(diag[slot], std::abs(lc.M[k] - l0.M[k]));
    ++slot;
  }
  char buf[300];
  std::snprintf(buf, sizeof(buf),
                "drift(L)/drift(2L) = %.3g (needs [1.6,2.6]; drift %.2e vs %.2e at machine "
                "noise); flux-dominated diagnostic ratio %.3g (drift %.2e vs %.2e), %.0f s",
                ratio, drift_small, drift_big, diag[0] / diag[1], diag[0], diag[1],
                run_seconds(t0));
  report(7, "localized-drift 1/Lambda law", pass, buf);
}

void criterion_8() {
  const auto t0 = Clock::now();
  RunConfig cfg;
  cfg.p = 3.0;
  cfg.d = 1;
  cfg.obstacle = Obstacle::interval(0.0, 1.0);
  cfg.L = 60.0;
  cfg.h = 0.03125;
  cfg.cutoff_delta = 1.25;
  SolitonSpec s1, s2;
  s1.v = {0.25, 0.0};
  s1.x0 = {2.0, 0.0};
  s2.v = {1.75, 0.0};
  cfg.solitons = {s1, s2};
  cfg.Lambda = 0.15;
  cfg.T0 = 10.0;
  cfg.Tn_ladder = {14.0, 18.0, 22.0};
  cfg.scheme.dt = 0.004;
  cfg.scheme.c_stab = cfg.scheme.dt / (cfg.h * cfg.h) * 1.01;
  cfg.groundstate.n_r = 16384;
  ConstructionReport rep = run_construction(cfg);

  bool monotone = true;
  for (std::size_t i = 1; i < rep.tail.sup_tail.size(); ++i)
    if (rep.tail.sup_tail[i] > rep.tail.sup_tail[i - 1] * (1.0 + 1e-12)) monotone = false;

  // supports at T_0: the outermost soliton center plus an 8-unit margin
  double support = 0.0;
  for (const auto& s : cfg.solitons)
    support = std::max(support, std::abs(s.x0[0] + cfg.T0 * s.v[0]));
  support += 8.0;
  bool small_beyond = true;
  double beyond_rel = 0.0;
  for (std::size_t i = 0; i < rep.tail.M.size(); ++i) {
    if (rep.tail.M[i] < support) continue;
    beyond_rel = std::max(beyond_rel, rep.tail.sup_tail[i] / rep.mass_T0);
    if (rep.tail.sup_tail[i] > 1e-4 * rep.mass_T0) small_beyond = false;
  }
  bool decreasing = rep.cauchy.successive.size() >= 2;
  for (std::size_t i = 1; i < rep.cauchy.successive.size(); ++i)
    if (!(rep.cauchy.successive[i] < rep.cauchy.successive[i - 1])) decreasing = false;

  const double secs = run_seconds(t0);
  const bool pass = monotone && small_beyond && decreasing;
  char buf[220];
  std::snprintf(buf, sizeof(buf),
                "tail monotone=%d, beyond-support rel %.2e (<=1e-4), d_n = %.3e > %.3e "
                "(decreasing=%d), %.0f s",
                monotone ? 1 : 0, beyond_rel, rep.cauchy.successive.front(),
                rep.cauchy.successive.back(), decreasing ? 1 : 0, secs);
  report(8, "tail mass and Cauchy trend", pass, buf);
}

void criterion_9() {
  const auto t0 = Clock::now();
  // partition of unity
  auto grid = std::make_shared<ExteriorGrid>(1, 64.0, 0.5);
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> lam(0.3, 6.0), tt(0.0, 12.0);
  double part_worst = 0.0;
  for (int rep = 0; rep < 4; ++rep) {
    auto phi = traveling_weights(std::vector<double>{-2.0, 0.5, 3.0}, lam(rng), tt(rng), grid);
    for (long i = 0; i < grid->total_nodes(); ++i) {
      const double s = phi[0].values[i] + phi[1].values[i] + phi[2].values[i];
      part_worst = std::max(part_worst, std::abs(s - 1.0));
    }
  }

  // localized masses sum to the total mass
  GroundState gs = solve_ground_state(3.0, 1, 1.0, -1.0, 16384);
  auto grid2 = std::make_shared<ExteriorGrid>(1, 40.0, 1.0 / 32.0);
  SolitonSpec a, b;
  a.v = {-1.5, 0.0};
  a.x0 = {-10.0, 0.0};
  b.v = {1.5, 0.0};
  b.x0 = {10.0, 0.0};
  Field u = ansatz_R({gs, gs}, {a, b}, unit_cutoff(grid2), 0.0, grid2);
  LocalizedReport lr = localized_quantities(u, {a, b}, 1.0, 0.0, 3.0);
  const double mass_gap = std::abs(lr.M[0] + lr.M[1] - lr.mass) / lr.mass;

  // H_K operator application vs direct quadrature on 100 random fields
  auto grid3 = std::make_shared<ExteriorGrid>(1, 15.0, 0.1);
  SolitonSpec boosted;
  boosted.v = {2.0, 0.0};
  ModulatedAnsatz ma = ansatz_R_modulated({gs}, {boosted},
                                          ModulatedParams::unmodulated({boosted}),
                                          unit_cutoff(grid3), 0.0, grid3);
  QuadraticForm form = assemble_HK(ma, {boosted}, 1.0, 0.0, 3.0);
  double hk_worst = 0.0;
  for (unsigned seed = 0; seed < 100; ++seed) {
    Field h = random_field(grid3, 1000 + seed);
    Eigen::VectorXd x(2 * form.n);
    for (long k = 0; k < form.n; ++k) {
      const Complex z = h.v[grid3->node_of_dof(k)];
      x(k) = z.real();
      x(k + form.n) = z.imag();
    }
    const double via_op = x.dot(form.A * x);
    const double via_quad = hk_quadrature(ma, {boosted}, 1.0, 0.0, 3.0, h);
    hk_worst = std::max(hk_worst,
                        std::abs(via_op - via_quad) /
                            std::max({std::abs(via_op), std::abs(via_quad), 1e-300}));
  }

  const double secs = run_seconds(t0);
  const bool pass = part_worst <= 1e-15 && mass_gap <= 1e-12 && hk_worst <= 1e-8;
  char buf[180];
  std::snprintf(buf, sizeof(buf),
                "partition defect %.1e (<=1e-15), mass split gap %.1e (<=1e-12), H_K two-route "
                "gap %.1e (<=1e-8), %.0f s",
                part_worst, mass_gap, hk_worst, secs);
  report(9, "partition/consistency", pass, buf);
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  ConstructionReport rep6 = criterion_6();
  criterion_7(rep6);
  criterion_8();
  criterion_9();
  std::printf("%d of 9 criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
