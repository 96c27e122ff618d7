#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "nlsx/ansatz.hpp"
#include "nlsx/functionals.hpp"

namespace nlsx {

// Relaxation Crank-Nicolson: the midpoint nonlinear coefficient
// gamma = |(u^n + u^{n+1})/2|^{p-1} is converged by fixed-point sweeps, each
// sweep solving the Cayley system (I - i dt/2 (Lap + gamma)) u+ =
// (I + i dt/2 (Lap + gamma)) u. For real gamma the solve conserves the
// discrete mass exactly, and the converged scheme is time symmetric.
struct SchemeConfig {
  double dt = 1e-3;
  double tolerance = 1e-12;  // relaxation fixed-point tolerance, relative L2
  int max_inner = 60;
  double c_stab = 0.5;            // accuracy budget: dt <= c_stab h^2
  double linear_tol = 1e-12;      // iterative linear solve (2D), relative
  int linear_max_iter = 1000;
  double contamination_fraction = 1e-6;  // boundary-band mass threshold
  int boundary_band_nodes = 8;

  void validate(double h) const {
    if (!(dt > 0.0)) throw ConfigRejected("scheme: dt must be positive");
    if (!(tolerance >= 1e-14 && tolerance <= 1e-6))
      throw ConfigRejected("scheme: tolerance must lie in [1e-14, 1e-6]");
    if (max_inner < 2) throw ConfigRejected("scheme: max_inner must be at least 2");
    if (dt > c_stab * h * h * (1.0 + 1e-12))
      throw ConfigRejected("scheme: dt exceeds the accuracy budget c_stab * h^2");
  }
};

enum class Direction { forward, backward };

namespace detail {

// One Cayley solve in 1D: tridiagonal Thomas over the full node line with
// identity rows on masked nodes.
inline void cayley_solve_1d(const ExteriorGrid& g, double kappa,
                            const std::vector<double>& gamma, const std::vector<Complex>& rhs,
                            std::vector<Complex>& out) {
  const long n = g.total_nodes();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  static thread_local std::vector<Complex> a, b, c, r;
  a.assign(n, Complex(0, 0));
  b.assign(n, Complex(1, 0));
  c.assign(n, Complex(0, 0));
  r = rhs;
  const Complex ik(0.0, kappa);
  for (long i = 0; i < n; ++i) {
    if (!g.is_exterior(i)) {
      r[i] = Complex(0, 0);
      continue;
    }
    b[i] = Complex(1.0, 0.0) - ik * (-2.0 * inv_h2 + gamma[i]);
    if (g.is_exterior(i - 1)) a[i] = -ik * inv_h2;
    if (g.is_exterior(i + 1)) c[i] = -ik * inv_h2;
  }
  for (long i = 1; i < n; ++i) {
    const Complex w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    r[i] -= w * r[i - 1];
  }
  out.resize(n);
  out[n - 1] = r[n - 1] / b[n - 1];
  for (long i = n - 2; i >= 0; --i) out[i] = (r[i] - c[i] * out[i + 1]) / b[i];
}

// Matrix-free BiCGSTAB with Jacobi preconditioning for the 2D Cayley system.
inline void cayley_solve_2d(const ExteriorGrid& g, double kappa,
                            const std::vector<double>& gamma, const std::vector<Complex>& rhs,
                            std::vector<Complex>& x, double tol, int max_iter) {
  const long n = g.total_nodes();
  const int nx = g.nodes_per_axis();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const Complex ik(0.0, kappa);

  auto matvec = [&](const std::vector<Complex>& v, std::vector<Complex>& out) {
    out.resize(n);
    for (long i = 0; i < n; ++i) {
      if (!g.is_exterior(i)) {
        out[i] = v[i];
        continue;
      }
      const int ix = static_cast<int>(i % nx);
      const int iy = static_cast<int>(i / nx);
      Complex lap = -4.0 * inv_h2 * v[i];
      if (ix > 0 && g.is_exterior(i - 1)) lap += inv_h2 * v[i - 1];
      if (ix + 1 < nx && g.is_exterior(i + 1)) lap += inv_h2 * v[i + 1];
      if (iy > 0 && g.is_exterior(i - nx)) lap += inv_h2 * v[i - nx];
      if (iy + 1 < nx && g.is_exterior(i + nx)) lap += inv_h2 * v[i + nx];
      out[i] = v[i] - ik * (lap + gamma[i] * v[i]);
    }
  };
  auto precond = [&](std::vector<Complex>& v) {
    for (long i = 0; i < n; ++i)
      if (g.is_exterior(i)) v[i] /= Complex(1.0, 0.0) - ik * (-4.0 * inv_h2 + gamma[i]);
  };
  auto dotc = [&](const std::vector<Complex>& u, const std::vector<Complex>& v) {
    Complex s(0, 0);
    for (long i = 0; i < n; ++i) s += std::conj(u[i]) * v[i];
    return s;
  };
  auto nrm = [&](const std::vector<Complex>& u) { return std::sqrt(std::abs(dotc(u, u))); };

  if (x.size() != static_cast<std::size_t>(n)) x = rhs;  // warm start from caller otherwise
  std::vector<Complex> r(n), r0(n), p(n), v(n), s(n), t(n), y(n), z(n);
  matvec(x, r);
  for (long i = 0; i < n; ++i) r[i] = rhs[i] - r[i];
  r0 = r;
  const double bnorm = std::max(nrm(rhs), 1e-300);
  if (nrm(r) / bnorm <= tol) return;

  Complex rho(1, 0), alpha(1, 0), w(1, 0);
  std::fill(p.begin(), p.end(), Complex(0, 0));
  std::fill(v.begin(), v.end(), Complex(0, 0));
  for (int it = 0; it < max_iter; ++it) {
    const Complex rho1 = dotc(r0, r);
    if (std::abs(rho1) < 1e-300) break;
    const Complex beta = (rho1 / rho) * (alpha / w);
    rho = rho1;
    for (long i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - w * v[i]);
    y = p;
    precond(y);
    matvec(y, v);
    alpha = rho / dotc(r0, v);
    for (long i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (nrm(s) / bnorm <= tol) {
      for (long i = 0; i < n; ++i) x[i] += alpha * y[i];
      return;
    }
    z = s;
    precond(z);
    matvec(z, t);
    w = dotc(t, s) / dotc(t, t);
    for (long i = 0; i < n; ++i) {
      x[i] += alpha * y[i] + w * z[i];
      r[i] = s[i] - w * t[i];
    }
    if (nrm(r) / bnorm <= tol) return;
  }
  throw InnerSolveDiverged("2D linear solve exceeded its iteration cap");
}

inline Field step_forward(const Field& f, double p, const SchemeConfig& cfg) {
  const ExteriorGrid& g = *f.grid;
  const long n = g.total_nodes();
  const double kappa = 0.5 * cfg.dt;
  const double pm1 = p - 1.0;

  std::vector<double> gamma(n, 0.0);
  for (long i = 0; i < n; ++i) gamma[i] = std::pow(std::abs(f.v[i]), pm1);

  std::vector<Complex> rhs(n), next, prev;
  double unorm2 = 0.0;
  for (long i = 0; i < n; ++i) unorm2 += std::norm(f.v[i]);
  if (unorm2 == 0.0) {  // zero field is a fixed point
    Field out = f;
    out.t = f.t + cfg.dt;
    return out;
  }

  auto build_rhs = [&]() {
    const double inv_h2 = 1.0 / (g.h() * g.h());
    const int nx = g.nodes_per_axis();
    const Complex ik(0.0, kappa);
    for (long i = 0; i < n; ++i) {
      if (!g.is_exterior(i)) {
        rhs[i] = Complex(0, 0);
        continue;
      }
      Complex lap = -2.0 * g.d() * inv_h2 * f.v[i];
      if (g.is_exterior(i - 1)) lap += inv_h2 * f.v[i - 1];
      if (g.is_exterior(i + 1)) lap += inv_h2 * f.v[i + 1];
      if (g.d() == 2) {
        const int iy = static_cast<int>(i / nx);
        if (iy > 0 && g.is_exterior(i - nx)) lap += inv_h2 * f.v[i - nx];
        if (iy + 1 < nx && g.is_exterior(i + nx)) lap += inv_h2 * f.v[i + nx];
      }
      rhs[i] = f.v[i] + ik * (lap + gamma[i] * f.v[i]);
    }
  };

  next = f.v;
  for (int sweep = 0; sweep < cfg.max_inner; ++sweep) {
    build_rhs();
    prev = next;
    if (g.d() == 1)
      cayley_solve_1d(g, kappa, gamma, rhs, next);
    else
      cayley_solve_2d(g, kappa, gamma, rhs, next, cfg.linear_tol, cfg.linear_max_iter);

    double diff2 = 0.0, cur2 = 0.0;
    for (long i = 0; i < n; ++i) {
      diff2 += std::norm(next[i] - prev[i]);
      cur2 += std::norm(next[i]);
    }
    const bool converged = sweep > 0 && diff2 <= cfg.tolerance * cfg.tolerance * cur2;
    if (converged) {
      Field out;
      out.grid = f.grid;
      out.t = f.t + cfg.dt;
      out.v = std::move(next);
      return out;
    }
    for (long i = 0; i < n; ++i)
      gamma[i] = std::pow(std::abs(0.5 * (f.v[i] + next[i])), pm1);
  }
  throw InnerSolveDiverged("relaxation sweeps did not converge at t = " + std::to_string(f.t));
}

}  // namespace detail

// One time step. Backward steps use the conjugation symmetry of the flow:
// evolve conj(u) forward with the same scheme and conjugate back, which makes
// a forward/backward pair cancel exactly up to the relaxation tolerance.
inline Field step(const Field& f, double p, const SchemeConfig& cfg,
                  Direction dir = Direction::forward) {
  cfg.validate(f.grid->h());
  if (dir == Direction::forward) return detail::step_forward(f, p, cfg);
  Field out = detail::step_forward(conj(f), p, cfg);
  for (auto& z : out.v) z = std::conj(z);
  out.t = f.t - cfg.dt;
  return out;
}

struct StepDiagnostics {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double boundary_mass = 0.0;  // proxy for flux reaching the box boundary
};

struct Trajectory {
  std::vector<Field> snapshots;           // strided, includes both endpoints
  std::vector<StepDiagnostics> diagnostics;  // every diag-step, includes t0
};

struct EvolveOptions {
  double snapshot_stride = 0.1;  // time units between stored snapshots
  int diag_every = 1;            // steps between scalar diagnostics
  bool check_contamination = true;
  // called at snapshot times (state must not be modified)
  std::function<void(const Field&)> observer;
};

namespace detail {

inline double boundary_band_mass(const Field& f, int band) {
  const ExteriorGrid& g = *f.grid;
  const int nx = g.nodes_per_axis();
  double s = 0.0;
  for (long idx = 0; idx < g.total_nodes(); ++idx) {
    const int i = static_cast<int>(idx % nx);
    const int j = static_cast<int>(idx / nx);
    const int edge = g.d() == 1
                         ? std::min(i, nx - 1 - i)
                         : std::min(std::min(i, nx - 1 - i), std::min(j, nx - 1 - j));
    if (edge < band) s += std::norm(f.v[idx]);
  }
  return s * g.cell_volume();
}

}  // namespace detail

inline Trajectory evolve(Field u, double t_from, double t_to, double p, const SchemeConfig& cfg,
                         const EvolveOptions& opts = {}) {
  cfg.validate(u.grid->h());
  const double span = t_to - t_from;
  const double steps_real = std::abs(span) / cfg.dt;
  const long n_steps = static_cast<long>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(n_steps)) > 1e-6)
    throw ConfigRejected("evolve: |t_to - t_from| must be an integer number of dt");
  const Direction dir = span >= 0.0 ? Direction::forward : Direction::backward;
  u.t = t_from;

  Trajectory traj;
  const long snap_every = std::max<long>(1, std::llround(opts.snapshot_stride / cfg.dt));
  const long diag_every = std::max<long>(1, opts.diag_every);

  auto diagnose = [&](const Field& f) {
    const MassEnergyH1 me = mass_energy_h1(f, p);
    StepDiagnostics d;
    d.t = f.t;
    d.mass = me.mass;
    d.energy = me.energy;
    d.boundary_mass = detail::boundary_band_mass(f, cfg.boundary_band_nodes);
    traj.diagnostics.push_back(d);
    if (opts.check_contamination && d.boundary_mass > cfg.contamination_fraction * d.mass &&
        d.mass > 0.0)
      throw BoxContamination("boundary-band mass fraction " +
                             std::to_string(d.boundary_mass / d.mass) + " at t = " +
                             std::to_string(f.t));
  };
  auto snapshot = [&](const Field& f) {
    traj.snapshots.push_back(f);
    if (opts.observer) opts.observer(f);
  };

  diagnose(u);
  snapshot(u);
  for (long k = 1; k <= n_steps; ++k) {
    u = step(u, p, cfg, dir);
    u.t = t_from + (dir == Direction::forward ? k : -k) * cfg.dt;  // avoid drift
    if (k % diag_every == 0 || k == n_steps) diagnose(u);
    if (k % snap_every == 0 || k == n_steps) snapshot(u);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Final-data construction: set u(T_n) = R(T_n) and integrate backward to T_0,
// recording the H1 error against the ansatz and, when Lambda > 0, the
// localized quantities.

struct FinalDataRun {
  Trajectory traj;                      // snapshots at stride
  std::vector<double> err_t;            // diag times (decreasing)
  std::vector<double> err_h1;           // ||u(t) - R(t)||_{H1}
  std::vector<LocalizedReport> localized;  // at diag times when enabled
};

inline FinalDataRun final_data_run(const std::vector<GroundState>& gss,
                                   const std::vector<SolitonSpec>& specs, const CutoffField& psi,
                                   double T_n, double T_0, double p, const SchemeConfig& cfg,
                                   double Lambda = 0.0, const EvolveOptions& base_opts = {}) {
  if (!(T_n >= T_0) || !(T_0 >= 0.0))
    throw ConfigRejected("final-data run needs T_n >= T_0 >= 0");
  const GridPtr grid = psi.grid;
  require_box_adequacy(*grid, specs, T_0, T_n);
  if (Lambda > 0.0 && specs.size() >= 2) {
    const double s0 = sigma0(specs);
    if (std::sqrt(s0) * T_0 < 2.0 * Lambda)
      throw ConfigRejected("localized diagnostics need sqrt(sigma0) T_0 >= 2 Lambda");
  }

  FinalDataRun out;
  Field u = ansatz_R(gss, specs, psi, T_n, grid);

  auto record = [&](const Field& f) {
    Field R = ansatz_R(gss, specs, psi, f.t, grid);
    out.err_t.push_back(f.t);
    out.err_h1.push_back(h1_distance(f, R, p));
    if (Lambda > 0.0)
      out.localized.push_back(localized_quantities(f, specs, Lambda, f.t, p));
  };

  EvolveOptions opts = base_opts;
  auto chained = base_opts.observer;
  opts.observer = [&](const Field& f) {
    record(f);
    if (chained) chained(f);
  };
  out.traj = evolve(std::move(u), T_n, T_0, p, cfg, opts);
  return out;
}

}  // namespace nlsx
