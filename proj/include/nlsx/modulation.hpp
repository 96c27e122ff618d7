#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlsx/evolver.hpp"
#include "nlsx/functionals.hpp"

namespace nlsx {

// Everything decompose() needs besides the state itself.
struct ModulationContext {
  std::vector<GroundState> gss;
  std::vector<SolitonSpec> specs;
  CutoffField psi;
  double p = 3.0;
  double eps_mod_factor = 0.1;  // modulation radius, fraction of min ||Q||_H1
  double newton_tol = 1e-10;    // residual <= tol * ||u||_L2
  int newton_cap = 50;
  double jacobian_step = 1e-6;  // forward-difference step, scaled by magnitude

  int n_params() const {
    return static_cast<int>(specs.size()) * (psi.grid->d() + 2);
  }
};

struct ModulationState {
  double t = 0.0;
  ModulatedParams params;
  double residual_norm = 0.0;  // max orthogonality residual after convergence
  double h_l2 = 0.0;
  double h_h1 = 0.0;
  int newton_iterations = 0;
  // measured Lipschitz ratio: (||h||_H1 + sum |mu~-mu| + |y| + |omega~-omega|)
  // over ||u - R||_L2; zero when u = R exactly
  double lipschitz_ratio = 0.0;
};

struct ModulationTrajectory {
  std::vector<ModulationState> states;
  // centered-difference parameter derivatives at interior samples, and the
  // three combinations whose squares are bounded by the modulation estimate:
  // |domega/dt|, |dy/dt|, |dmu/dt - (omega~ - omega)|
  std::vector<double> deriv_t;
  std::vector<std::vector<double>> domega_dt;   // [sample][k]
  std::vector<std::vector<Coord>> dy_dt;        // [sample][k]
  std::vector<std::vector<double>> dmu_comb;    // [sample][k]
};

namespace detail {

inline void pack_params(const ModulatedParams& m, int d, Eigen::VectorXd& x) {
  const std::size_t K = m.omega_tilde.size();
  x.resize(static_cast<long>(K) * (d + 2));
  long j = 0;
  for (std::size_t k = 0; k < K; ++k) {
    x(j++) = m.omega_tilde[k];
    for (int a = 0; a < d; ++a) x(j++) = m.y[k][a];
    x(j++) = m.mu_tilde[k];
  }
}

inline ModulatedParams unpack_params(const Eigen::VectorXd& x, int d, std::size_t K) {
  ModulatedParams m;
  m.omega_tilde.resize(K);
  m.y.assign(K, Coord{0.0, 0.0});
  m.mu_tilde.resize(K);
  long j = 0;
  for (std::size_t k = 0; k < K; ++k) {
    m.omega_tilde[k] = x(j++);
    for (int a = 0; a < d; ++a) m.y[k][a] = x(j++);
    m.mu_tilde[k] = x(j++);
  }
  return m;
}

}  // namespace detail

// Orthogonality residuals [Phi1_k, Phi2_k (d comps), Phi3_k] with
// h = u - R~(params):
//   Phi1_k = Re int R~_k conj(h),  Phi2_k = Re int grad(Q~_k) Psi e^{i phi~}
//   conj(h),  Phi3_k = Im int R~_k conj(h).
inline Eigen::VectorXd orthogonality_residual(const Field& u, const ModulatedParams& params,
                                              double t, const ModulationContext& ctx) {
  const GridPtr grid = u.grid;
  const int d = grid->d();
  const std::size_t K = ctx.specs.size();
  ModulatedAnsatz ma = ansatz_R_modulated(ctx.gss, ctx.specs, params, ctx.psi, t, grid);
  const double vol = grid->cell_volume();

  Eigen::VectorXd res(static_cast<long>(K) * (d + 2));
  long j = 0;
  for (std::size_t k = 0; k < K; ++k) {
    Complex phi1(0, 0), phi3(0, 0);
    std::array<Complex, 2> phi2{Complex(0, 0), Complex(0, 0)};
    for (long idx = 0; idx < grid->total_nodes(); ++idx) {
      const Complex h = u.v[idx] - ma.total.v[idx];
      if (h == Complex(0, 0)) continue;
      const Complex hbar = std::conj(h);
      phi1 += ma.components[k].v[idx] * hbar;
      for (int a = 0; a < d; ++a) phi2[a] += ma.grad_dirs[k][a].v[idx] * hbar;
      phi3 += ma.components[k].v[idx] * hbar;
    }
    res(j++) = phi1.real() * vol;
    for (int a = 0; a < d; ++a) res(j++) = phi2[a].real() * vol;
    res(j++) = phi3.imag() * vol;
  }
  return res;
}

// Newton iteration on the orthogonality system, forward-difference Jacobian.
inline ModulationState decompose(const Field& u, double t, const ModulatedParams& seed,
                                 const ModulationContext& ctx, bool check_radius = true) {
  const GridPtr grid = u.grid;
  const int d = grid->d();
  const std::size_t K = ctx.specs.size();

  if (check_radius) {
    double min_h1 = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      // H1 norm of the boosted profile, via quadrature of the radial samples
      const double m = ground_state_mass(ctx.gss[k]);
      const double gsq = radial_integral(ctx.gss[k], [&](double, int i) {
        const double s = eval_profile_slope(ctx.gss[k], ctx.gss[k].r_samples[i]);
        return s * s;
      });
      const double vv = dot(ctx.specs[k].v, ctx.specs[k].v);
      min_h1 = std::min(min_h1, std::sqrt(gsq + (1.0 + 0.25 * vv) * m));
    }
    Field R = ansatz_R(ctx.gss, ctx.specs, ctx.psi, t, grid);
    const double dist = h1_distance(u, R, ctx.p);
    if (dist > ctx.eps_mod_factor * min_h1)
      throw OutsideModulationRadius("||u - R||_H1 = " + std::to_string(dist) +
                                    " exceeds the modulation radius " +
                                    std::to_string(ctx.eps_mod_factor * min_h1));
  }

  const double u_l2 = l2_norm(u);
  const double tol = ctx.newton_tol * std::max(u_l2, 1e-300);

  Eigen::VectorXd x;
  detail::pack_params(seed, d, x);
  const long n = x.size();

  ModulationState out;
  out.t = t;
  for (int it = 0; it <= ctx.newton_cap; ++it) {
    ModulatedParams cur = detail::unpack_params(x, d, K);
    Eigen::VectorXd r = orthogonality_residual(u, cur, t, ctx);
    const double rn = r.cwiseAbs().maxCoeff();
    if (rn <= tol) {
      out.params = cur;
      out.residual_norm = rn;
      out.newton_iterations = it;
      ModulatedAnsatz ma = ansatz_R_modulated(ctx.gss, ctx.specs, cur, ctx.psi, t, grid);
      Field h = u;
      for (std::size_t i = 0; i < h.v.size(); ++i) h.v[i] -= ma.total.v[i];
      const MassEnergyH1 me = mass_energy_h1(h, ctx.p);
      out.h_l2 = std::sqrt(me.mass);
      out.h_h1 = me.h1_norm;

      Field R = ansatz_R(ctx.gss, ctx.specs, ctx.psi, t, grid);
      const double dist = l2_distance(u, R);
      if (dist > 0.0) {
        double num = out.h_h1;
        for (std::size_t k = 0; k < K; ++k) {
          num += std::abs(cur.mu_tilde[k] - ctx.specs[k].mu);
          num += std::hypot(cur.y[k][0], cur.y[k][1]);
          num += std::abs(cur.omega_tilde[k] - ctx.specs[k].omega);
        }
        out.lipschitz_ratio = num / dist;
      }
      return out;
    }
    if (it == ctx.newton_cap) break;

    Eigen::MatrixXd J(n, n);
    for (long c = 0; c < n; ++c) {
      Eigen::VectorXd xp = x;
      const double step = ctx.jacobian_step * std::max(1.0, std::abs(x(c)));
      xp(c) += step;
      Eigen::VectorXd rp = orthogonality_residual(u, detail::unpack_params(xp, d, K), t, ctx);
      J.col(c) = (rp - r) / step;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    Eigen::VectorXd dx = lu.solve(-r);
    if (!dx.allFinite())
      throw NewtonDiverged("singular modulation Jacobian at t = " + std::to_string(t));
    x += dx;
  }
  throw NewtonDiverged("modulation Newton did not reach tolerance at t = " + std::to_string(t));
}

// Decompose every snapshot of a trajectory, warm starting from the previous
// state, and form centered-difference parameter derivatives.
inline ModulationTrajectory extract_trajectory(const Trajectory& traj,
                                               const ModulationContext& ctx) {
  ModulationTrajectory out;
  const std::size_t K = ctx.specs.size();
  ModulatedParams warm = ModulatedParams::unmodulated(ctx.specs);
  for (const Field& snap : traj.snapshots) {
    ModulationState st = decompose(snap, snap.t, warm, ctx);
    warm = st.params;
    out.states.push_back(std::move(st));
  }

  const std::size_t n = out.states.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const ModulationState& a = out.states[i - 1];
    const ModulationState& b = out.states[i];
    const ModulationState& c = out.states[i + 1];
    const double dt2 = c.t - a.t;
    if (dt2 == 0.0) continue;
    out.deriv_t.push_back(b.t);
    std::vector<double> dw(K), dmu(K);
    std::vector<Coord> dy(K);
    for (std::size_t k = 0; k < K; ++k) {
      dw[k] = (c.params.omega_tilde[k] - a.params.omega_tilde[k]) / dt2;
      for (int axis = 0; axis < ctx.psi.grid->d(); ++axis)
        dy[k][axis] = (c.params.y[k][axis] - a.params.y[k][axis]) / dt2;
      const double dmu_dt = (c.params.mu_tilde[k] - a.params.mu_tilde[k]) / dt2;
      dmu[k] = dmu_dt - (b.params.omega_tilde[k] - ctx.specs[k].omega);
    }
    out.domega_dt.push_back(std::move(dw));
    out.dy_dt.push_back(std::move(dy));
    out.dmu_comb.push_back(std::move(dmu));
  }
  return out;
}

}  // namespace nlsx
