#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "nlsx/errors.hpp"
#include "nlsx/geometry.hpp"
#include "nlsx/groundstate.hpp"

namespace nlsx {

using Complex = std::complex<double>;

// One solitary wave: frequency, velocity, initial center, phase offset.
struct SolitonSpec {
  double omega = 1.0;
  Coord v{0.0, 0.0};
  Coord x0{0.0, 0.0};
  double mu = 0.0;
};

// Per-soliton modulation corrections (frequency, translation, phase).
struct ModulatedParams {
  std::vector<double> omega_tilde;
  std::vector<Coord> y;
  std::vector<double> mu_tilde;

  static ModulatedParams unmodulated(const std::vector<SolitonSpec>& specs) {
    ModulatedParams m;
    for (const auto& s : specs) {
      m.omega_tilde.push_back(s.omega);
      m.y.push_back({0.0, 0.0});
      m.mu_tilde.push_back(s.mu);
    }
    return m;
  }
};

// Complex state on an ExteriorGrid at one time stamp. Masked nodes stay zero.
struct Field {
  GridPtr grid;
  std::vector<Complex> v;
  double t = 0.0;

  static Field zero(const GridPtr& g, double t = 0.0) {
    Field f;
    f.grid = g;
    f.v.assign(g->total_nodes(), Complex(0.0, 0.0));
    f.t = t;
    return f;
  }

  void enforce_mask() {
    for (long i = 0; i < grid->total_nodes(); ++i)
      if (!grid->is_exterior(i)) v[i] = Complex(0.0, 0.0);
  }
};

inline Field conj(const Field& f) {
  Field g = f;
  for (auto& z : g.v) z = std::conj(z);
  return g;
}

inline double l2_norm(const Field& f) {
  double s = 0.0;
  for (const auto& z : f.v) s += std::norm(z);
  return std::sqrt(s * f.grid->cell_volume());
}

inline double l2_distance(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) s += std::norm(a.v[i] - b.v[i]);
  return std::sqrt(s * a.grid->cell_volume());
}

inline std::vector<double> first_velocity_components(const std::vector<SolitonSpec>& specs) {
  std::vector<double> v1;
  v1.reserve(specs.size());
  for (const auto& s : specs) v1.push_back(s.v[0]);
  return v1;
}

inline std::vector<double> omegas_of(const std::vector<SolitonSpec>& specs) {
  std::vector<double> w;
  w.reserve(specs.size());
  for (const auto& s : specs) w.push_back(s.omega);
  return w;
}

inline double sigma0(const std::vector<SolitonSpec>& specs) {
  return sigma0(first_velocity_components(specs), omegas_of(specs));
}

inline std::vector<CutoffField> traveling_weights(const std::vector<SolitonSpec>& specs,
                                                  double Lambda, double t, const GridPtr& grid) {
  return traveling_weights(first_velocity_components(specs), Lambda, t, grid);
}

// Soliton center at time t.
inline Coord soliton_center(const SolitonSpec& s, double t) {
  return {s.x0[0] + t * s.v[0], s.x0[1] + t * s.v[1]};
}

// Every configured trajectory must keep 10/sqrt(omega) clearance from the box
// boundary over [t0, t1]; centers move linearly so endpoint checks suffice.
inline void require_box_adequacy(const ExteriorGrid& grid, const std::vector<SolitonSpec>& specs,
                                 double t0, double t1) {
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const double margin = 10.0 / std::sqrt(specs[k].omega);
    for (double t : {t0, t1}) {
      const Coord c = soliton_center(specs[k], t);
      for (int axis = 0; axis < grid.d(); ++axis) {
        if (grid.L() - std::abs(c[axis]) < margin)
          throw ConfigRejected("soliton " + std::to_string(k + 1) +
                               " comes within 10/sqrt(omega) of the box boundary at t=" +
                               std::to_string(t));
      }
    }
  }
}

namespace detail {

inline void require_grid_resolves(const ExteriorGrid& grid, const std::vector<SolitonSpec>& specs) {
  double omega_max = 0.0, vmax = 0.0;
  for (const auto& s : specs) {
    omega_max = std::max(omega_max, s.omega);
    vmax = std::max(vmax, norm(s.v));
  }
  grid.require_resolves(omega_max, vmax);
}

}  // namespace detail

// Galilean-boosted solitary wave evaluated on the grid; no obstacle cutoff is
// applied (masked nodes are zeroed regardless).
inline Field free_soliton(const GroundState& gs, const SolitonSpec& spec, double t,
                          const GridPtr& grid) {
  detail::require_grid_resolves(*grid, {spec});
  Field f = Field::zero(grid, t);
  const double vv = dot(spec.v, spec.v);
  for (long idx = 0; idx < grid->total_nodes(); ++idx) {
    if (!grid->is_exterior(idx)) continue;
    const Coord x = grid->coord(idx);
    const Coord c = soliton_center(spec, t);
    const double rho = std::hypot(x[0] - c[0], x[1] - c[1]);
    const double amp = eval_profile(gs, rho);
    const double phase = 0.5 * dot(x, spec.v) - 0.25 * vv * t + t * spec.omega + spec.mu;
    f.v[idx] = std::polar(amp, phase);
  }
  return f;
}

// Multi-soliton ansatz R(t) = sum_k (free soliton_k) * Psi.
inline Field ansatz_R(const std::vector<GroundState>& gss, const std::vector<SolitonSpec>& specs,
                      const CutoffField& psi, double t, const GridPtr& grid) {
  if (gss.size() != specs.size()) throw ConfigError("ansatz_R: one ground state per soliton");
  detail::require_grid_resolves(*grid, specs);
  Field f = Field::zero(grid, t);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto& spec = specs[k];
    const double vv = dot(spec.v, spec.v);
    const Coord c = soliton_center(spec, t);
    for (long idx = 0; idx < grid->total_nodes(); ++idx) {
      if (!grid->is_exterior(idx)) continue;
      const double psi_x = psi.values[idx];
      if (psi_x == 0.0) continue;
      const Coord x = grid->coord(idx);
      const double rho = std::hypot(x[0] - c[0], x[1] - c[1]);
      const double amp = eval_profile(gss[k], rho) * psi_x;
      const double phase = 0.5 * dot(x, spec.v) - 0.25 * vv * t + t * spec.omega + spec.mu;
      f.v[idx] += std::polar(amp, phase);
    }
  }
  return f;
}

// Modulated ansatz with per-soliton components and the translation direction
// fields grad(Q~) Psi e^{i phi~} used by the orthogonality conditions.
struct ModulatedAnsatz {
  Field total;
  std::vector<Field> components;                // R~_k
  std::vector<std::vector<Field>> grad_dirs;    // [k][axis]
};

inline ModulatedAnsatz ansatz_R_modulated(const std::vector<GroundState>& gss,
                                          const std::vector<SolitonSpec>& specs,
                                          const ModulatedParams& mod, const CutoffField& psi,
                                          double t, const GridPtr& grid) {
  const std::size_t K = specs.size();
  if (gss.size() != K || mod.omega_tilde.size() != K || mod.y.size() != K ||
      mod.mu_tilde.size() != K)
    throw ConfigError("ansatz_R_modulated: inconsistent sizes");
  detail::require_grid_resolves(*grid, specs);

  ModulatedAnsatz out;
  out.total = Field::zero(grid, t);
  out.components.resize(K);
  out.grad_dirs.resize(K);
  const int d = grid->d();

  for (std::size_t k = 0; k < K; ++k) {
    const auto& spec = specs[k];
    const double wt = mod.omega_tilde[k];
    // Profiles at the modulated frequency come from the exact power-law
    // rescaling of the solved base profile, so the Newton residual is smooth
    // in omega~.
    const double srel = wt / gss[k].omega;
    if (!(srel > 0.5 && srel < 1.5))
      throw GroundStateResolve("omega~ left the 50% resolve window for soliton " +
                               std::to_string(k + 1));
    const double amp_scale = std::pow(srel, 1.0 / (gss[k].p - 1.0));
    const double arg_scale = std::sqrt(srel);

    out.components[k] = Field::zero(grid, t);
    out.grad_dirs[k].assign(d, Field::zero(grid, t));

    const double vv = dot(spec.v, spec.v);
    const double theta = -0.25 * vv * t + spec.omega * t;
    const Coord alpha = soliton_center(spec, t);
    const Coord center{alpha[0] + mod.y[k][0], alpha[1] + mod.y[k][1]};

    for (long idx = 0; idx < grid->total_nodes(); ++idx) {
      if (!grid->is_exterior(idx)) continue;
      const double psi_x = psi.values[idx];
      if (psi_x == 0.0) continue;
      const Coord x = grid->coord(idx);
      const double rx = x[0] - center[0];
      const double ry = x[1] - center[1];
      const double rho = std::hypot(rx, ry);
      const double q = amp_scale * eval_profile(gss[k], arg_scale * rho);
      const double phase = 0.5 * dot(x, spec.v) + theta + mod.mu_tilde[k];
      const Complex ph = std::polar(1.0, phase);

      const Complex val = q * psi_x * ph;
      out.components[k].v[idx] = val;
      out.total.v[idx] += val;

      const double slope = amp_scale * arg_scale * eval_profile_slope(gss[k], arg_scale * rho);
      if (rho > 0.0) {
        out.grad_dirs[k][0].v[idx] = slope * (rx / rho) * psi_x * ph;
        if (d == 2) out.grad_dirs[k][1].v[idx] = slope * (ry / rho) * psi_x * ph;
      }
    }
  }
  return out;
}

}  // namespace nlsx
