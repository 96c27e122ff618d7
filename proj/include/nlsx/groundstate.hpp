#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nlsx/errors.hpp"
#include "nlsx/io.hpp"

namespace nlsx {

// Radial profile of the positive ground state of  -Lap Q + omega Q = Q^p
// on R^d (d = 1 or 2), sampled uniformly on [0, r_max]. The last sample sits
// at r_max itself; the solver pins a Dirichlet ghost node one spacing beyond.
struct GroundState {
  double p = 3.0;
  int d = 1;
  double omega = 1.0;
  double r_max = 26.0;
  int n_r = 32768;
  std::vector<double> r_samples;
  std::vector<double> q_samples;
  std::vector<double> dq_domega_samples;
  double decay_rate = 1.0;  // kappa in Q(r) ~ e^{-kappa r}

  double dr() const { return r_max / (n_r - 1); }
  double peak() const { return q_samples.front(); }

  json to_json() const {
    json j;
    j["p"] = double_as_json(p);
    j["d"] = d;
    j["omega"] = double_as_json(omega);
    j["r_max"] = double_as_json(r_max);
    j["n_r"] = n_r;
    j["q_samples"] = doubles_as_json(q_samples);
    j["dq_domega_samples"] = doubles_as_json(dq_domega_samples);
    j["decay_rate"] = double_as_json(decay_rate);
    return j;
  }

  static GroundState from_json(const json& j) {
    GroundState gs;
    gs.p = double_from_json(j.at("p"));
    gs.d = j.at("d").get<int>();
    gs.omega = double_from_json(j.at("omega"));
    gs.r_max = double_from_json(j.at("r_max"));
    gs.n_r = j.at("n_r").get<int>();
    gs.q_samples = doubles_from_json(j.at("q_samples"));
    gs.dq_domega_samples = doubles_from_json(j.at("dq_domega_samples"));
    gs.decay_rate = double_from_json(j.at("decay_rate"));
    gs.r_samples.resize(gs.n_r);
    for (int i = 0; i < gs.n_r; ++i) gs.r_samples[i] = i * gs.dr();
    return gs;
  }
};

namespace detail {

// Tridiagonal solve (Thomas); a = sub, b = diag, c = super. Overwrites rhs.
inline void solve_tridiag(std::vector<double>& a, std::vector<double>& b,
                          std::vector<double>& c, std::vector<double>& rhs) {
  const std::size_t n = b.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - c[i] * rhs[i + 1]) / b[i];
}

// Rows of the radial operator  L = -Lap_r + omega  on the uniform grid with a
// Dirichlet ghost beyond the last sample. Row 0 uses the symmetry condition
// Lap f(0) = d * f''(0).
struct RadialOperator {
  std::vector<double> lower, diag, upper;

  RadialOperator(int d, double omega, double dr, int n) {
    lower.assign(n, 0.0);
    diag.assign(n, 0.0);
    upper.assign(n, 0.0);
    const double inv2 = 1.0 / (dr * dr);
    diag[0] = 2.0 * d * inv2 + omega;
    upper[0] = -2.0 * d * inv2;
    for (int i = 1; i < n; ++i) {
      const double r = i * dr;
      lower[i] = -inv2 + (d - 1) / (2.0 * dr * r);
      diag[i] = 2.0 * inv2 + omega;
      upper[i] = -inv2 - (d - 1) / (2.0 * dr * r);
    }
  }

  void apply(const std::vector<double>& q, std::vector<double>& out) const {
    const std::size_t n = diag.size();
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = diag[i] * q[i];
      if (i > 0) v += lower[i] * q[i - 1];
      if (i + 1 < n) v += upper[i] * q[i + 1];  // ghost q[n] = 0
      out[i] = v;
    }
  }

  std::vector<double> solve(const std::vector<double>& rhs) const {
    std::vector<double> a = lower, b = diag, c = upper, x = rhs;
    solve_tridiag(a, b, c, x);
    return x;
  }
};

inline double radial_weight(int d, double r, int i, int n) {
  const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;  // trapezoid ends
  return d == 1 ? w : w * r;
}

}  // namespace detail

// Quadrature of  int_{R^d} F(Q(|x|)) dx  from radial samples; fn maps a sample
// to the integrand value.
template <typename Fn>
inline double radial_integral(const GroundState& gs, Fn&& fn) {
  const double dr = gs.dr();
  const double pi = std::acos(-1.0);
  const double angular = gs.d == 1 ? 2.0 : 2.0 * pi;
  double sum = 0.0;
  for (int i = 0; i < gs.n_r; ++i) {
    const double r = gs.r_samples[i];
    sum += detail::radial_weight(gs.d, r, i, gs.n_r) * fn(gs.q_samples[i], i);
  }
  return angular * sum * dr;
}

inline double ground_state_mass(const GroundState& gs) {
  return radial_integral(gs, [](double q, int) { return q * q; });
}

namespace detail {

inline std::vector<double> petviashvili(double p, int d, double omega, double r_max, int n_r,
                                        double tol_rel, int max_iter) {
  const double dr = r_max / (n_r - 1);
  const int n = n_r;  // unknowns 0..n-1, Dirichlet ghost at r_max + dr
  RadialOperator L(d, omega, dr, n);

  // positive localized seed with the right width and height scale
  std::vector<double> q(n);
  const double amp = std::pow(omega * (p + 1.0) / 2.0, 1.0 / (p - 1.0));
  for (int i = 0; i < n; ++i) {
    const double r = i * dr;
    q[i] = amp * std::exp(-omega * r * r / 4.0);
  }

  const double gamma = p / (p - 1.0);
  // The residual of the discrete operator cannot drop below the roundoff
  // floor ~ eps/dr^2; accept a stall there as long as the contract holds.
  const double accept_rel = 8e-9;
  double best = std::numeric_limits<double>::infinity();
  int stalled = 0;

  std::vector<double> Lq, qp(n);
  for (int it = 0; it < max_iter; ++it) {
    for (int i = 0; i < n; ++i) qp[i] = std::pow(std::abs(q[i]), p - 1.0) * q[i];
    L.apply(q, Lq);

    double num = 0.0, den = 0.0, resid = 0.0, peak = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = radial_weight(d, i * dr, i, n);
      num += w * Lq[i] * q[i];
      den += w * qp[i] * q[i];
      resid = std::max(resid, std::abs(Lq[i] - qp[i]));
      peak = std::max(peak, std::abs(q[i]));
    }
    if (resid <= tol_rel * peak) return q;
    if (resid < 0.97 * best) {
      best = resid;
      stalled = 0;
    } else if (++stalled >= 15) {
      if (best <= accept_rel * peak) return q;
      throw NoConvergence("ground-state iteration stalled above tolerance");
    }
    if (!(den > 0.0) || !std::isfinite(num))
      throw NoConvergence("ground-state iteration lost positivity");

    const double M = num / den;
    std::vector<double> next = L.solve(qp);
    const double scale = std::pow(M, gamma);
    for (int i = 0; i < n; ++i) q[i] = scale * next[i];
  }
  throw NoConvergence("ground-state iteration did not reach tolerance within cap");
}

inline double tail_log_slope(const GroundState& gs) {
  // Log-linear fit over [0.75, 0.90] r_max; the last tenth of the domain is
  // skipped because the Dirichlet ghost drags the discrete tail down.
  const int lo = static_cast<int>(0.75 * (gs.n_r - 1));
  const int hi = static_cast<int>(0.90 * (gs.n_r - 1));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long n = 0;
  for (int i = lo; i <= hi; ++i) {
    if (!(gs.q_samples[i] > 0.0)) continue;
    const double x = gs.r_samples[i];
    const double y = std::log(gs.q_samples[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 8) throw NoConvergence("too few positive tail samples for the decay fit");
  const double denom = n * sxx - sx * sx;
  return (n * sxy - sx * sy) / denom;
}

}  // namespace detail

inline GroundState solve_ground_state(double p, int d, double omega, double r_max = -1.0,
                                      int n_r = 32768) {
  if (d != 1 && d != 2) throw ConfigError("ground state: d must be 1 or 2");
  if (!(p > 1.0)) throw ConfigError("ground state: need p > 1");
  if (p >= 1.0 + 4.0 / d)
    throw SubcriticalityViolated("p >= 1 + 4/d is not mass-subcritical (p=" +
                                 std::to_string(p) + ", d=" + std::to_string(d) + ")");
  if (!(omega > 0.0)) throw ConfigError("ground state: omega must be positive");
  if (r_max < 0.0) r_max = 26.0 / std::sqrt(omega);
  if (r_max < 20.0 / std::sqrt(omega))
    throw DomainTooSmall("radial domain must reach 20/sqrt(omega)");
  if (n_r < 512) throw ConfigError("ground state: n_r >= 512 required");

  GroundState gs;
  gs.p = p;
  gs.d = d;
  gs.omega = omega;
  gs.r_max = r_max;
  gs.n_r = n_r;
  gs.q_samples = detail::petviashvili(p, d, omega, r_max, n_r, 1e-9, 2000);
  gs.r_samples.resize(n_r);
  for (int i = 0; i < n_r; ++i) gs.r_samples[i] = i * gs.dr();

  const double pk = gs.q_samples.front();
  if (gs.q_samples.back() > 1e-8 * pk)
    throw DomainTooSmall("profile tail at r_max exceeds 1e-8 of the peak");
  for (int i = 1; i < n_r; ++i)
    if (!(gs.q_samples[i] > 0.0) || gs.q_samples[i] >= gs.q_samples[i - 1])
      throw NoConvergence("profile is not strictly positive decreasing");

  gs.decay_rate = -detail::tail_log_slope(gs);
  gs.dq_domega_samples.assign(n_r, 0.0);
  return gs;
}

// d/domega of the radial profile by centered differences in omega; also
// enforces the subcritical sign condition d/domega int Q^2 > 0.
inline std::vector<double> domega_profile(const GroundState& gs, double rel_step = 1e-4) {
  if (!(rel_step >= 1e-6 && rel_step <= 1e-2))
    throw RelStepOutOfRange("domega rel_step must lie in [1e-6, 1e-2]");
  const double dw = rel_step * gs.omega;
  GroundState hi = solve_ground_state(gs.p, gs.d, gs.omega + dw, gs.r_max, gs.n_r);
  GroundState lo = solve_ground_state(gs.p, gs.d, gs.omega - dw, gs.r_max, gs.n_r);
  std::vector<double> der(gs.n_r);
  for (int i = 0; i < gs.n_r; ++i)
    der[i] = (hi.q_samples[i] - lo.q_samples[i]) / (2.0 * dw);
  const double dmass = (ground_state_mass(hi) - ground_state_mass(lo)) / (2.0 * dw);
  if (!(dmass > 0.0))
    throw NumericalError("d/domega of the ground-state mass is not positive");
  return der;
}

inline GroundState solve_ground_state_with_domega(double p, int d, double omega,
                                                  double r_max = -1.0, int n_r = 32768,
                                                  double rel_step = 1e-4) {
  GroundState gs = solve_ground_state(p, d, omega, r_max, n_r);
  gs.dq_domega_samples = domega_profile(gs, rel_step);
  return gs;
}

namespace detail {

// Cubic Lagrange interpolation on the uniform radial grid, stencil clamped at
// the ends so nodes reproduce exactly.
template <typename Getter>
inline double interp_cubic(const Getter& f, int n, double dr, double r) {
  const double s = r / dr;
  int i = static_cast<int>(std::floor(s));
  i = std::clamp(i, 1, n - 3) - 1;  // stencil i..i+3
  const double t = s - (i + 1);
  const double fm = f(i), f0 = f(i + 1), f1 = f(i + 2), f2 = f(i + 3);
  const double a = t * (t - 1.0) * (t - 2.0) / -6.0;
  const double b = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double c = (t + 1.0) * t * (t - 2.0) / -2.0;
  const double e = (t + 1.0) * t * (t - 1.0) / 6.0;
  return a * fm + b * f0 + c * f1 + e * f2;
}

template <typename Getter>
inline double interp_cubic_slope(const Getter& f, int n, double dr, double r) {
  const double s = r / dr;
  int i = static_cast<int>(std::floor(s));
  i = std::clamp(i, 1, n - 3) - 1;
  const double t = s - (i + 1);
  const double fm = f(i), f0 = f(i + 1), f1 = f(i + 2), f2 = f(i + 3);
  const double da = -(3.0 * t * t - 6.0 * t + 2.0) / 6.0;
  const double db = (3.0 * t * t - 4.0 * t - 1.0) / 2.0;
  const double dc = -(3.0 * t * t - 2.0 * t - 2.0) / 2.0;
  const double de = (3.0 * t * t - 1.0) / 6.0;
  return (da * fm + db * f0 + dc * f1 + de * f2) / dr;
}

}  // namespace detail

inline double eval_profile(const GroundState& gs, double radius) {
  if (!(radius >= 0.0)) throw ConfigError("eval_profile: radius must be >= 0");
  if (radius > gs.r_max)
    return gs.q_samples.back() * std::exp(-gs.decay_rate * (radius - gs.r_max));
  auto get = [&](int i) { return gs.q_samples[i]; };
  return detail::interp_cubic(get, gs.n_r, gs.dr(), radius);
}

// Radial slope dQ/dr, used for translation direction fields.
inline double eval_profile_slope(const GroundState& gs, double radius) {
  if (!(radius >= 0.0)) throw ConfigError("eval_profile_slope: radius must be >= 0");
  if (radius > gs.r_max)
    return -gs.decay_rate * eval_profile(gs, radius);
  auto get = [&](int i) { return gs.q_samples[i]; };
  return detail::interp_cubic_slope(get, gs.n_r, gs.dr(), radius);
}

inline double eval_domega_profile(const GroundState& gs, double radius) {
  if (!(radius >= 0.0)) throw ConfigError("eval_domega_profile: radius must be >= 0");
  if (gs.dq_domega_samples.size() != gs.q_samples.size() || radius > gs.r_max) return 0.0;
  auto get = [&](int i) { return gs.dq_domega_samples[i]; };
  return detail::interp_cubic(get, gs.n_r, gs.dr(), radius);
}

}  // namespace nlsx
