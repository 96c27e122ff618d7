#pragma once

// Test-only analytic oracles, kept independent of the library code paths they
// check.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Closed-form 1D ground state of -Q'' + w Q = Q^p:
//   Q(x) = (w (p+1)/2)^{1/(p-1)} sech^{2/(p-1)}( sqrt(w) (p-1) x / 2 ).
inline double profile_1d(double p, double w, double x) {
  const double amp = std::pow(w * (p + 1.0) / 2.0, 1.0 / (p - 1.0));
  const double s = 1.0 / std::cosh(std::sqrt(w) * (p - 1.0) * x / 2.0);
  return amp * std::pow(s, 2.0 / (p - 1.0));
}

// Residual of a sampled radial profile in the 1D elliptic equation, by
// centered differences on the sample grid (interior points only).
inline double residual_1d(double p, double w, const std::vector<double>& q, double dr) {
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < q.size(); ++i) {
    const double lap = (q[i + 1] - 2.0 * q[i] + q[i - 1]) / (dr * dr);
    worst = std::max(worst, std::abs(-lap + w * q[i] - std::pow(q[i], p)));
  }
  return worst;
}

// Composite Simpson quadrature on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b, int n = 20001) {
  if (n % 2 == 0) ++n;
  const double h = (b - a) / (n - 1);
  double s = f(a) + f(b);
  for (int i = 1; i < n - 1; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Pearson r^2 between two series.
inline double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double cov = n * sxy - sx * sy;
  const double vx = n * sxx - sx * sx;
  const double vy = n * syy - sy * sy;
  return cov * cov / (vx * vy);
}

}  // namespace oracle
