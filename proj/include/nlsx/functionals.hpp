#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "nlsx/ansatz.hpp"

namespace nlsx {

struct MassEnergyH1 {
  double mass = 0.0;
  double energy = 0.0;
  double h1_norm = 0.0;
  double grad_sq = 0.0;  // int |grad u|^2
};

// Quadrature by node sums; gradient by forward (face) differences with the
// Dirichlet extension, which is the quadratic form of the masked Laplacian.
inline MassEnergyH1 mass_energy_h1(const Field& f, double p) {
  const ExteriorGrid& g = *f.grid;
  const double vol = g.cell_volume();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const int nx = g.nodes_per_axis();

  double mass = 0.0, grad = 0.0, pot = 0.0;
  for (long idx = 0; idx < g.total_nodes(); ++idx) {
    const Complex u = f.v[idx];
    const double a2 = std::norm(u);
    if (a2 > 0.0) {
      mass += a2;
      pot += std::pow(a2, (p + 1.0) / 2.0);
    }
    // faces in +x and +y; masked values enter as zero
    const int i = static_cast<int>(idx % nx);
    if (i + 1 < nx) grad += std::norm(f.v[idx + 1] - u) * inv_h2;
    if (g.d() == 2) {
      const int j = static_cast<int>(idx / nx);
      if (j + 1 < nx) grad += std::norm(f.v[idx + nx] - u) * inv_h2;
    }
  }
  MassEnergyH1 out;
  out.mass = mass * vol;
  out.grad_sq = grad * vol;
  out.energy = 0.5 * out.grad_sq - pot * vol / (p + 1.0);
  out.h1_norm = std::sqrt(out.grad_sq + out.mass);
  return out;
}

inline double h1_distance(const Field& a, const Field& b, double p = 3.0) {
  Field diff = a;
  for (std::size_t i = 0; i < diff.v.size(); ++i) diff.v[i] -= b.v[i];
  return mass_energy_h1(diff, p).h1_norm;
}

namespace detail {

// Centered first derivative on exterior nodes, one-sided where a neighbor is
// masked. Returns one value per node (zero on masked nodes).
inline std::vector<Complex> derivative(const Field& f, int axis) {
  const ExteriorGrid& g = *f.grid;
  const int nx = g.nodes_per_axis();
  const long stride = axis == 0 ? 1 : nx;
  std::vector<Complex> out(g.total_nodes(), Complex(0.0, 0.0));
  for (long idx = 0; idx < g.total_nodes(); ++idx) {
    if (!g.is_exterior(idx)) continue;
    const int pos = axis == 0 ? static_cast<int>(idx % nx) : static_cast<int>(idx / nx);
    const bool has_m = pos > 0 && g.is_exterior(idx - stride);
    const bool has_p = pos + 1 < nx && g.is_exterior(idx + stride);
    if (has_m && has_p)
      out[idx] = (f.v[idx + stride] - f.v[idx - stride]) / (2.0 * g.h());
    else if (has_p)
      out[idx] = (f.v[idx + stride] - f.v[idx]) / g.h();
    else if (has_m)
      out[idx] = (f.v[idx] - f.v[idx - stride]) / g.h();
  }
  return out;
}

}  // namespace detail

// Per-soliton localized mass, momentum, the weighted functional J and G=E+J.
struct LocalizedReport {
  double t = 0.0;
  std::vector<double> M;  // localized masses
  std::vector<Coord> P;   // localized momenta
  double J = 0.0;
  double G = 0.0;
  double mass = 0.0;
  double energy = 0.0;
};

inline LocalizedReport localized_quantities(const Field& f, const std::vector<SolitonSpec>& specs,
                                            double Lambda, double t, double p) {
  const ExteriorGrid& g = *f.grid;
  const double vol = g.cell_volume();
  const std::size_t K = specs.size();
  auto phi = traveling_weights(specs, Lambda, t, f.grid);

  LocalizedReport rep;
  rep.t = t;
  rep.M.assign(K, 0.0);
  rep.P.assign(K, Coord{0.0, 0.0});

  std::vector<std::vector<Complex>> du(g.d());
  for (int a = 0; a < g.d(); ++a) du[a] = detail::derivative(f, a);

  for (long idx = 0; idx < g.total_nodes(); ++idx) {
    const Complex u = f.v[idx];
    const double a2 = std::norm(u);
    if (a2 == 0.0) continue;
    for (std::size_t k = 0; k < K; ++k) {
      const double w = phi[k].values[idx];
      if (w == 0.0) continue;
      rep.M[k] += a2 * w;
      for (int a = 0; a < g.d(); ++a)
        rep.P[k][a] += std::imag(du[a][idx] * std::conj(u)) * w;
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    rep.M[k] *= vol;
    rep.P[k][0] *= vol;
    rep.P[k][1] *= vol;
  }

  const MassEnergyH1 me = mass_energy_h1(f, p);
  rep.mass = me.mass;
  rep.energy = me.energy;
  rep.J = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double vv = dot(specs[k].v, specs[k].v);
    rep.J += (specs[k].omega + 0.25 * vv) * rep.M[k] - dot(specs[k].v, rep.P[k]);
  }
  rep.G = rep.energy + rep.J;
  return rep;
}

// Mass outside the centered ball of radius M.
inline double tail_mass(const Field& f, double M) {
  const ExteriorGrid& g = *f.grid;
  if (M < 0.0 || M >= g.L()) throw MOutOfBox("tail_mass radius must lie in [0, L)");
  double s = 0.0;
  for (long idx = 0; idx < g.total_nodes(); ++idx) {
    const Coord x = g.coord(idx);
    if (norm(x) >= M) s += std::norm(f.v[idx]);
  }
  return s * g.cell_volume();
}

// ---------------------------------------------------------------------------
// The quadratic form H_K on the real representation (Re h, Im h) of exterior
// degrees of freedom, plus the orthogonality constraint rows.

struct QuadraticForm {
  GridPtr grid;
  Eigen::SparseMatrix<double> A;  // 2N x 2N, symmetric
  Eigen::MatrixXd C;              // K(d+2) x 2N constraint rows
  double sym_defect = 0.0;
  long n = 0;           // N = number of exterior dofs
  double mass_scale = 1.0;  // x^T A x approximates mass_scale-weighted L2 form
};

namespace detail {

// Sparse centered/one-sided derivative matrix over dofs (same stencil as
// detail::derivative), scaled by 1/h factors.
inline Eigen::SparseMatrix<double> derivative_matrix(const ExteriorGrid& g, int axis) {
  const int nx = g.nodes_per_axis();
  const long stride = axis == 0 ? 1 : nx;
  const long N = g.n_dof();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * N);
  for (long k = 0; k < N; ++k) {
    const long idx = g.node_of_dof(k);
    const int pos = axis == 0 ? static_cast<int>(idx % nx) : static_cast<int>(idx / nx);
    const long dm = pos > 0 ? g.dof(idx - stride) : -1;
    const long dp = pos + 1 < nx ? g.dof(idx + stride) : -1;
    if (dm >= 0 && dp >= 0) {
      trip.emplace_back(k, dp, 0.5 / g.h());
      trip.emplace_back(k, dm, -0.5 / g.h());
    } else if (dp >= 0) {
      trip.emplace_back(k, dp, 1.0 / g.h());
      trip.emplace_back(k, k, -1.0 / g.h());
    } else if (dm >= 0) {
      trip.emplace_back(k, k, 1.0 / g.h());
      trip.emplace_back(k, dm, -1.0 / g.h());
    }
  }
  Eigen::SparseMatrix<double> D(N, N);
  D.setFromTriplets(trip.begin(), trip.end());
  return D;
}

}  // namespace detail

inline QuadraticForm assemble_HK(const ModulatedAnsatz& ansatz,
                                 const std::vector<SolitonSpec>& specs, double Lambda, double t,
                                 double p) {
  const GridPtr grid = ansatz.total.grid;
  const ExteriorGrid& g = *grid;
  const std::size_t K = specs.size();
  if (ansatz.components.size() != K) throw ConfigError("assemble_HK: component count mismatch");
  require_strictly_increasing(first_velocity_components(specs));

  const long N = g.n_dof();
  const double vol = g.cell_volume();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const int nx = g.nodes_per_axis();
  auto phi = traveling_weights(specs, Lambda, t, grid);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(16 * N);
  auto add = [&](long r, long c, double v) {
    if (v != 0.0) trip.emplace_back(r, c, v);
  };

  // 1) stiffness: face differences, Dirichlet extension. Each interior face
  //    is visited once from its lower-index side; faces against masked nodes
  //    contribute a Dirichlet jump to the diagonal.
  for (long k = 0; k < N; ++k) {
    const long idx = g.node_of_dof(k);
    const int i = static_cast<int>(idx % nx);
    const int j = static_cast<int>(idx / nx);
    const double w = vol * inv_h2;
    for (int axis = 0; axis < g.d(); ++axis) {
      const long stride = axis == 0 ? 1 : nx;
      const int pos = axis == 0 ? i : j;
      const long dp = g.dof(idx + stride);  // dofs never touch the box edge
      if (dp >= 0) {
        for (long off : {0L, N}) {
          add(k + off, k + off, w);
          add(dp + off, dp + off, w);
          add(k + off, dp + off, -w);
          add(dp + off, k + off, -w);
        }
      } else {
        for (long off : {0L, N}) add(k + off, k + off, w);
      }
      if (pos == 0 || g.dof(idx - stride) < 0)
        for (long off : {0L, N}) add(k + off, k + off, w);
    }
  }

  // 2) linearized potential per soliton; the |R|^{p-3} factor is applied to
  //    products that vanish with |R|, so the R = 0 limit is zero
  for (std::size_t s = 0; s < K; ++s) {
    const Field& Rk = ansatz.components[s];
    for (long k = 0; k < N; ++k) {
      const long idx = g.node_of_dof(k);
      const Complex R = Rk.v[idx];
      const double s2 = std::norm(R);
      if (s2 < 1e-280) continue;
      const double f = std::pow(s2, (p - 1.0) / 2.0);
      const double fp2 = (p - 1.0) * std::pow(s2, (p - 3.0) / 2.0);
      const double a = R.real(), b = R.imag();
      add(k, k, -vol * (f + fp2 * a * a));
      add(k + N, k + N, -vol * (f + fp2 * b * b));
      add(k, k + N, -vol * fp2 * a * b);
      add(k + N, k, -vol * fp2 * a * b);
    }
  }

  // 3) localized mass part: + (omega_k + |v_k|^2/4) phi_k |h|^2
  for (std::size_t s = 0; s < K; ++s) {
    const double c = specs[s].omega + 0.25 * dot(specs[s].v, specs[s].v);
    for (long k = 0; k < N; ++k) {
      const double w = c * phi[s].values[g.node_of_dof(k)] * vol;
      add(k, k, w);
      add(k + N, k + N, w);
    }
  }

  // 4) momentum part: - v_k . Im int grad(h) conj(h) phi_k, assembled in its
  //    exactly symmetric representation via B = -(v/2) vol (W - W^T), W = Phi D
  for (int axis = 0; axis < g.d(); ++axis) {
    Eigen::SparseMatrix<double> D = detail::derivative_matrix(g, axis);
    for (std::size_t s = 0; s < K; ++s) {
      const double va = specs[s].v[axis];
      if (va == 0.0) continue;
      for (int outer = 0; outer < D.outerSize(); ++outer) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(D, outer); it; ++it) {
          const long r = it.row(), c = it.col();
          const double w = phi[s].values[g.node_of_dof(r)] * it.value();
          const double bb = -0.5 * va * vol * w;
          // contribution of W_rc to B_rc and -W_rc to B_cr
          add(r, c + N, bb);
          add(c + N, r, bb);
          add(c, r + N, -bb);
          add(r + N, c, -bb);
        }
      }
    }
  }

  QuadraticForm form;
  form.grid = grid;
  form.n = N;
  form.mass_scale = vol;
  form.A.resize(2 * N, 2 * N);
  form.A.setFromTriplets(trip.begin(), trip.end());

  Eigen::SparseMatrix<double> At = Eigen::SparseMatrix<double>(form.A.transpose());
  const double an = form.A.norm();
  form.sym_defect = an > 0.0 ? (form.A - At).norm() / an : 0.0;

  // constraint rows: per soliton Re<R~_k, h>, Re<grad dirs, h> (d rows),
  // Im<R~_k, h>
  const int d = g.d();
  const long m = static_cast<long>(K) * (d + 2);
  form.C.setZero(m, 2 * N);
  for (std::size_t s = 0; s < K; ++s) {
    const long base = static_cast<long>(s) * (d + 2);
    for (long k = 0; k < N; ++k) {
      const long idx = g.node_of_dof(k);
      const Complex R = ansatz.components[s].v[idx];
      form.C(base, k) = R.real() * vol;
      form.C(base, k + N) = R.imag() * vol;
      for (int a = 0; a < d; ++a) {
        const Complex G = ansatz.grad_dirs[s][a].v[idx];
        form.C(base + 1 + a, k) = G.real() * vol;
        form.C(base + 1 + a, k + N) = G.imag() * vol;
      }
      form.C(base + 1 + d, k) = R.imag() * vol;
      form.C(base + 1 + d, k + N) = -R.real() * vol;
    }
  }

  // constraint independence: normalized rows must be well separated
  Eigen::MatrixXd Cn = form.C;
  for (long r = 0; r < m; ++r) {
    const double nr = Cn.row(r).norm();
    if (!(nr > 0.0)) throw SingularConstraints("zero constraint row");
    Cn.row(r) /= nr;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram(Cn * Cn.transpose());
  if (gram.info() != Eigen::Success) throw EigSolveFailed("constraint Gram eigensolve failed");
  const double smin = std::sqrt(std::max(0.0, gram.eigenvalues().minCoeff()));
  if (smin <= 1e-8)
    throw SingularConstraints("constraint rows are numerically dependent (s_min = " +
                              std::to_string(smin) + ")");
  return form;
}

// Direct quadrature of the H_K integrand for a field h, sharing the discrete
// derivative conventions of the assembled operator.
inline double hk_quadrature(const ModulatedAnsatz& ansatz, const std::vector<SolitonSpec>& specs,
                            double Lambda, double t, double p, const Field& h) {
  const ExteriorGrid& g = *h.grid;
  const double vol = g.cell_volume();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const int nx = g.nodes_per_axis();
  const std::size_t K = specs.size();
  auto phi = traveling_weights(specs, Lambda, t, h.grid);

  double total = 0.0;
  // |grad h|^2 over faces
  for (long idx = 0; idx < g.total_nodes(); ++idx) {
    const int i = static_cast<int>(idx % nx);
    if (i + 1 < nx) total += std::norm(h.v[idx + 1] - h.v[idx]) * inv_h2 * vol;
    if (g.d() == 2) {
      const int j = static_cast<int>(idx / nx);
      if (j + 1 < nx) total += std::norm(h.v[idx + nx] - h.v[idx]) * inv_h2 * vol;
    }
  }
  // potential and localized terms
  for (long idx = 0; idx < g.total_nodes(); ++idx) {
    if (!g.is_exterior(idx)) continue;
    const Complex hv = h.v[idx];
    const double h2 = std::norm(hv);
    for (std::size_t s = 0; s < K; ++s) {
      const Complex R = ansatz.components[s].v[idx];
      const double s2 = std::norm(R);
      if (s2 >= 1e-280) {
        const double f = std::pow(s2, (p - 1.0) / 2.0);
        const double fp2 = (p - 1.0) * std::pow(s2, (p - 3.0) / 2.0);
        const double re_rh = R.real() * hv.real() + R.imag() * hv.imag();
        total -= vol * (f * h2 + fp2 * re_rh * re_rh);
      }
      total += vol * (specs[s].omega + 0.25 * dot(specs[s].v, specs[s].v)) *
               phi[s].values[idx] * h2;
    }
  }
  // momentum terms
  for (int axis = 0; axis < g.d(); ++axis) {
    std::vector<Complex> dh = detail::derivative(h, axis);
    for (long idx = 0; idx < g.total_nodes(); ++idx) {
      if (!g.is_exterior(idx)) continue;
      const double im = std::imag(dh[idx] * std::conj(h.v[idx]));
      for (std::size_t s = 0; s < K; ++s) {
        const double va = specs[s].v[axis];
        if (va != 0.0) total -= va * phi[s].values[idx] * im * vol;
      }
    }
  }
  return total;
}

struct ConstrainedEig {
  double lambda_min = 0.0;
  Field eigenvector;
  double residual = 0.0;  // ||P A P v - lambda v|| / ||v||
  long n_constraints = 0;
  long dim = 0;
};

namespace detail {

inline Eigen::VectorXd project_out(const Eigen::MatrixXd& C,
                                   const Eigen::LDLT<Eigen::MatrixXd>& gram,
                                   const Eigen::VectorXd& x) {
  return x - C.transpose() * gram.solve(C * x);
}

}  // namespace detail

// Smallest eigenvalue of the form restricted to the orthogonal complement of
// the constraint rows: dense below 5000 real dimensions, shift-inverted
// Lanczos through a sparse bordered factorization above.
inline ConstrainedEig constrained_min_eig(const QuadraticForm& form, long dense_cap = 5000) {
  const long n2 = 2 * form.n;
  const long m = form.C.rows();
  Eigen::LDLT<Eigen::MatrixXd> gram((form.C * form.C.transpose()).eval());

  ConstrainedEig out;
  out.n_constraints = m;
  out.dim = n2;

  Eigen::VectorXd v;
  if (n2 <= dense_cap) {
    Eigen::MatrixXd A(form.A);
    // orthonormal basis of the constraint span
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(form.C.transpose());
    Eigen::MatrixXd Q1 = qr.householderQ() * Eigen::MatrixXd::Identity(n2, m);
    const Eigen::MatrixXd T = Q1.transpose() * A;      // m x n2
    const Eigen::MatrixXd TQ = T * Q1;                 // m x m
    A -= Q1 * T;
    A -= T.transpose() * Q1.transpose();
    A += Q1 * TQ * Q1.transpose();
    // push the constrained directions above everything else
    double gersh = 0.0;
    for (long i = 0; i < n2; ++i) gersh = std::max(gersh, A.row(i).cwiseAbs().sum());
    A += (2.0 * gersh + 1.0) * (Q1 * Q1.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
    if (eig.info() != Eigen::Success) throw EigSolveFailed("dense eigensolve failed");
    out.lambda_min = eig.eigenvalues()(0) / form.mass_scale;
    v = eig.eigenvectors().col(0);
  } else {
    // bordered KKT shift-invert: [(A - sigma) C^T; C 0]
    double lo = 0.0;
    for (int outer = 0; outer < form.A.outerSize(); ++outer) {
      double diag = 0.0, off = 0.0;
      for (Eigen::SparseMatrix<double>::InnerIterator it(form.A, outer); it; ++it) {
        if (it.row() == it.col()) diag = it.value();
        else off += std::abs(it.value());
      }
      lo = std::min(lo, diag - off);
    }
    const double sigma = lo - 1.0;

    std::vector<Eigen::Triplet<double>> trip;
    for (int outer = 0; outer < form.A.outerSize(); ++outer)
      for (Eigen::SparseMatrix<double>::InnerIterator it(form.A, outer); it; ++it)
        trip.emplace_back(it.row(), it.col(), it.value() - (it.row() == it.col() ? sigma : 0.0));
    for (long i = 0; i < n2; ++i) trip.emplace_back(i, i, 0.0);
    for (long r = 0; r < m; ++r)
      for (long c = 0; c < n2; ++c)
        if (form.C(r, c) != 0.0) {
          trip.emplace_back(n2 + r, c, form.C(r, c));
          trip.emplace_back(c, n2 + r, form.C(r, c));
        }
    Eigen::SparseMatrix<double> kkt(n2 + m, n2 + m);
    kkt.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(kkt);
    if (lu.info() != Eigen::Success) throw EigSolveFailed("bordered factorization failed");

    auto op = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n2 + m);
      rhs.head(n2) = detail::project_out(form.C, gram, x);
      Eigen::VectorXd sol = lu.solve(rhs);
      return Eigen::VectorXd(sol.head(n2));
    };

    // Lanczos with full reorthogonalization on the SPD operator op
    std::mt19937 rng(1234);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd q0(n2);
    for (long i = 0; i < n2; ++i) q0(i) = gauss(rng);
    q0 = detail::project_out(form.C, gram, q0);
    q0.normalize();

    const int max_it = 300;
    std::vector<Eigen::VectorXd> Q{q0};
    std::vector<double> alpha, beta;
    double theta_prev = 0.0;
    Eigen::MatrixXd evecs;
    Eigen::VectorXd thetas;
    for (int it = 0; it < max_it; ++it) {
      Eigen::VectorXd w = op(Q.back());
      const double a = Q.back().dot(w);
      alpha.push_back(a);
      w -= a * Q.back();
      if (it > 0) w -= beta.back() * Q[Q.size() - 2];
      for (const auto& q : Q) w -= q.dot(w) * q;  // full reorthogonalization
      const double b = w.norm();

      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(alpha.size(), alpha.size());
      for (std::size_t i = 0; i < alpha.size(); ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < alpha.size()) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> teig(T);
      thetas = teig.eigenvalues();
      evecs = teig.eigenvectors();
      const double theta = thetas(thetas.size() - 1);
      if (it > 10 && std::abs(theta - theta_prev) < 1e-12 * std::abs(theta)) break;
      theta_prev = theta;
      if (b < 1e-14) break;
      beta.push_back(b);
      Q.push_back(w / b);
    }
    const long j = thetas.size() - 1;
    if (!(thetas(j) > 0.0)) throw EigSolveFailed("shift-invert Lanczos failed to converge");
    out.lambda_min = (sigma + 1.0 / thetas(j)) / form.mass_scale;
    v = Eigen::VectorXd::Zero(n2);
    for (long i = 0; i < static_cast<long>(alpha.size()); ++i) v += evecs(i, j) * Q[i];
    v = detail::project_out(form.C, gram, v);
    v.normalize();
  }

  // residual of the projected eigenpair, in the physical normalization
  Eigen::VectorXd Av = form.A * v / form.mass_scale;
  Av = detail::project_out(form.C, gram, Av);
  out.residual = (Av - out.lambda_min * v).norm() / v.norm();

  out.eigenvector = Field::zero(form.grid);
  for (long k = 0; k < form.n; ++k)
    out.eigenvector.v[form.grid->node_of_dof(k)] = Complex(v(k), v(k + form.n));
  return out;
}

}  // namespace nlsx
