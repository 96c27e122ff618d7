#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nlsx/errors.hpp"

namespace nlsx {

// Spatial point / vector for d <= 2; unused components stay zero.
using Coord = std::array<double, 2>;

inline double dot(const Coord& a, const Coord& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Coord& a) { return std::sqrt(dot(a, a)); }

// ---------------------------------------------------------------------------
// Obstacle: compact strictly convex set, realized by node masking.

enum class ObstacleKind { interval1d, disc2d, ellipse2d };

struct Obstacle {
  ObstacleKind kind = ObstacleKind::interval1d;
  Coord center{0.0, 0.0};
  // interval1d: extent[0] = half width; disc2d: extent[0] = radius;
  // ellipse2d: extent = semi-axes.
  Coord extent{1.0, 1.0};

  static Obstacle interval(double center, double half_width) {
    Obstacle o;
    o.kind = ObstacleKind::interval1d;
    o.center = {center, 0.0};
    o.extent = {half_width, 0.0};
    o.validate(1);
    return o;
  }
  static Obstacle disc(Coord center, double radius) {
    Obstacle o;
    o.kind = ObstacleKind::disc2d;
    o.center = center;
    o.extent = {radius, 0.0};
    o.validate(2);
    return o;
  }
  static Obstacle ellipse(Coord center, Coord semi_axes) {
    Obstacle o;
    o.kind = ObstacleKind::ellipse2d;
    o.center = center;
    o.extent = semi_axes;
    o.validate(2);
    return o;
  }

  void validate(int d) const {
    auto finite_pos = [](double x) { return std::isfinite(x) && x > 0.0; };
    switch (kind) {
      case ObstacleKind::interval1d:
        if (d != 1) throw ConfigError("interval1d obstacle requires d=1");
        if (!finite_pos(extent[0])) throw ConfigError("interval obstacle needs positive half width");
        break;
      case ObstacleKind::disc2d:
        if (d != 2) throw ConfigError("disc2d obstacle requires d=2");
        if (!finite_pos(extent[0])) throw ConfigError("disc obstacle needs positive radius");
        break;
      case ObstacleKind::ellipse2d:
        if (d != 2) throw ConfigError("ellipse2d obstacle requires d=2");
        if (!finite_pos(extent[0]) || !finite_pos(extent[1]))
          throw ConfigError("ellipse obstacle needs positive semi-axes");
        break;
    }
    if (!std::isfinite(center[0]) || !std::isfinite(center[1]))
      throw ConfigError("obstacle center must be finite");
  }

  bool contains(const Coord& x) const {
    const double px = x[0] - center[0];
    const double py = x[1] - center[1];
    switch (kind) {
      case ObstacleKind::interval1d:
        return std::abs(px) <= extent[0];
      case ObstacleKind::disc2d:
        return px * px + py * py <= extent[0] * extent[0];
      case ObstacleKind::ellipse2d: {
        const double sx = px / extent[0], sy = py / extent[1];
        return sx * sx + sy * sy <= 1.0;
      }
    }
    return false;
  }

  // Distance from the obstacle center; the cutoff collar is built on this.
  double center_distance(const Coord& x) const {
    if (kind == ObstacleKind::interval1d) return std::abs(x[0] - center[0]);
    return std::hypot(x[0] - center[0], x[1] - center[1]);
  }

  // Radius of the smallest center ball covering the obstacle.
  double cover_radius() const {
    switch (kind) {
      case ObstacleKind::interval1d:
      case ObstacleKind::disc2d:
        return extent[0];
      case ObstacleKind::ellipse2d:
        return std::max(extent[0], extent[1]);
    }
    return 0.0;
  }
};

// ---------------------------------------------------------------------------
// ExteriorGrid: uniform Cartesian nodes on [-L, L]^d with the obstacle and the
// outer box realized as homogeneous Dirichlet masks.

enum class NodeKind : std::uint8_t { exterior = 0, obstacle = 1, box_boundary = 2 };

class ExteriorGrid {
 public:
  ExteriorGrid(int d, double L, double h, std::optional<Obstacle> obstacle = std::nullopt)
      : d_(d), L_(L), h_(h), obstacle_(std::move(obstacle)) {
    if (d != 1 && d != 2) throw ConfigError("grid dimension must be 1 or 2");
    if (!(L > 0.0) || !(h > 0.0)) throw ConfigError("grid needs L > 0 and h > 0");
    const double n_axis = 2.0 * L / h;
    nx_ = static_cast<int>(std::lround(n_axis)) + 1;
    if (nx_ < 8) throw ConfigError("grid too coarse: fewer than 8 nodes per axis");
    if (std::abs((nx_ - 1) * h - 2.0 * L) > 1e-9 * std::max(1.0, L))
      throw ConfigError("box width 2L must be an integer multiple of h");
    if (obstacle_) obstacle_->validate(d);

    total_ = nx_;
    if (d_ == 2) total_ *= nx_;
    mask_.resize(total_);
    dof_of_node_.assign(total_, -1);
    for (long idx = 0; idx < total_; ++idx) {
      const Coord x = coord(idx);
      NodeKind kind = NodeKind::exterior;
      if (on_box_boundary_(idx)) kind = NodeKind::box_boundary;
      else if (obstacle_ && obstacle_->contains(x)) kind = NodeKind::obstacle;
      mask_[idx] = kind;
      if (kind == NodeKind::exterior) {
        dof_of_node_[idx] = static_cast<std::int32_t>(node_of_dof_.size());
        node_of_dof_.push_back(static_cast<std::int32_t>(idx));
      }
    }
  }

  int d() const { return d_; }
  double L() const { return L_; }
  double h() const { return h_; }
  int nodes_per_axis() const { return nx_; }
  long total_nodes() const { return total_; }
  long n_dof() const { return static_cast<long>(node_of_dof_.size()); }
  const std::optional<Obstacle>& obstacle() const { return obstacle_; }

  NodeKind kind(long idx) const { return mask_[idx]; }
  bool is_exterior(long idx) const { return mask_[idx] == NodeKind::exterior; }
  std::int32_t dof(long idx) const { return dof_of_node_[idx]; }
  long node_of_dof(long k) const { return node_of_dof_[k]; }

  long index(int i, int j = 0) const { return static_cast<long>(j) * nx_ + i; }

  Coord coord(long idx) const {
    const int i = static_cast<int>(idx % nx_);
    const int j = static_cast<int>(idx / nx_);
    Coord x{-L_ + i * h_, 0.0};
    if (d_ == 2) x[1] = -L_ + j * h_;
    return x;
  }

  // Quadrature weight of one node (uniform h^d).
  double cell_volume() const { return d_ == 1 ? h_ : h_ * h_; }

  // Phase-resolution requirement for boosted solitons living on this grid.
  void require_resolves(double omega_max, double vmax) const {
    const double pi = std::acos(-1.0);
    double cap = 1.0 / (4.0 * std::sqrt(omega_max));
    if (vmax > 0.0) cap = std::min(cap, 2.0 * pi / (8.0 * vmax));
    if (h_ > cap * (1.0 + 1e-12))
      throw ConfigRejected("grid spacing h=" + std::to_string(h_) +
                           " does not resolve profile/phase (needs h <= " +
                           std::to_string(cap) + ")");
  }

 private:
  bool on_box_boundary_(long idx) const {
    const int i = static_cast<int>(idx % nx_);
    const int j = static_cast<int>(idx / nx_);
    if (i == 0 || i == nx_ - 1) return true;
    if (d_ == 2 && (j == 0 || j == nx_ - 1)) return true;
    return false;
  }

  int d_;
  double L_, h_;
  std::optional<Obstacle> obstacle_;
  int nx_ = 0;
  long total_ = 0;
  std::vector<NodeKind> mask_;
  std::vector<std::int32_t> dof_of_node_;
  std::vector<std::int32_t> node_of_dof_;
};

using GridPtr = std::shared_ptr<const ExteriorGrid>;

// ---------------------------------------------------------------------------
// Smooth step: C^3 degree-7 polynomial ramp on [-1, 1].

inline double smooth_step(double s) {
  if (s <= -1.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double x = 0.5 * (s + 1.0);
  return x * x * x * x * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)));
}

inline double smooth_step_d1(double s) {
  if (s <= -1.0 || s >= 1.0) return 0.0;
  const double x = 0.5 * (s + 1.0);
  const double y = 1.0 - x;
  return 70.0 * x * x * x * y * y * y;
}

inline double smooth_step_d2(double s) {
  if (s <= -1.0 || s >= 1.0) return 0.0;
  const double x = 0.5 * (s + 1.0);
  const double y = 1.0 - x;
  return 105.0 * x * x * y * y * (1.0 - 2.0 * x);
}

struct StepRegularity {
  double sup_d1sq_over_s = 0.0;   // sup (S')^2 / S
  double sup_d2sq_over_d1 = 0.0;  // sup (S'')^2 / S'
};

// Empirical regularity constants of the ramp, sampled densely over (-1, 1).
inline StepRegularity smooth_step_regularity(long samples = 100000) {
  StepRegularity reg;
  for (long i = 1; i < samples; ++i) {
    const double s = -1.0 + 2.0 * static_cast<double>(i) / samples;
    const double v = smooth_step(s);
    const double d1 = smooth_step_d1(s);
    const double d2 = smooth_step_d2(s);
    if (v > 0.0) reg.sup_d1sq_over_s = std::max(reg.sup_d1sq_over_s, d1 * d1 / v);
    if (d1 > 0.0) reg.sup_d2sq_over_d1 = std::max(reg.sup_d2sq_over_d1, d2 * d2 / d1);
  }
  return reg;
}

// ---------------------------------------------------------------------------
// CutoffField: [0,1]-valued node function (obstacle collar or traveling weight).

struct CutoffField {
  GridPtr grid;
  std::vector<double> values;
  double band = 0.0;  // transition length scale

  double operator[](long idx) const { return values[idx]; }
};

inline CutoffField unit_cutoff(const GridPtr& grid) {
  CutoffField c;
  c.grid = grid;
  c.values.assign(grid->total_nodes(), 1.0);
  return c;
}

// Obstacle collar Psi: 0 out to center distance delta (which must cover the
// obstacle), ramping over [delta, 2 delta], 1 beyond.
inline CutoffField obstacle_cutoff(const GridPtr& grid, const Obstacle& obstacle, double delta) {
  if (!(delta > 2.0 * grid->h()))
    throw BandTooNarrow("cutoff delta must exceed 2h (delta=" + std::to_string(delta) +
                        ", h=" + std::to_string(grid->h()) + ")");
  if (delta < obstacle.cover_radius())
    throw BandTooNarrow("cutoff delta must cover the obstacle so Psi vanishes on it");
  if (std::max(std::abs(obstacle.center[0]), std::abs(obstacle.center[1])) + 2.0 * delta >=
      grid->L())
    throw ConfigError("cutoff band {dist <= 2 delta} does not fit inside the box");
  CutoffField c;
  c.grid = grid;
  c.band = delta;
  c.values.resize(grid->total_nodes());
  for (long idx = 0; idx < grid->total_nodes(); ++idx) {
    const double dist = obstacle.center_distance(grid->coord(idx));
    c.values[idx] = smooth_step(2.0 * dist / delta - 3.0);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Traveling partition of unity along x_1, separating solitons sorted by the
// first velocity component.

inline void require_strictly_increasing(const std::vector<double>& v1) {
  for (std::size_t k = 1; k < v1.size(); ++k)
    if (!(v1[k - 1] < v1[k]))
      throw UnsortedVelocities("first velocity components must be strictly increasing");
}

inline std::vector<CutoffField> traveling_weights(const std::vector<double>& v1_sorted,
                                                  double Lambda, double t, const GridPtr& grid) {
  const std::size_t K = v1_sorted.size();
  if (K == 0) throw ConfigError("traveling_weights: need at least one soliton");
  require_strictly_increasing(v1_sorted);
  if (!(Lambda > 0.0)) throw ConfigError("traveling_weights: Lambda must be positive");

  std::vector<CutoffField> phi(K);
  for (auto& f : phi) {
    f.grid = grid;
    f.band = Lambda;
    f.values.resize(grid->total_nodes());
  }
  if (K == 1) {
    std::fill(phi[0].values.begin(), phi[0].values.end(), 1.0);
    return phi;
  }
  // lambda_k = midpoint of adjacent first components, k = 2..K (index k-1 here)
  std::vector<double> lam(K);
  for (std::size_t k = 1; k < K; ++k) lam[k] = 0.5 * (v1_sorted[k - 1] + v1_sorted[k]);

  for (long idx = 0; idx < grid->total_nodes(); ++idx) {
    const double x1 = grid->coord(idx)[0];
    double prev = 1.0;  // S at the left boundary of the current slot
    for (std::size_t k = 0; k < K; ++k) {
      const double next = (k + 1 < K) ? smooth_step((x1 - lam[k + 1] * t) / Lambda) : 0.0;
      // phi_k = S_k - S_{k+1} written so the telescoping sum is exactly 1
      phi[k].values[idx] = prev - next;
      prev = next;
    }
  }
  return phi;
}

// ---------------------------------------------------------------------------
// Rotation aligning e_1 so that first velocity components separate.

struct VelocityFrame {
  // Row-major 2x2 rotation; y = m * x. Identity for d = 1.
  std::array<double, 4> m{1.0, 0.0, 0.0, 1.0};
  double margin = 0.0;
  bool is_identity = true;

  Coord apply(const Coord& x) const {
    return {m[0] * x[0] + m[1] * x[1], m[2] * x[0] + m[3] * x[1]};
  }
};

inline VelocityFrame velocity_frame(const std::vector<Coord>& velocities, int d) {
  const std::size_t K = velocities.size();
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = a + 1; b < K; ++b)
      if (velocities[a][0] == velocities[b][0] && velocities[a][1] == velocities[b][1])
        throw DuplicateVelocity("two solitons share the same velocity");

  auto margin_along = [&](double c, double s) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t b = a + 1; b < K; ++b) {
        const double g = std::abs((velocities[a][0] - velocities[b][0]) * c +
                                  (velocities[a][1] - velocities[b][1]) * s);
        m = std::min(m, g);
      }
    return K > 1 ? m : std::numeric_limits<double>::infinity();
  };

  VelocityFrame best;
  best.margin = margin_along(1.0, 0.0);
  if (d == 1 || K < 2) return best;

  const double pi = std::acos(-1.0);
  for (int j = 1; j < 360; ++j) {
    const double th = j * pi / 180.0;  // half turn twice over is redundant but cheap
    const double c = std::cos(th), s = std::sin(th);
    const double m = margin_along(c, s);
    if (m > best.margin * (1.0 + 1e-12)) {
      best.margin = m;
      best.m = {c, s, -s, c};
      best.is_identity = false;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Decay rate sigma_0 from the velocity gaps and frequencies.

inline double sigma0(const std::vector<double>& v1_sorted, const std::vector<double>& omegas) {
  if (omegas.empty() || omegas.size() != v1_sorted.size())
    throw ConfigError("sigma0: need one omega per soliton");
  require_strictly_increasing(v1_sorted);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < v1_sorted.size(); ++k) m = std::min(m, v1_sorted[k] - v1_sorted[k - 1]);
  for (double w : omegas) {
    if (!(w > 0.0)) throw ConfigError("sigma0: omegas must be positive");
    m = std::min(m, std::sqrt(w));
  }
  const double root = m / 16.0;
  return root * root;
}

}  // namespace nlsx
