#pragma once

// Piecewise-constant collocation of the first-kind volume integral equation
// for the free-space Laplace kernel on a uniform grid.

#include "iedd/geometry.hpp"
#include "iedd/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <string_view>

namespace iedd {

/// Laplace fundamental solution as a function of the squared distance.
/// dim 1 uses the 2D logarithmic kernel (points on a line in the plane).
inline double kernel_from_r2(int dim, double r2) {
  if (dim == 3) return 1.0 / (4.0 * std::numbers::pi * std::sqrt(r2));
  return -std::log(r2) / (4.0 * std::numbers::pi);
}

/// K(r) = -ln|r| / (2 pi) in 2D, 1 / (4 pi |r|) in 3D. r must be nonzero.
inline double kernel_value(int dim, std::span<const double> r) {
  require(dim >= 1 && dim <= 3 && static_cast<int>(r.size()) >= dim, "kernel_value: bad dimension");
  double r2 = 0.0;
  for (int k = 0; k < dim; ++k) r2 += r[static_cast<std::size_t>(k)] * r[static_cast<std::size_t>(k)];
  if (r2 == 0.0) throw ConfigError("kernel_value: the kernel is singular at r = 0");
  return kernel_from_r2(dim, r2);
}

/// Integral of K over the cell [-h/2, h/2]^dim centred at the singularity.
///
/// 2D: polar splitting of the square into 8 triangles with the apex at the
/// centre; the radial integral is exact and the angular one is integrated
/// adaptively. 3D: the cube is split into 6 pyramids and a Duffy-type map
/// removes the singularity; the remaining face integral is smooth.
/// 1D: exact segment integral of the 2D log kernel.
inline double self_integral(int dim, double h) {
  require(h > 0.0, "self_integral: h must be positive");
  const double a = 0.5 * h;
  const double pi = std::numbers::pi;
  if (dim == 1) return (h / (2.0 * pi)) * (1.0 - std::log(a));
  if (dim == 2) {
    // r ln r integrated radially: R^2/2 ln R - R^2/4 with R = a / cos(theta)
    const auto radial = [a](double theta) {
      const double R = a / std::cos(theta);
      return 0.5 * R * R * std::log(R) - 0.25 * R * R;
    };
    const double scale = a * a * (1.0 + std::abs(std::log(a)));
    const double I = quad::integrate(radial, 0.0, 0.25 * pi, 1e-16 * scale);
    return -8.0 * I / (2.0 * pi);
  }
  if (dim == 3) {
    // Pyramid over the face x = a: (t a, t a u, t a v), Jacobian t^2 a^3.
    // Inner u-integral of (1+u^2+v^2)^{-1/2} over [0,1] is asinh(1/sqrt(1+v^2)).
    const auto face = [](double v) { return std::asinh(1.0 / std::sqrt(1.0 + v * v)); };
    const double J = 4.0 * quad::integrate(face, 0.0, 1.0, 1e-16);
    return 3.0 * a * a * J / (4.0 * pi);
  }
  throw ConfigError("self_integral: dimension must be 1, 2 or 3");
}

/// Where kernel distances are measured.
/// Midpoint: cell centres x_j = h (j - 1/2), spacing h = 1/n.
/// Endpoint: nodes (j - 1) / (n - 1) spanning [0, 1], spacing 1/(n - 1); the
/// quadrature weight h^d and the self-integral still use h = 1/n.
enum class NodeLayout { Midpoint, Endpoint };

inline std::string_view to_string(NodeLayout l) { return l == NodeLayout::Midpoint ? "midpoint" : "endpoint"; }

inline NodeLayout parse_node_layout(std::string_view s) {
  if (s == "midpoint") return NodeLayout::Midpoint;
  if (s == "endpoint") return NodeLayout::Endpoint;
  throw ConfigError("unknown node layout '" + std::string(s) + "'");
}

/// Entry-wise access to the dense operator A:
///   A_ij = h^d K(x_i - x_j) for i != j,   A_ii = self_integral(d, h).
class KernelOperator {
 public:
  KernelOperator() = default;
  explicit KernelOperator(const Grid& grid, NodeLayout layout = NodeLayout::Midpoint, Index dense_limit = 4096)
      : grid_(grid), layout_(layout), dense_limit_(dense_limit) {
    weight_ = std::pow(grid.h(), grid.dim());
    diag_ = self_integral(grid.dim(), grid.h());
    if (layout == NodeLayout::Endpoint) {
      const double s = static_cast<double>(grid.n()) / static_cast<double>(grid.n() - 1);
      scale2_ = s * s;
    }
  }

  const Grid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  Index size() const { return grid_.size(); }
  double diag_value() const { return diag_; }
  double weight() const { return weight_; }
  NodeLayout layout() const { return layout_; }
  Index dense_limit() const { return dense_limit_; }

  double entry(Index i, Index j) const {
    if (i == j) return diag_;
    return weight_ * kernel_from_r2(grid_.dim(), squared_distance(grid_.point(i), grid_.point(j)));
  }

  /// Entry as a function of the lattice offset between two grid points.
  double lag_entry(const MultiIndex& lag) const {
    double r2 = 0.0;
    for (int k = 0; k < grid_.dim(); ++k) {
      const double d = grid_.h() * static_cast<double>(lag[k]);
      r2 += d * d;
    }
    return r2 == 0.0 ? diag_ : weight_ * kernel_from_r2(grid_.dim(), scale2_ * r2);
  }

  /// Weighted kernel between an arbitrary target point and grid point j.
  double point_entry(const Point& y, Index j) const {
    return weight_ * kernel_from_r2(grid_.dim(), squared_distance(y, grid_.point(j)));
  }

  Matrix block(std::span<const Index> rows, std::span<const Index> cols) const {
    const std::vector<Point> xr = gather_points(rows), xc = gather_points(cols);
    Matrix B(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    const int dim = grid_.dim();
    for (Index j = 0; j < B.cols(); ++j) {
      const Point& xj = xc[static_cast<std::size_t>(j)];
      const Index gj = cols[static_cast<std::size_t>(j)];
      for (Index i = 0; i < B.rows(); ++i) {
        if (rows[static_cast<std::size_t>(i)] == gj) {
          B(i, j) = diag_;
        } else {
          B(i, j) = weight_ * kernel_from_r2(dim, squared_distance(xr[static_cast<std::size_t>(i)], xj));
        }
      }
    }
    return B;
  }

  /// Weighted kernel rows evaluated at off-grid target points (proxy surfaces).
  Matrix point_block(std::span<const Point> targets, std::span<const Index> cols) const {
    const std::vector<Point> xc = gather_points(cols);
    Matrix B(static_cast<Index>(targets.size()), static_cast<Index>(cols.size()));
    for (Index j = 0; j < B.cols(); ++j)
      for (Index i = 0; i < B.rows(); ++i)
        B(i, j) = weight_ * kernel_from_r2(grid_.dim(), squared_distance(targets[static_cast<std::size_t>(i)],
                                                                         xc[static_cast<std::size_t>(j)]));
    return B;
  }

  /// The full matrix. Refused above dense_limit points.
  Matrix dense() const {
    require(size() <= dense_limit_, "dense assembly of " + std::to_string(size()) +
                                        " points exceeds the dense limit " + std::to_string(dense_limit_));
    IndexSet all(static_cast<std::size_t>(size()));
    std::iota(all.begin(), all.end(), Index{0});
    return block(all, all);
  }

 private:
  double squared_distance(const Point& a, const Point& b) const {
    double s = 0.0;
    for (int k = 0; k < grid_.dim(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return scale2_ * s;
  }

  std::vector<Point> gather_points(std::span<const Index> idx) const {
    std::vector<Point> pts(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) pts[i] = grid_.point(idx[i]);
    return pts;
  }

  Grid grid_;
  NodeLayout layout_ = NodeLayout::Midpoint;
  double scale2_ = 1.0;
  Index dense_limit_ = 4096;
  double weight_ = 0.25;
  double diag_ = 0.0;
};

}  // namespace iedd
