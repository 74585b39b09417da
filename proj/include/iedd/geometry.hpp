#pragma once

// Uniform grids on [0,1]^d, uniform partitionings, overlapping extensions,
// parity coloring and the three decomposition kinds (Jacobi, Schwarz, CBD).

#include "iedd/common.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <string_view>

namespace iedd {

/// Multi-index with the first coordinate running fastest.
using MultiIndex = std::array<Index, 3>;

inline MultiIndex unravel(Index lex, Index extent, int dim) {
  MultiIndex mi{0, 0, 0};
  for (int k = 0; k < dim; ++k) {
    mi[k] = lex % extent;
    lex /= extent;
  }
  return mi;
}

inline Index ravel(const MultiIndex& mi, Index extent, int dim) {
  Index lex = 0;
  for (int k = dim - 1; k >= 0; --k) lex = lex * extent + mi[k];
  return lex;
}

inline Index ipow(Index base, int e) {
  Index r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

inline bool is_power_of_two(Index v) { return v > 0 && (v & (v - 1)) == 0; }

/// Uniform cell-centred grid: x_j = h (j - 1/2) componentwise, h = 1/n.
/// dim == 1 is a line of points used only by the two-subdomain pairing harness.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, Index n_per_dim) : dim_(dim), n_(n_per_dim) {
    require(dim >= 1 && dim <= 3, "grid dimension must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
    require(n_per_dim >= 2, "grid needs at least 2 points per dimension (got " + std::to_string(n_per_dim) + ")");
    h_ = 1.0 / static_cast<double>(n_);
    size_ = ipow(n_, dim_);
  }

  int dim() const { return dim_; }
  Index n() const { return n_; }
  double h() const { return h_; }
  Index size() const { return size_; }

  MultiIndex multi_index(Index lex) const { return unravel(lex, n_, dim_); }
  Index lex_index(const MultiIndex& mi) const { return ravel(mi, n_, dim_); }

  Point point(Index lex) const {
    Point x{0.0, 0.0, 0.0};
    const MultiIndex mi = multi_index(lex);
    for (int k = 0; k < dim_; ++k) x[k] = h_ * (static_cast<double>(mi[k]) + 0.5);
    return x;
  }

  std::vector<Point> points() const {
    std::vector<Point> pts(static_cast<std::size_t>(size_));
    for (Index i = 0; i < size_; ++i) pts[static_cast<std::size_t>(i)] = point(i);
    return pts;
  }

 private:
  int dim_ = 2;
  Index n_ = 2;
  double h_ = 0.5;
  Index size_ = 4;
};

/// Axis-aligned box [lo, hi] in physical coordinates.
struct Cell {
  Point lo{0.0, 0.0, 0.0};
  Point hi{0.0, 0.0, 0.0};

  Point center() const {
    return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])};
  }
  double side(int dim) const {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s = std::max(s, hi[k] - lo[k]);
    return s;
  }
  double distance_to(const Point& x, int dim) const {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double d = std::max({lo[k] - x[k], 0.0, x[k] - hi[k]});
      s += d * d;
    }
    return std::sqrt(s);
  }
  Cell merged(const Cell& o, int dim) const {
    Cell c = *this;
    for (int k = 0; k < dim; ++k) {
      c.lo[k] = std::min(lo[k], o.lo[k]);
      c.hi[k] = std::max(hi[k], o.hi[k]);
    }
    return c;
  }
};

/// M = m^dim axis-aligned blocks of (n/m)^dim points, ordered lexicographically
/// on the partition lattice.
class Partitioning {
 public:
  Partitioning(const Grid& grid, Index m_per_dim) : grid_(grid), m_(m_per_dim) {
    require(m_per_dim >= 1, "number of partitions per dimension must be positive");
    require(grid.n() % m_per_dim == 0,
            "m = " + std::to_string(m_per_dim) + " does not divide n = " + std::to_string(grid.n()));
    block_ = grid.n() / m_;
    const Index count = ipow(m_, grid.dim());
    parts_.resize(static_cast<std::size_t>(count));
    for (Index p = 0; p < count; ++p) parts_[static_cast<std::size_t>(p)] = block_indices(p, 0);
  }

  const Grid& grid() const { return grid_; }
  Index m() const { return m_; }
  Index size() const { return static_cast<Index>(parts_.size()); }
  Index points_per_part() const { return ipow(block_, grid_.dim()); }
  Index block_width() const { return block_; }
  const IndexSet& operator[](Index p) const { return parts_[static_cast<std::size_t>(p)]; }
  const std::vector<IndexSet>& parts() const { return parts_; }

  MultiIndex lattice_index(Index p) const { return unravel(p, m_, grid_.dim()); }

  /// Grid indices of partition p dilated by `width` layers, clipped to the grid.
  IndexSet block_indices(Index p, Index width) const {
    const int dim = grid_.dim();
    const MultiIndex a = lattice_index(p);
    MultiIndex lo{0, 0, 0}, hi{1, 1, 1};
    for (int k = 0; k < dim; ++k) {
      lo[k] = std::max<Index>(0, a[k] * block_ - width);
      hi[k] = std::min<Index>(grid_.n(), (a[k] + 1) * block_ + width);
    }
    IndexSet out;
    out.reserve(static_cast<std::size_t>((hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2])));
    MultiIndex mi{0, 0, 0};
    for (mi[2] = lo[2]; mi[2] < hi[2]; ++mi[2])
      for (mi[1] = lo[1]; mi[1] < hi[1]; ++mi[1])
        for (mi[0] = lo[0]; mi[0] < hi[0]; ++mi[0]) out.push_back(grid_.lex_index(mi));
    return out;  // ascending: the last coordinate is the outermost loop
  }

  /// Physical cell of partition p dilated by `width` grid spacings, clipped to [0,1]^d.
  Cell cell(Index p, Index width = 0) const {
    const int dim = grid_.dim();
    const MultiIndex a = lattice_index(p);
    const double h = grid_.h();
    Cell c;
    for (int k = 0; k < dim; ++k) {
      c.lo[k] = std::max(0.0, h * static_cast<double>(a[k] * block_ - width));
      c.hi[k] = std::min(1.0, h * static_cast<double>((a[k] + 1) * block_ + width));
    }
    return c;
  }

 private:
  Grid grid_;
  Index m_;
  Index block_ = 1;
  std::vector<IndexSet> parts_;
};

/// Partitions dilated by `overlap_width` grid layers (clipped, never wrapped).
class ExtendedPartitioning {
 public:
  ExtendedPartitioning(const Partitioning& parts, Index overlap_width)
      : parts_(parts), width_(overlap_width) {
    require(overlap_width >= 0, "overlap width must be non-negative");
    extended_.reserve(static_cast<std::size_t>(parts.size()));
    for (Index p = 0; p < parts.size(); ++p) extended_.push_back(parts.block_indices(p, width_));
  }

  const Partitioning& base() const { return parts_; }
  Index overlap_width() const { return width_; }
  Index size() const { return static_cast<Index>(extended_.size()); }
  const IndexSet& operator[](Index p) const { return extended_[static_cast<std::size_t>(p)]; }
  const std::vector<IndexSet>& extended() const { return extended_; }
  Cell cell(Index p) const { return parts_.cell(p, width_); }

 private:
  Partitioning parts_;
  Index width_;
  std::vector<IndexSet> extended_;
};

/// Parity coloring of the partition lattice: color bit k is (i_k mod 2).
/// Colors are 0-based here; the number of colors is 2^dim.
struct Coloring {
  std::vector<int> colors;
  int num_colors = 0;
};

inline Coloring color_partitions(const Partitioning& parts) {
  const int dim = parts.grid().dim();
  Coloring c;
  c.num_colors = 1 << dim;
  c.colors.resize(static_cast<std::size_t>(parts.size()));
  for (Index p = 0; p < parts.size(); ++p) {
    const MultiIndex a = parts.lattice_index(p);
    int color = 0;
    for (int k = 0; k < dim; ++k) color |= static_cast<int>(a[k] % 2) << k;
    c.colors[static_cast<std::size_t>(p)] = color;
  }
  return c;
}

/// Two partitions are adjacent when their lattice indices differ by at most
/// one in every axis (face, edge or corner contact).
inline bool lattice_adjacent(const Partitioning& parts, Index p, Index q) {
  if (p == q) return false;
  const MultiIndex a = parts.lattice_index(p), b = parts.lattice_index(q);
  for (int k = 0; k < parts.grid().dim(); ++k)
    if (std::abs(a[k] - b[k]) > 1) return false;
  return true;
}

enum class DecompositionKind { Jacobi, Schwarz, Cbd, Custom };

inline std::string_view to_string(DecompositionKind k) {
  switch (k) {
    case DecompositionKind::Jacobi: return "jacobi";
    case DecompositionKind::Schwarz: return "schwarz";
    case DecompositionKind::Cbd: return "cbd";
    case DecompositionKind::Custom: return "custom";
  }
  return "?";
}

/// Subdomain index sets I_i (ascending global indices) plus, for lattice-based
/// kinds, the partitions each subdomain is built from.
struct Decomposition {
  DecompositionKind kind = DecompositionKind::Custom;
  Grid grid;
  Index m = 0;
  Index overlap_width = 0;
  std::vector<IndexSet> subdomains;
  std::vector<IndexSet> members;  // partition ids per subdomain (empty for Custom)

  Index size() const { return static_cast<Index>(subdomains.size()); }
};

inline IndexSet merge_sorted(const std::vector<const IndexSet*>& sets) {
  IndexSet out;
  for (const IndexSet* s : sets) out.insert(out.end(), s->begin(), s->end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline Decomposition build_decomposition(const Grid& grid, Index m_per_dim, Index overlap_width,
                                         DecompositionKind kind) {
  require(kind != DecompositionKind::Custom, "use custom_decomposition for explicit index sets");
  const Partitioning parts(grid, m_per_dim);
  Decomposition d;
  d.kind = kind;
  d.grid = grid;
  d.m = m_per_dim;
  d.overlap_width = kind == DecompositionKind::Jacobi ? 0 : overlap_width;
  require(overlap_width >= 0, "overlap width must be non-negative");

  if (kind == DecompositionKind::Jacobi) {
    d.subdomains = parts.parts();
    for (Index p = 0; p < parts.size(); ++p) d.members.push_back({p});
    return d;
  }

  const ExtendedPartitioning ext(parts, overlap_width);
  if (kind == DecompositionKind::Schwarz) {
    d.subdomains = ext.extended();
    for (Index p = 0; p < parts.size(); ++p) d.members.push_back({p});
    return d;
  }

  require(m_per_dim >= 2, "CBD needs at least 2 partitions per dimension");
  const Coloring coloring = color_partitions(parts);
  d.members.assign(static_cast<std::size_t>(coloring.num_colors), {});
  for (Index p = 0; p < parts.size(); ++p)
    d.members[static_cast<std::size_t>(coloring.colors[static_cast<std::size_t>(p)])].push_back(p);
  for (const IndexSet& mem : d.members) {
    std::vector<const IndexSet*> sets;
    for (Index p : mem) sets.push_back(&ext[p]);
    d.subdomains.push_back(merge_sorted(sets));
  }
  return d;
}

/// Decomposition from explicit index sets (each is sorted and deduplicated).
inline Decomposition custom_decomposition(const Grid& grid, std::vector<IndexSet> sets) {
  Decomposition d;
  d.kind = DecompositionKind::Custom;
  d.grid = grid;
  for (IndexSet& s : sets) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    for (Index i : s) require(i >= 0 && i < grid.size(), "subdomain index out of range");
  }
  d.subdomains = std::move(sets);
  return d;
}

/// Two halves split along the first axis (left/right), each a non-overlapping
/// subdomain. Requires an even n.
inline Decomposition half_split(const Grid& grid) {
  require(grid.n() % 2 == 0, "half split needs an even number of points per dimension");
  std::vector<IndexSet> halves(2);
  for (Index i = 0; i < grid.size(); ++i)
    halves[grid.multi_index(i)[0] < grid.n() / 2 ? 0 : 1].push_back(i);
  return custom_decomposition(grid, std::move(halves));
}

/// Number of subdomains covering each grid index.
inline std::vector<int> coverage(const Decomposition& d) {
  std::vector<int> count(static_cast<std::size_t>(d.grid.size()), 0);
  for (const IndexSet& s : d.subdomains)
    for (Index i : s) ++count[static_cast<std::size_t>(i)];
  return count;
}

}  // namespace iedd
