#pragma once

// Recursive skeletonization: compress-then-eliminate over a box tree with
// proxy-surface compression, producing an approximate symmetric factorization
// A ~ W^{-T} D W^{-1} that can be applied forward or inverted.

#include "iedd/dense.hpp"
#include "iedd/kernel.hpp"

#include <map>

namespace iedd {

struct ProxyConfig {
  double radius_factor = 1.5;  // proxy radius = radius_factor * box side length
  int points_2d = 64;
  int points_3d = 288;

  void validate(int dim) const {
    require(radius_factor > 1.0, "proxy radius factor must exceed 1");
    require(points_2d >= 8 && points_3d >= 12, "too few proxy points");
    require(dim == 2 || dim == 3, "proxy surfaces exist only in 2D and 3D");
  }
  int points(int dim) const { return dim == 2 ? points_2d : points_3d; }
};

/// Uniform circle (2D) or Fibonacci sphere (3D) of the given radius.
inline std::vector<Point> proxy_points(int dim, const Point& center, double radius, int count) {
  std::vector<Point> pts(static_cast<std::size_t>(count));
  const double pi = std::numbers::pi;
  for (int j = 0; j < count; ++j) {
    Point p = center;
    if (dim == 2) {
      const double t = 2.0 * pi * j / count;
      p[0] += radius * std::cos(t);
      p[1] += radius * std::sin(t);
    } else {
      const double z = 1.0 - (2.0 * j + 1.0) / count;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = pi * (3.0 - std::sqrt(5.0)) * j;
      p[0] += radius * rho * std::cos(phi);
      p[1] += radius * rho * std::sin(phi);
      p[2] += radius * z;
    }
    pts[static_cast<std::size_t>(j)] = p;
  }
  return pts;
}

enum class TreeMode { Global, Colored, Single };

inline std::string_view to_string(TreeMode m) {
  switch (m) {
    case TreeMode::Global: return "global";
    case TreeMode::Colored: return "colored";
    case TreeMode::Single: return "single";
  }
  return "?";
}

struct Box {
  Cell cell;
  IndexSet dofs;  // global indices owned by a leaf; empty for internal boxes
  std::vector<Index> children;
  Index parent = -1;
  int level = 0;  // 0 = leaves
};

struct BoxTree {
  TreeMode mode = TreeMode::Single;
  int dim = 2;
  std::vector<Box> boxes;
  std::vector<std::vector<Index>> levels;  // levels[0] leaves, levels.back() = {root}
  IndexSet dofs;                           // all owned global indices, ascending

  Index root() const { return levels.back().front(); }
  int num_levels() const { return static_cast<int>(levels.size()); }
};

namespace detail {

// Quadtree/octree over leaves placed on a lattice of `extent` boxes per axis.
inline BoxTree lattice_tree(TreeMode mode, int dim, Index extent, const std::vector<MultiIndex>& coords,
                            std::vector<Cell> cells, std::vector<IndexSet> leaf_dofs) {
  require(is_power_of_two(extent), "box tree: " + std::to_string(extent) +
                                       " boxes per axis is not a power of two");
  BoxTree t;
  t.mode = mode;
  t.dim = dim;
  std::vector<MultiIndex> cur = coords;
  std::vector<Index> ids;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    Box b;
    b.cell = cells[i];
    b.dofs = std::move(leaf_dofs[i]);
    t.dofs.insert(t.dofs.end(), b.dofs.begin(), b.dofs.end());
    ids.push_back(static_cast<Index>(t.boxes.size()));
    t.boxes.push_back(std::move(b));
  }
  std::sort(t.dofs.begin(), t.dofs.end());
  t.levels.push_back(ids);

  int level = 0;
  for (Index e = extent; e > 1; e /= 2) {
    ++level;
    std::map<Index, Index> parent_of;  // parent lattice lex -> box id
    std::vector<MultiIndex> next;
    std::vector<Index> next_ids;
    // Parents ordered lexicographically on the coarser lattice.
    std::vector<std::pair<Index, std::size_t>> order;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      MultiIndex pc{0, 0, 0};
      for (int k = 0; k < dim; ++k) pc[k] = cur[i][k] / 2;
      order.emplace_back(ravel(pc, e / 2, dim), i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [key, i] : order) {
      auto it = parent_of.find(key);
      if (it == parent_of.end()) {
        Box p;
        p.level = level;
        p.cell = t.boxes[static_cast<std::size_t>(ids[i])].cell;
        const Index pid = static_cast<Index>(t.boxes.size());
        t.boxes.push_back(p);
        it = parent_of.emplace(key, pid).first;
        next.push_back(unravel(key, e / 2, dim));
        next_ids.push_back(pid);
      }
      Box& parent = t.boxes[static_cast<std::size_t>(it->second)];
      Box& child = t.boxes[static_cast<std::size_t>(ids[i])];
      child.parent = it->second;
      parent.children.push_back(ids[i]);
      parent.cell = parent.cell.merged(child.cell, dim);
    }
    cur = std::move(next);
    ids = std::move(next_ids);
    t.levels.push_back(ids);
  }
  return t;
}

}  // namespace detail

/// Leaves are the partitions; 2^d lattice-adjacent boxes merge per level.
inline BoxTree global_tree(const Partitioning& parts) {
  const int dim = parts.grid().dim();
  std::vector<MultiIndex> coords;
  std::vector<Cell> cells;
  for (Index p = 0; p < parts.size(); ++p) {
    coords.push_back(parts.lattice_index(p));
    cells.push_back(parts.cell(p));
  }
  return detail::lattice_tree(TreeMode::Global, dim, parts.m(), coords, std::move(cells), parts.parts());
}

/// Leaves are the extended partitions of one parity color; boxes merge on the
/// stride-2 color sublattice so same-color regions stay separated at every level.
inline BoxTree colored_tree(const Partitioning& parts, Index overlap_width, int color) {
  const int dim = parts.grid().dim();
  require(parts.m() % 2 == 0, "colored tree needs an even number of partitions per axis");
  require(color >= 0 && color < (1 << dim), "colored tree: color out of range");
  const ExtendedPartitioning ext(parts, overlap_width);
  std::vector<MultiIndex> coords;
  std::vector<Cell> cells;
  std::vector<IndexSet> dofs;
  std::vector<char> owned(static_cast<std::size_t>(parts.grid().size()), 0);
  for (Index p = 0; p < parts.size(); ++p) {
    const MultiIndex a = parts.lattice_index(p);
    bool match = true;
    for (int k = 0; k < dim; ++k) match = match && (a[k] % 2) == ((color >> k) & 1);
    if (!match) continue;
    MultiIndex b{0, 0, 0};
    for (int k = 0; k < dim; ++k) b[k] = a[k] / 2;
    coords.push_back(b);
    cells.push_back(ext.cell(p));
    IndexSet mine;
    for (Index i : ext[p])
      if (!owned[static_cast<std::size_t>(i)]) {
        owned[static_cast<std::size_t>(i)] = 1;
        mine.push_back(i);
      }
    dofs.push_back(std::move(mine));
  }
  return detail::lattice_tree(TreeMode::Colored, dim, parts.m() / 2, coords, std::move(cells), std::move(dofs));
}

/// A single dense box: the root is the only box.
inline BoxTree single_tree(const Grid& grid, IndexSet dofs) {
  std::sort(dofs.begin(), dofs.end());
  Cell c;
  for (int k = 0; k < grid.dim(); ++k) c.hi[k] = 1.0;
  BoxTree t;
  t.mode = TreeMode::Single;
  t.dim = grid.dim();
  Box b;
  b.cell = c;
  b.dofs = dofs;
  t.dofs = std::move(dofs);
  t.boxes.push_back(std::move(b));
  t.levels.push_back({0});
  return t;
}

struct SkelStats {
  Index S = 0;                       // active DOFs at the root
  std::size_t memory_bytes = 0;      // stored reals and indices, 8 bytes each
  double t_factor = 0.0;             // seconds
  Index max_leaf_rank = 0;           // largest skeleton size among leaves
  std::vector<Index> dofs_per_level; // active DOFs entering each level
};

/// One eliminated box: local indices of its redundant and skeleton DOFs, the
/// interpolation matrix T, the Cholesky factor L of B_rr and E = B_sr L^{-T}.
struct SkelStep {
  Index box = 0;
  IndexSet r, s;
  Matrix T, L, E;
};

class SkelFactor;
SkelFactor factorize(const KernelOperator& op, const BoxTree& tree, double eps, const ProxyConfig& proxy = {});

class SkelFactor {
 public:
  const IndexSet& dofs() const { return dofs_; }
  Index size() const { return static_cast<Index>(dofs_.size()); }
  const SkelStats& stats() const { return stats_; }
  const std::vector<SkelStep>& steps() const { return steps_; }

  /// F^{-1} f, with f in the ascending order of dofs().
  Matrix apply_inverse(const Matrix& f) const {
    require(f.rows() == size(), "apply_inverse: expected " + std::to_string(size()) + " rows, got " +
                                    std::to_string(f.rows()));
    Matrix x = f;
    for (const SkelStep& st : steps_) {
      Matrix xr = x(st.r, Eigen::all);
      const Matrix xs = x(st.s, Eigen::all);
      if (st.T.size() > 0) xr.noalias() -= st.T.transpose() * xs;
      st.L.triangularView<Eigen::Lower>().solveInPlace(xr);
      x(st.r, Eigen::all) = xr;
      if (st.E.size() > 0) x(st.s, Eigen::all) = xs - st.E * xr;
    }
    if (!root_dofs_.empty()) x(root_dofs_, Eigen::all) = root_.solve(Matrix(x(root_dofs_, Eigen::all)));
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
      const SkelStep& st = *it;
      Matrix zr = x(st.r, Eigen::all);
      const Matrix zs = x(st.s, Eigen::all);
      if (st.E.size() > 0) zr.noalias() -= st.E.transpose() * zs;
      st.L.transpose().triangularView<Eigen::Upper>().solveInPlace(zr);
      x(st.r, Eigen::all) = zr;
      if (st.T.size() > 0) x(st.s, Eigen::all) = zs - st.T * zr;
    }
    return x;
  }
  Vector apply_inverse(const Vector& f) const { return apply_inverse(Matrix(f)).col(0); }

  /// F v, the operator the factorization represents.
  Matrix apply_forward(const Matrix& v) const {
    require(v.rows() == size(), "apply_forward: dimension mismatch");
    Matrix w = v;
    for (const SkelStep& st : steps_) {
      Matrix wr = w(st.r, Eigen::all);
      Matrix ws = w(st.s, Eigen::all);
      if (st.T.size() > 0) ws.noalias() += st.T * wr;
      Matrix nr = st.L.transpose().triangularView<Eigen::Upper>() * wr;
      if (st.E.size() > 0) nr.noalias() += st.E.transpose() * ws;
      w(st.r, Eigen::all) = nr;
      w(st.s, Eigen::all) = ws;
    }
    if (!root_dofs_.empty()) {
      const Matrix wr = w(root_dofs_, Eigen::all);
      w(root_dofs_, Eigen::all) = root_.multiply_lower(root_.multiply_upper(wr));
    }
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
      const SkelStep& st = *it;
      const Matrix wr = w(st.r, Eigen::all);
      Matrix ws = w(st.s, Eigen::all);
      if (st.E.size() > 0) ws.noalias() += st.E * wr;
      Matrix nr = st.L.triangularView<Eigen::Lower>() * wr;
      if (st.T.size() > 0) nr.noalias() += st.T.transpose() * ws;
      w(st.r, Eigen::all) = nr;
      w(st.s, Eigen::all) = ws;
    }
    return w;
  }
  Vector apply_forward(const Vector& v) const { return apply_forward(Matrix(v)).col(0); }

 private:
  friend SkelFactor factorize(const KernelOperator&, const BoxTree&, double, const ProxyConfig&);

  IndexSet dofs_;
  std::vector<SkelStep> steps_;
  IndexSet root_dofs_;
  CholeskyFactor root_;
  SkelStats stats_;
};

/// Raised when an eliminated block loses definiteness; carries the box id.
class SkelNotPositiveDefinite : public NotPositiveDefinite {
 public:
  SkelNotPositiveDefinite(Index box, Index pivot, const std::string& context = "")
      : NotPositiveDefinite(context + "recursive skeletonization: block of box " + std::to_string(box) +
                                " is not positive definite (pivot " + std::to_string(pivot) +
                                "); reduce eps",
                            pivot),
        box_(box) {}
  Index box() const noexcept { return box_; }

 private:
  Index box_;
};

inline SkelFactor factorize(const KernelOperator& op, const BoxTree& tree, double eps, const ProxyConfig& proxy) {
  require(eps > 0.0 && eps < 1.0, "rskel: eps must lie in (0, 1)");
  require(tree.dim == op.dim(), "rskel: tree and operator dimensions differ");
  if (tree.num_levels() > 1) proxy.validate(tree.dim);
  const Stopwatch clock;
  const int dim = tree.dim;

  SkelFactor F;
  F.dofs_ = tree.dofs;
  const Index nloc = F.size();
  std::vector<Index> local(static_cast<std::size_t>(op.size()), -1);
  for (Index i = 0; i < nloc; ++i) local[static_cast<std::size_t>(F.dofs_[static_cast<std::size_t>(i)])] = i;
  std::vector<Point> pts(static_cast<std::size_t>(nloc));
  for (Index i = 0; i < nloc; ++i) pts[static_cast<std::size_t>(i)] = op.grid().point(F.dofs_[static_cast<std::size_t>(i)]);
  const auto globals = [&](const IndexSet& loc) {
    IndexSet g(loc.size());
    for (std::size_t i = 0; i < loc.size(); ++i) g[i] = F.dofs_[static_cast<std::size_t>(loc[i])];
    return g;
  };

  const std::size_t nb = tree.boxes.size();
  std::vector<IndexSet> active(nb);  // local indices
  std::vector<Matrix> diag(nb);      // current diagonal block of each box

  const auto assemble = [&](Index b) {
    const Box& box = tree.boxes[static_cast<std::size_t>(b)];
    IndexSet& act = active[static_cast<std::size_t>(b)];
    if (box.children.empty()) {
      act.clear();
      for (Index g : box.dofs) act.push_back(local[static_cast<std::size_t>(g)]);
      const IndexSet g = globals(act);
      diag[static_cast<std::size_t>(b)] = op.block(g, g);
      return;
    }
    std::vector<Index> offs{0};
    for (Index c : box.children) offs.push_back(offs.back() + static_cast<Index>(active[static_cast<std::size_t>(c)].size()));
    Matrix B(offs.back(), offs.back());
    act.clear();
    for (std::size_t i = 0; i < box.children.size(); ++i) {
      const Index ci = box.children[i];
      const IndexSet& ai = active[static_cast<std::size_t>(ci)];
      act.insert(act.end(), ai.begin(), ai.end());
      B.block(offs[i], offs[i], offs[i + 1] - offs[i], offs[i + 1] - offs[i]) = diag[static_cast<std::size_t>(ci)];
      const IndexSet gi = globals(ai);
      for (std::size_t j = i + 1; j < box.children.size(); ++j) {
        const IndexSet gj = globals(active[static_cast<std::size_t>(box.children[j])]);
        const Matrix K = op.block(gi, gj);
        B.block(offs[i], offs[j], K.rows(), K.cols()) = K;
        B.block(offs[j], offs[i], K.cols(), K.rows()) = K.transpose();
      }
      diag[static_cast<std::size_t>(ci)].resize(0, 0);
      active[static_cast<std::size_t>(ci)].clear();
    }
    diag[static_cast<std::size_t>(b)] = std::move(B);
  };

  std::size_t mem_indices = 0, mem_reals = 0;
  const int top = tree.num_levels() - 1;
  for (int lvl = 0; lvl < top; ++lvl) {
    const std::vector<Index>& boxes = tree.levels[static_cast<std::size_t>(lvl)];
    for (Index b : boxes) assemble(b);
    Index entering = 0;
    for (Index b : boxes) entering += static_cast<Index>(active[static_cast<std::size_t>(b)].size());
    F.stats_.dofs_per_level.push_back(entering);
    const bool exact_rows = lvl == top - 1;

    for (Index b : boxes) {
      IndexSet& act = active[static_cast<std::size_t>(b)];
      if (act.empty()) continue;
      const Box& box = tree.boxes[static_cast<std::size_t>(b)];
      const Point c = box.cell.center();
      const double radius = proxy.radius_factor * box.cell.side(dim);

      IndexSet near;
      for (Index o : boxes) {
        if (o == b) continue;
        if (!exact_rows && tree.boxes[static_cast<std::size_t>(o)].cell.distance_to(c, dim) >= radius) continue;
        for (Index i : active[static_cast<std::size_t>(o)])
          if (exact_rows || distance(pts[static_cast<std::size_t>(i)], c, dim) < radius) near.push_back(i);
      }
      const IndexSet gact = globals(act);
      Matrix K;
      if (exact_rows) {
        K = op.block(globals(near), gact);
      } else {
        const std::vector<Point> prox = proxy_points(dim, c, radius, proxy.points(dim));
        K.resize(static_cast<Index>(near.size() + prox.size()), static_cast<Index>(act.size()));
        K.topRows(static_cast<Index>(near.size())) = op.block(globals(near), gact);
        K.bottomRows(static_cast<Index>(prox.size())) = op.point_block(prox, gact);
      }

      IdResult id;
      if (K.rows() == 0) {
        id.redundant.resize(act.size());
        std::iota(id.redundant.begin(), id.redundant.end(), Index{0});
        id.interp = Matrix::Zero(0, static_cast<Index>(act.size()));
      } else {
        id = interpolative_decomposition(K, eps);
      }
      if (lvl == 0) F.stats_.max_leaf_rank = std::max(F.stats_.max_leaf_rank, id.rank());
      if (id.redundant.empty()) continue;

      const Matrix& A = diag[static_cast<std::size_t>(b)];
      const Matrix Arr = A(id.redundant, id.redundant);
      const Matrix Ars = A(id.redundant, id.skeleton);
      const Matrix Ass = A(id.skeleton, id.skeleton);
      const Matrix& T = id.interp;
      const Matrix AssT = Ass * T;
      Matrix Brr = Arr - Ars * T - T.transpose() * Ars.transpose() + T.transpose() * AssT;
      Brr = 0.5 * (Brr + Brr.transpose()).eval();
      const Matrix Bsr = Ars.transpose() - AssT;

      SkelStep st;
      st.box = b;
      try {
        const CholeskyFactor chol(Brr);
        st.L = chol.lower();
      } catch (const NotPositiveDefinite& e) {
        throw SkelNotPositiveDefinite(b, e.pivot());
      }
      st.E = st.L.triangularView<Eigen::Lower>().solve(Bsr.transpose()).transpose();
      Matrix Bss = Ass - st.E * st.E.transpose();
      for (Index i : id.redundant) st.r.push_back(act[static_cast<std::size_t>(i)]);
      for (Index i : id.skeleton) st.s.push_back(act[static_cast<std::size_t>(i)]);
      st.T = T;
      mem_reals += static_cast<std::size_t>(st.T.size() + st.E.size()) +
                   static_cast<std::size_t>(st.L.rows() * (st.L.rows() + 1) / 2);
      mem_indices += st.r.size() + st.s.size();
      act = st.s;
      diag[static_cast<std::size_t>(b)] = std::move(Bss);
      F.steps_.push_back(std::move(st));
    }
  }

  const Index root = tree.root();
  assemble(root);
  F.root_dofs_ = active[static_cast<std::size_t>(root)];
  F.stats_.dofs_per_level.push_back(static_cast<Index>(F.root_dofs_.size()));
  F.stats_.S = static_cast<Index>(F.root_dofs_.size());
  if (tree.num_levels() == 1) F.stats_.max_leaf_rank = F.stats_.S;
  try {
    F.root_ = CholeskyFactor(diag[static_cast<std::size_t>(root)]);
  } catch (const NotPositiveDefinite& e) {
    throw SkelNotPositiveDefinite(root, e.pivot());
  }
  mem_reals += static_cast<std::size_t>(F.stats_.S * (F.stats_.S + 1) / 2);
  mem_indices += F.root_dofs_.size() + F.dofs_.size();
  F.stats_.memory_bytes = 8 * (mem_reals + mem_indices);
  F.stats_.t_factor = clock.seconds();
  return F;
}

}  // namespace iedd
