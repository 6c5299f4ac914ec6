#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bmstab/error.hpp"

namespace bmstab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Grid dimensions supported by the voxel machinery. Experiments in n >= 5
// are out of scope, and n = 4 is already behind a budget flag.
inline constexpr int kMaxVoxelDim = 4;

// Lattice cell index; coordinates beyond the set's dimension stay zero so
// cells order and hash uniformly.
using Cell = std::array<int32_t, kMaxVoxelDim>;

// Axis-aligned occupancy grid over a bounded region. Cell c covers the cube
// origin + h*(c + [0,1]^n), so volume is exactly h^n times the cell count.
class VoxelSet {
 public:
  VoxelSet() = default;
  VoxelSet(int dim, double spacing, Vec origin, std::vector<Cell> cells);

  static VoxelSet from_cells(int dim, double spacing,
                             std::vector<Cell> cells) {
    return VoxelSet(dim, spacing, Vec::Zero(dim), std::move(cells));
  }

  // 1D convenience: union of intervals [a_i, b_i) given in units of h.
  static VoxelSet interval_union_1d(double spacing,
                                    const std::vector<std::pair<int, int>>& runs);

  int dim() const { return dim_; }
  double spacing() const { return spacing_; }
  const Vec& origin() const { return origin_; }
  const std::vector<Cell>& cells() const { return cells_; }
  std::size_t cell_count() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  double volume() const;

  bool contains_cell(const Cell& c) const;
  // Region membership of a real point (points on cell boundaries resolve to
  // the lexicographically lowest adjacent cell via floor).
  bool contains_point(const Vec& p) const;

  // Centroid of the occupied region.
  Vec centroid() const;
  void bounding_box(Cell& lo, Cell& hi) const;

  // Corner points of cells with at least one unoccupied axis neighbor.
  // The convex hull of these equals the hull of the whole set.
  std::vector<Vec> boundary_corner_points() const;

  Vec cell_center(const Cell& c) const;

  VoxelSet translated_cells(const Cell& shift) const;
  VoxelSet translated(const Vec& v) const;  // moves the origin only

  // Deterministic volume rebalancing: drops lexicographically largest
  // cells (always boundary cells) until the count matches.
  VoxelSet trimmed_to_count(std::size_t target) const;

  // Set operations; both operands must share dim, spacing and origin.
  VoxelSet set_union(const VoxelSet& other) const;
  VoxelSet set_intersection(const VoxelSet& other) const;
  std::size_t intersection_count(const VoxelSet& other) const;

  bool same_grid(const VoxelSet& other, double tol = 1e-9) const;

  // Text format: header "voxelset <n> <h> <origin...>", one cell per line.
  void write(std::ostream& os) const;
  static VoxelSet read(std::istream& is);
  void save(const std::string& path) const;
  static VoxelSet load(const std::string& path);

 private:
  void normalize();

  int dim_ = 0;
  double spacing_ = 1.0;
  Vec origin_;
  std::vector<Cell> cells_;  // sorted lexicographically, unique
};

// Row decomposition along the last axis: key = leading dim-1 coordinates,
// runs = disjoint sorted [lo, hi) intervals of last coordinates.
struct VoxelRow {
  std::array<int32_t, kMaxVoxelDim - 1> prefix{};
  std::vector<std::pair<int32_t, int32_t>> runs;
};

std::vector<VoxelRow> voxel_rows(const VoxelSet& s);

}  // namespace bmstab
