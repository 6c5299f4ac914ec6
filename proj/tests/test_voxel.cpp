#include <doctest.h>

#include <sstream>

#include "bmstab/rng.hpp"
#include "bmstab/voxel_set.hpp"

using namespace bmstab;

namespace {

VoxelSet grid_cube(int dim, int side, double h) {
  std::vector<Cell> cells;
  Cell c{};
  std::vector<int> idx(dim, 0);
  while (true) {
    for (int k = 0; k < dim; ++k) c[k] = idx[k];
    cells.push_back(c);
    int k = 0;
    for (; k < dim; ++k) {
      if (++idx[k] < side) break;
      idx[k] = 0;
    }
    if (k == dim) break;
  }
  return VoxelSet::from_cells(dim, h, std::move(cells));
}

}  // namespace

TEST_CASE("volume is h^n times the cell count") {
  VoxelSet s = grid_cube(3, 10, 0.1);
  CHECK(s.cell_count() == 1000);
  CHECK(s.volume() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("duplicate cells collapse") {
  std::vector<Cell> cells = {Cell{1, 2, 0, 0}, Cell{1, 2, 0, 0}, Cell{0, 0, 0, 0}};
  VoxelSet s = VoxelSet::from_cells(2, 1.0, std::move(cells));
  CHECK(s.cell_count() == 2);
}

TEST_CASE("union and intersection volumes add up") {
  VoxelSet a = grid_cube(2, 4, 0.5);
  VoxelSet b = a.translated_cells(Cell{2, 0, 0, 0});
  VoxelSet u = a.set_union(b);
  VoxelSet i = a.set_intersection(b);
  CHECK(u.volume() + i.volume() == doctest::Approx(a.volume() + b.volume()));

  // Disjoint union is exactly additive.
  VoxelSet c = a.translated_cells(Cell{10, 10, 0, 0});
  CHECK(a.set_union(c).volume() == doctest::Approx(a.volume() + c.volume()).epsilon(1e-15));
}

TEST_CASE("point membership matches the covered region") {
  VoxelSet s = grid_cube(2, 3, 0.25);
  Vec p(2);
  p << 0.1, 0.7;
  CHECK(s.contains_point(p));
  p << 0.76, 0.1;
  CHECK(!s.contains_point(p));
}

TEST_CASE("text round trip") {
  Rng rng(11);
  std::vector<Cell> cells;
  for (int i = 0; i < 200; ++i)
    cells.push_back(Cell{static_cast<int32_t>(rng.below(20)) - 10,
                         static_cast<int32_t>(rng.below(20)) - 10, 0, 0});
  Vec origin(2);
  origin << -0.25, 1.5;
  VoxelSet s(2, 0.125, origin, std::move(cells));

  std::stringstream ss;
  s.write(ss);
  VoxelSet back = VoxelSet::read(ss);
  CHECK(back.dim() == s.dim());
  CHECK(back.spacing() == s.spacing());
  CHECK(back.cells() == s.cells());
  CHECK((back.origin() - s.origin()).norm() == 0.0);
}

TEST_CASE("row decomposition covers every cell once") {
  Rng rng(3);
  std::vector<Cell> cells;
  for (int i = 0; i < 500; ++i)
    cells.push_back(Cell{static_cast<int32_t>(rng.below(12)),
                         static_cast<int32_t>(rng.below(12)),
                         static_cast<int32_t>(rng.below(12)), 0});
  VoxelSet s = VoxelSet::from_cells(3, 1.0, std::move(cells));
  std::size_t total = 0;
  for (const auto& row : voxel_rows(s))
    for (auto [lo, hi] : row.runs) {
      CHECK(hi > lo);
      total += static_cast<std::size_t>(hi - lo);
    }
  CHECK(total == s.cell_count());
}

TEST_CASE("empty and invalid inputs are rejected") {
  CHECK_THROWS_AS(VoxelSet(0, 1.0, Vec::Zero(0), {}), PreconditionError);
  CHECK_THROWS_AS(VoxelSet(2, -1.0, Vec::Zero(2), {}), PreconditionError);
  VoxelSet empty = VoxelSet::from_cells(2, 1.0, {});
  CHECK_THROWS_AS(empty.centroid(), PreconditionError);
}
