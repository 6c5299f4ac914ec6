#include "bmstab/voxel_set.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "bmstab/io_util.hpp"

namespace bmstab {

VoxelSet::VoxelSet(int dim, double spacing, Vec origin, std::vector<Cell> cells)
    : dim_(dim), spacing_(spacing), origin_(std::move(origin)),
      cells_(std::move(cells)) {
  if (dim_ < 1 || dim_ > kMaxVoxelDim)
    throw PreconditionError("VoxelSet: dim must be in [1, " +
                            std::to_string(kMaxVoxelDim) + "]");
  if (!(spacing_ > 0.0)) throw PreconditionError("VoxelSet: spacing must be positive");
  if (origin_.size() != dim_) throw PreconditionError("VoxelSet: origin size != dim");
  for (auto& c : cells_)
    for (int k = dim_; k < kMaxVoxelDim; ++k) c[k] = 0;
  normalize();
}

VoxelSet VoxelSet::interval_union_1d(
    double spacing, const std::vector<std::pair<int, int>>& runs) {
  std::vector<Cell> cells;
  for (auto [a, b] : runs)
    for (int i = a; i < b; ++i) cells.push_back(Cell{i, 0, 0, 0});
  return VoxelSet(1, spacing, Vec::Zero(1), std::move(cells));
}

void VoxelSet::normalize() {
  std::sort(cells_.begin(), cells_.end());
  cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
}

double VoxelSet::volume() const {
  return std::pow(spacing_, dim_) * static_cast<double>(cells_.size());
}

bool VoxelSet::contains_cell(const Cell& c) const {
  return std::binary_search(cells_.begin(), cells_.end(), c);
}

bool VoxelSet::contains_point(const Vec& p) const {
  Cell c{};
  for (int k = 0; k < dim_; ++k) {
    const double t = (p[k] - origin_[k]) / spacing_;
    const double f = std::floor(t);
    if (f < INT32_MIN || f > INT32_MAX) return false;
    c[k] = static_cast<int32_t>(f);
  }
  return contains_cell(c);
}

Vec VoxelSet::centroid() const {
  if (cells_.empty()) throw PreconditionError("centroid of empty VoxelSet");
  Vec acc = Vec::Zero(dim_);
  for (const auto& c : cells_)
    for (int k = 0; k < dim_; ++k) acc[k] += c[k] + 0.5;
  return origin_ + spacing_ * acc / static_cast<double>(cells_.size());
}

void VoxelSet::bounding_box(Cell& lo, Cell& hi) const {
  if (cells_.empty()) throw PreconditionError("bounding box of empty VoxelSet");
  lo = hi = cells_.front();
  for (const auto& c : cells_)
    for (int k = 0; k < dim_; ++k) {
      lo[k] = std::min(lo[k], c[k]);
      hi[k] = std::max(hi[k], c[k]);
    }
}

Vec VoxelSet::cell_center(const Cell& c) const {
  Vec p(dim_);
  for (int k = 0; k < dim_; ++k) p[k] = origin_[k] + spacing_ * (c[k] + 0.5);
  return p;
}

std::vector<Vec> VoxelSet::boundary_corner_points() const {
  std::vector<Vec> pts;
  std::vector<Cell> boundary;
  for (const auto& c : cells_) {
    bool interior = true;
    for (int k = 0; k < dim_ && interior; ++k) {
      Cell nb = c;
      nb[k] = c[k] - 1;
      if (!contains_cell(nb)) { interior = false; break; }
      nb[k] = c[k] + 1;
      if (!contains_cell(nb)) { interior = false; break; }
    }
    if (!interior) boundary.push_back(c);
  }
  const int corners = 1 << dim_;
  std::vector<Cell> corner_cells;
  corner_cells.reserve(boundary.size() * corners);
  for (const auto& c : boundary)
    for (int m = 0; m < corners; ++m) {
      Cell p = c;
      for (int k = 0; k < dim_; ++k) p[k] += (m >> k) & 1;
      corner_cells.push_back(p);
    }
  std::sort(corner_cells.begin(), corner_cells.end());
  corner_cells.erase(std::unique(corner_cells.begin(), corner_cells.end()),
                     corner_cells.end());
  pts.reserve(corner_cells.size());
  for (const auto& c : corner_cells) {
    Vec p(dim_);
    for (int k = 0; k < dim_; ++k) p[k] = origin_[k] + spacing_ * c[k];
    pts.push_back(std::move(p));
  }
  return pts;
}

VoxelSet VoxelSet::translated_cells(const Cell& shift) const {
  std::vector<Cell> cells = cells_;
  for (auto& c : cells)
    for (int k = 0; k < dim_; ++k) c[k] += shift[k];
  return VoxelSet(dim_, spacing_, origin_, std::move(cells));
}

VoxelSet VoxelSet::translated(const Vec& v) const {
  if (v.size() != dim_) throw PreconditionError("translate: dimension mismatch");
  return VoxelSet(dim_, spacing_, origin_ + v, cells_);
}

VoxelSet VoxelSet::trimmed_to_count(std::size_t target) const {
  if (target > cells_.size())
    throw PreconditionError("trim: target above current count");
  std::vector<Cell> cells(cells_.begin(), cells_.begin() + target);
  return VoxelSet(dim_, spacing_, origin_, std::move(cells));
}

bool VoxelSet::same_grid(const VoxelSet& other, double tol) const {
  if (dim_ != other.dim_) return false;
  if (std::abs(spacing_ - other.spacing_) > tol * spacing_) return false;
  return (origin_ - other.origin_).cwiseAbs().maxCoeff() <= tol * spacing_;
}

VoxelSet VoxelSet::set_union(const VoxelSet& other) const {
  if (!same_grid(other)) throw PreconditionError("set_union: grids differ");
  std::vector<Cell> cells;
  cells.reserve(cells_.size() + other.cells_.size());
  std::set_union(cells_.begin(), cells_.end(), other.cells_.begin(),
                 other.cells_.end(), std::back_inserter(cells));
  return VoxelSet(dim_, spacing_, origin_, std::move(cells));
}

VoxelSet VoxelSet::set_intersection(const VoxelSet& other) const {
  if (!same_grid(other)) throw PreconditionError("set_intersection: grids differ");
  std::vector<Cell> cells;
  std::set_intersection(cells_.begin(), cells_.end(), other.cells_.begin(),
                        other.cells_.end(), std::back_inserter(cells));
  return VoxelSet(dim_, spacing_, origin_, std::move(cells));
}

std::size_t VoxelSet::intersection_count(const VoxelSet& other) const {
  std::size_t n = 0;
  auto a = cells_.begin();
  auto b = other.cells_.begin();
  while (a != cells_.end() && b != other.cells_.end()) {
    if (*a < *b) ++a;
    else if (*b < *a) ++b;
    else { ++n; ++a; ++b; }
  }
  return n;
}

void VoxelSet::write(std::ostream& os) const {
  os << "voxelset " << dim_ << ' ' << fmt_double(spacing_);
  for (int k = 0; k < dim_; ++k) os << ' ' << fmt_double(origin_[k]);
  os << '\n';
  for (const auto& c : cells_) {
    for (int k = 0; k < dim_; ++k) os << (k ? " " : "") << c[k];
    os << '\n';
  }
}

VoxelSet VoxelSet::read(std::istream& is) {
  std::string tag;
  int dim = 0;
  double h = 0;
  is >> tag >> dim >> h;
  if (tag != "voxelset" || !is)
    throw PreconditionError("VoxelSet::read: bad header");
  if (dim < 1 || dim > kMaxVoxelDim)
    throw PreconditionError("VoxelSet::read: unsupported dim");
  Vec origin(dim);
  for (int k = 0; k < dim; ++k) is >> origin[k];
  std::vector<Cell> cells;
  Cell c{};
  while (true) {
    for (int k = 0; k < dim; ++k) {
      if (!(is >> c[k])) {
        if (k == 0) return VoxelSet(dim, h, origin, std::move(cells));
        throw PreconditionError("VoxelSet::read: truncated cell line");
      }
    }
    cells.push_back(c);
  }
}

void VoxelSet::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  write(f);
}

VoxelSet VoxelSet::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return read(f);
}

std::vector<VoxelRow> voxel_rows(const VoxelSet& s) {
  std::vector<VoxelRow> rows;
  const auto& cells = s.cells();
  const int d = s.dim();
  std::size_t i = 0;
  while (i < cells.size()) {
    VoxelRow row;
    for (int k = 0; k + 1 < kMaxVoxelDim; ++k)
      row.prefix[k] = (k < d - 1) ? cells[i][k] : 0;
    std::size_t j = i;
    auto same_prefix = [&](const Cell& c) {
      for (int k = 0; k < d - 1; ++k)
        if (c[k] != row.prefix[k]) return false;
      return true;
    };
    int32_t run_lo = cells[i][d - 1];
    int32_t prev = run_lo;
    ++j;
    while (j < cells.size() && same_prefix(cells[j])) {
      const int32_t cur = cells[j][d - 1];
      if (cur != prev + 1) {
        row.runs.emplace_back(run_lo, prev + 1);
        run_lo = cur;
      }
      prev = cur;
      ++j;
    }
    row.runs.emplace_back(run_lo, prev + 1);
    rows.push_back(std::move(row));
    i = j;
  }
  return rows;
}

}  // namespace bmstab
