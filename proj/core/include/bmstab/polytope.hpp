#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bmstab/voxel_set.hpp"

namespace bmstab {

// Halfspace {x : <normal, x> <= offset} with unit normal.
struct Halfspace {
  Vec normal;
  double offset = 0.0;
};

// Triangulated boundary facet: a (d-1)-simplex with outward unit normal.
struct FacetSimplex {
  std::vector<int> verts;  // d vertex indices
  Vec normal;
  double offset = 0.0;
};

struct MeshFacet {
  std::vector<Vec> verts;
  double area = 0.0;
  Vec normal;
};

struct BoundaryMesh {
  std::vector<MeshFacet> facets;
  double total_area = 0.0;

  Vec facet_centroid(std::size_t i) const;
};

// Bounded convex body, V-representation primary, H-representation and the
// triangulated facet list derived on construction (or on demand when built
// from halfspaces).
class Polytope {
 public:
  Polytope() = default;

  // Convex hull of a point cloud. Point sets that are not full-dimensional
  // produce a degenerate polytope: vertices only, no facets, volume zero.
  static Polytope hull_of_points(int dim, const std::vector<Vec>& pts);

  // H-rep constructor; the vertex representation is derived on demand by
  // combinatorial enumeration, so keep the halfspace count moderate.
  static Polytope from_halfspaces(int dim, std::vector<Halfspace> hs);

  static Polytope box(const Vec& lo, const Vec& hi);
  static Polytope regular_polygon(int sides, double circumradius);

  int dim() const { return dim_; }
  bool valid() const { return dim_ > 0; }
  bool is_degenerate() const { return degenerate_; }

  const std::vector<Vec>& vertices() const;
  const std::vector<Halfspace>& halfspaces() const;
  const std::vector<FacetSimplex>& facet_simplices() const;

  double volume() const;
  double surface_area() const;
  double diameter() const;
  Vec vertex_centroid() const;
  // Exact centroid of the body (volume-weighted over the facet fan).
  Vec centroid() const;

  bool contains(const Vec& p, double tol = 1e-9) const;
  double support(const Vec& dir) const;
  // max over halfspaces of (<n,p> - b); negative inside.
  double signed_violation(const Vec& p) const;
  // Largest s >= 0 with s*p inside (requires the origin strictly inside).
  double radial_gauge(const Vec& p) const;

  Polytope affine_image(const Mat& m, const Vec& shift) const;
  Polytope scaled(double s) const;  // about the origin
  Polytope translated(const Vec& v) const;

  std::string to_json() const;
  static Polytope from_json(const std::string& text);

 private:
  void build_from_vertices(const std::vector<Vec>& pts);
  void ensure_vrep() const;

  int dim_ = 0;
  bool degenerate_ = false;
  mutable std::vector<Vec> verts_;
  mutable std::vector<FacetSimplex> facets_;
  mutable std::vector<Halfspace> hs_;
  mutable bool vrep_ready_ = false;
};

// Simplicial quadrature mesh of the boundary, refined by longest-edge
// bisection until every facet diameter is at most diameter(P)/refinement.
BoundaryMesh boundary_quadrature(const Polytope& p, int refinement);

// Euclidean distance to the body; zero inside. Degenerate vertex sets
// (points, segments) are handled through the simplex distance.
double dist_to_convex(const Vec& x, const Polytope& p);

double dist_to_simplex(const Vec& x, const std::vector<Vec>& verts);

// Checks B(o,1/ell) subset P subset B(o,ell); false for degenerate P.
bool ball_sandwich_check(const Polytope& p, double ell, double tol = 1e-9);

// Vertices of the intersection of halfspaces, by combinatorial enumeration
// of n-subsets. Intended for moderate halfspace counts.
std::vector<Vec> enumerate_vertices(int dim, const std::vector<Halfspace>& hs,
                                    double tol = 1e-9);

// Volume of box [lo,hi] cut by the given halfspaces (exact up to roundoff).
double clipped_box_volume(int dim, const Vec& lo, const Vec& hi,
                          const std::vector<Halfspace>& hs);

// Hull of a voxel set (hull of its cells' corner points).
Polytope convex_hull(const VoxelSet& x);

// Voxelization on the lattice h*Z^n. Center rule by default; the outer
// variant keeps every cell that meets the body (corner or center inside),
// so the voxel region covers the polytope.
VoxelSet rasterize_polytope(const Polytope& p, double h, bool outer = false);

}  // namespace bmstab
