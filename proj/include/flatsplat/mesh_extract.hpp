// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "flatsplat/dataset.hpp"

namespace flatsplat {

struct OccupancyGrid {
  Vec2 origin = Vec2::Zero();  // plane coordinates of cell (0, 0)'s corner
  double cell = 0.02;          // scene units
  int width = 0, height = 0;
  std::vector<std::uint8_t> cells;  // row-major booleans

  bool at(int x, int y) const {
    if (x < 0 || x >= width || y < 0 || y >= height) return false;
    return cells[static_cast<std::size_t>(y) * width + x] != 0;
  }
};

struct PlanarMesh {
  int plane_id = -1;
  std::vector<Vec3> vertices;               // world space, on the plane
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> triangle_plane;          // per-triangle plane label

  double area() const;
};

/// Multi-plane mesh as written to OBJ (one object group per plane).
struct LabeledMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> triangle_plane;

  void append(const PlanarMesh& part);
  double area() const;
};

/// Ray-plane unprojection of every masked pixel; rays parallel to the plane
/// or hitting it behind the camera are skipped.
std::vector<Vec3> unproject_mask(const Camera& camera, const std::vector<std::uint8_t>& mask,
                                 const Plane& plane);

/// One centroid per occupied voxel, output sorted by voxel key.
std::vector<Vec3> voxel_downsample(const std::vector<Vec3>& points, double voxel);

/// Binary occupancy over 2D plane coordinates; a cell is set iff at least one
/// point falls in it. Empty input is an error.
OccupancyGrid rasterize_occupancy(const std::vector<Vec2>& points, double cell);

/// 0.5-level contours of the binary grid in plane coordinates; vertices at
/// cell-edge midpoints, outer contours counter-clockwise, holes clockwise.
/// Contours with fewer than min_vertices vertices are dropped.
std::vector<std::vector<Vec2>> marching_squares(const OccupancyGrid& grid,
                                                int min_vertices = 100);

/// Ear-clipping triangulation of a simple polygon with optional holes (holes
/// are bridged to the outer ring first). Returns index triples into the
/// concatenated vertex list that the function also outputs.
struct Triangulation {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
};
Triangulation ear_clip(const std::vector<Vec2>& outer,
                       const std::vector<std::vector<Vec2>>& holes = {});

struct MeshExtractConfig {
  double voxel = 0.02;
  double cell = 0.02;
  int min_contour_vertices = 100;
};

/// Full per-plane pipeline: unproject every mask assigned to the plane,
/// downsample, rasterize, contour, triangulate, and lift back to world.
PlanarMesh extract_plane_mesh(const Scene& scene, const Plane& plane, const Dataset& dataset,
                              const MeshExtractConfig& cfg = {});

double polygon_signed_area(const std::vector<Vec2>& ring);

}  // namespace flatsplat
