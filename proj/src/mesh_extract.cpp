// SPDX-License-Identifier: Apache-2.0
#include "flatsplat/mesh_extract.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace flatsplat {

double polygon_signed_area(const std::vector<Vec2>& ring) {
  double twice = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[(i + 1) % ring.size()];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * twice;
}

double PlanarMesh::area() const {
  double total = 0.0;
  for (const auto& t : triangles)
    total += 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  return total;
}

double LabeledMesh::area() const {
  double total = 0.0;
  for (const auto& t : triangles)
    total += 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  return total;
}

void LabeledMesh::append(const PlanarMesh& part) {
  const int base = static_cast<int>(vertices.size());
  vertices.insert(vertices.end(), part.vertices.begin(), part.vertices.end());
  for (std::size_t t = 0; t < part.triangles.size(); ++t) {
    triangles.push_back({part.triangles[t][0] + base, part.triangles[t][1] + base,
                         part.triangles[t][2] + base});
    triangle_plane.push_back(part.triangle_plane[t]);
  }
}

std::vector<Vec3> unproject_mask(const Camera& camera, const std::vector<std::uint8_t>& mask,
                                 const Plane& plane) {
  const std::size_t npix = static_cast<std::size_t>(camera.width) * camera.height;
  if (mask.size() != npix) throw std::invalid_argument("unproject_mask: resolution mismatch");
  const Vec3 origin = camera.center();
  std::vector<Vec3> points;
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      if (!mask[static_cast<std::size_t>(y) * camera.width + x]) continue;
      const Vec3 dir = camera.ray_direction(x + 0.5, y + 0.5);
      const double denom = dir.dot(plane.normal);
      if (std::abs(denom) < 1e-12) continue;  // parallel ray
      const double t = (plane.origin - origin).dot(plane.normal) / denom;
      if (t <= 0) continue;  // behind the camera
      points.push_back(origin + t * dir);
    }
  }
  return points;
}

std::vector<Vec3> voxel_downsample(const std::vector<Vec3>& points, double voxel) {
  if (voxel <= 0) throw std::invalid_argument("voxel_downsample: voxel must be positive");
  struct Accum {
    Vec3 sum = Vec3::Zero();
    int count = 0;
  };
  std::map<std::array<std::int64_t, 3>, Accum> cells;
  for (const Vec3& p : points) {
    const std::array<std::int64_t, 3> key = {
        static_cast<std::int64_t>(std::floor(p.x() / voxel)),
        static_cast<std::int64_t>(std::floor(p.y() / voxel)),
        static_cast<std::int64_t>(std::floor(p.z() / voxel))};
    auto& slot = cells[key];
    slot.sum += p;
    slot.count += 1;
  }
  std::vector<Vec3> out;
  out.reserve(cells.size());
  for (const auto& [key, slot] : cells) out.push_back(slot.sum / slot.count);
  return out;
}

OccupancyGrid rasterize_occupancy(const std::vector<Vec2>& points, double cell) {
  if (points.empty()) throw std::invalid_argument("rasterize_occupancy: empty input");
  if (cell <= 0) throw std::invalid_argument("rasterize_occupancy: cell must be positive");
  Vec2 lo = points[0], hi = points[0];
  for (const Vec2& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  OccupancyGrid grid;
  grid.cell = cell;
  grid.origin = Vec2(std::floor(lo.x() / cell) * cell, std::floor(lo.y() / cell) * cell);
  grid.width = static_cast<int>(std::floor((hi.x() - grid.origin.x()) / cell)) + 1;
  grid.height = static_cast<int>(std::floor((hi.y() - grid.origin.y()) / cell)) + 1;
  grid.cells.assign(static_cast<std::size_t>(grid.width) * grid.height, 0);
  for (const Vec2& p : points) {
    const int x = std::min(grid.width - 1,
                           static_cast<int>(std::floor((p.x() - grid.origin.x()) / cell)));
    const int y = std::min(grid.height - 1,
                           static_cast<int>(std::floor((p.y() - grid.origin.y()) / cell)));
    grid.cells[static_cast<std::size_t>(y) * grid.width + x] = 1;
  }
  return grid;
}

namespace {

// Midpoints are stored with doubled integer coordinates so they hash exactly.
struct SegmentSoup {
  std::unordered_map<std::int64_t, std::pair<int, int>> next;  // from-key -> to coords

  static std::int64_t key(int x2, int y2) {
    return (static_cast<std::int64_t>(x2) << 32) ^ static_cast<std::int64_t>(y2 + (1 << 30));
  }
  void add(int ax2, int ay2, int bx2, int by2) { next[key(ax2, ay2)] = {bx2, by2}; }
};

}  // namespace

std::vector<std::vector<Vec2>> marching_squares(const OccupancyGrid& grid, int min_vertices) {
  SegmentSoup soup;
  auto sample = [&](int x, int y) { return grid.at(x, y) ? 1 : 0; };

  // Marching cells over the padded sample lattice; directed segments keep the
  // occupied region on the left (outer rings CCW, holes CW).
  for (int cy = -1; cy < grid.height; ++cy) {
    for (int cx = -1; cx < grid.width; ++cx) {
      const int bl = sample(cx, cy), br = sample(cx + 1, cy);
      const int tr = sample(cx + 1, cy + 1), tl = sample(cx, cy + 1);
      const int code = bl | (br << 1) | (tr << 2) | (tl << 3);
      if (code == 0 || code == 15) continue;
      // doubled coordinates of the four edge midpoints
      const int bx = 2 * cx + 1, by = 2 * cy;          // bottom
      const int rx = 2 * cx + 2, ry = 2 * cy + 1;      // right
      const int tx = 2 * cx + 1, ty = 2 * cy + 2;      // top
      const int lx = 2 * cx, ly = 2 * cy + 1;          // left
      switch (code) {
        case 1: soup.add(bx, by, lx, ly); break;
        case 2: soup.add(rx, ry, bx, by); break;
        case 3: soup.add(rx, ry, lx, ly); break;
        case 4: soup.add(tx, ty, rx, ry); break;
        case 5: soup.add(bx, by, lx, ly); soup.add(tx, ty, rx, ry); break;
        case 6: soup.add(tx, ty, bx, by); break;
        case 7: soup.add(tx, ty, lx, ly); break;
        case 8: soup.add(lx, ly, tx, ty); break;
        case 9: soup.add(bx, by, tx, ty); break;
        case 10: soup.add(rx, ry, bx, by); soup.add(lx, ly, tx, ty); break;
        case 11: soup.add(rx, ry, tx, ty); break;
        case 12: soup.add(lx, ly, rx, ry); break;
        case 13: soup.add(bx, by, rx, ry); break;
        case 14: soup.add(lx, ly, bx, by); break;
        default: break;
      }
    }
  }

  // chain directed segments into closed loops, starting from the smallest key
  std::vector<std::vector<Vec2>> contours;
  std::vector<std::int64_t> starts;
  starts.reserve(soup.next.size());
  for (const auto& [from, to] : soup.next) starts.push_back(from);
  std::sort(starts.begin(), starts.end());

  std::unordered_map<std::int64_t, bool> used;
  auto to_plane = [&](int x2, int y2) {
    return Vec2(grid.origin.x() + (x2 / 2.0 + 0.5) * grid.cell,
                grid.origin.y() + (y2 / 2.0 + 0.5) * grid.cell);
  };
  for (std::int64_t start : starts) {
    if (used[start]) continue;
    std::vector<Vec2> contour;
    std::int64_t cursor = start;
    while (true) {
      auto it = soup.next.find(cursor);
      if (it == soup.next.end()) break;  // open chain; should not happen on closed fields
      used[cursor] = true;
      const auto [tx2, ty2] = it->second;
      contour.push_back(to_plane(tx2, ty2));
      cursor = SegmentSoup::key(tx2, ty2);
      if (cursor == start) break;
      if (used.count(cursor) && used[cursor]) break;
    }
    if (static_cast<int>(contour.size()) >= min_vertices) contours.push_back(std::move(contour));
  }
  return contours;
}

namespace {

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const double d1 = cross2(a, b, p);
  const double d2 = cross2(b, c, p);
  const double d3 = cross2(c, a, p);
  const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
  const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
  return !(has_neg && has_pos);
}

bool segments_properly_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross2(c, d, a);
  const double d2 = cross2(c, d, b);
  const double d3 = cross2(a, b, c);
  const double d4 = cross2(a, b, d);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool point_in_ring(const Vec2& p, const std::vector<Vec2>& ring) {
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    if ((ring[i].y() > p.y()) != (ring[j].y() > p.y()) &&
        p.x() < (ring[j].x() - ring[i].x()) * (p.y() - ring[i].y()) /
                    (ring[j].y() - ring[i].y()) +
                ring[i].x())
      inside = !inside;
  }
  return inside;
}

// Splices a hole into the ring via a bridge from the hole's rightmost vertex
// to a mutually visible ring vertex.
std::vector<Vec2> bridge_hole(const std::vector<Vec2>& ring, const std::vector<Vec2>& hole) {
  std::size_t hole_idx = 0;
  for (std::size_t i = 1; i < hole.size(); ++i)
    if (hole[i].x() > hole[hole_idx].x()) hole_idx = i;
  const Vec2 m = hole[hole_idx];

  auto visible = [&](std::size_t ring_idx) {
    const Vec2& v = ring[ring_idx];
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const std::size_t j = (i + 1) % ring.size();
      if (i == ring_idx || j == ring_idx) continue;
      if (segments_properly_intersect(m, v, ring[i], ring[j])) return false;
    }
    for (std::size_t i = 0; i < hole.size(); ++i) {
      const std::size_t j = (i + 1) % hole.size();
      if (i == hole_idx || j == hole_idx) continue;
      if (segments_properly_intersect(m, v, hole[i], hole[j])) return false;
    }
    return true;
  };

  std::size_t best = ring.size();
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ring.size(); ++i) {
    if (ring[i].x() < m.x()) continue;  // bridge to the right of the hole
    const double d = (ring[i] - m).squaredNorm();
    if (d < best_dist && visible(i)) {
      best_dist = d;
      best = i;
    }
  }
  if (best == ring.size()) {
    // fall back to the nearest visible vertex anywhere
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const double d = (ring[i] - m).squaredNorm();
      if (d < best_dist && visible(i)) {
        best_dist = d;
        best = i;
      }
    }
  }
  if (best == ring.size())
    throw std::runtime_error("ear_clip: could not bridge hole to outer ring");

  std::vector<Vec2> merged;
  merged.reserve(ring.size() + hole.size() + 2);
  for (std::size_t i = 0; i <= best; ++i) merged.push_back(ring[i]);
  for (std::size_t k = 0; k <= hole.size(); ++k)
    merged.push_back(hole[(hole_idx + k) % hole.size()]);
  for (std::size_t i = best; i < ring.size(); ++i) merged.push_back(ring[i]);
  return merged;
}

}  // namespace

Triangulation ear_clip(const std::vector<Vec2>& outer, const std::vector<std::vector<Vec2>>& holes) {
  if (outer.size() < 3) throw std::invalid_argument("ear_clip: polygon needs >= 3 vertices");

  std::vector<Vec2> ring = outer;
  if (polygon_signed_area(ring) < 0) std::reverse(ring.begin(), ring.end());

  // bridge holes right-to-left so earlier bridges cannot block later ones
  std::vector<std::vector<Vec2>> ordered = holes;
  for (auto& h : ordered)
    if (polygon_signed_area(h) > 0) std::reverse(h.begin(), h.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    double ax = -1e300, bx = -1e300;
    for (const auto& p : a) ax = std::max(ax, p.x());
    for (const auto& p : b) bx = std::max(bx, p.x());
    return ax > bx;
  });
  for (const auto& hole : ordered) ring = bridge_hole(ring, hole);

  Triangulation out;
  out.vertices = ring;

  std::vector<int> order(ring.size());
  for (std::size_t i = 0; i < ring.size(); ++i) order[i] = static_cast<int>(i);

  auto is_ear = [&](std::size_t pos) {
    const int ia = order[(pos + order.size() - 1) % order.size()];
    const int ib = order[pos];
    const int ic = order[(pos + 1) % order.size()];
    const Vec2& a = ring[ia];
    const Vec2& b = ring[ib];
    const Vec2& c = ring[ic];
    if (cross2(a, b, c) <= 0) return false;  // reflex or collinear
    for (int other : order) {
      if (other == ia || other == ib || other == ic) continue;
      // duplicated bridge vertices share coordinates with the corners
      if ((ring[other] - a).squaredNorm() < 1e-24 || (ring[other] - b).squaredNorm() < 1e-24 ||
          (ring[other] - c).squaredNorm() < 1e-24)
        continue;
      if (point_in_triangle(ring[other], a, b, c)) return false;
    }
    return true;
  };

  std::size_t guard = 0;
  std::size_t pos = 0;
  while (order.size() > 3) {
    if (guard++ > 2 * order.size()) {
      // no ear found in a full sweep: tolerate collinear runs by clipping the
      // flattest convex corner, otherwise the input is not a simple polygon
      std::size_t flattest = order.size();
      double best = 1e300;
      for (std::size_t p2 = 0; p2 < order.size(); ++p2) {
        const int ia = order[(p2 + order.size() - 1) % order.size()];
        const int ib = order[p2];
        const int ic = order[(p2 + 1) % order.size()];
        const double c = cross2(ring[ia], ring[ib], ring[ic]);
        if (c >= 0 && c < best) {
          best = c;
          flattest = p2;
        }
      }
      if (flattest == order.size() || best > 1e-12)
        throw std::runtime_error("ear_clip: triangulation failure (self-intersecting input?)");
      order.erase(order.begin() + flattest);
      guard = 0;
      pos = 0;
      continue;
    }
    if (pos >= order.size()) pos = 0;
    if (!is_ear(pos)) {
      ++pos;
      continue;
    }
    const int ia = order[(pos + order.size() - 1) % order.size()];
    const int ib = order[pos];
    const int ic = order[(pos + 1) % order.size()];
    out.triangles.push_back({ia, ib, ic});
    order.erase(order.begin() + pos);
    guard = 0;
  }
  const double final_area = cross2(ring[order[0]], ring[order[1]], ring[order[2]]);
  if (final_area > 0) out.triangles.push_back({order[0], order[1], order[2]});

  // area conservation doubles as the self-intersection detector: a bowtie or
  // crossed ring clips to a different area than its shoelace integral
  double expected = std::abs(polygon_signed_area(outer));
  for (const auto& hole : holes) expected -= std::abs(polygon_signed_area(hole));
  double actual = 0.0;
  for (const auto& t : out.triangles)
    actual += 0.5 * std::abs(cross2(ring[t[0]], ring[t[1]], ring[t[2]]));
  if (std::abs(actual - expected) > 1e-9 * std::max(expected, 1.0))
    throw std::runtime_error("ear_clip: triangulation failure (self-intersecting input?)");
  return out;
}

PlanarMesh extract_plane_mesh(const Scene& scene, const Plane& plane, const Dataset& dataset,
                              const MeshExtractConfig& cfg) {
  (void)scene;
  PlanarMesh mesh;
  mesh.plane_id = plane.id;

  std::vector<Vec3> points;
  for (const DatasetView& view : dataset.views) {
    for (int mask_id : plane.source_masks) {
      auto it = view.masks.find(mask_id);
      if (it == view.masks.end()) continue;
      const auto pts = unproject_mask(view.camera, it->second, plane);
      points.insert(points.end(), pts.begin(), pts.end());
    }
  }
  if (points.empty()) return mesh;

  points = voxel_downsample(points, cfg.voxel);
  std::vector<Vec2> local;
  local.reserve(points.size());
  for (const Vec3& p : points) local.push_back(plane.to_local(p).head<2>());

  const OccupancyGrid grid = rasterize_occupancy(local, cfg.cell);
  const auto contours = marching_squares(grid, cfg.min_contour_vertices);

  // group holes (negative area) under their containing outer ring
  std::vector<std::size_t> outers;
  for (std::size_t i = 0; i < contours.size(); ++i)
    if (polygon_signed_area(contours[i]) > 0) outers.push_back(i);
  std::map<std::size_t, std::vector<std::vector<Vec2>>> hole_map;
  for (std::size_t i = 0; i < contours.size(); ++i) {
    if (polygon_signed_area(contours[i]) > 0) continue;
    double best_area = std::numeric_limits<double>::infinity();
    std::size_t best = contours.size();
    for (std::size_t o : outers) {
      if (!point_in_ring(contours[i][0], contours[o])) continue;
      const double area = polygon_signed_area(contours[o]);
      if (area < best_area) {
        best_area = area;
        best = o;
      }
    }
    if (best < contours.size()) hole_map[best].push_back(contours[i]);
  }

  for (std::size_t o : outers) {
    const Triangulation tri = ear_clip(contours[o], hole_map.count(o) ? hole_map[o]
                                                                      : std::vector<std::vector<Vec2>>{});
    const int base = static_cast<int>(mesh.vertices.size());
    for (const Vec2& v : tri.vertices)
      mesh.vertices.push_back(plane.to_world(Vec3(v.x(), v.y(), 0.0)));
    for (const auto& t : tri.triangles) {
      const Vec2& a = tri.vertices[t[0]];
      const Vec2& b = tri.vertices[t[1]];
      const Vec2& c = tri.vertices[t[2]];
      if (std::abs(cross2(a, b, c)) < 1e-15) continue;  // degenerate
      mesh.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
      mesh.triangle_plane.push_back(plane.id);
    }
  }
  return mesh;
}

}  // namespace flatsplat
