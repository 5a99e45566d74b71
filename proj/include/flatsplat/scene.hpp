// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "flatsplat/geometry.hpp"
#include "flatsplat/types.hpp"

namespace flatsplat {

/// Flatness floor: planar Gaussians render with this fixed scale along the
/// plane normal so the projected covariance stays invertible. Never optimized.
inline constexpr double kFlatnessFloor = 1e-4;

struct Plane {
  int id = -1;
  Vec3 origin = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();           // unit length
  Mat3 rot_pw = Mat3::Identity();        // plane-to-world rotation, columns (t1, t2, n)
  std::vector<int> source_masks;         // dataset mask ids consumed into this plane

  static Plane make(int id, const Vec3& normal, const Vec3& origin) {
    Plane p;
    p.id = id;
    p.origin = origin;
    p.normal = normal.normalized();
    p.rot_pw = plane_rotation(p.normal);
    return p;
  }

  /// Call after mutating origin/normal; renormalizes and rebuilds the frame.
  void refresh_frame() {
    normal.normalize();
    rot_pw = plane_rotation(normal);
  }

  Mat4 frame() const {
    Mat4 t = Mat4::Identity();
    t.block<3, 3>(0, 0) = rot_pw;
    t.block<3, 1>(0, 3) = origin;
    return t;
  }

  Vec3 to_world(const Vec3& local) const { return rot_pw * local + origin; }
  Vec3 to_local(const Vec3& world) const { return rot_pw.transpose() * (world - origin); }
  double signed_distance(const Vec3& world) const { return normal.dot(world - origin); }
};

struct Gaussian2D {
  int plane_id = -1;
  Vec2 mean = Vec2::Zero();       // in-plane position
  Vec2 log_scale = Vec2::Zero();
  double theta = 0.0;             // in-plane rotation
  double opacity_logit = 0.0;
  VecX sh;                        // 3*(L+1)^2, coefficient-major, rgb inner
  std::uint64_t uid = 0;          // optimizer-state key; fresh uid = fresh moments

  Vec2 scale() const { return log_scale.array().exp(); }
  double opacity() const { return sigmoid(opacity_logit); }
  Mat2 covariance() const {
    const Mat2 r = rot2(theta);
    return r * scale().array().square().matrix().asDiagonal() * r.transpose();
  }
};

struct Gaussian3D {
  Vec3 mean = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Vec4 rot = Vec4(1, 0, 0, 0);    // quaternion (w, x, y, z)
  double opacity_logit = 0.0;
  VecX sh;
  std::uint64_t uid = 0;

  Vec3 scale() const { return log_scale.array().exp(); }
  double opacity() const { return sigmoid(opacity_logit); }
  Mat3 covariance() const {
    const Mat3 r = quat_to_matrix(rot);
    return r * scale().array().square().matrix().asDiagonal() * r.transpose();
  }
};

struct Scene {
  std::vector<Plane> planes;
  std::vector<Gaussian2D> planar;    // grouped by plane only logically; order is stable
  std::vector<Gaussian3D> freeform;
  int sh_degree = 2;
  std::uint64_t next_uid = 1;

  std::size_t total_primitives() const { return planar.size() + freeform.size(); }
  int sh_coeffs() const { return 3 * (sh_degree + 1) * (sh_degree + 1); }
  std::uint64_t fresh_uid() { return next_uid++; }
  int next_plane_id() const {
    int id = 0;
    for (const auto& p : planes) id = std::max(id, p.id + 1);
    return id;
  }
  /// Assigns uids to any primitives that do not have one yet (e.g. after load).
  void assign_uids() {
    for (auto& g : planar)
      if (g.uid == 0) g.uid = fresh_uid();
    for (auto& g : freeform)
      if (g.uid == 0) g.uid = fresh_uid();
  }

  const Plane& plane_by_id(int id) const {
    for (const auto& p : planes)
      if (p.id == id) return p;
    throw std::invalid_argument("unresolved plane id " + std::to_string(id));
  }
  Plane& plane_by_id(int id) {
    return const_cast<Plane&>(static_cast<const Scene*>(this)->plane_by_id(id));
  }
  int plane_slot(int id) const {
    for (std::size_t i = 0; i < planes.size(); ++i)
      if (planes[i].id == id) return static_cast<int>(i);
    return -1;
  }
};

/// Pinhole camera; x_cam = rot * x_world + trans.
struct Camera {
  int id = 0;
  int width = 0, height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
  Mat3 rot = Mat3::Identity();
  Vec3 trans = Vec3::Zero();

  Vec3 center() const { return -rot.transpose() * trans; }
  Vec3 to_camera(const Vec3& world) const { return rot * world + trans; }
  Vec2 project_point(const Vec3& world) const {
    const Vec3 t = to_camera(world);
    return Vec2(fx * t.x() / t.z() + cx, fy * t.y() / t.z() + cy);
  }
  /// World-space direction of the ray through pixel coordinates (px, py).
  Vec3 ray_direction(double px, double py) const {
    return rot.transpose() * Vec3((px - cx) / fx, (py - cy) / fy, 1.0);
  }
};

/// Lift a planar Gaussian to its world-space 3D equivalent (Eq. below keeps
/// opacity and SH untouched; the normal-direction scale is the flatness floor).
Gaussian3D planar_to_world(const Gaussian2D& g, const Plane& p);

struct LocalGaussian {
  Vec3 mean;   // plane coordinates
  Vec3 scale;
  Mat3 rot;    // rotation expressed in plane coordinates
};

/// Express a freeform Gaussian in the coordinates of a plane.
LocalGaussian world_to_plane(const Gaussian3D& g, const Plane& p);

}  // namespace flatsplat
