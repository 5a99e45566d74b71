// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "flatsplat/types.hpp"

namespace flatsplat {

/// Rigid plane-to-world frame for a plane given by unit normal n and origin o.
/// The rotation columns are (t1, t2, n) where t1, t2 span the plane, so the
/// local z = 0 slice maps onto the geometric plane and the world-to-plane
/// rotation (the transpose) maps n to the world z-axis. Tangents come from a
/// canonical, branch-stable construction: reference axis a = x-hat unless
/// |n.x| > 0.9 (then y-hat), t2 = normalize(n x a), t1 = t2 x n.
Mat4 plane_frame(const Vec3& normal, const Vec3& origin);

/// Rotation block of plane_frame (columns t1, t2, n).
Mat3 plane_rotation(const Vec3& unit_normal);

/// Backward through plane_rotation composed with normalization of a raw
/// (not necessarily unit) normal: given dL/dR for R = plane_rotation(n/|n|),
/// returns dL/dn for the raw vector.
Vec3 plane_rotation_backward(const Vec3& raw_normal, const Mat3& grad_rotation);

/// Rotation matrix from a quaternion (w, x, y, z); the quaternion is
/// normalized internally.
Mat3 quat_to_matrix(const Vec4& q);

/// Backward of quat_to_matrix through the internal normalization: given
/// dL/dR, returns dL/dq for the raw quaternion.
Vec4 quat_to_matrix_backward(const Vec4& raw_q, const Mat3& grad_rotation);

/// Quaternion (w, x, y, z) from a rotation matrix.
Vec4 matrix_to_quat(const Mat3& r);

inline Mat2 rot2(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

/// d rot2 / d theta
inline Mat2 rot2_dtheta(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 r;
  r << -s, -c, c, -s;
  return r;
}

/// In-plane angle of the nearest z-axis rotation to a general rotation
/// expressed in plane coordinates (polar angle of the upper-left 2x2 block).
inline double in_plane_angle(const Mat3& local_rot) {
  return std::atan2(local_rot(1, 0) - local_rot(0, 1), local_rot(0, 0) + local_rot(1, 1));
}

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

}  // namespace flatsplat
