// SPDX-License-Identifier: Apache-2.0
#include "flatsplat/geometry.hpp"

namespace flatsplat {

namespace {

Vec3 tangent_reference(const Vec3& unit_normal) {
  return std::abs(unit_normal.x()) > 0.9 ? Vec3::UnitY() : Vec3::UnitX();
}

}  // namespace

Mat3 plane_rotation(const Vec3& unit_normal) {
  const Vec3 a = tangent_reference(unit_normal);
  const Vec3 t2 = unit_normal.cross(a).normalized();
  const Vec3 t1 = t2.cross(unit_normal);
  Mat3 r;
  r.col(0) = t1;
  r.col(1) = t2;
  r.col(2) = unit_normal;
  return r;
}

Mat4 plane_frame(const Vec3& normal, const Vec3& origin) {
  const double len = normal.norm();
  if (len < 1e-12) throw std::invalid_argument("plane_frame: zero-length normal");
  Mat4 t = Mat4::Identity();
  t.block<3, 3>(0, 0) = plane_rotation(normal / len);
  t.block<3, 1>(0, 3) = origin;
  return t;
}

Vec3 plane_rotation_backward(const Vec3& raw_normal, const Mat3& grad_rotation) {
  const double len = raw_normal.norm();
  const Vec3 n = raw_normal / len;
  const Vec3 a = tangent_reference(n);
  const Vec3 u = n.cross(a);
  const double m = u.norm();
  const Vec3 t2 = u / m;

  const Vec3 g_t1 = grad_rotation.col(0);
  const Vec3 g_t2_direct = grad_rotation.col(1);
  const Vec3 g_n_direct = grad_rotation.col(2);

  // t1 = t2 x n
  const Vec3 g_t2 = g_t2_direct + skew(n) * g_t1;
  Vec3 g_n = g_n_direct - skew(t2) * g_t1;
  // t2 = normalize(n x a)
  const Vec3 g_u = (g_t2 - t2 * t2.dot(g_t2)) / m;
  g_n += skew(a) * g_u;
  // n = raw / |raw|
  return (g_n - n * n.dot(g_n)) / len;
}

Mat3 quat_to_matrix(const Vec4& q) {
  const Vec4 u = q / q.norm();
  const double w = u(0), x = u(1), y = u(2), z = u(3);
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Vec4 quat_to_matrix_backward(const Vec4& raw_q, const Mat3& g) {
  const double norm = raw_q.norm();
  const Vec4 u = raw_q / norm;
  const double w = u(0), x = u(1), y = u(2), z = u(3);

  Mat3 dw, dx, dy, dz;
  dw << 0, -z, y, z, 0, -x, -y, x, 0;
  dx << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
  dy << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
  dz << -2 * z, -w, x, w, -2 * z, y, x, y, 0;

  Vec4 g_unit;
  g_unit << 2 * g.cwiseProduct(dw).sum(), 2 * g.cwiseProduct(dx).sum(),
      2 * g.cwiseProduct(dy).sum(), 2 * g.cwiseProduct(dz).sum();
  return (g_unit - u * u.dot(g_unit)) / norm;
}

Vec4 matrix_to_quat(const Mat3& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1.0;
  return Vec4(q.w(), q.x(), q.y(), q.z());
}

}  // namespace flatsplat
