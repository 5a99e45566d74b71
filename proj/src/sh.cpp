// SPDX-License-Identifier: Apache-2.0
#include "flatsplat/sh.hpp"

namespace flatsplat {

namespace {

constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554,  -0.4570457994644658,
                           0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};

}  // namespace

void sh_basis(const Vec3& dir, int degree, double* out) {
  const double x = dir.x(), y = dir.y(), z = dir.z();
  out[0] = kC0;
  if (degree < 1) return;
  out[1] = -kC1 * y;
  out[2] = kC1 * z;
  out[3] = -kC1 * x;
  if (degree < 2) return;
  const double xx = x * x, yy = y * y, zz = z * z;
  out[4] = kC2[0] * x * y;
  out[5] = kC2[1] * y * z;
  out[6] = kC2[2] * (2 * zz - xx - yy);
  out[7] = kC2[3] * x * z;
  out[8] = kC2[4] * (xx - yy);
  if (degree < 3) return;
  out[9] = kC3[0] * y * (3 * xx - yy);
  out[10] = kC3[1] * x * y * z;
  out[11] = kC3[2] * y * (4 * zz - xx - yy);
  out[12] = kC3[3] * z * (2 * zz - 3 * xx - 3 * yy);
  out[13] = kC3[4] * x * (4 * zz - xx - yy);
  out[14] = kC3[5] * z * (xx - yy);
  out[15] = kC3[6] * x * (xx - 3 * yy);
}

void sh_basis_jacobian(const Vec3& dir, int degree, double* j) {
  const double x = dir.x(), y = dir.y(), z = dir.z();
  const int n = sh_coeff_count(degree);
  std::fill(j, j + 3 * n, 0.0);
  auto row = [&](int i) { return j + 3 * i; };
  if (degree < 1) return;
  row(1)[1] = -kC1;
  row(2)[2] = kC1;
  row(3)[0] = -kC1;
  if (degree < 2) return;
  row(4)[0] = kC2[0] * y;
  row(4)[1] = kC2[0] * x;
  row(5)[1] = kC2[1] * z;
  row(5)[2] = kC2[1] * y;
  row(6)[0] = kC2[2] * -2 * x;
  row(6)[1] = kC2[2] * -2 * y;
  row(6)[2] = kC2[2] * 4 * z;
  row(7)[0] = kC2[3] * z;
  row(7)[2] = kC2[3] * x;
  row(8)[0] = kC2[4] * 2 * x;
  row(8)[1] = kC2[4] * -2 * y;
  if (degree < 3) return;
  const double xx = x * x, yy = y * y, zz = z * z;
  row(9)[0] = kC3[0] * 6 * x * y;
  row(9)[1] = kC3[0] * (3 * xx - 3 * yy);
  row(10)[0] = kC3[1] * y * z;
  row(10)[1] = kC3[1] * x * z;
  row(10)[2] = kC3[1] * x * y;
  row(11)[0] = kC3[2] * -2 * x * y;
  row(11)[1] = kC3[2] * (4 * zz - xx - 3 * yy);
  row(11)[2] = kC3[2] * 8 * y * z;
  row(12)[0] = kC3[3] * -6 * x * z;
  row(12)[1] = kC3[3] * -6 * y * z;
  row(12)[2] = kC3[3] * (6 * zz - 3 * xx - 3 * yy);
  row(13)[0] = kC3[4] * (4 * zz - 3 * xx - yy);
  row(13)[1] = kC3[4] * -2 * x * y;
  row(13)[2] = kC3[4] * 8 * x * z;
  row(14)[0] = kC3[5] * 2 * x * z;
  row(14)[1] = kC3[5] * -2 * y * z;
  row(14)[2] = kC3[5] * (xx - yy);
  row(15)[0] = kC3[6] * (3 * xx - 3 * yy);
  row(15)[1] = kC3[6] * -6 * x * y;
}

Vec3 eval_sh(const VecX& sh, const Vec3& view_dir, int degree) {
  if (degree < 0 || degree > kMaxShDegree)
    throw std::invalid_argument("eval_sh: degree must be in [0, 3]");
  const int n = sh_coeff_count(degree);
  if (sh.size() != 3 * n) throw std::invalid_argument("eval_sh: coefficient count mismatch");
  double basis[16];
  sh_basis(view_dir, degree, basis);
  Vec3 rgb = Vec3::Constant(0.5);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) rgb[c] += basis[i] * sh[3 * i + c];
  return rgb.cwiseMax(0.0).cwiseMin(1.0);
}

Vec3 eval_sh_backward(const VecX& sh, const Vec3& view_dir, int degree, const Vec3& grad_rgb,
                      VecX& grad_sh) {
  const int n = sh_coeff_count(degree);
  double basis[16];
  sh_basis(view_dir, degree, basis);
  Vec3 raw = Vec3::Constant(0.5);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) raw[c] += basis[i] * sh[3 * i + c];

  Vec3 gated = grad_rgb;
  for (int c = 0; c < 3; ++c)
    if (raw[c] <= 0.0 || raw[c] >= 1.0) gated[c] = 0.0;

  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) grad_sh[3 * i + c] += basis[i] * gated[c];

  double jac[16 * 3];
  sh_basis_jacobian(view_dir, degree, jac);
  Vec3 grad_dir = Vec3::Zero();
  for (int i = 0; i < n; ++i) {
    double coeff = 0.0;
    for (int c = 0; c < 3; ++c) coeff += gated[c] * sh[3 * i + c];
    grad_dir += coeff * Eigen::Map<const Vec3>(jac + 3 * i);
  }
  return grad_dir;
}

}  // namespace flatsplat
