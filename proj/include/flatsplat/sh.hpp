// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "flatsplat/types.hpp"

namespace flatsplat {

inline constexpr int kMaxShDegree = 3;

inline int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// Real spherical-harmonics basis values for a unit direction, up to degree L.
/// Basis ordering and constants follow the 3DGS convention.
void sh_basis(const Vec3& dir, int degree, double* out);

/// d(basis)/d(dir): out_jac is coeff_count x 3, row-major per coefficient.
void sh_basis_jacobian(const Vec3& dir, int degree, double* out_jac);

/// View-dependent color evaluation: 0.5 offset, then clamped to [0, 1].
/// sh holds 3*(L+1)^2 scalars, coefficient-major with rgb innermost.
Vec3 eval_sh(const VecX& sh, const Vec3& view_dir, int degree);

/// Backward of eval_sh. grad_rgb is dL/d(color); accumulates dL/d(sh) into
/// grad_sh (must be pre-sized) and returns dL/d(view_dir). Channels clamped in
/// the forward pass propagate zero gradient.
Vec3 eval_sh_backward(const VecX& sh, const Vec3& view_dir, int degree, const Vec3& grad_rgb,
                      VecX& grad_sh);

}  // namespace flatsplat
