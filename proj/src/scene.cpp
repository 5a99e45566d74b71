// SPDX-License-Identifier: Apache-2.0
#include "flatsplat/scene.hpp"

namespace flatsplat {

Gaussian3D planar_to_world(const Gaussian2D& g, const Plane& p) {
  if (g.plane_id != p.id)
    throw std::invalid_argument("planar_to_world: gaussian refers to plane " +
                                std::to_string(g.plane_id) + ", got plane " +
                                std::to_string(p.id));
  Gaussian3D out;
  out.mean = p.to_world(Vec3(g.mean.x(), g.mean.y(), 0.0));
  // World rotation = plane frame composed with the in-plane rotation.
  Mat3 local_rot = Mat3::Identity();
  local_rot.block<2, 2>(0, 0) = rot2(g.theta);
  out.rot = matrix_to_quat(p.rot_pw * local_rot);
  out.log_scale = Vec3(g.log_scale.x(), g.log_scale.y(), std::log(kFlatnessFloor));
  out.opacity_logit = g.opacity_logit;
  out.sh = g.sh;
  return out;
}

LocalGaussian world_to_plane(const Gaussian3D& g, const Plane& p) {
  LocalGaussian out;
  out.mean = p.to_local(g.mean);
  out.scale = g.scale();
  out.rot = p.rot_pw.transpose() * quat_to_matrix(g.rot);
  return out;
}

}  // namespace flatsplat
