// SPDX-License-Identifier: Apache-2.0
#include "flatsplat/adam.hpp"

namespace flatsplat {

Adam::State& Adam::state_for(std::uint64_t uid, int size) {
  State& st = states_[uid];
  if (st.m.size() != size) {
    st.m = VecX::Zero(size);
    st.v = VecX::Zero(size);
    st.t = 0;
  }
  return st;
}

Adam::State& Adam::plane_state_for(int plane_id) {
  State& st = plane_states_[plane_id];
  if (st.m.size() != 6) {
    st.m = VecX::Zero(6);
    st.v = VecX::Zero(6);
    st.t = 0;
  }
  return st;
}

void Adam::apply(State& st, int offset, double* param, const double* grad, int n, double lr) {
  const double bc1 = 1.0 - std::pow(beta1_, st.t);
  const double bc2 = 1.0 - std::pow(beta2_, st.t);
  for (int i = 0; i < n; ++i) {
    double& m = st.m[offset + i];
    double& v = st.v[offset + i];
    m = beta1_ * m + (1.0 - beta1_) * grad[i];
    v = beta2_ * v + (1.0 - beta2_) * grad[i] * grad[i];
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
  }
}

void Adam::step(Scene& scene, const SceneGrads& grads, const LearningRates& lrs,
                bool update_gaussians, bool update_planes) {
  if (update_gaussians) {
    for (std::size_t i = 0; i < scene.planar.size(); ++i) {
      Gaussian2D& g = scene.planar[i];
      const Gaussian2DGrad& gr = grads.planar[i];
      const int k = static_cast<int>(g.sh.size());
      State& st = state_for(g.uid, 6 + k);
      ++st.t;
      apply(st, 0, g.mean.data(), gr.mean.data(), 2, lrs.position);
      apply(st, 2, g.log_scale.data(), gr.log_scale.data(), 2, lrs.scale);
      apply(st, 4, &g.theta, &gr.theta, 1, lrs.rotation);
      apply(st, 5, &g.opacity_logit, &gr.opacity_logit, 1, lrs.opacity);
      apply(st, 6, g.sh.data(), gr.sh.data(), k, lrs.sh);
    }
    for (std::size_t i = 0; i < scene.freeform.size(); ++i) {
      Gaussian3D& g = scene.freeform[i];
      const Gaussian3DGrad& gr = grads.freeform[i];
      const int k = static_cast<int>(g.sh.size());
      State& st = state_for(g.uid, 11 + k);
      ++st.t;
      apply(st, 0, g.mean.data(), gr.mean.data(), 3, lrs.position);
      apply(st, 3, g.log_scale.data(), gr.log_scale.data(), 3, lrs.scale);
      apply(st, 6, g.rot.data(), gr.rot.data(), 4, lrs.rotation);
      apply(st, 10, &g.opacity_logit, &gr.opacity_logit, 1, lrs.opacity);
      apply(st, 11, g.sh.data(), gr.sh.data(), k, lrs.sh);
      g.rot.normalize();
      if (g.rot[0] < 0) g.rot = -g.rot;
    }
  }
  if (update_planes) {
    for (std::size_t i = 0; i < scene.planes.size(); ++i) {
      Plane& p = scene.planes[i];
      const PlaneGrad& gr = grads.planes[i];
      State& st = plane_state_for(p.id);
      ++st.t;
      apply(st, 0, p.origin.data(), gr.origin.data(), 3, lrs.plane_origin);
      apply(st, 3, p.normal.data(), gr.normal.data(), 3, lrs.plane_normal);
      p.refresh_frame();
    }
  }
}

}  // namespace flatsplat
