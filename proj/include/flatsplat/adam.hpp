// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <unordered_map>

#include "flatsplat/render.hpp"

namespace flatsplat {

/// Per-parameter-class learning rates. Position rates are supplied already
/// multiplied by the scene extent and the decay schedule.
struct LearningRates {
  double position = 1.6e-4;
  double scale = 5e-3;
  double rotation = 5e-3;   // quaternion and in-plane angle
  double opacity = 5e-2;
  double sh = 2.5e-3;
  double plane_origin = 1.6e-4;
  double plane_normal = 1e-3;
};

/// Adaptive-moment optimizer over Scene parameters. Moments are keyed by
/// primitive uid / plane id, so structural edits (snapping, relocation) that
/// mint fresh uids automatically start from zero moments, and untouched
/// primitives keep theirs.
class Adam {
public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-15)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// One descent step. The update_* flags implement the block-coordinate
  /// phases: the frozen block is left bit-identical. Quaternions and plane
  /// normals are renormalized, and plane frames rebuilt, after the step.
  void step(Scene& scene, const SceneGrads& grads, const LearningRates& lrs,
            bool update_gaussians, bool update_planes);

  void reset() { states_.clear(); plane_states_.clear(); }

private:
  struct State {
    VecX m, v;
    int t = 0;
  };
  State& state_for(std::uint64_t uid, int size);
  State& plane_state_for(int plane_id);

  void apply(State& st, int offset, double* param, const double* grad, int n, double lr);

  double beta1_, beta2_, eps_;
  std::unordered_map<std::uint64_t, State> states_;
  std::unordered_map<int, State> plane_states_;
};

}  // namespace flatsplat
