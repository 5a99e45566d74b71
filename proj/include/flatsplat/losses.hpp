// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "flatsplat/render.hpp"

namespace flatsplat {

/// Mean absolute photometric error over pixels and channels; accumulates
/// weight * dL/d(rgb) into grad (subgradient 0 at exact ties).
double loss_photo(const FrameBuffer& fb, const std::vector<double>& target_rgb, double weight,
                  FrameBufferGrad& grad);

/// Mean absolute error between one rendered plane mask slice and a binary
/// target; the caller averages over planes present in the view.
double loss_mask(const FrameBuffer& fb, int plane_slot, const std::vector<std::uint8_t>& target,
                 double weight, FrameBufferGrad& grad);

/// Total depth variation: mean over valid adjacent pixel pairs (horizontal and
/// vertical) of squared depth differences. Pairs with an invalid member
/// (acc_alpha below the render threshold) are excluded.
double loss_tv(const FrameBuffer& fb, double weight, FrameBufferGrad& grad,
               double min_acc_alpha = 1e-4);

struct RegLoss {
  double scale = 0.0;    // mean |s| over all scale components (2 planar, 3 freeform)
  double opacity = 0.0;  // mean opacity
};

/// Scale and opacity regularizers; accumulates weighted gradients into grads.
RegLoss loss_reg(const Scene& scene, double weight_scale, double weight_opacity,
                 SceneGrads& grads);

}  // namespace flatsplat
