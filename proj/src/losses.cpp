// SPDX-License-Identifier: Apache-2.0
#include "flatsplat/losses.hpp"

namespace flatsplat {

namespace {
inline double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }
}

double loss_photo(const FrameBuffer& fb, const std::vector<double>& target_rgb, double weight,
                  FrameBufferGrad& grad) {
  if (target_rgb.size() != fb.rgb.size())
    throw std::invalid_argument("loss_photo: shape mismatch");
  if (grad.rgb.size() != fb.rgb.size()) grad.rgb.assign(fb.rgb.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(fb.rgb.size());
  double total = 0.0;
  for (std::size_t i = 0; i < fb.rgb.size(); ++i) {
    const double d = fb.rgb[i] - target_rgb[i];
    total += std::abs(d);
    grad.rgb[i] += weight * sign(d) * inv_n;
  }
  return total * inv_n;
}

double loss_mask(const FrameBuffer& fb, int plane_slot, const std::vector<std::uint8_t>& target,
                 double weight, FrameBufferGrad& grad) {
  const std::size_t npix = fb.depth.size();
  if (target.size() != npix) throw std::invalid_argument("loss_mask: shape mismatch");
  if (plane_slot < 0 || plane_slot >= fb.num_planes)
    throw std::invalid_argument("loss_mask: bad plane slot");
  if (grad.plane_masks.size() != fb.plane_masks.size())
    grad.plane_masks.assign(fb.plane_masks.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(npix);
  const std::size_t base = static_cast<std::size_t>(plane_slot) * npix;
  double total = 0.0;
  for (std::size_t i = 0; i < npix; ++i) {
    const double d = fb.plane_masks[base + i] - static_cast<double>(target[i]);
    total += std::abs(d);
    grad.plane_masks[base + i] += weight * sign(d) * inv_n;
  }
  return total * inv_n;
}

double loss_tv(const FrameBuffer& fb, double weight, FrameBufferGrad& grad,
               double min_acc_alpha) {
  const int w = fb.width, h = fb.height;
  if (grad.depth.size() != fb.depth.size()) grad.depth.assign(fb.depth.size(), 0.0);

  auto valid = [&](int x, int y) { return fb.acc_alpha[y * w + x] > min_acc_alpha; };

  // two passes: count valid pairs first so the mean normalization is exact
  std::size_t pairs = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w && valid(x, y) && valid(x + 1, y)) ++pairs;
      if (y + 1 < h && valid(x, y) && valid(x, y + 1)) ++pairs;
    }
  if (pairs == 0) return 0.0;

  const double inv_n = 1.0 / static_cast<double>(pairs);
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w && valid(x, y) && valid(x + 1, y)) {
        const double d = fb.depth[y * w + x + 1] - fb.depth[y * w + x];
        total += d * d;
        grad.depth[y * w + x + 1] += weight * 2.0 * d * inv_n;
        grad.depth[y * w + x] -= weight * 2.0 * d * inv_n;
      }
      if (y + 1 < h && valid(x, y) && valid(x, y + 1)) {
        const double d = fb.depth[(y + 1) * w + x] - fb.depth[y * w + x];
        total += d * d;
        grad.depth[(y + 1) * w + x] += weight * 2.0 * d * inv_n;
        grad.depth[y * w + x] -= weight * 2.0 * d * inv_n;
      }
    }
  }
  return total * inv_n;
}

RegLoss loss_reg(const Scene& scene, double weight_scale, double weight_opacity,
                 SceneGrads& grads) {
  RegLoss out;
  const std::size_t n_prims = scene.total_primitives();
  const std::size_t n_scales = 2 * scene.planar.size() + 3 * scene.freeform.size();
  if (n_prims == 0 || n_scales == 0) return out;
  const double inv_s = 1.0 / static_cast<double>(n_scales);
  const double inv_p = 1.0 / static_cast<double>(n_prims);

  for (std::size_t i = 0; i < scene.planar.size(); ++i) {
    const auto& g = scene.planar[i];
    const Vec2 s = g.scale();
    out.scale += (s.x() + s.y()) * inv_s;
    grads.planar[i].log_scale += weight_scale * inv_s * s;
    const double a = g.opacity();
    out.opacity += a * inv_p;
    grads.planar[i].opacity_logit += weight_opacity * inv_p * a * (1.0 - a);
  }
  for (std::size_t i = 0; i < scene.freeform.size(); ++i) {
    const auto& g = scene.freeform[i];
    const Vec3 s = g.scale();
    out.scale += s.sum() * inv_s;
    grads.freeform[i].log_scale += weight_scale * inv_s * s;
    const double a = g.opacity();
    out.opacity += a * inv_p;
    grads.freeform[i].opacity_logit += weight_opacity * inv_p * a * (1.0 - a);
  }
  return out;
}

}  // namespace flatsplat
