// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "flatsplat/scene.hpp"

namespace flatsplat {

struct RenderOptions {
  double near_plane = 0.2;  // the affine EWA footprint degenerates near z = 0
  int tile_size = 16;
  double dilation = 0.3;            // px^2 added to both screen-covariance diagonals
  double cutoff_sq = 9.0;           // squared Mahalanobis footprint truncation (3 sigma)
  double min_transmittance = 1e-4;  // front-to-back early termination
  double min_acc_alpha = 1e-4;      // depth validity threshold
  Vec3 background = Vec3::Zero();
  double background_depth = 0.0;
};

struct ProjectedGaussian {
  Vec2 mean_px = Vec2::Zero();
  Mat2 cov_px = Mat2::Zero();  // includes dilation
  Mat2 conic = Mat2::Zero();
  double depth = 0.0;          // camera-space z of the primitive center
  Vec3 color = Vec3::Zero();   // SH evaluated for this view
  double alpha = 0.0;
  double radius_px = 0.0;      // conservative 3-sigma pixel radius
  int index = -1;              // global primitive index: planar block first, then freeform
  int plane_slot = -1;         // index into scene.planes, -1 for freeform
};

struct FrameBuffer {
  int width = 0, height = 0;
  int num_planes = 0;
  std::vector<double> rgb;          // 3 * W * H, interleaved
  std::vector<double> depth;        // W * H
  std::vector<double> acc_alpha;    // W * H
  std::vector<double> plane_masks;  // num_planes * W * H, one slice per scene plane slot

  double& at_rgb(int x, int y, int c) { return rgb[3 * (y * width + x) + c]; }
  double at_rgb(int x, int y, int c) const { return rgb[3 * (y * width + x) + c]; }
  double at_depth(int x, int y) const { return depth[y * width + x]; }
  double at_acc(int x, int y) const { return acc_alpha[y * width + x]; }
  double at_mask(int slot, int x, int y) const {
    return plane_masks[static_cast<std::size_t>(slot) * width * height + y * width + x];
  }
};

/// Upstream loss gradients with respect to a FrameBuffer. Empty vectors mean
/// zero gradient for that channel.
struct FrameBufferGrad {
  std::vector<double> rgb;          // 3 * W * H
  std::vector<double> depth;        // W * H
  std::vector<double> plane_masks;  // num_planes * W * H
};

struct Gaussian2DGrad {
  Vec2 mean = Vec2::Zero();
  Vec2 log_scale = Vec2::Zero();
  double theta = 0.0;
  double opacity_logit = 0.0;
  VecX sh;
};

struct Gaussian3DGrad {
  Vec3 mean = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Vec4 rot = Vec4::Zero();
  double opacity_logit = 0.0;
  VecX sh;
};

struct PlaneGrad {
  Vec3 origin = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
};

struct SceneGrads {
  std::vector<Gaussian2DGrad> planar;
  std::vector<Gaussian3DGrad> freeform;
  std::vector<PlaneGrad> planes;

  static SceneGrads zeros_like(const Scene& scene);
  SceneGrads& operator+=(const SceneGrads& other);
  SceneGrads& operator*=(double s);
};

/// EWA perspective projection of one world-space Gaussian; nullopt when culled
/// (behind the near plane or more than 3 sigma outside the frame).
std::optional<ProjectedGaussian> project(const Camera& camera, const Gaussian3D& g,
                                         const RenderOptions& opts = {});

/// Projects every primitive (planar Gaussians lifted through their plane),
/// evaluates view-dependent color, culls, and returns the survivors sorted
/// front-to-back by depth with ties broken by primitive index.
std::vector<ProjectedGaussian> project_scene(const Scene& scene, const Camera& camera,
                                             const RenderOptions& opts = {});

/// Tile-parallel forward rasterization.
FrameBuffer render(const Scene& scene, const Camera& camera, const RenderOptions& opts = {});

/// Single-threaded per-pixel reference compositor. Walks every projected
/// Gaussian at every pixel, no tiling; kept as the oracle the tiled kernel is
/// tested against (bit-identical output required).
FrameBuffer render_reference(const Scene& scene, const Camera& camera,
                             const RenderOptions& opts = {});

/// Analytic backward pass for every optimized parameter, including plane
/// origin/normal via the rigid chain through the plane frame. Requires the
/// forward FrameBuffer for shape checking; gradient accumulation order is
/// fixed (per-tile buffers reduced in tile order) so results do not depend on
/// the thread count.
SceneGrads render_backward(const Scene& scene, const Camera& camera, const FrameBuffer& fwd,
                           const FrameBufferGrad& grad, const RenderOptions& opts = {});

}  // namespace flatsplat
