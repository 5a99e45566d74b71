// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>

#include "flatsplat/dataset.hpp"
#include "flatsplat/render.hpp"

namespace flatsplat {

struct PlaneInitConfig {
  double alpha_th = 0.1;    // candidate opacity threshold
  double d_th = 0.05;       // depth-shell threshold, scene units
  double eps = 0.01;        // RANSAC acceptance: mean inlier residual bound
  int ransac_iters = 256;
  int min_inliers = 100;
  double merge_angle = 10.0 * M_PI / 180.0;
  double merge_dist = 0.1;  // scene units
};

/// Indices into scene.freeform of Gaussians whose mean projects into the
/// mask, is opaque enough, and lies within the depth shell of the rendered
/// expected ray termination.
std::vector<int> select_candidates(const Scene& scene, const Camera& camera,
                                   const std::vector<std::uint8_t>& mask,
                                   const std::vector<double>& depth, const PlaneInitConfig& cfg);

struct RansacResult {
  Plane plane;               // id unset (-1); origin = inlier centroid
  std::vector<int> inliers;  // indices into the input point list
  double mean_residual = 0.0;
};

/// Best-of-n 3-point RANSAC with least-squares refit. Returns nullopt when the
/// consensus is too small or the mean inlier residual fails the acceptance
/// rule. The normal is oriented toward the observing camera when given.
std::optional<RansacResult> ransac_plane(const std::vector<Vec3>& points,
                                         const PlaneInitConfig& cfg, Rng& rng,
                                         const Vec3* camera_center = nullptr);

/// Moves the listed freeform Gaussians onto the plane: z components of mean
/// and scale dropped, rotation reduced to its in-plane component. Total
/// primitive count is unchanged.
Scene snap(const Scene& scene, const std::vector<int>& inlier_freeform, int plane_id);

struct ActiveSetUpdate {
  int plane_id;  // id of the plane the inliers should be assigned to
  bool merged;
};

/// Either merges the candidate into a nearby existing plane (angle below
/// merge_angle and origin within merge_dist of that plane's nearest planar
/// Gaussian center) or appends it with a fresh id.
ActiveSetUpdate update_active_set(Scene& scene, const Plane& candidate,
                                  const PlaneInitConfig& cfg);

/// Consumed-mask registry: dataset mask id -> scene plane id.
struct MaskRegistry {
  std::map<int, int> assigned;
  bool consumed(int mask_id) const { return assigned.count(mask_id) > 0; }
};

struct PlaneEvent {
  int mask_id;
  int view;
  int plane_id;
  int inliers;
  bool merged;
};

/// One detection round: iterates unconsumed (mask-id, view) pairs in
/// ascending order, running candidate selection, RANSAC, the active-set
/// update, and snapping. On acceptance every mask of that id is consumed.
Scene plane_init_round(Scene scene, const Dataset& dataset, MaskRegistry& registry,
                       const PlaneInitConfig& cfg, Rng& rng, const RenderOptions& render_opts = {},
                       std::vector<PlaneEvent>* events = nullptr);

}  // namespace flatsplat
