// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "flatsplat/dataset.hpp"
#include "flatsplat/mesh_extract.hpp"

namespace flatsplat {

/// Axis-aligned textured room (z up): floor, optional ceiling, four walls,
/// plus freeform clutter, observed from an interior camera orbit.
struct BoxSceneConfig {
  Vec3 room = Vec3(4.0, 4.0, 2.5);  // extents; the room spans [0, room] per axis
  bool ceiling = false;
  double planar_spacing = 0.08;
  double planar_scale = 0.055;
  double planar_opacity = 0.95;
  double texture_period = 0.15;  // checker size of the procedural face texture
  int clutter_objects = 3;
  int clutter_per_object = 60;
  int train_cameras = 12;
  int test_cameras = 4;
  int image_size = 72;
  double fov_deg = 75.0;
  double orbit_radius = 1.1;
  double camera_height = 1.3;
  double pitch_even = -0.58;  // radians below the horizon, alternating rig
  double pitch_odd = -0.15;
  int sh_degree = 2;
};

struct BoxScene {
  Scene gt_scene;
  Dataset dataset;
};

/// Pure function of (config, seed): ground-truth hybrid scene plus rendered
/// images, depths, and per-plane masks. Images carry 8-bit quantization to
/// match their on-disk PNG form; depths and masks are exact.
BoxScene generate_box_scene(const BoxSceneConfig& cfg, std::uint64_t seed);

/// Analytic ground-truth planar mesh: one rectangle (two triangles) per plane.
LabeledMesh box_gt_mesh(const BoxSceneConfig& cfg);

/// First intersection of a ray with the room's planes (faces), for depth
/// oracles. Returns infinity when the ray escapes (should not happen inside).
double box_ray_depth(const BoxSceneConfig& cfg, const Camera& cam, double px, double py);

BoxSceneConfig box_config_from_json_file(const std::string& path);
void box_config_to_json_file(const BoxSceneConfig& cfg, const std::string& path);

}  // namespace flatsplat
