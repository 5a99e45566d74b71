// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "flatsplat/render.hpp"
#include "flatsplat/synth.hpp"
#include "support.hpp"

using namespace flatsplat;

namespace {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* bytes = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t dataset_hash(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& view : ds.views) {
    h = fnv1a(view.image.data(), view.image.size() * sizeof(double), h);
    h = fnv1a(view.depth.data(), view.depth.size() * sizeof(float), h);
    for (const auto& [id, mask] : view.masks) h = fnv1a(mask.data(), mask.size(), h);
  }
  return h;
}

BoxSceneConfig small_config() {
  BoxSceneConfig cfg;
  cfg.image_size = 48;
  cfg.train_cameras = 4;
  cfg.test_cameras = 2;
  cfg.planar_spacing = 0.16;
  cfg.planar_scale = 0.11;
  cfg.clutter_objects = 1;
  cfg.clutter_per_object = 30;
  return cfg;
}

}  // namespace

TEST_CASE("generate_box_scene: deterministic for a fixed seed") {
  const BoxSceneConfig cfg = small_config();
  const BoxScene a = generate_box_scene(cfg, 7);
  const BoxScene b = generate_box_scene(cfg, 7);
  CHECK(dataset_hash(a.dataset) == dataset_hash(b.dataset));
  CHECK(a.gt_scene.total_primitives() == b.gt_scene.total_primitives());

  const BoxScene c = generate_box_scene(cfg, 8);
  CHECK(dataset_hash(a.dataset) != dataset_hash(c.dataset));
}

TEST_CASE("generate_box_scene: structure of the ground truth") {
  const BoxSceneConfig cfg = small_config();
  const BoxScene box = generate_box_scene(cfg, 7);
  CHECK(box.gt_scene.planes.size() == 5);  // floor + 4 walls, no ceiling
  CHECK(box.dataset.gt_planes.size() == 5);
  CHECK(box.dataset.views.size() == 6);
  CHECK(box.dataset.train_indices().size() == 4);
  CHECK(box.dataset.test_indices().size() == 2);
  CHECK(!box.gt_scene.planar.empty());
  CHECK(box.gt_scene.freeform.size() == 30);

  // every mask pixel true implies finite positive gt depth there
  for (const auto& view : box.dataset.views) {
    for (const auto& [id, mask] : view.masks) {
      for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        CHECK(view.depth[i] > 0.0f);
        CHECK(std::isfinite(view.depth[i]));
      }
    }
  }

  CHECK_THROWS_AS(
      [] {
        BoxSceneConfig bad = small_config();
        bad.train_cameras = 0;
        bad.test_cameras = 0;
        generate_box_scene(bad, 1);
      }(),
      std::invalid_argument);
}

TEST_CASE("generate_box_scene: without clutter, opaque pixels belong to plane masks") {
  BoxSceneConfig cfg = small_config();
  cfg.clutter_objects = 0;
  const BoxScene box = generate_box_scene(cfg, 7);

  std::size_t opaque = 0, covered = 0;
  for (const auto& view : box.dataset.views) {
    const FrameBuffer fb = render(box.gt_scene, view.camera);
    for (std::size_t i = 0; i < fb.acc_alpha.size(); ++i) {
      if (fb.acc_alpha[i] <= 0.9) continue;
      ++opaque;
      for (const auto& [id, mask] : view.masks)
        if (mask[i]) {
          ++covered;
          break;
        }
    }
  }
  CHECK(opaque > 1000);
  // plane-boundary pixels can split their weight 50/50 between two planes
  CHECK(covered >= opaque * 98 / 100);
}

TEST_CASE("generate_box_scene: gt depth matches the analytic ray-box oracle") {
  // Nadir rig: the center ray meets the floor at normal incidence, where the
  // expected-ray-termination depth of a splat surface is unbiased. At oblique
  // incidence front-to-back compositing skews the mean by O(scale * tan).
  BoxSceneConfig cfg = small_config();
  cfg.clutter_objects = 0;
  cfg.pitch_even = cfg.pitch_odd = -M_PI / 2;
  const BoxScene box = generate_box_scene(cfg, 11);

  int checked = 0;
  for (const auto& view : box.dataset.views) {
    const int cx = cfg.image_size / 2, cy = cfg.image_size / 2;
    const FrameBuffer fb = render(box.gt_scene, view.camera);
    if (fb.at_acc(cx, cy) < 0.5) continue;
    const double analytic = box_ray_depth(cfg, view.camera, cx + 0.5, cy + 0.5);
    CHECK(std::abs(view.depth[cy * cfg.image_size + cx] - analytic) < 2e-3);
    ++checked;
  }
  CHECK(checked >= 4);
}

TEST_CASE("box_gt_mesh: rectangles with conserved area") {
  const BoxSceneConfig cfg = small_config();
  const LabeledMesh mesh = box_gt_mesh(cfg);
  CHECK(mesh.triangles.size() == 10);  // 5 faces, 2 triangles each
  const double expect = cfg.room.x() * cfg.room.y() +
                        2 * cfg.room.x() * cfg.room.z() + 2 * cfg.room.y() * cfg.room.z();
  CHECK(mesh.area() == doctest::Approx(expect).epsilon(1e-12));
}
