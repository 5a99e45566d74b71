// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstring>

#include "flatsplat/render.hpp"
#include "flatsplat/sh.hpp"
#include "support.hpp"

using namespace flatsplat;
using namespace flatsplat::testing;

namespace {

// Canonical camera at the origin looking along +z. Odd resolution so the
// principal point lands exactly on a pixel center.
Camera canonical_camera(int size = 63, double focal = 60) {
  Camera cam;
  cam.width = cam.height = size;
  cam.fx = cam.fy = focal;
  cam.cx = cam.cy = size / 2.0;
  return cam;
}

Gaussian3D flat_gaussian(const Vec3& pos, double scale, double opacity, const Vec3& color) {
  Gaussian3D g;
  g.mean = pos;
  g.log_scale = Vec3::Constant(std::log(scale));
  g.opacity_logit = logit(opacity);
  g.sh = flat_sh(color, 2);
  return g;
}

}  // namespace

TEST_CASE("project: screen covariance matches the hand Jacobian") {
  Camera cam = canonical_camera(63, 100);
  Gaussian3D g = flat_gaussian(Vec3(0, 0, 2), 0.1, 0.5, Vec3(0.5, 0.5, 0.5));
  auto pg = project(cam, g);
  REQUIRE(pg.has_value());
  // J = diag(fx/z, fy/z), cov = J sigma J^T + dilation = (100*0.1/2)^2 + 0.3
  const double expected = 25.0 + 0.3;
  CHECK(pg->cov_px(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(pg->cov_px(1, 1) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(pg->cov_px(0, 1)) < 1e-12);
  CHECK(pg->depth == doctest::Approx(2.0));
  CHECK((pg->mean_px - Vec2(31.5, 31.5)).norm() < 1e-12);
}

TEST_CASE("project: behind the camera is culled") {
  Camera cam = canonical_camera();
  CHECK(!project(cam, flat_gaussian(Vec3(0, 0, -2), 0.1, 0.5, Vec3(0.5, 0.5, 0.5))));
}

TEST_CASE("project: far outside the frame is culled") {
  Camera cam = canonical_camera();
  CHECK(!project(cam, flat_gaussian(Vec3(100, 0, 2), 0.01, 0.5, Vec3(0.5, 0.5, 0.5))));
}

TEST_CASE("project: rigid translation invariance") {
  Camera cam = canonical_camera();
  Rng rng(7);
  const Vec3 shift(rng.normal(), rng.normal(), rng.normal());
  Gaussian3D g = random_freeform(rng, 2);
  g.mean = Vec3(0.1, -0.2, 2.5);

  Camera shifted = cam;
  shifted.trans = cam.trans - cam.rot * shift;
  Gaussian3D moved = g;
  moved.mean += shift;

  auto a = project(cam, g);
  auto b = project(shifted, moved);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK((a->mean_px - b->mean_px).norm() < 1e-9);
  CHECK((a->cov_px - b->cov_px).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(a->depth == doctest::Approx(b->depth).epsilon(1e-12));
}

TEST_CASE("render: single near-opaque gaussian at a pixel center") {
  Camera cam = canonical_camera(63, 60);
  Scene scene;
  scene.sh_degree = 2;
  const Vec3 color(0.8, 0.3, 0.6);
  scene.freeform.push_back(flat_gaussian(Vec3(0, 0, 2), 0.2, 0.999, color));

  const FrameBuffer fb = render(scene, cam);
  const int px = 31, py = 31;
  const double w = 0.999;  // kernel is exactly 1 at the center
  for (int c = 0; c < 3; ++c)
    CHECK(fb.at_rgb(px, py, c) == doctest::Approx(w * color[c]).epsilon(1e-9));
  CHECK(fb.at_depth(px, py) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(fb.at_acc(px, py) == doctest::Approx(w).epsilon(1e-9));
}

TEST_CASE("render: empty scene gives background") {
  Camera cam = canonical_camera(20, 20);
  Scene scene;
  RenderOptions opts;
  opts.background = Vec3(0.2, 0.4, 0.6);
  const FrameBuffer fb = render(scene, cam, opts);
  for (int i = 0; i < 20 * 20; ++i) {
    CHECK(fb.acc_alpha[i] == 0.0);
    CHECK(fb.rgb[3 * i + 0] == doctest::Approx(0.2));
    CHECK(fb.rgb[3 * i + 2] == doctest::Approx(0.6));
  }
}

TEST_CASE("render: two overlapping gaussians match the explicit compositing formula") {
  Camera cam = canonical_camera(63, 60);
  Scene scene;
  scene.sh_degree = 2;
  scene.freeform.push_back(flat_gaussian(Vec3(0.02, 0.01, 2), 0.15, 0.6, Vec3(0.9, 0.1, 0.1)));
  scene.freeform.push_back(flat_gaussian(Vec3(-0.02, 0.0, 2.5), 0.2, 0.7, Vec3(0.1, 0.9, 0.2)));

  RenderOptions opts;
  const FrameBuffer fb = render(scene, cam, opts);
  const double tail = std::exp(-0.5 * opts.cutoff_sq);

  // scalar per-pixel oracle evaluating both gaussians without tiling
  auto pg0 = project(cam, scene.freeform[0], opts);
  auto pg1 = project(cam, scene.freeform[1], opts);
  REQUIRE(pg0.has_value());
  REQUIRE(pg1.has_value());
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const int x = static_cast<int>(rng.uniform_int(0, 62));
    const int y = static_cast<int>(rng.uniform_int(0, 62));
    const Vec2 px(x + 0.5, y + 0.5);
    auto weight = [&](const ProjectedGaussian& pg) {
      const Vec2 d = px - pg.mean_px;
      const double q = d.dot(pg.conic * d);
      return q >= opts.cutoff_sq ? 0.0 : pg.alpha * (std::exp(-0.5 * q) - tail) / (1 - tail);
    };
    // front gaussian is the closer one (depth 2)
    const double a0 = weight(*pg0), a1 = weight(*pg1);
    const double w0 = a0, w1 = a1 * (1 - a0);
    const Vec3 c0 = eval_sh(scene.freeform[0].sh, (scene.freeform[0].mean).normalized(), 2);
    const Vec3 c1 = eval_sh(scene.freeform[1].sh, (scene.freeform[1].mean).normalized(), 2);
    for (int c = 0; c < 3; ++c)
      CHECK(fb.at_rgb(x, y, c) == doctest::Approx(w0 * c0[c] + w1 * c1[c]).epsilon(1e-12));
    CHECK(fb.at_acc(x, y) == doctest::Approx(w0 + w1).epsilon(1e-12));
  }
}

TEST_CASE("render: tiled output is bit-identical to the per-pixel reference") {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    Scene scene = random_scene(rng, 2, 10, 20);
    Camera cam = fixture_camera(rng, 64, 64);
    const FrameBuffer tiled = render(scene, cam);
    const FrameBuffer ref = render_reference(scene, cam);
    REQUIRE(tiled.rgb.size() == ref.rgb.size());
    CHECK(std::memcmp(tiled.rgb.data(), ref.rgb.data(), tiled.rgb.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(tiled.depth.data(), ref.depth.data(), tiled.depth.size() * sizeof(double)) ==
          0);
    CHECK(std::memcmp(tiled.acc_alpha.data(), ref.acc_alpha.data(),
                      tiled.acc_alpha.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(tiled.plane_masks.data(), ref.plane_masks.data(),
                      tiled.plane_masks.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("render: acc_alpha is monotone in opacity") {
  Rng rng(55);
  Scene scene = random_scene(rng, 1, 5, 10);
  Camera cam = fixture_camera(rng, 32, 32);
  const FrameBuffer base = render(scene, cam);

  Scene raised = scene;
  for (auto& g : raised.freeform) g.opacity_logit += 0.5;
  for (auto& g : raised.planar) g.opacity_logit += 0.5;
  const FrameBuffer up = render(raised, cam);
  for (std::size_t i = 0; i < base.acc_alpha.size(); ++i)
    CHECK(up.acc_alpha[i] >= base.acc_alpha[i] - 1e-12);
}

TEST_CASE("render: plane masks never exceed acc_alpha") {
  Rng rng(77);
  Scene scene = random_scene(rng, 3, 30, 10);
  Camera cam = fixture_camera(rng, 48, 48);
  const FrameBuffer fb = render(scene, cam);
  const std::size_t npix = fb.depth.size();
  for (int s = 0; s < fb.num_planes; ++s)
    for (std::size_t i = 0; i < npix; ++i)
      CHECK(fb.plane_masks[s * npix + i] <= fb.acc_alpha[i] + 1e-12);
}

TEST_CASE("render: depth of a fronto-parallel plane equals the ray-plane depth") {
  // Plane z = 2 facing the canonical camera, densely covered by planar
  // gaussians so the frame is filled.
  Scene scene;
  scene.sh_degree = 2;
  scene.planes.push_back(Plane::make(0, Vec3(0, 0, -1), Vec3(0, 0, 2)));
  for (int i = -14; i <= 14; ++i) {
    for (int j = -14; j <= 14; ++j) {
      Gaussian2D g;
      g.plane_id = 0;
      g.mean = Vec2(0.1 * i, 0.1 * j);
      g.log_scale = Vec2::Constant(std::log(0.08));
      g.opacity_logit = logit(0.98);
      g.sh = flat_sh(Vec3(0.6, 0.6, 0.6), 2);
      scene.planar.push_back(g);
    }
  }
  Camera cam = canonical_camera(63, 60);
  const FrameBuffer fb = render(scene, cam);
  int checked = 0;
  for (int y = 0; y < 63; ++y) {
    for (int x = 0; x < 63; ++x) {
      if (fb.at_acc(x, y) <= 0.5) continue;
      // all primitive centers share z = 2, and so does the ray-plane hit
      CHECK(std::abs(fb.at_depth(x, y) - 2.0) < 1e-3);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}
