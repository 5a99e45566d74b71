// SPDX-License-Identifier: Apache-2.0
//
// Benchmark of the tile-parallel rasterizer against the serial per-pixel
// reference, on a synthetic room scene. Also verifies bit-identical output.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstring>

#include "flatsplat/render.hpp"
#include "flatsplat/synth.hpp"

using namespace flatsplat;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
  int image_size = 128;
  int reps = 5;
  if (argc > 1) image_size = std::atoi(argv[1]);
  if (argc > 2) reps = std::atoi(argv[2]);

  BoxSceneConfig cfg;
  cfg.image_size = image_size;
  cfg.train_cameras = 1;
  cfg.test_cameras = 0;
  const BoxScene box = generate_box_scene(cfg, 7);
  const Camera& cam = box.dataset.views[0].camera;
  const Scene& scene = box.gt_scene;

  std::printf("scene: %zu primitives (%zu planar, %zu freeform), image %dx%d, %d threads\n",
              scene.total_primitives(), scene.planar.size(), scene.freeform.size(), image_size,
              image_size, omp_get_max_threads());

  FrameBuffer tiled, reference;
  const double t_tiled = time_ms([&] { tiled = render(scene, cam); }, reps);
  const double t_ref = time_ms([&] { reference = render_reference(scene, cam); }, reps);

  const bool identical =
      std::memcmp(tiled.rgb.data(), reference.rgb.data(), tiled.rgb.size() * sizeof(double)) ==
          0 &&
      std::memcmp(tiled.depth.data(), reference.depth.data(),
                  tiled.depth.size() * sizeof(double)) == 0;

  FrameBufferGrad grad;
  grad.rgb.assign(tiled.rgb.size(), 1.0 / tiled.rgb.size());
  const double t_bwd =
      time_ms([&] { (void)render_backward(scene, cam, tiled, grad); }, std::max(1, reps / 2));

  std::printf("tiled forward     : %9.2f ms\n", t_tiled);
  std::printf("reference forward : %9.2f ms  (%.2fx)\n", t_ref, t_ref / t_tiled);
  std::printf("tiled backward    : %9.2f ms\n", t_bwd);
  std::printf("bit-identical     : %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
