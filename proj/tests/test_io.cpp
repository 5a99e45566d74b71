// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "flatsplat/io.hpp"
#include "support.hpp"

using namespace flatsplat;
using namespace flatsplat::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("flatsplat_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

bool scenes_equal(const Scene& a, const Scene& b) {
  if (a.sh_degree != b.sh_degree || a.planes.size() != b.planes.size() ||
      a.planar.size() != b.planar.size() || a.freeform.size() != b.freeform.size())
    return false;
  for (std::size_t i = 0; i < a.planes.size(); ++i) {
    if (a.planes[i].id != b.planes[i].id) return false;
    if (a.planes[i].origin != b.planes[i].origin) return false;
    if (a.planes[i].normal != b.planes[i].normal) return false;
    if (a.planes[i].source_masks != b.planes[i].source_masks) return false;
  }
  for (std::size_t i = 0; i < a.planar.size(); ++i) {
    const auto& x = a.planar[i];
    const auto& y = b.planar[i];
    if (x.plane_id != y.plane_id || x.mean != y.mean || x.log_scale != y.log_scale ||
        x.theta != y.theta || x.opacity_logit != y.opacity_logit || x.sh != y.sh)
      return false;
  }
  for (std::size_t i = 0; i < a.freeform.size(); ++i) {
    const auto& x = a.freeform[i];
    const auto& y = b.freeform[i];
    if (x.mean != y.mean || x.log_scale != y.log_scale || x.rot != y.rot ||
        x.opacity_logit != y.opacity_logit || x.sh != y.sh)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("scene PLY: empty scene round trip") {
  TempDir dir;
  Scene scene;
  scene.sh_degree = 1;
  save_scene_ply(scene, dir.file("empty.ply"));
  const Scene loaded = load_scene_ply(dir.file("empty.ply"));
  CHECK(loaded.sh_degree == 1);
  CHECK(loaded.total_primitives() == 0);
  CHECK(loaded.planes.empty());
}

TEST_CASE("scene PLY: bit-exact round trip of a large scene") {
  TempDir dir;
  Rng rng(3);
  Scene scene = random_scene(rng, 3, 4000, 6000);
  scene.planes[1].source_masks = {2, 9};
  save_scene_ply(scene, dir.file("scene.ply"));
  const Scene loaded = load_scene_ply(dir.file("scene.ply"));
  CHECK(scenes_equal(scene, loaded));
}

TEST_CASE("scene PLY: truncated file raises a parse error with offset") {
  TempDir dir;
  Rng rng(5);
  Scene scene = random_scene(rng, 1, 5, 5);
  save_scene_ply(scene, dir.file("scene.ply"));

  // chop the payload
  std::ifstream in(dir.file("scene.ply"), std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  std::ofstream out(dir.file("cut.ply"), std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 64));
  out.close();

  CHECK_THROWS_AS(load_scene_ply(dir.file("cut.ply")), ParseError);
}

TEST_CASE("scene PLY: garbage header rejected") {
  TempDir dir;
  std::ofstream out(dir.file("bad.ply"));
  out << "not a ply\n";
  out.close();
  CHECK_THROWS_AS(load_scene_ply(dir.file("bad.ply")), ParseError);
}

TEST_CASE("PFM: bit-exact round trip") {
  TempDir dir;
  Rng rng(7);
  const int w = 17, h = 9;
  std::vector<float> data(w * h);
  for (auto& v : data) v = static_cast<float>(rng.uniform(-5, 5));
  save_pfm(dir.file("d.pfm"), w, h, data);
  int lw = 0, lh = 0;
  const auto loaded = load_pfm(dir.file("d.pfm"), lw, lh);
  CHECK(lw == w);
  CHECK(lh == h);
  CHECK(std::memcmp(loaded.data(), data.data(), data.size() * sizeof(float)) == 0);
}

TEST_CASE("PNG: quantized rgb round trip and exact mask round trip") {
  TempDir dir;
  Rng rng(9);
  const int w = 31, h = 14;
  std::vector<double> rgb(3 * w * h);
  for (auto& v : rgb) v = rng.uniform();
  save_png_rgb(dir.file("img.png"), w, h, rgb);
  int lw = 0, lh = 0;
  const auto loaded = load_png_rgb(dir.file("img.png"), lw, lh);
  CHECK(lw == w);
  CHECK(lh == h);
  for (std::size_t i = 0; i < rgb.size(); ++i)
    CHECK(std::abs(loaded[i] - rgb[i]) <= 0.5 / 255.0 + 1e-12);

  // quantized values round-trip exactly
  save_png_rgb(dir.file("img2.png"), w, h, loaded);
  const auto again = load_png_rgb(dir.file("img2.png"), lw, lh);
  CHECK(again == loaded);

  std::vector<double> gray(w * h);
  for (auto& v : gray) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
  save_png_gray(dir.file("mask.png"), w, h, gray);
  const auto mask = load_png_mask(dir.file("mask.png"), lw, lh);
  for (std::size_t i = 0; i < gray.size(); ++i) CHECK(mask[i] == (gray[i] > 0.5 ? 1 : 0));
}

TEST_CASE("OBJ: labeled mesh round trip") {
  TempDir dir;
  LabeledMesh mesh;
  mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}, {0, 1, 4}};
  mesh.triangle_plane = {2, 2, 5};
  save_mesh_obj(mesh, dir.file("m.obj"), dir.file("m_labels.json"));
  const LabeledMesh loaded = load_mesh_obj(dir.file("m.obj"), dir.file("m_labels.json"));
  REQUIRE(loaded.vertices.size() == 5);
  REQUIRE(loaded.triangles.size() == 3);
  for (int i = 0; i < 5; ++i) CHECK((loaded.vertices[i] - mesh.vertices[i]).norm() < 1e-9);
  // groups are emitted per plane id, ascending
  CHECK(loaded.triangle_plane == std::vector<int>{2, 2, 5});
}

TEST_CASE("dataset: directory round trip") {
  TempDir dir;
  Rng rng(11);
  Scene gt = random_scene(rng, 2, 40, 20);
  Camera cam;
  cam.width = cam.height = 24;
  cam.fx = cam.fy = 24;
  cam.cx = cam.cy = 12;

  Dataset ds;
  for (int v = 0; v < 3; ++v) {
    DatasetView view;
    view.camera = cam;
    view.camera.id = v;
    view.split = v == 2 ? "test" : "train";
    view.image.assign(3 * 24 * 24, 0.0);
    for (auto& p : view.image) p = std::lround(rng.uniform() * 255.0) / 255.0;
    view.depth.assign(24 * 24, 0.0f);
    for (auto& d : view.depth) d = static_cast<float>(rng.uniform(0.5, 4.0));
    std::vector<std::uint8_t> mask(24 * 24);
    for (auto& m : mask) m = rng.uniform() < 0.5 ? 1 : 0;
    view.masks[v] = mask;
    ds.views.push_back(view);
  }
  ds.gt_planes.push_back({0, Vec3(1, 2, 3), Vec3(0, 0, 1)});

  save_dataset(ds, gt, dir.path.string());
  const Dataset loaded = load_dataset(dir.path.string());
  REQUIRE(loaded.views.size() == 3);
  CHECK(loaded.train_indices() == std::vector<int>{0, 1});
  CHECK(loaded.test_indices() == std::vector<int>{2});
  for (int v = 0; v < 3; ++v) {
    CHECK(loaded.views[v].image == ds.views[v].image);  // pre-quantized, so exact
    CHECK(std::memcmp(loaded.views[v].depth.data(), ds.views[v].depth.data(),
                      ds.views[v].depth.size() * sizeof(float)) == 0);
    CHECK(loaded.views[v].masks.at(v) == ds.views[v].masks.at(v));
    CHECK((loaded.views[v].camera.rot - ds.views[v].camera.rot).cwiseAbs().maxCoeff() < 1e-12);
  }
  REQUIRE(loaded.gt_planes.size() == 1);
  CHECK((loaded.gt_planes[0].origin - Vec3(1, 2, 3)).norm() < 1e-12);

  const Scene gt_loaded = load_scene_ply((dir.path / "gt_scene.ply").string());
  CHECK(scenes_equal(gt, gt_loaded));
}
