// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "flatsplat/metrics.hpp"
#include "support.hpp"

using namespace flatsplat;
using namespace flatsplat::testing;

namespace {

LabeledMesh square_mesh(const Vec3& origin, const Vec3& u, const Vec3& v, int plane_id) {
  LabeledMesh mesh;
  mesh.vertices = {origin, origin + u, origin + u + v, origin + v};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  mesh.triangle_plane = {plane_id, plane_id};
  return mesh;
}

}  // namespace

TEST_CASE("psnr: cap, closed form, and oracle") {
  std::vector<double> a(300, 0.5), b(300, 0.5);
  CHECK(psnr(a, b) == 100.0);

  std::fill(b.begin(), b.end(), 0.0);
  CHECK(psnr(a, b) == doctest::Approx(6.0205999).epsilon(1e-6));

  Rng rng(3);
  for (auto& v : a) v = rng.uniform();
  for (auto& v : b) v = rng.uniform();
  double mse = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
  mse /= a.size();
  CHECK(psnr(a, b) == doctest::Approx(10 * std::log10(1 / mse)).epsilon(1e-12));
}

TEST_CASE("ssim: identical images score 1, noise scores lower") {
  Rng rng(5);
  const int w = 32, h = 32;
  std::vector<double> img(3 * w * h);
  for (auto& v : img) v = rng.uniform();
  CHECK(ssim(img, img, w, h) == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<double> noisy = img;
  for (auto& v : noisy) v = std::clamp(v + rng.normal(0, 0.1), 0.0, 1.0);
  const double s = ssim(img, noisy, w, h);
  CHECK(s < 0.99);
  CHECK(s > 0.0);
}

TEST_CASE("depth_metrics: closed forms and brute-force oracle") {
  std::vector<double> gt(100), pred(100);
  std::vector<std::uint8_t> valid(100, 1);
  Rng rng(7);
  for (auto& v : gt) v = rng.uniform(1.0, 4.0);

  pred = gt;
  DepthMetrics m = depth_metrics(pred, gt, valid);
  CHECK(m.rmse == 0.0);
  CHECK(m.mae == 0.0);
  CHECK(m.absrel == 0.0);
  CHECK(m.delta1 == 1.0);
  CHECK(m.delta3 == 1.0);

  for (std::size_t i = 0; i < gt.size(); ++i) pred[i] = 1.3 * gt[i];
  m = depth_metrics(pred, gt, valid);
  CHECK(m.delta1 == 0.0);
  CHECK(m.delta2 == 1.0);
  CHECK(m.absrel == doctest::Approx(0.3).epsilon(1e-12));

  // mixed fixture with partial validity against a direct oracle
  for (std::size_t i = 0; i < gt.size(); ++i) pred[i] = gt[i] + rng.normal(0, 0.3);
  for (auto& v : valid) v = rng.uniform() < 0.7 ? 1 : 0;
  m = depth_metrics(pred, gt, valid);
  double se = 0, ae = 0, rel = 0, d1 = 0, n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!valid[i]) continue;
    ++n;
    se += (pred[i] - gt[i]) * (pred[i] - gt[i]);
    ae += std::abs(pred[i] - gt[i]);
    rel += std::abs(pred[i] - gt[i]) / gt[i];
    d1 += std::max(pred[i] / gt[i], gt[i] / pred[i]) < 1.25 ? 1 : 0;
  }
  CHECK(m.rmse == doctest::Approx(std::sqrt(se / n)).epsilon(1e-12));
  CHECK(m.mae == doctest::Approx(ae / n).epsilon(1e-12));
  CHECK(m.absrel == doctest::Approx(rel / n).epsilon(1e-12));
  CHECK(m.delta1 == doctest::Approx(d1 / n).epsilon(1e-12));

  std::fill(valid.begin(), valid.end(), 0);
  CHECK_THROWS_AS(depth_metrics(pred, gt, valid), UndefinedMetricError);
}

TEST_CASE("mesh_distance_metrics: identical meshes are exact") {
  const LabeledMesh mesh = square_mesh(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), 0);
  const MeshDistanceMetrics m = mesh_distance_metrics(mesh, mesh, 0.05, 5000, 9);
  CHECK(m.accuracy == 0.0);
  CHECK(m.completeness == 0.0);
  CHECK(m.f1 == 1.0);
}

TEST_CASE("mesh_distance_metrics: parallel planes at exactly tau") {
  const double tau = 0.05;
  const LabeledMesh a = square_mesh(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), 0);
  const LabeledMesh b = square_mesh(Vec3(0, 0, tau), Vec3(1, 0, 0), Vec3(0, 1, 0), 0);
  const MeshDistanceMetrics m = mesh_distance_metrics(a, b, tau, 10000, 11);
  // every nearest-sample distance equals the plane gap
  CHECK(m.accuracy == doctest::Approx(tau).epsilon(1e-9));
  CHECK(m.completeness == doctest::Approx(tau).epsilon(1e-9));
  // the threshold is strict: just below the gap nothing passes, just above
  // everything does
  const MeshDistanceMetrics below = mesh_distance_metrics(a, b, tau * 0.999, 10000, 11);
  CHECK(below.precision == 0.0);
  CHECK(below.recall == 0.0);
  const MeshDistanceMetrics above = mesh_distance_metrics(a, b, tau * 1.001, 10000, 11);
  CHECK(above.precision == 1.0);
  CHECK(above.recall == 1.0);
}

TEST_CASE("mesh_distance_metrics: half-area recall and chamfer symmetry") {
  const LabeledMesh full = square_mesh(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), 0);
  const LabeledMesh half = square_mesh(Vec3(0, 0, 0), Vec3(0.5, 0, 0), Vec3(0, 1, 0), 0);
  // tight threshold so the strip of near-boundary points stays negligible
  const MeshDistanceMetrics m = mesh_distance_metrics(half, full, 0.01, 10000, 13);
  CHECK(std::abs(m.recall - 0.5) < 0.05);
  // nearest-sample spacing at 1e4 points is ~5e-3, so most but not all pred
  // samples find a gt sample within the tight threshold
  CHECK(m.precision > 0.9);

  const MeshDistanceMetrics swapped = mesh_distance_metrics(full, half, 0.01, 10000, 13);
  CHECK(swapped.chamfer == doctest::Approx(m.chamfer).epsilon(1e-9));
  CHECK(swapped.accuracy == doctest::Approx(m.completeness).epsilon(1e-9));

  CHECK_THROWS_AS(mesh_distance_metrics(LabeledMesh{}, full, 0.05, 100, 1),
                  UndefinedMetricError);
}

TEST_CASE("segmentation_metrics: identity, merge oracle, and edge cases") {
  std::vector<int> labels = {0, 0, 1, 1, 2, 2, 2};
  SegmentationMetrics m = segmentation_metrics(labels, labels);
  CHECK(m.voi == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.ri == 1.0);
  CHECK(m.sc == doctest::Approx(1.0).epsilon(1e-12));

  // two equal clusters vs one merged cluster: exhaustive pair enumeration
  std::vector<int> split = {0, 0, 0, 1, 1, 1};
  std::vector<int> merged(6, 7);
  m = segmentation_metrics(merged, split);
  double agree = 0, total = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    for (std::size_t j = i + 1; j < split.size(); ++j) {
      ++total;
      const bool same_a = merged[i] == merged[j];
      const bool same_b = split[i] == split[j];
      agree += same_a == same_b ? 1 : 0;
    }
  }
  CHECK(m.ri == doctest::Approx(agree / total).epsilon(1e-12));

  // VOI symmetry
  Rng rng(17);
  std::vector<int> a(50), b(50);
  for (auto& v : a) v = static_cast<int>(rng.uniform_int(0, 3));
  for (auto& v : b) v = static_cast<int>(rng.uniform_int(0, 2));
  CHECK(segmentation_metrics(a, b).voi ==
        doctest::Approx(segmentation_metrics(b, a).voi).epsilon(1e-12));
  CHECK(segmentation_metrics(a, b).ri >= 0.0);
  CHECK(segmentation_metrics(a, b).ri <= 1.0);
  CHECK(segmentation_metrics(a, b).sc >= 0.0);
  CHECK(segmentation_metrics(a, b).sc <= 1.0);

  // single point: no pairs, RI defined as 1
  CHECK(segmentation_metrics({3}, {5}).ri == 1.0);

  CHECK_THROWS_AS(segmentation_metrics({}, {}), std::invalid_argument);
}
