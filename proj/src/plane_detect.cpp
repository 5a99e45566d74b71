// SPDX-License-Identifier: Apache-2.0
#include "flatsplat/plane_detect.hpp"

#include <algorithm>
#include <array>

namespace flatsplat {

std::vector<int> select_candidates(const Scene& scene, const Camera& camera,
                                   const std::vector<std::uint8_t>& mask,
                                   const std::vector<double>& depth,
                                   const PlaneInitConfig& cfg) {
  const std::size_t npix = static_cast<std::size_t>(camera.width) * camera.height;
  if (mask.size() != npix || depth.size() != npix)
    throw std::invalid_argument("select_candidates: resolution mismatch");

  std::vector<int> out;
  for (int k = 0; k < static_cast<int>(scene.freeform.size()); ++k) {
    const Gaussian3D& g = scene.freeform[k];
    if (g.opacity() <= cfg.alpha_th) continue;
    const Vec3 t = camera.to_camera(g.mean);
    if (t.z() <= 0) continue;
    const int px = static_cast<int>(std::floor(camera.fx * t.x() / t.z() + camera.cx));
    const int py = static_cast<int>(std::floor(camera.fy * t.y() / t.z() + camera.cy));
    if (px < 0 || px >= camera.width || py < 0 || py >= camera.height) continue;
    const std::size_t pix = static_cast<std::size_t>(py) * camera.width + px;
    if (!mask[pix]) continue;
    if (std::abs(depth[pix] - t.z()) >= cfg.d_th) continue;
    out.push_back(k);
  }
  return out;
}

std::optional<RansacResult> ransac_plane(const std::vector<Vec3>& points,
                                         const PlaneInitConfig& cfg, Rng& rng,
                                         const Vec3* camera_center) {
  const int n = static_cast<int>(points.size());
  if (n < 3) return std::nullopt;

  // Hypothesis triples are drawn serially so the random stream does not
  // depend on the thread count; scoring parallelizes.
  std::vector<std::array<int, 3>> triples(cfg.ransac_iters);
  for (auto& t : triples) {
    t[0] = static_cast<int>(rng.uniform_int(0, n - 1));
    do {
      t[1] = static_cast<int>(rng.uniform_int(0, n - 1));
    } while (t[1] == t[0]);
    do {
      t[2] = static_cast<int>(rng.uniform_int(0, n - 1));
    } while (t[2] == t[0] || t[2] == t[1]);
  }

  std::vector<int> counts(cfg.ransac_iters, -1);
#pragma omp parallel for schedule(static)
  for (int h = 0; h < cfg.ransac_iters; ++h) {
    const Vec3& a = points[triples[h][0]];
    Vec3 normal = (points[triples[h][1]] - a).cross(points[triples[h][2]] - a);
    const double len = normal.norm();
    if (len < 1e-12) continue;
    normal /= len;
    int count = 0;
    for (const Vec3& p : points)
      if (std::abs(normal.dot(p - a)) < cfg.eps) ++count;
    counts[h] = count;
  }
  int best = -1;
  for (int h = 0; h < cfg.ransac_iters; ++h)
    if (best < 0 || counts[h] > counts[best]) best = h;
  if (best < 0 || counts[best] < 3) return std::nullopt;

  const Vec3& a = points[triples[best][0]];
  Vec3 normal = (points[triples[best][1]] - a).cross(points[triples[best][2]] - a).normalized();

  auto collect = [&](const Vec3& nrm, const Vec3& anchor) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (std::abs(nrm.dot(points[i] - anchor)) < cfg.eps) idx.push_back(i);
    return idx;
  };
  auto refit = [&](const std::vector<int>& idx) {
    Vec3 centroid = Vec3::Zero();
    for (int i : idx) centroid += points[i];
    centroid /= static_cast<double>(idx.size());
    Mat3 scatter = Mat3::Zero();
    for (int i : idx) {
      const Vec3 d = points[i] - centroid;
      scatter += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
    return std::make_pair(centroid, Vec3(eig.eigenvectors().col(0)));
  };

  std::vector<int> inliers = collect(normal, a);
  auto [centroid, fit_normal] = refit(inliers);
  inliers = collect(fit_normal, centroid);
  if (static_cast<int>(inliers.size()) < 3) return std::nullopt;
  std::tie(centroid, fit_normal) = refit(inliers);

  double mean_res = 0.0;
  for (int i : inliers) mean_res += std::abs(fit_normal.dot(points[i] - centroid));
  mean_res /= static_cast<double>(inliers.size());

  if (mean_res >= cfg.eps || static_cast<int>(inliers.size()) < cfg.min_inliers)
    return std::nullopt;

  if (camera_center != nullptr && fit_normal.dot(*camera_center - centroid) < 0)
    fit_normal = -fit_normal;

  RansacResult out;
  out.plane = Plane::make(-1, fit_normal, centroid);
  out.inliers = std::move(inliers);
  out.mean_residual = mean_res;
  return out;
}

Scene snap(const Scene& scene, const std::vector<int>& inlier_freeform, int plane_id) {
  Scene out = scene;
  const Plane& plane = out.plane_by_id(plane_id);

  std::vector<int> sorted = inlier_freeform;
  std::sort(sorted.begin(), sorted.end());
  for (int idx : sorted)
    if (idx < 0 || idx >= static_cast<int>(scene.freeform.size()))
      throw std::out_of_range("snap: freeform index out of range");

  for (int idx : sorted) {
    const Gaussian3D& g = scene.freeform[idx];
    const LocalGaussian local = world_to_plane(g, plane);
    Gaussian2D flat;
    flat.plane_id = plane_id;
    flat.mean = local.mean.head<2>();
    flat.log_scale = Vec2(std::log(local.scale.x()), std::log(local.scale.y()));
    flat.theta = in_plane_angle(local.rot);
    flat.opacity_logit = g.opacity_logit;
    flat.sh = g.sh;
    flat.uid = out.fresh_uid();
    out.planar.push_back(flat);
  }
  for (auto it = sorted.rbegin(); it != sorted.rend(); ++it)
    out.freeform.erase(out.freeform.begin() + *it);
  return out;
}

ActiveSetUpdate update_active_set(Scene& scene, const Plane& candidate,
                                  const PlaneInitConfig& cfg) {
  for (const Plane& existing : scene.planes) {
    const double cosang = std::clamp(existing.normal.dot(candidate.normal), -1.0, 1.0);
    if (std::acos(cosang) >= cfg.merge_angle) continue;
    double nearest = std::numeric_limits<double>::infinity();
    for (const Gaussian2D& g : scene.planar) {
      if (g.plane_id != existing.id) continue;
      const Vec3 center = existing.to_world(Vec3(g.mean.x(), g.mean.y(), 0.0));
      nearest = std::min(nearest, (center - candidate.origin).norm());
    }
    if (nearest < cfg.merge_dist) return {existing.id, true};
  }
  Plane added = candidate;
  added.id = scene.next_plane_id();
  scene.planes.push_back(added);
  return {added.id, false};
}

Scene plane_init_round(Scene scene, const Dataset& dataset, MaskRegistry& registry,
                       const PlaneInitConfig& cfg, Rng& rng, const RenderOptions& render_opts,
                       std::vector<PlaneEvent>* events) {
  const std::vector<int> train = dataset.train_indices();

  // Per-view depth cache; invalidated whenever a snap changes the scene.
  std::map<int, std::vector<double>> depth_cache;

  for (int mask_id : dataset.train_mask_ids()) {
    if (registry.consumed(mask_id)) continue;
    for (int view : train) {
      const DatasetView& dv = dataset.views[view];
      auto mask_it = dv.masks.find(mask_id);
      if (mask_it == dv.masks.end()) continue;

      auto cached = depth_cache.find(view);
      if (cached == depth_cache.end())
        cached = depth_cache.emplace(view, render(scene, dv.camera, render_opts).depth).first;

      const std::vector<int> candidates =
          select_candidates(scene, dv.camera, mask_it->second, cached->second, cfg);
      if (static_cast<int>(candidates.size()) < cfg.min_inliers) continue;

      // one sample per candidate Gaussian, x ~ N(mean, covariance)
      std::vector<Vec3> points;
      points.reserve(candidates.size());
      for (int k : candidates) {
        const Gaussian3D& g = scene.freeform[k];
        const Mat3 rot = quat_to_matrix(g.rot);
        const Vec3 s = g.scale();
        const Vec3 eta(rng.normal(), rng.normal(), rng.normal());
        points.push_back(g.mean + rot * s.cwiseProduct(eta));
      }

      const Vec3 cam_center = dv.camera.center();
      auto result = ransac_plane(points, cfg, rng, &cam_center);
      if (!result) continue;

      std::vector<int> inlier_freeform;
      inlier_freeform.reserve(result->inliers.size());
      for (int i : result->inliers) inlier_freeform.push_back(candidates[i]);

      const ActiveSetUpdate update = update_active_set(scene, result->plane, cfg);
      scene.plane_by_id(update.plane_id).source_masks.push_back(mask_id);
      scene = snap(scene, inlier_freeform, update.plane_id);
      registry.assigned[mask_id] = update.plane_id;
      depth_cache.clear();
      if (events != nullptr)
        events->push_back({mask_id, view, update.plane_id,
                           static_cast<int>(inlier_freeform.size()), update.merged});
      break;  // every mask of this id is now consumed
    }
  }
  return scene;
}

}  // namespace flatsplat
