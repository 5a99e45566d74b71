// SPDX-License-Identifier: Apache-2.0
#include "flatsplat/render.hpp"

#include <algorithm>
#include <cmath>

#include "flatsplat/sh.hpp"

namespace flatsplat {

namespace {

// Normalized truncated-Gaussian profile: 1 at the center, continuously 0 at
// the cutoff. Keeping the kernel C0 keeps finite-difference gradient checks
// honest at the footprint boundary.
struct Kernel {
  double tail, inv_one_minus_tail;
  explicit Kernel(double cutoff_sq)
      : tail(std::exp(-0.5 * cutoff_sq)), inv_one_minus_tail(1.0 / (1.0 - tail)) {}
  double eval(double q) const { return (std::exp(-0.5 * q) - tail) * inv_one_minus_tail; }
  double deriv(double q) const { return -0.5 * std::exp(-0.5 * q) * inv_one_minus_tail; }
};

struct CameraBasis {
  Mat3 rot;
  Vec3 trans;
  Vec3 center;
};

// The EWA Jacobian is evaluated at a point clamped into 1.3x the frustum,
// which keeps near-tangent footprints from exploding across the image.
inline void clamped_jacobian_point(const Camera& cam, const Vec3& t, double& tx, double& ty,
                                   bool& clamped_x, bool& clamped_y) {
  const double limx = 1.3 * 0.5 * cam.width / cam.fx;
  const double limy = 1.3 * 0.5 * cam.height / cam.fy;
  const double rx = t.x() / t.z();
  const double ry = t.y() / t.z();
  clamped_x = rx < -limx || rx > limx;
  clamped_y = ry < -limy || ry > limy;
  tx = clamped_x ? std::clamp(rx, -limx, limx) * t.z() : t.x();
  ty = clamped_y ? std::clamp(ry, -limy, limy) * t.z() : t.y();
}

std::optional<ProjectedGaussian> project_impl(const Camera& cam, const Vec3& mean,
                                              const Mat3& cov_world, double alpha,
                                              const RenderOptions& opts) {
  const Vec3 t = cam.rot * mean + cam.trans;
  if (t.z() <= opts.near_plane) return std::nullopt;

  ProjectedGaussian out;
  const double inv_z = 1.0 / t.z();
  out.mean_px = Vec2(cam.fx * t.x() * inv_z + cam.cx, cam.fy * t.y() * inv_z + cam.cy);
  out.depth = t.z();
  out.alpha = alpha;

  double tx, ty;
  bool clamped_x, clamped_y;
  clamped_jacobian_point(cam, t, tx, ty, clamped_x, clamped_y);
  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.fx * inv_z, 0, -cam.fx * tx * inv_z * inv_z,
      0, cam.fy * inv_z, -cam.fy * ty * inv_z * inv_z;
  const Mat3 cov_cam = cam.rot * cov_world * cam.rot.transpose();
  out.cov_px = jac * cov_cam * jac.transpose();
  out.cov_px(0, 0) += opts.dilation;
  out.cov_px(1, 1) += opts.dilation;

  const double det = out.cov_px.determinant();
  const double mid = 0.5 * (out.cov_px(0, 0) + out.cov_px(1, 1));
  const double lambda_max = mid + std::sqrt(std::max(mid * mid - det, 0.0));
  out.radius_px = 3.0 * std::sqrt(lambda_max);

  if (out.mean_px.x() + out.radius_px < 0 || out.mean_px.x() - out.radius_px > cam.width ||
      out.mean_px.y() + out.radius_px < 0 || out.mean_px.y() - out.radius_px > cam.height)
    return std::nullopt;

  out.conic = out.cov_px.inverse();
  return out;
}

Mat3 world_covariance(const Gaussian3D& g) {
  const Mat3 r = quat_to_matrix(g.rot);
  const Vec3 s = g.scale();
  return r * s.array().square().matrix().asDiagonal() * r.transpose();
}

// Shared per-pixel compositor. `list` must be in front-to-back order; entries
// whose footprint misses the pixel contribute no floating-point operations,
// which is what makes the tiled and reference paths bit-identical.
inline void composite_pixel(const ProjectedGaussian* gaussians, const int* list, int count,
                            double px, double py, const RenderOptions& opts, const Kernel& kernel,
                            double* rgb, double& depth, double& acc, double* mask_px,
                            std::size_t mask_stride) {
  double transmittance = 1.0;
  double r = 0, g = 0, b = 0, sum_w = 0, sum_wd = 0;
  for (int i = 0; i < count; ++i) {
    const ProjectedGaussian& pg = gaussians[list[i]];
    const double dx = px - pg.mean_px.x();
    const double dy = py - pg.mean_px.y();
    const double q = pg.conic(0, 0) * dx * dx + 2.0 * pg.conic(0, 1) * dx * dy +
                     pg.conic(1, 1) * dy * dy;
    if (q >= opts.cutoff_sq) continue;
    const double a = pg.alpha * kernel.eval(q);
    const double w = a * transmittance;
    r += w * pg.color.x();
    g += w * pg.color.y();
    b += w * pg.color.z();
    sum_w += w;
    sum_wd += w * pg.depth;
    if (pg.plane_slot >= 0) mask_px[pg.plane_slot * mask_stride] += w;
    transmittance *= 1.0 - a;
    if (transmittance < opts.min_transmittance) break;
  }
  rgb[0] = r + (1.0 - sum_w) * opts.background.x();
  rgb[1] = g + (1.0 - sum_w) * opts.background.y();
  rgb[2] = b + (1.0 - sum_w) * opts.background.z();
  acc = sum_w;
  depth = sum_w > opts.min_acc_alpha ? sum_wd / sum_w : opts.background_depth;
}

FrameBuffer make_framebuffer(const Scene& scene, const Camera& cam) {
  FrameBuffer fb;
  fb.width = cam.width;
  fb.height = cam.height;
  fb.num_planes = static_cast<int>(scene.planes.size());
  const std::size_t n = static_cast<std::size_t>(cam.width) * cam.height;
  fb.rgb.assign(3 * n, 0.0);
  fb.depth.assign(n, 0.0);
  fb.acc_alpha.assign(n, 0.0);
  fb.plane_masks.assign(fb.num_planes * n, 0.0);
  return fb;
}

struct TileGrid {
  int tiles_x, tiles_y, tile_size;
  std::vector<std::vector<int>> lists;  // per tile, indices into the projected array
};

TileGrid bin_tiles(const std::vector<ProjectedGaussian>& projected, const Camera& cam,
                   const RenderOptions& opts) {
  TileGrid grid;
  grid.tile_size = opts.tile_size;
  grid.tiles_x = (cam.width + opts.tile_size - 1) / opts.tile_size;
  grid.tiles_y = (cam.height + opts.tile_size - 1) / opts.tile_size;
  grid.lists.resize(static_cast<std::size_t>(grid.tiles_x) * grid.tiles_y);
  for (int i = 0; i < static_cast<int>(projected.size()); ++i) {
    const auto& pg = projected[i];
    const double r = pg.radius_px + 1.0;  // one pixel of slack over the 3-sigma bound
    const int x0 = std::clamp(static_cast<int>(std::floor((pg.mean_px.x() - r) / opts.tile_size)),
                              0, grid.tiles_x - 1);
    const int x1 = std::clamp(static_cast<int>(std::floor((pg.mean_px.x() + r) / opts.tile_size)),
                              0, grid.tiles_x - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor((pg.mean_px.y() - r) / opts.tile_size)),
                              0, grid.tiles_y - 1);
    const int y1 = std::clamp(static_cast<int>(std::floor((pg.mean_px.y() + r) / opts.tile_size)),
                              0, grid.tiles_y - 1);
    for (int ty = y0; ty <= y1; ++ty)
      for (int tx = x0; tx <= x1; ++tx) grid.lists[ty * grid.tiles_x + tx].push_back(i);
  }
  return grid;
}

}  // namespace

std::optional<ProjectedGaussian> project(const Camera& camera, const Gaussian3D& g,
                                         const RenderOptions& opts) {
  return project_impl(camera, g.mean, world_covariance(g), g.opacity(), opts);
}

std::vector<ProjectedGaussian> project_scene(const Scene& scene, const Camera& camera,
                                             const RenderOptions& opts) {
  std::vector<ProjectedGaussian> projected;
  projected.reserve(scene.total_primitives());
  const Vec3 cam_center = camera.center();
  const int n_planar = static_cast<int>(scene.planar.size());

  auto add = [&](const Vec3& mean, const Mat3& cov, double alpha, const VecX& sh, int index,
                 int plane_slot) {
    auto pg = project_impl(camera, mean, cov, alpha, opts);
    if (!pg) return;
    pg->index = index;
    pg->plane_slot = plane_slot;
    pg->color = eval_sh(sh, (mean - cam_center).normalized(), scene.sh_degree);
    projected.push_back(*pg);
  };

  for (int i = 0; i < n_planar; ++i) {
    const Gaussian2D& g2 = scene.planar[i];
    const int slot = scene.plane_slot(g2.plane_id);
    if (slot < 0) throw std::invalid_argument("render: unresolved plane id");
    const Plane& plane = scene.planes[slot];
    const Vec3 mean = plane.to_world(Vec3(g2.mean.x(), g2.mean.y(), 0.0));
    Mat3 local = Mat3::Zero();
    local.block<2, 2>(0, 0) = g2.covariance();
    local(2, 2) = kFlatnessFloor * kFlatnessFloor;
    const Mat3 cov = plane.rot_pw * local * plane.rot_pw.transpose();
    add(mean, cov, g2.opacity(), g2.sh, i, slot);
  }
  for (int j = 0; j < static_cast<int>(scene.freeform.size()); ++j) {
    const Gaussian3D& g3 = scene.freeform[j];
    add(g3.mean, world_covariance(g3), g3.opacity(), g3.sh, n_planar + j, -1);
  }

  std::sort(projected.begin(), projected.end(), [](const ProjectedGaussian& a,
                                                   const ProjectedGaussian& b) {
    return a.depth != b.depth ? a.depth < b.depth : a.index < b.index;
  });
  return projected;
}

FrameBuffer render(const Scene& scene, const Camera& camera, const RenderOptions& opts) {
  FrameBuffer fb = make_framebuffer(scene, camera);
  const auto projected = project_scene(scene, camera, opts);
  const TileGrid grid = bin_tiles(projected, camera, opts);
  const Kernel kernel(opts.cutoff_sq);
  const std::size_t npix = static_cast<std::size_t>(camera.width) * camera.height;
  const int n_tiles = grid.tiles_x * grid.tiles_y;

#pragma omp parallel for schedule(dynamic)
  for (int tile = 0; tile < n_tiles; ++tile) {
    const auto& list = grid.lists[tile];
    const int tx = tile % grid.tiles_x, ty = tile / grid.tiles_x;
    const int x1 = std::min((tx + 1) * opts.tile_size, camera.width);
    const int y1 = std::min((ty + 1) * opts.tile_size, camera.height);
    for (int y = ty * opts.tile_size; y < y1; ++y) {
      for (int x = tx * opts.tile_size; x < x1; ++x) {
        const std::size_t pix = static_cast<std::size_t>(y) * camera.width + x;
        composite_pixel(projected.data(), list.data(), static_cast<int>(list.size()), x + 0.5,
                        y + 0.5, opts, kernel, &fb.rgb[3 * pix], fb.depth[pix],
                        fb.acc_alpha[pix], fb.plane_masks.empty() ? nullptr : &fb.plane_masks[pix],
                        npix);
      }
    }
  }
  return fb;
}

FrameBuffer render_reference(const Scene& scene, const Camera& camera,
                             const RenderOptions& opts) {
  FrameBuffer fb = make_framebuffer(scene, camera);
  const auto projected = project_scene(scene, camera, opts);
  const Kernel kernel(opts.cutoff_sq);
  const std::size_t npix = static_cast<std::size_t>(camera.width) * camera.height;
  std::vector<int> all(projected.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);

  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const std::size_t pix = static_cast<std::size_t>(y) * camera.width + x;
      composite_pixel(projected.data(), all.data(), static_cast<int>(all.size()), x + 0.5,
                      y + 0.5, opts, kernel, &fb.rgb[3 * pix], fb.depth[pix], fb.acc_alpha[pix],
                      fb.plane_masks.empty() ? nullptr : &fb.plane_masks[pix], npix);
    }
  }
  return fb;
}

SceneGrads SceneGrads::zeros_like(const Scene& scene) {
  SceneGrads g;
  g.planar.resize(scene.planar.size());
  g.freeform.resize(scene.freeform.size());
  g.planes.resize(scene.planes.size());
  for (std::size_t i = 0; i < scene.planar.size(); ++i)
    g.planar[i].sh = VecX::Zero(scene.planar[i].sh.size());
  for (std::size_t i = 0; i < scene.freeform.size(); ++i)
    g.freeform[i].sh = VecX::Zero(scene.freeform[i].sh.size());
  return g;
}

SceneGrads& SceneGrads::operator+=(const SceneGrads& o) {
  for (std::size_t i = 0; i < planar.size(); ++i) {
    planar[i].mean += o.planar[i].mean;
    planar[i].log_scale += o.planar[i].log_scale;
    planar[i].theta += o.planar[i].theta;
    planar[i].opacity_logit += o.planar[i].opacity_logit;
    planar[i].sh += o.planar[i].sh;
  }
  for (std::size_t i = 0; i < freeform.size(); ++i) {
    freeform[i].mean += o.freeform[i].mean;
    freeform[i].log_scale += o.freeform[i].log_scale;
    freeform[i].rot += o.freeform[i].rot;
    freeform[i].opacity_logit += o.freeform[i].opacity_logit;
    freeform[i].sh += o.freeform[i].sh;
  }
  for (std::size_t i = 0; i < planes.size(); ++i) {
    planes[i].origin += o.planes[i].origin;
    planes[i].normal += o.planes[i].normal;
  }
  return *this;
}

SceneGrads& SceneGrads::operator*=(double s) {
  for (auto& g : planar) {
    g.mean *= s;
    g.log_scale *= s;
    g.theta *= s;
    g.opacity_logit *= s;
    g.sh *= s;
  }
  for (auto& g : freeform) {
    g.mean *= s;
    g.log_scale *= s;
    g.rot *= s;
    g.opacity_logit *= s;
    g.sh *= s;
  }
  for (auto& g : planes) {
    g.origin *= s;
    g.normal *= s;
  }
  return *this;
}

namespace {

// Per-projected-Gaussian gradient accumulator in screen space.
struct ProjAccum {
  double mean_x = 0, mean_y = 0;
  double cov_xx = 0, cov_xy = 0, cov_yy = 0;
  double depth = 0, alpha = 0;
  double color_r = 0, color_g = 0, color_b = 0;
};

struct Contribution {
  int local;
  double w, a, q;
  double lam_dx, lam_dy;  // conic * (pixel - mean)
};

}  // namespace

SceneGrads render_backward(const Scene& scene, const Camera& camera, const FrameBuffer& fwd,
                           const FrameBufferGrad& grad, const RenderOptions& opts) {
  const std::size_t npix = static_cast<std::size_t>(camera.width) * camera.height;
  if (fwd.width != camera.width || fwd.height != camera.height ||
      fwd.num_planes != static_cast<int>(scene.planes.size()))
    throw std::invalid_argument("render_backward: forward buffer does not match scene/camera");
  if (!grad.rgb.empty() && grad.rgb.size() != 3 * npix)
    throw std::invalid_argument("render_backward: rgb gradient size mismatch");
  if (!grad.depth.empty() && grad.depth.size() != npix)
    throw std::invalid_argument("render_backward: depth gradient size mismatch");
  if (!grad.plane_masks.empty() && grad.plane_masks.size() != scene.planes.size() * npix)
    throw std::invalid_argument("render_backward: mask gradient size mismatch");

  const auto projected = project_scene(scene, camera, opts);
  const TileGrid grid = bin_tiles(projected, camera, opts);
  const Kernel kernel(opts.cutoff_sq);
  const int n_tiles = grid.tiles_x * grid.tiles_y;

  std::vector<std::vector<ProjAccum>> tile_accums(n_tiles);

#pragma omp parallel
  {
    std::vector<Contribution> stack;
#pragma omp for schedule(dynamic)
    for (int tile = 0; tile < n_tiles; ++tile) {
      const auto& list = grid.lists[tile];
      auto& accum = tile_accums[tile];
      accum.assign(list.size(), ProjAccum{});
      if (list.empty()) continue;
      const int tx = tile % grid.tiles_x, ty = tile / grid.tiles_x;
      const int x1 = std::min((tx + 1) * opts.tile_size, camera.width);
      const int y1 = std::min((ty + 1) * opts.tile_size, camera.height);
      for (int y = ty * opts.tile_size; y < y1; ++y) {
        for (int x = tx * opts.tile_size; x < x1; ++x) {
          const std::size_t pix = static_cast<std::size_t>(y) * camera.width + x;
          const double px = x + 0.5, py = y + 0.5;

          // Re-walk the pixel exactly as the forward pass did.
          stack.clear();
          double transmittance = 1.0;
          double sum_w = 0, sum_wd = 0;
          for (int li = 0; li < static_cast<int>(list.size()); ++li) {
            const ProjectedGaussian& pg = projected[list[li]];
            const double dx = px - pg.mean_px.x();
            const double dy = py - pg.mean_px.y();
            const double q = pg.conic(0, 0) * dx * dx + 2.0 * pg.conic(0, 1) * dx * dy +
                             pg.conic(1, 1) * dy * dy;
            if (q >= opts.cutoff_sq) continue;
            const double a = pg.alpha * kernel.eval(q);
            const double w = a * transmittance;
            sum_w += w;
            sum_wd += w * pg.depth;
            Contribution c;
            c.local = li;
            c.w = w;
            c.a = a;
            c.q = q;
            c.lam_dx = pg.conic(0, 0) * dx + pg.conic(0, 1) * dy;
            c.lam_dy = pg.conic(0, 1) * dx + pg.conic(1, 1) * dy;
            stack.push_back(c);
            transmittance *= 1.0 - a;
            if (transmittance < opts.min_transmittance) break;
          }
          if (stack.empty()) continue;

          const bool depth_valid = sum_w > opts.min_acc_alpha;
          const double depth_px = depth_valid ? sum_wd / sum_w : opts.background_depth;
          const double u_rgb[3] = {grad.rgb.empty() ? 0.0 : grad.rgb[3 * pix + 0],
                                   grad.rgb.empty() ? 0.0 : grad.rgb[3 * pix + 1],
                                   grad.rgb.empty() ? 0.0 : grad.rgb[3 * pix + 2]};
          const double u_depth = grad.depth.empty() ? 0.0 : grad.depth[pix];

          double behind = 0.0;  // sum over later contributions of dL/dw_j * w_j
          for (int si = static_cast<int>(stack.size()) - 1; si >= 0; --si) {
            const Contribution& c = stack[si];
            const ProjectedGaussian& pg = projected[list[c.local]];
            double u_w = u_rgb[0] * (pg.color.x() - opts.background.x()) +
                         u_rgb[1] * (pg.color.y() - opts.background.y()) +
                         u_rgb[2] * (pg.color.z() - opts.background.z());
            if (depth_valid && u_depth != 0.0)
              u_w += u_depth * (pg.depth - depth_px) / sum_w;
            if (pg.plane_slot >= 0 && !grad.plane_masks.empty())
              u_w += grad.plane_masks[pg.plane_slot * npix + pix];

            const double transmittance_i = c.w / c.a;
            const double da = u_w * transmittance_i - behind / (1.0 - c.a);
            behind += u_w * c.w;

            ProjAccum& acc = accum[c.local];
            const double ghat = c.a / pg.alpha;
            acc.alpha += ghat * da;
            const double dq = pg.alpha * kernel.deriv(c.q) * da;
            acc.mean_x += -2.0 * dq * c.lam_dx;
            acc.mean_y += -2.0 * dq * c.lam_dy;
            acc.cov_xx += -dq * c.lam_dx * c.lam_dx;
            acc.cov_xy += -dq * c.lam_dx * c.lam_dy;
            acc.cov_yy += -dq * c.lam_dy * c.lam_dy;
            if (depth_valid && u_depth != 0.0) acc.depth += u_depth * c.w / sum_w;
            acc.color_r += c.w * u_rgb[0];
            acc.color_g += c.w * u_rgb[1];
            acc.color_b += c.w * u_rgb[2];
          }
        }
      }
    }
  }

  // Deterministic reduction: tile order, then list order within the tile.
  std::vector<ProjAccum> total(projected.size());
  for (int tile = 0; tile < n_tiles; ++tile) {
    const auto& list = grid.lists[tile];
    for (std::size_t li = 0; li < list.size(); ++li) {
      const ProjAccum& a = tile_accums[tile][li];
      ProjAccum& t = total[list[li]];
      t.mean_x += a.mean_x;
      t.mean_y += a.mean_y;
      t.cov_xx += a.cov_xx;
      t.cov_xy += a.cov_xy;
      t.cov_yy += a.cov_yy;
      t.depth += a.depth;
      t.alpha += a.alpha;
      t.color_r += a.color_r;
      t.color_g += a.color_g;
      t.color_b += a.color_b;
    }
  }

  SceneGrads grads = SceneGrads::zeros_like(scene);
  const Vec3 cam_center = camera.center();
  const int n_planar = static_cast<int>(scene.planar.size());

  // Frame gradients stashed per projected primitive and reduced serially in
  // projected order, so plane gradients do not depend on the thread count.
  std::vector<Mat3> stash_rot(projected.size(), Mat3::Zero());
  std::vector<Vec3> stash_origin(projected.size(), Vec3::Zero());

#pragma omp parallel for schedule(static)
  for (int pi = 0; pi < static_cast<int>(projected.size()); ++pi) {
    const ProjectedGaussian& pg = projected[pi];
    const ProjAccum& acc = total[pi];

    // Reconstruct world-space mean/covariance factors for this primitive.
    Vec3 mean;
    Mat3 rot_world;  // world rotation of the covariance factorization
    Vec3 scale;
    double opacity_logit;
    const VecX* sh;
    const Plane* plane = nullptr;
    const Gaussian2D* g2 = nullptr;
    const Gaussian3D* g3 = nullptr;
    if (pg.index < n_planar) {
      g2 = &scene.planar[pg.index];
      plane = &scene.planes[pg.plane_slot];
      mean = plane->to_world(Vec3(g2->mean.x(), g2->mean.y(), 0.0));
      Mat3 local_rot = Mat3::Identity();
      local_rot.block<2, 2>(0, 0) = rot2(g2->theta);
      rot_world = plane->rot_pw * local_rot;
      scale = Vec3(g2->scale().x(), g2->scale().y(), kFlatnessFloor);
      opacity_logit = g2->opacity_logit;
      sh = &g2->sh;
    } else {
      g3 = &scene.freeform[pg.index - n_planar];
      mean = g3->mean;
      rot_world = quat_to_matrix(g3->rot);
      scale = g3->scale();
      opacity_logit = g3->opacity_logit;
      sh = &g3->sh;
    }

    // --- screen-space -> camera-space ---
    const Vec3 t = camera.rot * mean + camera.trans;
    const double inv_z = 1.0 / t.z();
    double tx, ty;
    bool clamped_x, clamped_y;
    clamped_jacobian_point(camera, t, tx, ty, clamped_x, clamped_y);
    Eigen::Matrix<double, 2, 3> jac;
    jac << camera.fx * inv_z, 0, -camera.fx * tx * inv_z * inv_z,
        0, camera.fy * inv_z, -camera.fy * ty * inv_z * inv_z;
    const Mat3 cov_world = rot_world * scale.array().square().matrix().asDiagonal() *
                           rot_world.transpose();
    const Mat3 cov_cam = camera.rot * cov_world * camera.rot.transpose();

    Mat2 g_cov2;
    g_cov2 << acc.cov_xx, acc.cov_xy, acc.cov_xy, acc.cov_yy;
    const Vec2 g_mean_px(acc.mean_x, acc.mean_y);

    Vec3 g_t = jac.transpose() * g_mean_px;
    g_t.z() += acc.depth;

    const Mat3 g_cov_cam = jac.transpose() * g_cov2 * jac;
    const Eigen::Matrix<double, 2, 3> g_jac = 2.0 * g_cov2 * jac * cov_cam;
    const double fx = camera.fx, fy = camera.fy;
    // chain through the clamped evaluation point: inside the limit tx == t.x;
    // outside, tx = +-lim * t.z and the x path transfers to z
    const double g_tx = g_jac(0, 2) * (-fx * inv_z * inv_z);
    const double g_ty = g_jac(1, 2) * (-fy * inv_z * inv_z);
    if (!clamped_x) g_t.x() += g_tx;
    if (!clamped_y) g_t.y() += g_ty;
    g_t.z() += g_jac(0, 0) * (-fx * inv_z * inv_z) + g_jac(1, 1) * (-fy * inv_z * inv_z) +
               g_jac(0, 2) * (2.0 * fx * tx * inv_z * inv_z * inv_z) +
               g_jac(1, 2) * (2.0 * fy * ty * inv_z * inv_z * inv_z);
    if (clamped_x) g_t.z() += g_tx * (tx * inv_z);
    if (clamped_y) g_t.z() += g_ty * (ty * inv_z);

    Vec3 g_mean_world = camera.rot.transpose() * g_t;
    const Mat3 g_cov_world = camera.rot.transpose() * g_cov_cam * camera.rot;

    // --- view-dependent color ---
    const Vec3 g_color(acc.color_r, acc.color_g, acc.color_b);
    const Vec3 offset = mean - cam_center;
    const double dist = offset.norm();
    const Vec3 dir = offset / dist;
    VecX* g_sh = pg.index < n_planar ? &grads.planar[pg.index].sh
                                     : &grads.freeform[pg.index - n_planar].sh;
    const Vec3 g_dir = eval_sh_backward(*sh, dir, scene.sh_degree, g_color, *g_sh);
    g_mean_world += (g_dir - dir * dir.dot(g_dir)) / dist;

    // --- opacity ---
    const double alpha = sigmoid(opacity_logit);
    const double g_logit = alpha * (1.0 - alpha) * acc.alpha;

    // --- covariance factorization ---
    const Mat3 m_factor = rot_world * scale.asDiagonal();
    const Mat3 g_m = (g_cov_world + g_cov_world.transpose()) * m_factor;
    const Mat3 g_rot_world = g_m * scale.asDiagonal();
    Vec3 g_scale;
    for (int c = 0; c < 3; ++c) g_scale[c] = g_m.col(c).dot(rot_world.col(c));

    if (g2 != nullptr) {
      auto& out = grads.planar[pg.index];
      out.opacity_logit += g_logit;
      out.mean += plane->rot_pw.block<3, 2>(0, 0).transpose() * g_mean_world;
      // theta enters through rot_world = rot_pw * Rz(theta)
      Mat3 dlocal = Mat3::Zero();
      dlocal.block<2, 2>(0, 0) = rot2_dtheta(g2->theta);
      out.theta += (plane->rot_pw * dlocal).cwiseProduct(g_rot_world).sum();
      const Vec2 s2 = g2->scale();
      out.log_scale.x() += g_scale.x() * s2.x();
      out.log_scale.y() += g_scale.y() * s2.y();
      // flatness floor is a constant: its scale gradient is dropped

      Mat3 local_rot = Mat3::Identity();
      local_rot.block<2, 2>(0, 0) = rot2(g2->theta);
      Mat3 g_rot_pw = g_rot_world * local_rot.transpose();
      g_rot_pw += g_mean_world * Vec3(g2->mean.x(), g2->mean.y(), 0.0).transpose();
      stash_rot[pi] = g_rot_pw;
      stash_origin[pi] = g_mean_world;
    } else {
      auto& out = grads.freeform[pg.index - n_planar];
      out.opacity_logit += g_logit;
      out.mean += g_mean_world;
      out.log_scale += g_scale.cwiseProduct(scale);
      out.rot += quat_to_matrix_backward(g3->rot, g_rot_world);
    }
  }

  std::vector<Mat3> plane_rot_grads(scene.planes.size(), Mat3::Zero());
  for (std::size_t pi = 0; pi < projected.size(); ++pi) {
    if (projected[pi].plane_slot < 0) continue;
    plane_rot_grads[projected[pi].plane_slot] += stash_rot[pi];
    grads.planes[projected[pi].plane_slot].origin += stash_origin[pi];
  }
  for (std::size_t s = 0; s < scene.planes.size(); ++s)
    grads.planes[s].normal = plane_rotation_backward(scene.planes[s].normal, plane_rot_grads[s]);
  return grads;
}

}  // namespace flatsplat
