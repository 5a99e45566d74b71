// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "flatsplat/render.hpp"
#include "flatsplat/scene.hpp"

namespace flatsplat::testing {

inline VecX flat_sh(const Vec3& rgb, int degree) {
  const int n = 3 * (degree + 1) * (degree + 1);
  VecX sh = VecX::Zero(n);
  // invert the 0.5 offset wrt the dc basis constant
  constexpr double c0 = 0.28209479177387814;
  for (int c = 0; c < 3; ++c) sh[c] = (rgb[c] - 0.5) / c0;
  return sh;
}

/// SH coefficients whose evaluated colors stay strictly inside [0, 1] for any
/// direction, keeping the clamp inactive in gradient fixtures.
inline VecX random_interior_sh(Rng& rng, int degree) {
  const int n = (degree + 1) * (degree + 1);
  VecX sh = VecX::Zero(3 * n);
  constexpr double c0 = 0.28209479177387814;
  for (int c = 0; c < 3; ++c) sh[c] = (rng.uniform(0.3, 0.7) - 0.5) / c0;
  for (int i = 1; i < n; ++i)
    for (int c = 0; c < 3; ++c) sh[3 * i + c] = rng.uniform(-0.04, 0.04);
  return sh;
}

inline Camera look_at_camera(const Vec3& eye, const Vec3& target, int width, int height,
                             double focal, const Vec3& up = Vec3::UnitY()) {
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = focal;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  const Vec3 fwd = (target - eye).normalized();
  Vec3 right = fwd.cross(up).normalized();
  if (right.norm() < 1e-6) right = fwd.cross(Vec3::UnitX()).normalized();
  const Vec3 down = fwd.cross(right);
  Mat3 rot;
  rot.row(0) = right;
  rot.row(1) = down;
  rot.row(2) = fwd;
  cam.rot = rot;
  cam.trans = -rot * eye;
  return cam;
}

inline Gaussian3D random_freeform(Rng& rng, int degree, double extent = 0.6) {
  Gaussian3D g;
  g.mean = Vec3(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                rng.uniform(-extent, extent));
  g.log_scale = Vec3(rng.uniform(-2.8, -1.6), rng.uniform(-2.8, -1.6), rng.uniform(-2.8, -1.6));
  Vec4 q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  g.rot = q.normalized();
  if (g.rot[0] < 0) g.rot = -g.rot;
  g.opacity_logit = logit(rng.uniform(0.3, 0.85));
  g.sh = random_interior_sh(rng, degree);
  return g;
}

/// Mixed random scene around the origin; the fixture camera at distance ~3
/// sees all of it.
inline Scene random_scene(Rng& rng, int n_planes, int n_planar, int n_freeform, int degree = 2) {
  Scene scene;
  scene.sh_degree = degree;
  for (int p = 0; p < n_planes; ++p) {
    Vec3 n(rng.normal(), rng.normal(), rng.normal());
    while (n.norm() < 1e-3) n = Vec3(rng.normal(), rng.normal(), rng.normal());
    const Vec3 o(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4));
    scene.planes.push_back(Plane::make(p, n.normalized(), o));
  }
  for (int i = 0; i < n_planar; ++i) {
    Gaussian2D g;
    g.plane_id = static_cast<int>(rng.uniform_int(0, n_planes - 1));
    g.mean = Vec2(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    g.log_scale = Vec2(rng.uniform(-2.8, -1.6), rng.uniform(-2.8, -1.6));
    g.theta = rng.uniform(-3.0, 3.0);
    g.opacity_logit = logit(rng.uniform(0.3, 0.85));
    g.sh = random_interior_sh(rng, degree);
    scene.planar.push_back(g);
  }
  for (int i = 0; i < n_freeform; ++i) scene.freeform.push_back(random_freeform(rng, degree));
  return scene;
}

inline Camera fixture_camera(Rng& rng, int width = 32, int height = 32) {
  const double az = rng.uniform(0, 2 * M_PI);
  const double el = rng.uniform(-0.5, 0.5);
  const Vec3 eye(3.0 * std::cos(az) * std::cos(el), 3.0 * std::sin(el),
                 3.0 * std::sin(az) * std::cos(el));
  return look_at_camera(eye, Vec3::Zero(), width, height, 0.75 * width);
}

/// Fixed linear functional of a FrameBuffer: random pixel weights on rgb and
/// masks, and depth weights gated by the validity of the *base* render so
/// finite-difference probes never cross the validity threshold.
struct LinearLoss {
  std::vector<double> w_rgb, w_depth, w_masks;

  static LinearLoss make(Rng& rng, const FrameBuffer& base, double acc_margin = 1e-3) {
    LinearLoss loss;
    const std::size_t npix = base.depth.size();
    loss.w_rgb.resize(3 * npix);
    loss.w_depth.resize(npix);
    loss.w_masks.resize(base.plane_masks.size());
    for (auto& w : loss.w_rgb) w = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < npix; ++i)
      loss.w_depth[i] = base.acc_alpha[i] > acc_margin ? rng.uniform(-1, 1) : 0.0;
    for (auto& w : loss.w_masks) w = rng.uniform(-1, 1);
    return loss;
  }

  double eval(const FrameBuffer& fb) const {
    double total = 0;
    for (std::size_t i = 0; i < w_rgb.size(); ++i) total += w_rgb[i] * fb.rgb[i];
    for (std::size_t i = 0; i < w_depth.size(); ++i) total += w_depth[i] * fb.depth[i];
    for (std::size_t i = 0; i < w_masks.size(); ++i) total += w_masks[i] * fb.plane_masks[i];
    return total;
  }

  FrameBufferGrad upstream() const { return FrameBufferGrad{w_rgb, w_depth, w_masks}; }
};

struct ParamRef {
  std::string cls;
  std::function<double(const Scene&)> get;
  std::function<void(Scene&, double)> set;
  std::function<double(const SceneGrads&)> grad;
};

/// One entry per optimizable scalar. Plane setters rebuild the cached frame.
inline std::vector<ParamRef> enumerate_params(const Scene& scene) {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < scene.planar.size(); ++i) {
    for (int c = 0; c < 2; ++c) {
      out.push_back({"mean2d", [i, c](const Scene& s) { return s.planar[i].mean[c]; },
                     [i, c](Scene& s, double v) { s.planar[i].mean[c] = v; },
                     [i, c](const SceneGrads& g) { return g.planar[i].mean[c]; }});
      out.push_back({"scale2d", [i, c](const Scene& s) { return s.planar[i].log_scale[c]; },
                     [i, c](Scene& s, double v) { s.planar[i].log_scale[c] = v; },
                     [i, c](const SceneGrads& g) { return g.planar[i].log_scale[c]; }});
    }
    out.push_back({"theta", [i](const Scene& s) { return s.planar[i].theta; },
                   [i](Scene& s, double v) { s.planar[i].theta = v; },
                   [i](const SceneGrads& g) { return g.planar[i].theta; }});
    out.push_back({"opacity", [i](const Scene& s) { return s.planar[i].opacity_logit; },
                   [i](Scene& s, double v) { s.planar[i].opacity_logit = v; },
                   [i](const SceneGrads& g) { return g.planar[i].opacity_logit; }});
    for (int c = 0; c < scene.planar[i].sh.size(); ++c)
      out.push_back({"sh", [i, c](const Scene& s) { return s.planar[i].sh[c]; },
                     [i, c](Scene& s, double v) { s.planar[i].sh[c] = v; },
                     [i, c](const SceneGrads& g) { return g.planar[i].sh[c]; }});
  }
  for (std::size_t i = 0; i < scene.freeform.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      out.push_back({"mean3d", [i, c](const Scene& s) { return s.freeform[i].mean[c]; },
                     [i, c](Scene& s, double v) { s.freeform[i].mean[c] = v; },
                     [i, c](const SceneGrads& g) { return g.freeform[i].mean[c]; }});
      out.push_back({"scale3d", [i, c](const Scene& s) { return s.freeform[i].log_scale[c]; },
                     [i, c](Scene& s, double v) { s.freeform[i].log_scale[c] = v; },
                     [i, c](const SceneGrads& g) { return g.freeform[i].log_scale[c]; }});
    }
    for (int c = 0; c < 4; ++c)
      out.push_back({"quat", [i, c](const Scene& s) { return s.freeform[i].rot[c]; },
                     [i, c](Scene& s, double v) { s.freeform[i].rot[c] = v; },
                     [i, c](const SceneGrads& g) { return g.freeform[i].rot[c]; }});
    out.push_back({"opacity", [i](const Scene& s) { return s.freeform[i].opacity_logit; },
                   [i](Scene& s, double v) { s.freeform[i].opacity_logit = v; },
                   [i](const SceneGrads& g) { return g.freeform[i].opacity_logit; }});
    for (int c = 0; c < scene.freeform[i].sh.size(); ++c)
      out.push_back({"sh", [i, c](const Scene& s) { return s.freeform[i].sh[c]; },
                     [i, c](Scene& s, double v) { s.freeform[i].sh[c] = v; },
                     [i, c](const SceneGrads& g) { return g.freeform[i].sh[c]; }});
  }
  for (std::size_t i = 0; i < scene.planes.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      out.push_back({"plane_origin", [i, c](const Scene& s) { return s.planes[i].origin[c]; },
                     [i, c](Scene& s, double v) {
                       s.planes[i].origin[c] = v;
                       s.planes[i].refresh_frame();
                     },
                     [i, c](const SceneGrads& g) { return g.planes[i].origin[c]; }});
      out.push_back({"plane_normal", [i, c](const Scene& s) { return s.planes[i].normal[c]; },
                     [i, c](Scene& s, double v) {
                       s.planes[i].normal[c] = v;
                       s.planes[i].refresh_frame();
                     },
                     [i, c](const SceneGrads& g) { return g.planes[i].normal[c]; }});
    }
  }
  return out;
}

/// Central finite difference of loss(render(scene)) along one parameter.
inline double fd_gradient(const Scene& scene, const Camera& cam, const RenderOptions& opts,
                          const LinearLoss& loss, const ParamRef& p, double h = 1e-4) {
  Scene plus = scene, minus = scene;
  p.set(plus, p.get(scene) + h);
  p.set(minus, p.get(scene) - h);
  return (loss.eval(render(plus, cam, opts)) - loss.eval(render(minus, cam, opts))) / (2 * h);
}

inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Flattens every optimizable Gaussian parameter for byte-level freeze checks.
inline std::vector<double> gaussian_block(const Scene& s) {
  std::vector<double> out;
  for (const auto& g : s.planar) {
    out.insert(out.end(), {g.mean.x(), g.mean.y(), g.log_scale.x(), g.log_scale.y(), g.theta,
                           g.opacity_logit});
    out.insert(out.end(), g.sh.data(), g.sh.data() + g.sh.size());
  }
  for (const auto& g : s.freeform) {
    out.insert(out.end(), g.mean.data(), g.mean.data() + 3);
    out.insert(out.end(), g.log_scale.data(), g.log_scale.data() + 3);
    out.insert(out.end(), g.rot.data(), g.rot.data() + 4);
    out.push_back(g.opacity_logit);
    out.insert(out.end(), g.sh.data(), g.sh.data() + g.sh.size());
  }
  return out;
}

inline std::vector<double> plane_block(const Scene& s) {
  std::vector<double> out;
  for (const auto& p : s.planes) {
    out.insert(out.end(), p.origin.data(), p.origin.data() + 3);
    out.insert(out.end(), p.normal.data(), p.normal.data() + 3);
  }
  return out;
}

inline bool bytes_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace flatsplat::testing
