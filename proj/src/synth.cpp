// SPDX-License-Identifier: Apache-2.0
#include "flatsplat/synth.hpp"

#include <fstream>
#include <json.hpp>

#include "flatsplat/render.hpp"

using nlohmann::json;

namespace flatsplat {

namespace {

struct Face {
  Vec3 normal;
  Vec3 origin;
  Vec3 corner_a, corner_b;  // two opposite world corners of the face
  Vec3 palette;
};

std::vector<Face> room_faces(const BoxSceneConfig& cfg) {
  const double lx = cfg.room.x(), ly = cfg.room.y(), lz = cfg.room.z();
  std::vector<Face> faces = {
      // floor
      {Vec3(0, 0, 1), Vec3(lx / 2, ly / 2, 0), Vec3(0, 0, 0), Vec3(lx, ly, 0),
       Vec3(0.62, 0.45, 0.32)},
      // walls x = 0 and x = lx
      {Vec3(1, 0, 0), Vec3(0, ly / 2, lz / 2), Vec3(0, 0, 0), Vec3(0, ly, lz),
       Vec3(0.70, 0.70, 0.62)},
      {Vec3(-1, 0, 0), Vec3(lx, ly / 2, lz / 2), Vec3(lx, 0, 0), Vec3(lx, ly, lz),
       Vec3(0.55, 0.62, 0.72)},
      // walls y = 0 and y = ly
      {Vec3(0, 1, 0), Vec3(lx / 2, 0, lz / 2), Vec3(0, 0, 0), Vec3(lx, 0, lz),
       Vec3(0.72, 0.58, 0.58)},
      {Vec3(0, -1, 0), Vec3(lx / 2, ly, lz / 2), Vec3(0, ly, 0), Vec3(lx, ly, lz),
       Vec3(0.58, 0.70, 0.58)},
  };
  if (cfg.ceiling)
    faces.push_back({Vec3(0, 0, -1), Vec3(lx / 2, ly / 2, lz), Vec3(0, 0, lz), Vec3(lx, ly, lz),
                     Vec3(0.75, 0.75, 0.75)});
  return faces;
}

Camera orbit_camera(const BoxSceneConfig& cfg, int index, int total) {
  const double angle = 2.0 * M_PI * index / total;
  const Vec3 center(cfg.room.x() / 2, cfg.room.y() / 2, cfg.camera_height);
  const Vec3 eye = center + cfg.orbit_radius * Vec3(std::cos(angle), std::sin(angle), 0.0);
  // alternating pitch covers both the floor and the walls
  const double pitch = (index % 2 == 0) ? cfg.pitch_even : cfg.pitch_odd;
  const Vec3 fwd(std::cos(angle) * std::cos(pitch), std::sin(angle) * std::cos(pitch),
                 std::sin(pitch));

  Camera cam;
  cam.id = index;
  cam.width = cam.height = cfg.image_size;
  cam.fx = cam.fy = 0.5 * cfg.image_size / std::tan(0.5 * cfg.fov_deg * M_PI / 180.0);
  cam.cx = cam.cy = cfg.image_size / 2.0;
  Vec3 up(0, 0, 1);
  if (std::abs(fwd.z()) > 0.99) up = Vec3::UnitX();  // nadir rigs
  const Vec3 right = fwd.cross(up).normalized();
  const Vec3 down = fwd.cross(right);
  Mat3 rot;
  rot.row(0) = right;
  rot.row(1) = down;
  rot.row(2) = fwd;
  cam.rot = rot;
  cam.trans = -rot * eye;
  return cam;
}

VecX face_color_sh(const Face& face, const Vec2& local, double period, int degree, Rng& rng) {
  // checkerboard over plane coordinates with per-primitive color noise
  const int cu = static_cast<int>(std::floor(local.x() / period));
  const int cv = static_cast<int>(std::floor(local.y() / period));
  const bool dark = ((cu + cv) % 2 + 2) % 2 == 1;
  Vec3 rgb = dark ? Vec3(face.palette * 0.45) : face.palette;
  for (int c = 0; c < 3; ++c) rgb[c] = std::clamp(rgb[c] + rng.uniform(-0.08, 0.08), 0.05, 0.95);

  const int coeffs = (degree + 1) * (degree + 1);
  VecX sh = VecX::Zero(3 * coeffs);
  constexpr double c0 = 0.28209479177387814;
  for (int c = 0; c < 3; ++c) sh[c] = (rgb[c] - 0.5) / c0;
  if (degree >= 1)
    for (int i = 3; i < 12; ++i) sh[i] = rng.uniform(-0.02, 0.02);
  return sh;
}

}  // namespace

BoxScene generate_box_scene(const BoxSceneConfig& cfg, std::uint64_t seed) {
  const int n_total = cfg.train_cameras + cfg.test_cameras;
  if (n_total <= 0) throw std::invalid_argument("generate_box_scene: zero cameras");

  BoxScene out;
  Scene& scene = out.gt_scene;
  scene.sh_degree = cfg.sh_degree;

  Rng rng(Rng::derive(seed, 0xB0C5, 0));

  // ---- planes with textured planar gaussians ----
  const auto faces = room_faces(cfg);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    Plane plane = Plane::make(static_cast<int>(f), faces[f].normal, faces[f].origin);
    plane.source_masks = {static_cast<int>(f)};
    scene.planes.push_back(plane);

    const Vec3 la = plane.to_local(faces[f].corner_a);
    const Vec3 lb = plane.to_local(faces[f].corner_b);
    const Vec2 lo(std::min(la.x(), lb.x()), std::min(la.y(), lb.y()));
    const Vec2 hi(std::max(la.x(), lb.x()), std::max(la.y(), lb.y()));
    const int nu = std::max(1, static_cast<int>(std::round((hi.x() - lo.x()) / cfg.planar_spacing)));
    const int nv = std::max(1, static_cast<int>(std::round((hi.y() - lo.y()) / cfg.planar_spacing)));
    for (int iu = 0; iu < nu; ++iu) {
      for (int iv = 0; iv < nv; ++iv) {
        Gaussian2D g;
        g.plane_id = plane.id;
        g.mean = Vec2(lo.x() + (iu + 0.5) * (hi.x() - lo.x()) / nu,
                      lo.y() + (iv + 0.5) * (hi.y() - lo.y()) / nv) +
                 Vec2(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)) * cfg.planar_spacing;
        g.log_scale = Vec2::Constant(std::log(cfg.planar_scale * rng.uniform(0.8, 1.2)));
        g.theta = rng.uniform(-M_PI, M_PI);
        g.opacity_logit = logit(cfg.planar_opacity);
        g.sh = face_color_sh(faces[f], g.mean, cfg.texture_period, cfg.sh_degree, rng);
        g.uid = scene.fresh_uid();
        scene.planar.push_back(g);
      }
    }
  }

  // ---- freeform clutter ----
  for (int obj = 0; obj < cfg.clutter_objects; ++obj) {
    const Vec3 center(rng.uniform(0.8, cfg.room.x() - 0.8), rng.uniform(0.8, cfg.room.y() - 0.8),
                      rng.uniform(0.35, cfg.room.z() - 0.9));
    const Vec3 radii(rng.uniform(0.12, 0.3), rng.uniform(0.12, 0.3), rng.uniform(0.12, 0.3));
    const Vec3 base(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8));
    for (int k = 0; k < cfg.clutter_per_object; ++k) {
      Vec3 dir(rng.normal(), rng.normal(), rng.normal());
      dir.normalize();
      Gaussian3D g;
      g.mean = center + dir.cwiseProduct(radii);
      g.log_scale = Vec3::Constant(std::log(0.045 * rng.uniform(0.7, 1.3)));
      Vec4 q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
      g.rot = q.normalized();
      if (g.rot[0] < 0) g.rot = -g.rot;
      g.opacity_logit = logit(0.92);
      const int coeffs = scene.sh_coeffs();
      g.sh = VecX::Zero(coeffs);
      constexpr double c0 = 0.28209479177387814;
      for (int c = 0; c < 3; ++c)
        g.sh[c] = (std::clamp(base[c] + rng.uniform(-0.1, 0.1), 0.05, 0.95) - 0.5) / c0;
      g.uid = scene.fresh_uid();
      scene.freeform.push_back(g);
    }
  }

  // ---- cameras, renders, masks ----
  const int test_stride = cfg.test_cameras > 0 ? n_total / cfg.test_cameras : n_total + 1;
  for (int v = 0; v < n_total; ++v) {
    DatasetView view;
    view.camera = orbit_camera(cfg, v, n_total);
    view.split = (cfg.test_cameras > 0 && v % test_stride == test_stride - 1) ? "test" : "train";

    const FrameBuffer fb = render(scene, view.camera);
    view.image.resize(fb.rgb.size());
    for (std::size_t i = 0; i < fb.rgb.size(); ++i)
      view.image[i] = std::lround(std::clamp(fb.rgb[i], 0.0, 1.0) * 255.0) / 255.0;
    view.depth.assign(fb.depth.begin(), fb.depth.end());

    const std::size_t npix = fb.depth.size();
    for (int s = 0; s < fb.num_planes; ++s) {
      std::vector<std::uint8_t> mask(npix, 0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < npix; ++i) {
        mask[i] = fb.plane_masks[s * npix + i] > 0.5 ? 1 : 0;
        count += mask[i];
      }
      if (count > 0) view.masks[scene.planes[s].id] = std::move(mask);
    }
    out.dataset.views.push_back(std::move(view));
  }

  for (const Plane& p : scene.planes)
    out.dataset.gt_planes.push_back({p.id, p.origin, p.normal});
  return out;
}

LabeledMesh box_gt_mesh(const BoxSceneConfig& cfg) {
  LabeledMesh mesh;
  for (const auto& [f, face] : [&] {
         std::vector<std::pair<int, Face>> ordered;
         const auto faces = room_faces(cfg);
         for (std::size_t i = 0; i < faces.size(); ++i)
           ordered.push_back({static_cast<int>(i), faces[i]});
         return ordered;
       }()) {
    const Plane plane = Plane::make(f, face.normal, face.origin);
    const Vec3 la = plane.to_local(face.corner_a);
    const Vec3 lb = plane.to_local(face.corner_b);
    const Vec2 lo(std::min(la.x(), lb.x()), std::min(la.y(), lb.y()));
    const Vec2 hi(std::max(la.x(), lb.x()), std::max(la.y(), lb.y()));
    const int base = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(plane.to_world(Vec3(lo.x(), lo.y(), 0)));
    mesh.vertices.push_back(plane.to_world(Vec3(hi.x(), lo.y(), 0)));
    mesh.vertices.push_back(plane.to_world(Vec3(hi.x(), hi.y(), 0)));
    mesh.vertices.push_back(plane.to_world(Vec3(lo.x(), hi.y(), 0)));
    mesh.triangles.push_back({base, base + 1, base + 2});
    mesh.triangles.push_back({base, base + 2, base + 3});
    mesh.triangle_plane.push_back(f);
    mesh.triangle_plane.push_back(f);
  }
  return mesh;
}

double box_ray_depth(const BoxSceneConfig& cfg, const Camera& cam, double px, double py) {
  const Vec3 origin = cam.center();
  const Vec3 dir = cam.ray_direction(px, py).normalized();
  double best = std::numeric_limits<double>::infinity();
  for (const Face& face : room_faces(cfg)) {
    const double denom = dir.dot(face.normal);
    if (std::abs(denom) < 1e-12) continue;
    const double t = (face.origin - origin).dot(face.normal) / denom;
    if (t <= 0) continue;
    const Vec3 hit = origin + t * dir;
    const Vec3 lo = face.corner_a.cwiseMin(face.corner_b) - Vec3::Constant(1e-9);
    const Vec3 hi = face.corner_a.cwiseMax(face.corner_b) + Vec3::Constant(1e-9);
    if ((hit.array() < lo.array()).any() || (hit.array() > hi.array()).any()) continue;
    best = std::min(best, cam.to_camera(hit).z());
  }
  return best;
}

BoxSceneConfig box_config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  const json j = json::parse(in);
  BoxSceneConfig cfg;
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  if (j.contains("room")) {
    const auto room = j.at("room").get<std::vector<double>>();
    if (room.size() != 3) throw std::runtime_error("room must have three extents");
    cfg.room = Vec3(room[0], room[1], room[2]);
  }
  get("ceiling", cfg.ceiling);
  get("planar_spacing", cfg.planar_spacing);
  get("planar_scale", cfg.planar_scale);
  get("planar_opacity", cfg.planar_opacity);
  get("texture_period", cfg.texture_period);
  get("clutter_objects", cfg.clutter_objects);
  get("clutter_per_object", cfg.clutter_per_object);
  get("train_cameras", cfg.train_cameras);
  get("test_cameras", cfg.test_cameras);
  get("image_size", cfg.image_size);
  get("fov_deg", cfg.fov_deg);
  get("orbit_radius", cfg.orbit_radius);
  get("camera_height", cfg.camera_height);
  get("pitch_even", cfg.pitch_even);
  get("pitch_odd", cfg.pitch_odd);
  get("sh_degree", cfg.sh_degree);
  return cfg;
}

void box_config_to_json_file(const BoxSceneConfig& cfg, const std::string& path) {
  json j{{"room", {cfg.room.x(), cfg.room.y(), cfg.room.z()}},
         {"ceiling", cfg.ceiling},
         {"planar_spacing", cfg.planar_spacing},
         {"planar_scale", cfg.planar_scale},
         {"planar_opacity", cfg.planar_opacity},
         {"texture_period", cfg.texture_period},
         {"clutter_objects", cfg.clutter_objects},
         {"clutter_per_object", cfg.clutter_per_object},
         {"train_cameras", cfg.train_cameras},
         {"test_cameras", cfg.test_cameras},
         {"image_size", cfg.image_size},
         {"fov_deg", cfg.fov_deg},
         {"orbit_radius", cfg.orbit_radius},
         {"camera_height", cfg.camera_height},
         {"pitch_even", cfg.pitch_even},
         {"pitch_odd", cfg.pitch_odd},
         {"sh_degree", cfg.sh_degree}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace flatsplat
