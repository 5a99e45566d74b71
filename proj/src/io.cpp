// SPDX-License-Identifier: Apache-2.0
#include "flatsplat/io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace flatsplat {

namespace {

void write_exact(std::ofstream& out, const void* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
T read_exact(std::ifstream& in, const std::string& what) {
  T value;
  const std::size_t offset = static_cast<std::size_t>(in.tellg());
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ParseError("unexpected end of file reading " + what, offset);
  return value;
}

std::string fmt_view(int v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%04d", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- scene PLY

void save_scene_ply(const Scene& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  const int coeffs = scene.sh_coeffs();
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n";
  header << "comment flatsplat scene\n";
  header << "comment sh_degree " << scene.sh_degree << "\n";
  header << "element plane " << scene.planes.size() << "\n";
  header << "property int id\n";
  for (const char* n : {"ox", "oy", "oz", "nx", "ny", "nz"})
    header << "property double " << n << "\n";
  header << "property list uchar int source_masks\n";
  header << "element gaussian " << scene.total_primitives() << "\n";
  header << "property uchar kind\n";
  header << "property int plane_id\n";
  for (const char* n : {"px", "py", "pz", "sx", "sy", "sz", "rw", "rx", "ry", "rz"})
    header << "property double " << n << "\n";
  header << "property double opacity_logit\n";
  for (int i = 0; i < coeffs; ++i) header << "property double sh_" << i << "\n";
  header << "end_header\n";
  const std::string h = header.str();
  write_exact(out, h.data(), h.size());

  for (const Plane& p : scene.planes) {
    const std::int32_t id = p.id;
    write_exact(out, &id, 4);
    const double vals[6] = {p.origin.x(), p.origin.y(), p.origin.z(),
                            p.normal.x(), p.normal.y(), p.normal.z()};
    write_exact(out, vals, sizeof(vals));
    const std::uint8_t count = static_cast<std::uint8_t>(p.source_masks.size());
    write_exact(out, &count, 1);
    for (int m : p.source_masks) {
      const std::int32_t v = m;
      write_exact(out, &v, 4);
    }
  }

  auto write_gaussian = [&](std::uint8_t kind, std::int32_t plane_id, const double* pos,
                            const double* scale, const double* rot, double logit_v,
                            const VecX& sh) {
    write_exact(out, &kind, 1);
    write_exact(out, &plane_id, 4);
    write_exact(out, pos, 3 * 8);
    write_exact(out, scale, 3 * 8);
    write_exact(out, rot, 4 * 8);
    write_exact(out, &logit_v, 8);
    write_exact(out, sh.data(), coeffs * 8);
  };
  for (const Gaussian2D& g : scene.planar) {
    const double pos[3] = {g.mean.x(), g.mean.y(), 0.0};
    const double scale[3] = {g.log_scale.x(), g.log_scale.y(), 0.0};
    const double rot[4] = {g.theta, 0.0, 0.0, 0.0};
    write_gaussian(0, g.plane_id, pos, scale, rot, g.opacity_logit, g.sh);
  }
  for (const Gaussian3D& g : scene.freeform) {
    const double rot[4] = {g.rot[0], g.rot[1], g.rot[2], g.rot[3]};
    write_gaussian(1, -1, g.mean.data(), g.log_scale.data(), rot, g.opacity_logit, g.sh);
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Scene load_scene_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);

  // header
  std::string line;
  std::size_t n_planes = 0, n_gaussians = 0;
  int sh_degree = -1;
  int sh_props = 0;
  bool in_gaussian_element = false;
  if (!std::getline(in, line) || line != "ply") throw ParseError("not a PLY file", 0);
  if (!std::getline(in, line) || line != "format binary_little_endian 1.0")
    throw ParseError("unsupported PLY format", 4);
  while (true) {
    const std::size_t offset = static_cast<std::size_t>(in.tellg());
    if (!std::getline(in, line)) throw ParseError("missing end_header", offset);
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment") {
      std::string key;
      ls >> key;
      if (key == "sh_degree") ls >> sh_degree;
    } else if (tok == "element") {
      std::string name;
      std::size_t count;
      ls >> name >> count;
      if (name == "plane") {
        n_planes = count;
        in_gaussian_element = false;
      } else if (name == "gaussian") {
        n_gaussians = count;
        in_gaussian_element = true;
      } else {
        throw ParseError("unknown element '" + name + "'", offset);
      }
    } else if (tok == "property") {
      std::string type, name;
      ls >> type;
      if (type == "list") {
        ls >> type >> type;  // skip list size/value types
      }
      ls >> name;
      if (in_gaussian_element && name.rfind("sh_", 0) == 0) ++sh_props;
    }
  }
  if (sh_degree < 0 || sh_degree > 3) throw ParseError("missing or bad sh_degree comment", 0);

  Scene scene;
  scene.sh_degree = sh_degree;
  const int coeffs = scene.sh_coeffs();
  if (sh_props != coeffs)
    throw ParseError("sh property count does not match sh_degree",
                     static_cast<std::size_t>(in.tellg()));

  for (std::size_t i = 0; i < n_planes; ++i) {
    Plane p;
    p.id = read_exact<std::int32_t>(in, "plane id");
    p.origin.x() = read_exact<double>(in, "plane origin");
    p.origin.y() = read_exact<double>(in, "plane origin");
    p.origin.z() = read_exact<double>(in, "plane origin");
    p.normal.x() = read_exact<double>(in, "plane normal");
    p.normal.y() = read_exact<double>(in, "plane normal");
    p.normal.z() = read_exact<double>(in, "plane normal");
    const auto n_masks = read_exact<std::uint8_t>(in, "source mask count");
    for (int m = 0; m < n_masks; ++m)
      p.source_masks.push_back(read_exact<std::int32_t>(in, "source mask id"));
    p.rot_pw = plane_rotation(p.normal);  // normals are stored unit-length
    scene.planes.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < n_gaussians; ++i) {
    const auto kind = read_exact<std::uint8_t>(in, "gaussian kind");
    const auto plane_id = read_exact<std::int32_t>(in, "gaussian plane id");
    double pos[3], scale[3], rot[4];
    for (double& v : pos) v = read_exact<double>(in, "gaussian position");
    for (double& v : scale) v = read_exact<double>(in, "gaussian scale");
    for (double& v : rot) v = read_exact<double>(in, "gaussian rotation");
    const double logit_v = read_exact<double>(in, "gaussian opacity");
    VecX sh(coeffs);
    for (int c = 0; c < coeffs; ++c) sh[c] = read_exact<double>(in, "gaussian sh");

    if (kind == 0) {
      Gaussian2D g;
      g.plane_id = plane_id;
      g.mean = Vec2(pos[0], pos[1]);
      g.log_scale = Vec2(scale[0], scale[1]);
      g.theta = rot[0];
      g.opacity_logit = logit_v;
      g.sh = std::move(sh);
      g.uid = scene.fresh_uid();
      scene.planar.push_back(std::move(g));
    } else if (kind == 1) {
      Gaussian3D g;
      g.mean = Vec3(pos[0], pos[1], pos[2]);
      g.log_scale = Vec3(scale[0], scale[1], scale[2]);
      g.rot = Vec4(rot[0], rot[1], rot[2], rot[3]);
      g.opacity_logit = logit_v;
      g.sh = std::move(sh);
      g.uid = scene.fresh_uid();
      scene.freeform.push_back(std::move(g));
    } else {
      throw ParseError("bad gaussian kind", static_cast<std::size_t>(in.tellg()));
    }
  }
  for (const auto& g : scene.planar)
    if (scene.plane_slot(g.plane_id) < 0)
      throw ParseError("planar gaussian references missing plane", 0);
  return scene;
}

// --------------------------------------------------------------------- PNG

namespace {

struct PngCloser {
  std::FILE* f = nullptr;
  ~PngCloser() {
    if (f) std::fclose(f);
  }
};

}  // namespace

static void save_png_impl(const std::string& path, int width, int height, int channels,
                          const std::vector<std::uint8_t>& bytes) {
  PngCloser fp{std::fopen(path.c_str(), "wb")};
  if (!fp.f) throw std::runtime_error("cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png write failed: " + path);
  }
  png_init_io(png, fp.f);
  png_set_IHDR(png, info, width, height, 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(&bytes[static_cast<std::size_t>(y) * width * channels]);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void save_png_rgb(const std::string& path, int width, int height,
                  const std::vector<double>& rgb01) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(
        std::lround(std::clamp(rgb01[i], 0.0, 1.0) * 255.0));
  save_png_impl(path, width, height, 3, bytes);
}

void save_png_gray(const std::string& path, int width, int height,
                   const std::vector<double>& gray01) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(
        std::lround(std::clamp(gray01[i], 0.0, 1.0) * 255.0));
  save_png_impl(path, width, height, 1, bytes);
}

static std::vector<std::uint8_t> load_png_impl(const std::string& path, int& width, int& height,
                                               int want_channels) {
  PngCloser fp{std::fopen(path.c_str(), "rb")};
  if (!fp.f) throw std::runtime_error("cannot open: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("png read failed: " + path, 0);
  }
  png_init_io(png, fp.f);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  if (want_channels == 3) {
    png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
  } else {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_set_strip_alpha(png);
  }
  png_read_update_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width) * height * want_channels);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = &bytes[static_cast<std::size_t>(y) * width * want_channels];
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  return bytes;
}

std::vector<double> load_png_rgb(const std::string& path, int& width, int& height) {
  const auto bytes = load_png_impl(path, width, height, 3);
  std::vector<double> out(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = bytes[i] / 255.0;
  return out;
}

std::vector<std::uint8_t> load_png_mask(const std::string& path, int& width, int& height) {
  const auto bytes = load_png_impl(path, width, height, 1);
  std::vector<std::uint8_t> out(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = bytes[i] >= 128 ? 1 : 0;
  return out;
}

// --------------------------------------------------------------------- PFM

void save_pfm(const std::string& path, int width, int height, const std::vector<float>& data) {
  if (data.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("save_pfm: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "Pf\n" << width << " " << height << "\n-1.0\n";
  // PFM stores rows bottom-to-top
  for (int y = height - 1; y >= 0; --y)
    write_exact(out, &data[static_cast<std::size_t>(y) * width], sizeof(float) * width);
}

std::vector<float> load_pfm(const std::string& path, int& width, int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string magic;
  in >> magic;
  if (magic != "Pf") throw ParseError("not a grayscale PFM", 0);
  double scale;
  in >> width >> height >> scale;
  if (!in || width <= 0 || height <= 0)
    throw ParseError("bad PFM header", static_cast<std::size_t>(in.tellg()));
  if (scale >= 0) throw ParseError("big-endian PFM unsupported", static_cast<std::size_t>(in.tellg()));
  in.get();  // single whitespace after the scale
  std::vector<float> data(static_cast<std::size_t>(width) * height);
  for (int y = height - 1; y >= 0; --y) {
    const std::size_t offset = static_cast<std::size_t>(in.tellg());
    in.read(reinterpret_cast<char*>(&data[static_cast<std::size_t>(y) * width]),
            sizeof(float) * width);
    if (!in) throw ParseError("truncated PFM payload", offset);
  }
  return data;
}

// --------------------------------------------------------------------- OBJ

void save_mesh_obj(const LabeledMesh& mesh, const std::string& obj_path,
                   const std::string& labels_json_path) {
  std::ofstream out(obj_path);
  if (!out) throw std::runtime_error("cannot open for writing: " + obj_path);
  out.precision(12);
  for (const Vec3& v : mesh.vertices)
    out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";

  std::vector<int> plane_ids;
  for (int p : mesh.triangle_plane)
    if (std::find(plane_ids.begin(), plane_ids.end(), p) == plane_ids.end())
      plane_ids.push_back(p);
  std::sort(plane_ids.begin(), plane_ids.end());

  json labels = json::array();
  for (int pid : plane_ids) {
    const std::string name = "plane_" + std::to_string(pid);
    out << "o " << name << "\n";
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      if (mesh.triangle_plane[t] != pid) continue;
      out << "f " << mesh.triangles[t][0] + 1 << " " << mesh.triangles[t][1] + 1 << " "
          << mesh.triangles[t][2] + 1 << "\n";
    }
    labels.push_back({{"object", name}, {"plane_id", pid}});
  }
  std::ofstream lj(labels_json_path);
  lj << json{{"labels", labels}}.dump(2) << "\n";
}

LabeledMesh load_mesh_obj(const std::string& obj_path, const std::string& labels_json_path) {
  std::map<std::string, int> name_to_plane;
  if (!labels_json_path.empty() && fs::exists(labels_json_path)) {
    std::ifstream lj(labels_json_path);
    json labels = json::parse(lj);
    for (const auto& entry : labels.at("labels"))
      name_to_plane[entry.at("object").get<std::string>()] = entry.at("plane_id").get<int>();
  }

  std::ifstream in(obj_path);
  if (!in) throw std::runtime_error("cannot open: " + obj_path);
  LabeledMesh mesh;
  int current_plane = -1;
  std::string line;
  std::size_t line_start = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "v") {
      Vec3 v;
      ls >> v.x() >> v.y() >> v.z();
      if (ls.fail()) throw ParseError("bad vertex line", line_start);
      mesh.vertices.push_back(v);
    } else if (tok == "o" || tok == "g") {
      std::string name;
      ls >> name;
      auto it = name_to_plane.find(name);
      current_plane = it == name_to_plane.end() ? -1 : it->second;
    } else if (tok == "f") {
      std::array<int, 3> tri;
      for (int k = 0; k < 3; ++k) {
        std::string corner;
        ls >> corner;
        if (corner.empty()) throw ParseError("bad face line", line_start);
        tri[k] = std::stoi(corner) - 1;  // ignore /vt/vn suffixes
        if (tri[k] < 0 || tri[k] >= static_cast<int>(mesh.vertices.size()))
          throw ParseError("face index out of range", line_start);
      }
      mesh.triangles.push_back(tri);
      mesh.triangle_plane.push_back(current_plane);
    }
    line_start += line.size() + 1;
  }
  return mesh;
}

// ------------------------------------------------------------------ dataset

void save_dataset(const Dataset& dataset, const Scene& gt_scene, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "images");
  fs::create_directories(fs::path(dir) / "depths");
  fs::create_directories(fs::path(dir) / "masks");

  json cams = json::array();
  for (std::size_t v = 0; v < dataset.views.size(); ++v) {
    const Camera& c = dataset.views[v].camera;
    std::vector<double> w2c(16, 0.0);
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) w2c[r * 4 + col] = c.rot(r, col);
      w2c[r * 4 + 3] = c.trans[r];
    }
    w2c[15] = 1.0;
    cams.push_back({{"id", c.id},
                    {"split", dataset.views[v].split},
                    {"width", c.width},
                    {"height", c.height},
                    {"fx", c.fx},
                    {"fy", c.fy},
                    {"cx", c.cx},
                    {"cy", c.cy},
                    {"world_to_camera", w2c}});
  }
  {
    std::ofstream out(fs::path(dir) / "cameras.json");
    out << json{{"views", cams}}.dump(2) << "\n";
  }

  for (std::size_t v = 0; v < dataset.views.size(); ++v) {
    const DatasetView& view = dataset.views[v];
    const std::string stem = fmt_view(static_cast<int>(v));
    save_png_rgb((fs::path(dir) / "images" / (stem + ".png")).string(), view.camera.width,
                 view.camera.height, view.image);
    if (!view.depth.empty())
      save_pfm((fs::path(dir) / "depths" / (stem + ".pfm")).string(), view.camera.width,
               view.camera.height, view.depth);
    for (const auto& [mask_id, mask] : view.masks) {
      char mask_name[64];
      std::snprintf(mask_name, sizeof(mask_name), "%s_mask_%04d.png", stem.c_str(), mask_id);
      std::vector<double> gray(mask.size());
      for (std::size_t i = 0; i < mask.size(); ++i) gray[i] = mask[i] ? 1.0 : 0.0;
      save_png_gray((fs::path(dir) / "masks" / mask_name).string(), view.camera.width,
                    view.camera.height, gray);
    }
  }

  json planes = json::array();
  for (const GtPlane& p : dataset.gt_planes)
    planes.push_back({{"id", p.id},
                      {"origin", {p.origin.x(), p.origin.y(), p.origin.z()}},
                      {"normal", {p.normal.x(), p.normal.y(), p.normal.z()}}});
  {
    std::ofstream out(fs::path(dir) / "gt_planes.json");
    out << json{{"planes", planes}}.dump(2) << "\n";
  }
  save_scene_ply(gt_scene, (fs::path(dir) / "gt_scene.ply").string());
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream cam_in(fs::path(dir) / "cameras.json");
  if (!cam_in) throw std::runtime_error("cannot open: " + dir + "/cameras.json");
  const json cams = json::parse(cam_in);

  Dataset dataset;
  int index = 0;
  for (const auto& entry : cams.at("views")) {
    DatasetView view;
    Camera& c = view.camera;
    c.id = entry.at("id").get<int>();
    c.width = entry.at("width").get<int>();
    c.height = entry.at("height").get<int>();
    c.fx = entry.at("fx").get<double>();
    c.fy = entry.at("fy").get<double>();
    c.cx = entry.at("cx").get<double>();
    c.cy = entry.at("cy").get<double>();
    const auto w2c = entry.at("world_to_camera").get<std::vector<double>>();
    if (w2c.size() != 16) throw std::runtime_error("bad world_to_camera in cameras.json");
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) c.rot(r, col) = w2c[r * 4 + col];
      c.trans[r] = w2c[r * 4 + 3];
    }
    view.split = entry.at("split").get<std::string>();

    const std::string stem = fmt_view(index);
    int w = 0, h = 0;
    view.image = load_png_rgb((fs::path(dir) / "images" / (stem + ".png")).string(), w, h);
    if (w != c.width || h != c.height)
      throw std::runtime_error("image resolution mismatch for " + stem);
    const fs::path depth_path = fs::path(dir) / "depths" / (stem + ".pfm");
    if (fs::exists(depth_path)) {
      view.depth = load_pfm(depth_path.string(), w, h);
      if (w != c.width || h != c.height)
        throw std::runtime_error("depth resolution mismatch for " + stem);
    }
    dataset.views.push_back(std::move(view));
    ++index;
  }

  if (fs::exists(fs::path(dir) / "masks")) {
    std::vector<fs::path> mask_files;
    for (const auto& entry : fs::directory_iterator(fs::path(dir) / "masks"))
      mask_files.push_back(entry.path());
    std::sort(mask_files.begin(), mask_files.end());
    for (const auto& p : mask_files) {
      int view = -1, mask_id = -1;
      if (std::sscanf(p.filename().string().c_str(), "view_%d_mask_%d.png", &view, &mask_id) != 2)
        continue;
      if (view < 0 || view >= static_cast<int>(dataset.views.size()))
        throw std::runtime_error("mask references missing view: " + p.string());
      int w = 0, h = 0;
      dataset.views[view].masks[mask_id] = load_png_mask(p.string(), w, h);
    }
  }

  const fs::path gt_planes = fs::path(dir) / "gt_planes.json";
  if (fs::exists(gt_planes)) {
    std::ifstream in(gt_planes);
    const json planes = json::parse(in);
    for (const auto& entry : planes.at("planes")) {
      GtPlane p;
      p.id = entry.at("id").get<int>();
      const auto o = entry.at("origin").get<std::vector<double>>();
      const auto n = entry.at("normal").get<std::vector<double>>();
      p.origin = Vec3(o[0], o[1], o[2]);
      p.normal = Vec3(n[0], n[1], n[2]).normalized();
      dataset.gt_planes.push_back(p);
    }
  }
  return dataset;
}

}  // namespace flatsplat
