// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "flatsplat/dataset.hpp"
#include "flatsplat/mesh_extract.hpp"

namespace flatsplat {

// --- scene PLY (binary little-endian, doubles; see docs/formats.md) ---
void save_scene_ply(const Scene& scene, const std::string& path);
Scene load_scene_ply(const std::string& path);

// --- 8-bit PNG ---
void save_png_rgb(const std::string& path, int width, int height,
                  const std::vector<double>& rgb01);
void save_png_gray(const std::string& path, int width, int height,
                   const std::vector<double>& gray01);
std::vector<double> load_png_rgb(const std::string& path, int& width, int& height);
std::vector<std::uint8_t> load_png_mask(const std::string& path, int& width, int& height);

// --- PFM float32, grayscale, little-endian (bit-exact round trip) ---
void save_pfm(const std::string& path, int width, int height, const std::vector<float>& data);
std::vector<float> load_pfm(const std::string& path, int& width, int& height);

// --- OBJ mesh with one object group per plane + sidecar labels JSON ---
void save_mesh_obj(const LabeledMesh& mesh, const std::string& obj_path,
                   const std::string& labels_json_path);
LabeledMesh load_mesh_obj(const std::string& obj_path, const std::string& labels_json_path);

// --- dataset directory (cameras.json, images/, depths/, masks/, gt files) ---
void save_dataset(const Dataset& dataset, const Scene& gt_scene, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace flatsplat
