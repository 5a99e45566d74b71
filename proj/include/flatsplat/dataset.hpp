// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "flatsplat/scene.hpp"

namespace flatsplat {

struct DatasetView {
  Camera camera;
  std::string split = "train";                    // "train" or "test"
  std::vector<double> image;                      // 3*W*H in [0,1]
  std::vector<float> depth;                       // W*H ground-truth depth, 0 = undefined
  std::map<int, std::vector<std::uint8_t>> masks; // mask id -> binary mask
};

struct GtPlane {
  int id = -1;
  Vec3 origin = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

struct Dataset {
  std::vector<DatasetView> views;
  std::vector<GtPlane> gt_planes;  // present for synthetic data

  std::vector<int> split_indices(const std::string& split) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(views.size()); ++i)
      if (views[i].split == split) out.push_back(i);
    return out;
  }
  std::vector<int> train_indices() const { return split_indices("train"); }
  std::vector<int> test_indices() const { return split_indices("test"); }

  /// All mask ids appearing in any train view, ascending.
  std::vector<int> train_mask_ids() const {
    std::vector<int> ids;
    for (const auto& v : views) {
      if (v.split != "train") continue;
      for (const auto& [id, m] : v.masks)
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  }
};

}  // namespace flatsplat
