// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "flatsplat/mesh_extract.hpp"

namespace flatsplat {

/// Peak signal-to-noise ratio for images in [0, 1], capped at 100 dB.
double psnr(const std::vector<double>& pred, const std::vector<double>& gt);

/// SSIM with an 11x11 Gaussian window (sigma 1.5), standard constants,
/// averaged over the valid interior and the three channels.
double ssim(const std::vector<double>& pred, const std::vector<double>& gt, int width,
            int height);

struct DepthMetrics {
  double rmse = 0, mae = 0, absrel = 0;
  double delta1 = 0, delta2 = 0, delta3 = 0;  // thresholds 1.25, 1.25^2, 1.25^3
};

/// Depth errors over pixels where validity is set; throws UndefinedMetricError
/// when no pixel is valid.
DepthMetrics depth_metrics(const std::vector<double>& pred, const std::vector<double>& gt,
                           const std::vector<std::uint8_t>& validity);

struct MeshSamples {
  std::vector<Vec3> points;
  std::vector<int> labels;
};

/// Uniform area-weighted point samples with per-sample plane labels.
MeshSamples sample_mesh(const LabeledMesh& mesh, int count, std::uint64_t seed);

struct MeshDistanceMetrics {
  double accuracy = 0;      // mean nearest distance pred -> gt
  double completeness = 0;  // mean nearest distance gt -> pred
  double chamfer = 0;
  double precision = 0, recall = 0, f1 = 0;  // at threshold tau
};

MeshDistanceMetrics mesh_distance_metrics(const LabeledMesh& pred, const LabeledMesh& gt,
                                          double tau = 0.05, int n_samples = 10000,
                                          std::uint64_t seed = 0);

struct SegmentationMetrics {
  double voi = 0;  // variation of information (natural log)
  double ri = 0;   // Rand index
  double sc = 0;   // segmentation covering of gt by pred
};

/// Clustering agreement between matched label arrays.
SegmentationMetrics segmentation_metrics(const std::vector<int>& pred,
                                         const std::vector<int>& gt);

}  // namespace flatsplat
