// SPDX-License-Identifier: Apache-2.0
#include "flatsplat/metrics.hpp"

#include <algorithm>
#include <map>

namespace flatsplat {

double psnr(const std::vector<double>& pred, const std::vector<double>& gt) {
  if (pred.size() != gt.size() || pred.empty())
    throw std::invalid_argument("psnr: shape mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - gt[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pred.size());
  if (mse < 1e-10) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const std::vector<double>& pred, const std::vector<double>& gt, int width,
            int height) {
  if (pred.size() != gt.size() || pred.size() != static_cast<std::size_t>(3 * width * height))
    throw std::invalid_argument("ssim: shape mismatch");
  constexpr int kRadius = 5;  // 11x11 window
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;

  double window[11][11];
  double wsum = 0.0;
  for (int dy = -kRadius; dy <= kRadius; ++dy)
    for (int dx = -kRadius; dx <= kRadius; ++dx) {
      window[dy + kRadius][dx + kRadius] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
      wsum += window[dy + kRadius][dx + kRadius];
    }
  for (auto& row : window)
    for (double& w : row) w /= wsum;

  if (width < 11 || height < 11) throw std::invalid_argument("ssim: image below window size");

  double total = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < 3; ++c) {
    for (int y = kRadius; y < height - kRadius; ++y) {
      for (int x = kRadius; x < width - kRadius; ++x) {
        double mu1 = 0, mu2 = 0, s11 = 0, s22 = 0, s12 = 0;
        for (int dy = -kRadius; dy <= kRadius; ++dy) {
          for (int dx = -kRadius; dx <= kRadius; ++dx) {
            const double w = window[dy + kRadius][dx + kRadius];
            const std::size_t i = 3 * (static_cast<std::size_t>(y + dy) * width + (x + dx)) + c;
            mu1 += w * pred[i];
            mu2 += w * gt[i];
            s11 += w * pred[i] * pred[i];
            s22 += w * gt[i] * gt[i];
            s12 += w * pred[i] * gt[i];
          }
        }
        const double var1 = s11 - mu1 * mu1;
        const double var2 = s22 - mu2 * mu2;
        const double cov = s12 - mu1 * mu2;
        total += ((2 * mu1 * mu2 + kC1) * (2 * cov + kC2)) /
                 ((mu1 * mu1 + mu2 * mu2 + kC1) * (var1 + var2 + kC2));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

DepthMetrics depth_metrics(const std::vector<double>& pred, const std::vector<double>& gt,
                           const std::vector<std::uint8_t>& validity) {
  if (pred.size() != gt.size() || pred.size() != validity.size())
    throw std::invalid_argument("depth_metrics: shape mismatch");
  DepthMetrics out;
  std::size_t n = 0;
  double se = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!validity[i]) continue;
    ++n;
    const double d = pred[i] - gt[i];
    se += d * d;
    out.mae += std::abs(d);
    out.absrel += std::abs(d) / gt[i];
    const double ratio = std::max(pred[i] / gt[i], gt[i] / pred[i]);
    out.delta1 += ratio < 1.25 ? 1 : 0;
    out.delta2 += ratio < 1.25 * 1.25 ? 1 : 0;
    out.delta3 += ratio < 1.25 * 1.25 * 1.25 ? 1 : 0;
  }
  if (n == 0) throw UndefinedMetricError("depth_metrics: zero valid pixels");
  const double inv = 1.0 / static_cast<double>(n);
  out.rmse = std::sqrt(se * inv);
  out.mae *= inv;
  out.absrel *= inv;
  out.delta1 *= inv;
  out.delta2 *= inv;
  out.delta3 *= inv;
  return out;
}

MeshSamples sample_mesh(const LabeledMesh& mesh, int count, std::uint64_t seed) {
  if (mesh.triangles.empty()) throw UndefinedMetricError("sample_mesh: empty mesh");
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec3& a = mesh.vertices[mesh.triangles[t][0]];
    const Vec3& b = mesh.vertices[mesh.triangles[t][1]];
    const Vec3& c = mesh.vertices[mesh.triangles[t][2]];
    total += 0.5 * (b - a).cross(c - a).norm();
    cumulative[t] = total;
  }
  if (total <= 0) throw UndefinedMetricError("sample_mesh: degenerate mesh");

  MeshSamples out;
  out.points.reserve(count);
  out.labels.reserve(count);
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const double r = rng.uniform(0.0, total);
    const std::size_t t =
        std::min(static_cast<std::size_t>(
                     std::lower_bound(cumulative.begin(), cumulative.end(), r) -
                     cumulative.begin()),
                 mesh.triangles.size() - 1);
    const Vec3& a = mesh.vertices[mesh.triangles[t][0]];
    const Vec3& b = mesh.vertices[mesh.triangles[t][1]];
    const Vec3& c = mesh.vertices[mesh.triangles[t][2]];
    const double su = std::sqrt(rng.uniform());
    const double v = rng.uniform();
    out.points.push_back((1 - su) * a + su * (1 - v) * b + su * v * c);
    out.labels.push_back(mesh.triangle_plane[t]);
  }
  return out;
}

namespace {

std::vector<double> nearest_distances(const std::vector<Vec3>& from,
                                      const std::vector<Vec3>& to) {
  std::vector<double> out(from.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < static_cast<int>(from.size()); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& p : to) best = std::min(best, (from[i] - p).squaredNorm());
    out[i] = std::sqrt(best);
  }
  return out;
}

}  // namespace

MeshDistanceMetrics mesh_distance_metrics(const LabeledMesh& pred, const LabeledMesh& gt,
                                          double tau, int n_samples, std::uint64_t seed) {
  // one shared stream keeps the metric exactly zero for identical meshes and
  // exactly symmetric under argument swap
  const MeshSamples ps = sample_mesh(pred, n_samples, Rng::derive(seed, 1));
  const MeshSamples gs = sample_mesh(gt, n_samples, Rng::derive(seed, 1));

  const auto d_pg = nearest_distances(ps.points, gs.points);
  const auto d_gp = nearest_distances(gs.points, ps.points);

  MeshDistanceMetrics out;
  for (double d : d_pg) {
    out.accuracy += d;
    out.precision += d < tau ? 1 : 0;
  }
  for (double d : d_gp) {
    out.completeness += d;
    out.recall += d < tau ? 1 : 0;
  }
  out.accuracy /= d_pg.size();
  out.completeness /= d_gp.size();
  out.precision /= d_pg.size();
  out.recall /= d_gp.size();
  out.chamfer = 0.5 * (out.accuracy + out.completeness);
  out.f1 = (out.precision + out.recall) > 0
               ? 2 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

SegmentationMetrics segmentation_metrics(const std::vector<int>& pred,
                                         const std::vector<int>& gt) {
  if (pred.size() != gt.size() || pred.empty())
    throw std::invalid_argument("segmentation_metrics: empty or mismatched labelings");
  const double n = static_cast<double>(pred.size());

  std::map<int, double> count_p, count_g;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    count_p[pred[i]] += 1;
    count_g[gt[i]] += 1;
    joint[{pred[i], gt[i]}] += 1;
  }

  SegmentationMetrics out;

  // variation of information: H(pred | gt) + H(gt | pred), natural log
  double h_p = 0, h_g = 0, mi = 0;
  for (const auto& [label, c] : count_p) h_p -= c / n * std::log(c / n);
  for (const auto& [label, c] : count_g) h_g -= c / n * std::log(c / n);
  for (const auto& [labels, c] : joint) {
    const double pxy = c / n;
    mi += pxy * std::log(pxy / (count_p[labels.first] / n * count_g[labels.second] / n));
  }
  out.voi = h_p + h_g - 2 * mi;

  // Rand index via pair counts; a single point has no pairs and scores 1
  auto choose2 = [](double k) { return k * (k - 1) / 2.0; };
  const double pairs = choose2(n);
  if (pairs == 0) {
    out.ri = 1.0;
  } else {
    double sum_joint = 0, sum_p = 0, sum_g = 0;
    for (const auto& [labels, c] : joint) sum_joint += choose2(c);
    for (const auto& [label, c] : count_p) sum_p += choose2(c);
    for (const auto& [label, c] : count_g) sum_g += choose2(c);
    out.ri = (pairs + 2 * sum_joint - sum_p - sum_g) / pairs;
  }

  // segmentation covering of gt by pred: area-weighted best IoU
  for (const auto& [g_label, g_count] : count_g) {
    double best_iou = 0;
    for (const auto& [p_label, p_count] : count_p) {
      auto it = joint.find({p_label, g_label});
      if (it == joint.end()) continue;
      const double inter = it->second;
      best_iou = std::max(best_iou, inter / (g_count + p_count - inter));
    }
    out.sc += g_count / n * best_iou;
  }
  return out;
}

}  // namespace flatsplat
