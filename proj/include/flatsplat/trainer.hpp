// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "flatsplat/adam.hpp"
#include "flatsplat/dataset.hpp"
#include "flatsplat/losses.hpp"
#include "flatsplat/plane_detect.hpp"

namespace flatsplat {

struct TrainConfig {
  int warmup_iters = 3500;  // use ~5000 when starting from random initialization
  int total_iters = 30000;
  int plane_phase_iters = 10;
  int gaussian_phase_iters = 100;

  double lambda_mask = 0.1;
  double lambda_tv = 0.1;
  double lambda_scale = 0.01;
  double lambda_opacity = 0.01;

  double sigma_perp = 0.01;  // scene units
  double sigma_par = 0.3;

  int budget = 4000;
  int sh_degree = 2;
  double init_opacity = 0.3;

  double lr_position_init = 1.6e-4;  // multiplied by scene extent, decayed
  double lr_position_final = 1.6e-6;
  double lr_scale = 5e-3;
  double lr_rotation = 5e-3;
  double lr_opacity = 5e-2;
  double lr_sh = 2.5e-3;
  double lr_plane_normal = 1e-3;

  double dead_opacity = 0.005;
  double noise_lr = 5e5;
  int relocation_interval = 100;

  std::uint64_t seed = 0;
  std::string mode = "hybrid";  // "hybrid" or "3d-only"
  bool disable_tv = false;
  bool disable_mask = false;
  bool disable_plane_opt = false;
  bool joint_opt = false;
  bool disable_snapping = false;
  bool disable_relocation = false;

  PlaneInitConfig plane_init;
  RenderOptions render;
};

/// Eq.-style relocation probability: beta = [1 - phi(d_perp/s_perp)] *
/// [1 - phi(d_par/s_par)] with phi the standard normal CDF. Range [0, 0.25].
double relocation_probability(double d_perp, double d_par, double sigma_perp, double sigma_par);

/// Stochastically snaps freeform Gaussians projecting into the mask onto the
/// plane, with probability driven by their offset from the nearest planar
/// Gaussian center. No-op when the plane has no planar Gaussians yet.
Scene planar_relocate(const Scene& scene, const Camera& camera,
                      const std::vector<std::uint8_t>& mask, int plane_id, double sigma_perp,
                      double sigma_par, Rng& rng);

/// 3DGS-MCMC dead-Gaussian relocation: primitives below the opacity threshold
/// teleport onto live donors sampled proportionally to opacity; donor opacity
/// and scales are adjusted so the stacked clones approximate the donor's
/// prior contribution. Donor kind is inherited; total count is conserved.
Scene mcmc_relocate_dead(const Scene& scene, Rng& rng, double dead_opacity = 0.005);

/// MCMC exploration noise on freeform positions, gated to near-dead opacity.
void mcmc_position_noise(Scene& scene, Rng& rng, double scale);

struct TrainRecord {
  int iter;
  std::string phase;
  double total, photo, mask, tv, reg_scale, reg_opacity;
  int planes;
  std::size_t planar, freeform;
};

struct TrainResult {
  Scene scene;
  std::vector<TrainRecord> log;
  std::vector<PlaneEvent> plane_events;
  MaskRegistry registry;
};

/// Full training loop: warm-up on freeform Gaussians only, then rounds of
/// plane initialization, block-coordinate plane/Gaussian phases, and
/// relocation at the phase cadence.
TrainResult train(const Dataset& dataset, const TrainConfig& config);

/// Exposed for tests: a single optimization step on one view.
class Trainer {
public:
  Trainer(const Dataset& dataset, const TrainConfig& config);

  Scene& scene() { return scene_; }
  const Scene& scene() const { return scene_; }
  MaskRegistry& registry() { return registry_; }
  double scene_extent() const { return extent_; }

  void init_random_scene();
  void set_scene(Scene scene) { scene_ = std::move(scene); }

  /// One gradient step on plane parameters only (Eq. photo + mask loss).
  TrainRecord plane_phase_step(int view, int iter);
  /// One gradient step on all Gaussian parameters (five-term loss).
  TrainRecord gaussian_phase_step(int view, int iter);
  /// Warm-up / 3d-only step: photometric plus regularizers.
  TrainRecord warmup_step(int view, int iter);
  /// Simultaneous plane+Gaussian step (ablation).
  TrainRecord joint_step(int view, int iter);

  void run_plane_init(int iter);
  void run_relocations(int view, int iter);

  TrainResult run();

private:
  struct LossBundle {
    FrameBuffer fb;
    FrameBufferGrad fb_grad;
    SceneGrads grads;
    TrainRecord record;
  };
  LossBundle compute_losses(int view, int iter, bool with_mask, bool with_tv, bool with_reg);
  double position_lr(int iter) const;

  const Dataset& dataset_;
  TrainConfig cfg_;
  Scene scene_;
  Adam adam_;
  MaskRegistry registry_;
  Rng rng_;
  double extent_ = 1.0;
  Vec3 center_ = Vec3::Zero();
  std::vector<int> train_views_;
  std::vector<PlaneEvent> events_;
};

}  // namespace flatsplat
