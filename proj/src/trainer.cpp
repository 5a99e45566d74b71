// SPDX-License-Identifier: Apache-2.0
#include "flatsplat/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace flatsplat {

double relocation_probability(double d_perp, double d_par, double sigma_perp, double sigma_par) {
  if (d_perp < 0 || d_par < 0)
    throw std::invalid_argument("relocation_probability: negative distance");
  auto phi = [](double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); };
  return (1.0 - phi(d_perp / sigma_perp)) * (1.0 - phi(d_par / sigma_par));
}

Scene planar_relocate(const Scene& scene, const Camera& camera,
                      const std::vector<std::uint8_t>& mask, int plane_id, double sigma_perp,
                      double sigma_par, Rng& rng) {
  const Plane& plane = scene.plane_by_id(plane_id);

  std::vector<Vec3> centers;
  for (const Gaussian2D& g : scene.planar)
    if (g.plane_id == plane_id)
      centers.push_back(plane.to_world(Vec3(g.mean.x(), g.mean.y(), 0.0)));
  if (centers.empty()) return scene;

  const std::size_t npix = static_cast<std::size_t>(camera.width) * camera.height;
  if (mask.size() != npix) throw std::invalid_argument("planar_relocate: resolution mismatch");

  std::vector<int> chosen;
  for (int k = 0; k < static_cast<int>(scene.freeform.size()); ++k) {
    const Gaussian3D& g = scene.freeform[k];
    const Vec3 t = camera.to_camera(g.mean);
    if (t.z() <= 0) continue;
    const int px = static_cast<int>(std::floor(camera.fx * t.x() / t.z() + camera.cx));
    const int py = static_cast<int>(std::floor(camera.fy * t.y() / t.z() + camera.cy));
    if (px < 0 || px >= camera.width || py < 0 || py >= camera.height) continue;
    if (!mask[static_cast<std::size_t>(py) * camera.width + px]) continue;

    double best = std::numeric_limits<double>::infinity();
    const Vec3* nearest = nullptr;
    for (const Vec3& c : centers) {
      const double d = (g.mean - c).squaredNorm();
      if (d < best) {
        best = d;
        nearest = &c;
      }
    }
    const Vec3 offset = g.mean - *nearest;
    const double d_perp = std::abs(offset.dot(plane.normal));
    const double d_par = (offset - offset.dot(plane.normal) * plane.normal).norm();
    const double beta = relocation_probability(d_perp, d_par, sigma_perp, sigma_par);
    if (rng.bernoulli(beta)) chosen.push_back(k);
  }
  if (chosen.empty()) return scene;
  return snap(scene, chosen, plane_id);
}

namespace {

// 3DGS-MCMC relocation rule: opacity and scale of the donor (shared by its
// clones) chosen so the stacked result approximates the donor's prior
// contribution.
void relocation_params(double opacity_old, int n, double& opacity_new, double& scale_factor) {
  n = std::min(n, 51);
  opacity_new = 1.0 - std::pow(1.0 - opacity_old, 1.0 / n);
  double denom = 0.0;
  for (int i = 1; i <= n; ++i) {
    for (int k = 0; k <= i - 1; ++k) {
      double binom = 1.0;
      for (int j = 0; j < k; ++j) binom = binom * (i - 1 - j) / (j + 1);
      denom += binom * (k % 2 == 0 ? 1.0 : -1.0) / std::sqrt(k + 1.0) *
               std::pow(opacity_new, k + 1);
    }
  }
  scale_factor = opacity_old / denom;
}

struct UnifiedRef {
  bool is_planar;
  int idx;
};

}  // namespace

Scene mcmc_relocate_dead(const Scene& scene, Rng& rng, double dead_opacity) {
  const int n_planar = static_cast<int>(scene.planar.size());
  const int n_total = n_planar + static_cast<int>(scene.freeform.size());

  auto opacity_of = [&](int u) {
    return u < n_planar ? scene.planar[u].opacity() : scene.freeform[u - n_planar].opacity();
  };

  std::vector<int> dead, alive;
  for (int u = 0; u < n_total; ++u)
    (opacity_of(u) < dead_opacity ? dead : alive).push_back(u);
  if (dead.empty() || alive.empty()) return scene;

  // donor sampling proportional to opacity
  std::vector<double> cumulative(alive.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alive.size(); ++i) {
    total += opacity_of(alive[i]);
    cumulative[i] = total;
  }
  std::map<int, std::vector<int>> donor_to_dead;  // donor unified idx -> dead list
  for (int d : dead) {
    const double r = rng.uniform(0.0, total);
    const std::size_t pick =
        std::lower_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin();
    donor_to_dead[alive[std::min(pick, alive.size() - 1)]].push_back(d);
  }

  Scene out = scene;
  auto set_unified = [&](int u, const Gaussian2D* g2, const Gaussian3D* g3,
                         std::vector<Gaussian2D>& new_planar,
                         std::vector<Gaussian3D>& new_freeform) {
    (void)u;
    if (g2 != nullptr)
      new_planar.push_back(*g2);
    else
      new_freeform.push_back(*g3);
  };

  // Updated donor/clone parameter sets, indexed by donor.
  std::map<int, Gaussian2D> donor2;
  std::map<int, Gaussian3D> donor3;
  for (const auto& [donor, clones] : donor_to_dead) {
    const int n = 1 + static_cast<int>(clones.size());
    double o_new, s_factor;
    if (donor < n_planar) {
      Gaussian2D g = scene.planar[donor];
      relocation_params(g.opacity(), n, o_new, s_factor);
      g.opacity_logit = logit(std::clamp(o_new, 1e-9, 1.0 - 1e-9));
      g.log_scale.array() += std::log(s_factor);
      donor2[donor] = g;
    } else {
      Gaussian3D g = scene.freeform[donor - n_planar];
      relocation_params(g.opacity(), n, o_new, s_factor);
      g.opacity_logit = logit(std::clamp(o_new, 1e-9, 1.0 - 1e-9));
      g.log_scale.array() += std::log(s_factor);
      donor3[donor] = g;
    }
  }
  std::map<int, int> dead_to_donor;
  for (const auto& [donor, clones] : donor_to_dead)
    for (int d : clones) dead_to_donor[d] = donor;

  std::vector<Gaussian2D> new_planar;
  std::vector<Gaussian3D> new_freeform;
  new_planar.reserve(scene.planar.size());
  new_freeform.reserve(scene.freeform.size());
  for (int u = 0; u < n_total; ++u) {
    auto dd = dead_to_donor.find(u);
    int source = u;
    bool fresh = false;
    if (dd != dead_to_donor.end()) {
      source = dd->second;  // dead primitive becomes a clone of its donor
      fresh = true;
    } else if (donor2.count(u) || donor3.count(u)) {
      fresh = true;  // donor itself was rewritten
    }
    if (source < n_planar) {
      Gaussian2D g = donor2.count(source) ? donor2[source] : scene.planar[source];
      if (fresh) g.uid = out.fresh_uid();
      set_unified(u, &g, nullptr, new_planar, new_freeform);
    } else {
      Gaussian3D g = donor3.count(source) ? donor3[source] : scene.freeform[source - n_planar];
      if (fresh) g.uid = out.fresh_uid();
      set_unified(u, nullptr, &g, new_planar, new_freeform);
    }
  }
  out.planar = std::move(new_planar);
  out.freeform = std::move(new_freeform);
  return out;
}

void mcmc_position_noise(Scene& scene, Rng& rng, double scale) {
  for (Gaussian3D& g : scene.freeform) {
    // gate ~ 0.5 at the dead threshold, ~ 0 for visible primitives
    const double gate = sigmoid(100.0 * (0.005 - g.opacity()));
    const Vec3 eta(rng.normal(), rng.normal(), rng.normal());
    if (gate < 1e-6) continue;
    g.mean += scale * gate * (g.covariance() * eta);
  }
}

Trainer::Trainer(const Dataset& dataset, const TrainConfig& config)
    : dataset_(dataset), cfg_(config), rng_(Rng::derive(config.seed, 0xF1A75, 0)) {
  train_views_ = dataset.train_indices();
  if (train_views_.empty()) throw std::invalid_argument("train: dataset has no training views");

  center_ = Vec3::Zero();
  for (int v : train_views_) center_ += dataset.views[v].camera.center();
  center_ /= static_cast<double>(train_views_.size());
  extent_ = 0.0;
  for (int v : train_views_)
    extent_ = std::max(extent_, (dataset.views[v].camera.center() - center_).norm());
  extent_ = std::max(extent_ * 1.1, 1e-6);
}

void Trainer::init_random_scene() {
  Rng rng(Rng::derive(cfg_.seed, 0x1417, 1));
  scene_ = Scene{};
  scene_.sh_degree = cfg_.sh_degree;
  const double half = 2.5 * extent_;
  const double init_scale = 0.5 * 2.0 * half / std::cbrt(static_cast<double>(cfg_.budget));
  for (int i = 0; i < cfg_.budget; ++i) {
    Gaussian3D g;
    g.mean = center_ + Vec3(rng.uniform(-half, half), rng.uniform(-half, half),
                            rng.uniform(-half, half));
    g.log_scale = Vec3::Constant(std::log(init_scale));
    g.rot = Vec4(1, 0, 0, 0);
    g.opacity_logit = logit(cfg_.init_opacity);
    g.sh = VecX::Zero(scene_.sh_coeffs());
    constexpr double c0 = 0.28209479177387814;
    for (int c = 0; c < 3; ++c) g.sh[c] = (rng.uniform(0.2, 0.8) - 0.5) / c0;
    g.uid = scene_.fresh_uid();
    scene_.freeform.push_back(g);
  }
}

double Trainer::position_lr(int iter) const {
  const double t = std::clamp(static_cast<double>(iter) / std::max(cfg_.total_iters, 1), 0.0, 1.0);
  const double log_lr = std::lerp(std::log(cfg_.lr_position_init * extent_),
                                  std::log(cfg_.lr_position_final * extent_), t);
  return std::exp(log_lr);
}

Trainer::LossBundle Trainer::compute_losses(int view, int iter, bool with_mask, bool with_tv,
                                            bool with_reg) {
  (void)iter;
  const DatasetView& dv = dataset_.views[view];
  LossBundle out;
  out.fb = render(scene_, dv.camera, cfg_.render);
  out.record = TrainRecord{};

  out.record.photo = loss_photo(out.fb, dv.image, 1.0, out.fb_grad);

  if (with_mask && !cfg_.disable_mask && !scene_.planes.empty()) {
    // planes observed in this view through their consumed masks
    std::vector<std::pair<int, const std::vector<std::uint8_t>*>> present;
    for (const auto& [mask_id, plane_id] : registry_.assigned) {
      auto it = dv.masks.find(mask_id);
      if (it == dv.masks.end()) continue;
      const int slot = scene_.plane_slot(plane_id);
      if (slot >= 0) present.push_back({slot, &it->second});
    }
    if (!present.empty()) {
      const double w = cfg_.lambda_mask / static_cast<double>(present.size());
      double total = 0.0;
      for (const auto& [slot, mask] : present)
        total += loss_mask(out.fb, slot, *mask, w, out.fb_grad);
      out.record.mask = total / static_cast<double>(present.size());
    }
  }
  if (with_tv && !cfg_.disable_tv)
    out.record.tv = loss_tv(out.fb, cfg_.lambda_tv, out.fb_grad, cfg_.render.min_acc_alpha);

  out.grads = render_backward(scene_, dv.camera, out.fb, out.fb_grad, cfg_.render);

  if (with_reg) {
    const RegLoss reg = loss_reg(scene_, cfg_.lambda_scale, cfg_.lambda_opacity, out.grads);
    out.record.reg_scale = reg.scale;
    out.record.reg_opacity = reg.opacity;
  }
  out.record.total = out.record.photo + cfg_.lambda_mask * out.record.mask +
                     cfg_.lambda_tv * out.record.tv + cfg_.lambda_scale * out.record.reg_scale +
                     cfg_.lambda_opacity * out.record.reg_opacity;
  out.record.planes = static_cast<int>(scene_.planes.size());
  out.record.planar = scene_.planar.size();
  out.record.freeform = scene_.freeform.size();
  return out;
}

TrainRecord Trainer::warmup_step(int view, int iter) {
  LossBundle bundle = compute_losses(view, iter, false, false, true);
  LearningRates lrs;
  lrs.position = position_lr(iter);
  lrs.scale = cfg_.lr_scale;
  lrs.rotation = cfg_.lr_rotation;
  lrs.opacity = cfg_.lr_opacity;
  lrs.sh = cfg_.lr_sh;
  adam_.step(scene_, bundle.grads, lrs, true, false);
  bundle.record.iter = iter;
  bundle.record.phase = "warmup";
  return bundle.record;
}

TrainRecord Trainer::plane_phase_step(int view, int iter) {
  LossBundle bundle = compute_losses(view, iter, true, false, false);
  LearningRates lrs;
  lrs.plane_origin = position_lr(iter);
  lrs.plane_normal = cfg_.lr_plane_normal;
  adam_.step(scene_, bundle.grads, lrs, false, true);
  bundle.record.iter = iter;
  bundle.record.phase = "plane";
  return bundle.record;
}

TrainRecord Trainer::gaussian_phase_step(int view, int iter) {
  LossBundle bundle = compute_losses(view, iter, true, true, true);
  LearningRates lrs;
  lrs.position = position_lr(iter);
  lrs.scale = cfg_.lr_scale;
  lrs.rotation = cfg_.lr_rotation;
  lrs.opacity = cfg_.lr_opacity;
  lrs.sh = cfg_.lr_sh;
  adam_.step(scene_, bundle.grads, lrs, true, false);
  bundle.record.iter = iter;
  bundle.record.phase = "gaussian";
  return bundle.record;
}

TrainRecord Trainer::joint_step(int view, int iter) {
  LossBundle bundle = compute_losses(view, iter, true, true, true);
  LearningRates lrs;
  lrs.position = position_lr(iter);
  lrs.scale = cfg_.lr_scale;
  lrs.rotation = cfg_.lr_rotation;
  lrs.opacity = cfg_.lr_opacity;
  lrs.sh = cfg_.lr_sh;
  lrs.plane_origin = position_lr(iter);
  lrs.plane_normal = cfg_.lr_plane_normal;
  adam_.step(scene_, bundle.grads, lrs, true, true);
  bundle.record.iter = iter;
  bundle.record.phase = "joint";
  return bundle.record;
}

void Trainer::run_plane_init(int iter) {
  Rng rng(Rng::derive(cfg_.seed, 0x9A5C, static_cast<std::uint64_t>(iter)));
  if (cfg_.disable_snapping) {
    // detection still runs; inliers stay freeform
    std::vector<PlaneEvent> local;
    MaskRegistry reg_copy = registry_;
    Scene after = plane_init_round(scene_, dataset_, reg_copy, cfg_.plane_init, rng, cfg_.render,
                                   &local);
    // keep the new planes and consumed masks, drop the snaps
    for (const auto& ev : local) {
      if (scene_.plane_slot(ev.plane_id) < 0) {
        for (const auto& p : after.planes)
          if (p.id == ev.plane_id) scene_.planes.push_back(p);
      }
      registry_.assigned[ev.mask_id] = ev.plane_id;
      events_.push_back(ev);
    }
    return;
  }
  std::vector<PlaneEvent> local;
  scene_ = plane_init_round(scene_, dataset_, registry_, cfg_.plane_init, rng, cfg_.render,
                            &local);
  events_.insert(events_.end(), local.begin(), local.end());
}

void Trainer::run_relocations(int view, int iter) {
  if (!cfg_.disable_relocation && !scene_.planes.empty()) {
    Rng rng(Rng::derive(cfg_.seed, 0x8E10C, static_cast<std::uint64_t>(iter)));
    const DatasetView& dv = dataset_.views[view];
    for (const auto& [mask_id, plane_id] : registry_.assigned) {
      auto it = dv.masks.find(mask_id);
      if (it == dv.masks.end()) continue;
      scene_ = planar_relocate(scene_, dv.camera, it->second, plane_id, cfg_.sigma_perp,
                               cfg_.sigma_par, rng);
    }
  }
  Rng rng(Rng::derive(cfg_.seed, 0xDEAD, static_cast<std::uint64_t>(iter)));
  scene_ = mcmc_relocate_dead(scene_, rng, cfg_.dead_opacity);
  mcmc_position_noise(scene_, rng, cfg_.noise_lr * position_lr(iter));
}

TrainResult Trainer::run() {
  init_random_scene();
  TrainResult result;

  const bool three_d_only = cfg_.mode == "3d-only";
  const int effective_warmup = three_d_only ? cfg_.total_iters : cfg_.warmup_iters;

  std::vector<int> order;
  std::size_t cursor = 0;
  int epoch = 0;
  auto next_view = [&]() {
    if (cursor >= order.size()) {
      order = train_views_;
      Rng shuffler(Rng::derive(cfg_.seed, 0x5EED, static_cast<std::uint64_t>(epoch++)));
      std::shuffle(order.begin(), order.end(), shuffler.engine());
      cursor = 0;
    }
    return order[cursor++];
  };

  int iter = 0;
  int last_view = train_views_.front();

  // ---- warm-up: freeform-only 3DGS-style optimization ----
  while (iter < effective_warmup && iter < cfg_.total_iters) {
    last_view = next_view();
    result.log.push_back(warmup_step(last_view, iter));
    ++iter;
    if (iter % cfg_.relocation_interval == 0) {
      Rng rng(Rng::derive(cfg_.seed, 0xDEAD, static_cast<std::uint64_t>(iter)));
      scene_ = mcmc_relocate_dead(scene_, rng, cfg_.dead_opacity);
      mcmc_position_noise(scene_, rng, cfg_.noise_lr * position_lr(iter));
    }
  }

  // ---- planar rounds ----
  while (iter < cfg_.total_iters) {
    run_plane_init(iter);

    if (cfg_.joint_opt) {
      const int round_iters = cfg_.plane_phase_iters + cfg_.gaussian_phase_iters;
      for (int k = 0; k < round_iters && iter < cfg_.total_iters; ++k) {
        last_view = next_view();
        result.log.push_back(joint_step(last_view, iter));
        ++iter;
        if (iter % cfg_.relocation_interval == 0) run_relocations(last_view, iter);
      }
      continue;
    }

    if (!cfg_.disable_plane_opt && !scene_.planes.empty()) {
      for (int k = 0; k < cfg_.plane_phase_iters && iter < cfg_.total_iters; ++k) {
        last_view = next_view();
        result.log.push_back(plane_phase_step(last_view, iter));
        ++iter;
      }
    }
    for (int k = 0; k < cfg_.gaussian_phase_iters && iter < cfg_.total_iters; ++k) {
      last_view = next_view();
      result.log.push_back(gaussian_phase_step(last_view, iter));
      ++iter;
      if (iter % cfg_.relocation_interval == 0) run_relocations(last_view, iter);
    }
  }

  result.scene = scene_;
  result.plane_events = events_;
  result.registry = registry_;
  return result;
}

TrainResult train(const Dataset& dataset, const TrainConfig& config) {
  Trainer trainer(dataset, config);
  return trainer.run();
}

}  // namespace flatsplat
