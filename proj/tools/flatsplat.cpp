// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface for the hybrid planar/freeform Gaussian pipeline:
// dataset synthesis, training, rendering, mesh extraction, and evaluation.

#include <CLI11.hpp>
#include <json.hpp>

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "flatsplat/io.hpp"
#include "flatsplat/metrics.hpp"
#include "flatsplat/render.hpp"
#include "flatsplat/synth.hpp"
#include "flatsplat/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace flatsplat;

namespace {

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("missing file: " + path);
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"warmup_iters", c.warmup_iters},
              {"total_iters", c.total_iters},
              {"plane_phase_iters", c.plane_phase_iters},
              {"gaussian_phase_iters", c.gaussian_phase_iters},
              {"lambda_mask", c.lambda_mask},
              {"lambda_tv", c.lambda_tv},
              {"lambda_scale", c.lambda_scale},
              {"lambda_opacity", c.lambda_opacity},
              {"sigma_perp", c.sigma_perp},
              {"sigma_par", c.sigma_par},
              {"budget", c.budget},
              {"sh_degree", c.sh_degree},
              {"init_opacity", c.init_opacity},
              {"lr_position_init", c.lr_position_init},
              {"lr_position_final", c.lr_position_final},
              {"lr_scale", c.lr_scale},
              {"lr_rotation", c.lr_rotation},
              {"lr_opacity", c.lr_opacity},
              {"lr_sh", c.lr_sh},
              {"lr_plane_normal", c.lr_plane_normal},
              {"dead_opacity", c.dead_opacity},
              {"noise_lr", c.noise_lr},
              {"relocation_interval", c.relocation_interval},
              {"seed", c.seed},
              {"mode", c.mode},
              {"disable_tv", c.disable_tv},
              {"disable_mask", c.disable_mask},
              {"disable_plane_opt", c.disable_plane_opt},
              {"joint_opt", c.joint_opt},
              {"disable_snapping", c.disable_snapping},
              {"disable_relocation", c.disable_relocation},
              {"ransac_eps", c.plane_init.eps},
              {"ransac_iters", c.plane_init.ransac_iters},
              {"min_inliers", c.plane_init.min_inliers},
              {"alpha_th", c.plane_init.alpha_th},
              {"d_th", c.plane_init.d_th},
              {"merge_angle_deg", c.plane_init.merge_angle * 180.0 / M_PI},
              {"merge_dist", c.plane_init.merge_dist}};
}

void train_config_from_json(const json& j, TrainConfig& c) {
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  get("warmup_iters", c.warmup_iters);
  get("total_iters", c.total_iters);
  get("plane_phase_iters", c.plane_phase_iters);
  get("gaussian_phase_iters", c.gaussian_phase_iters);
  get("lambda_mask", c.lambda_mask);
  get("lambda_tv", c.lambda_tv);
  get("lambda_scale", c.lambda_scale);
  get("lambda_opacity", c.lambda_opacity);
  get("sigma_perp", c.sigma_perp);
  get("sigma_par", c.sigma_par);
  get("budget", c.budget);
  get("sh_degree", c.sh_degree);
  get("init_opacity", c.init_opacity);
  get("lr_position_init", c.lr_position_init);
  get("lr_position_final", c.lr_position_final);
  get("lr_scale", c.lr_scale);
  get("lr_rotation", c.lr_rotation);
  get("lr_opacity", c.lr_opacity);
  get("lr_sh", c.lr_sh);
  get("lr_plane_normal", c.lr_plane_normal);
  get("dead_opacity", c.dead_opacity);
  get("noise_lr", c.noise_lr);
  get("relocation_interval", c.relocation_interval);
  get("seed", c.seed);
  get("mode", c.mode);
  get("disable_tv", c.disable_tv);
  get("disable_mask", c.disable_mask);
  get("disable_plane_opt", c.disable_plane_opt);
  get("joint_opt", c.joint_opt);
  get("disable_snapping", c.disable_snapping);
  get("disable_relocation", c.disable_relocation);
  get("ransac_eps", c.plane_init.eps);
  get("ransac_iters", c.plane_init.ransac_iters);
  get("min_inliers", c.plane_init.min_inliers);
  get("alpha_th", c.plane_init.alpha_th);
  get("d_th", c.plane_init.d_th);
  if (j.contains("merge_angle_deg"))
    c.plane_init.merge_angle = j.at("merge_angle_deg").get<double>() * M_PI / 180.0;
  get("merge_dist", c.plane_init.merge_dist);
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

// ----------------------------------------------------------------- commands

int cmd_synth(const std::string& config_path, const std::string& out_dir, std::uint64_t seed) {
  BoxSceneConfig cfg;
  if (!config_path.empty()) {
    require_file(config_path);
    cfg = box_config_from_json_file(config_path);
  }
  std::cerr << "generating box scene (seed " << seed << ")\n";
  const BoxScene box = generate_box_scene(cfg, seed);
  fs::create_directories(out_dir);
  save_dataset(box.dataset, box.gt_scene, out_dir);
  const LabeledMesh gt_mesh = box_gt_mesh(cfg);
  save_mesh_obj(gt_mesh, (fs::path(out_dir) / "gt_mesh.obj").string(),
                (fs::path(out_dir) / "gt_mesh_labels.json").string());
  box_config_to_json_file(cfg, (fs::path(out_dir) / "config.json").string());
  {
    json meta{{"seed", seed}};
    write_json(meta, (fs::path(out_dir) / "seed.json").string());
  }
  std::cerr << "wrote " << box.dataset.views.size() << " views to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& dataset_dir, const std::string& out_dir, const TrainConfig& cfg) {
  require_file(dataset_dir + "/cameras.json");
  const Dataset dataset = load_dataset(dataset_dir);
  std::cerr << "training: " << cfg.mode << " mode, " << cfg.total_iters << " iters, budget "
            << cfg.budget << "\n";

  const TrainResult result = train(dataset, cfg);

  fs::create_directories(out_dir);
  save_scene_ply(result.scene, (fs::path(out_dir) / "scene.ply").string());
  write_json(train_config_to_json(cfg), (fs::path(out_dir) / "train_config.json").string());

  std::ofstream log((fs::path(out_dir) / "train_log.jsonl").string());
  for (const auto& rec : result.log) {
    log << json{{"iter", rec.iter},       {"phase", rec.phase},
                {"total", rec.total},     {"photo", rec.photo},
                {"mask", rec.mask},       {"tv", rec.tv},
                {"reg_scale", rec.reg_scale}, {"reg_opacity", rec.reg_opacity},
                {"planes", rec.planes},   {"planar", rec.planar},
                {"freeform", rec.freeform}}
            .dump()
        << "\n";
  }
  for (const auto& ev : result.plane_events) {
    log << json{{"event", "plane_accepted"}, {"mask_id", ev.mask_id},     {"view", ev.view},
                {"plane_id", ev.plane_id},   {"inliers", ev.inliers},     {"merged", ev.merged}}
            .dump()
        << "\n";
  }
  std::cerr << "planes: " << result.scene.planes.size() << ", planar "
            << result.scene.planar.size() << " / freeform " << result.scene.freeform.size()
            << "\n";
  return 0;
}

int cmd_render(const std::string& scene_path, const std::string& dataset_dir, int view_idx,
               const std::string& out_prefix) {
  require_file(scene_path);
  require_file(dataset_dir + "/cameras.json");
  Scene scene = load_scene_ply(scene_path);
  const Dataset dataset = load_dataset(dataset_dir);
  if (view_idx < 0 || view_idx >= static_cast<int>(dataset.views.size()))
    throw UsageError("view index out of range");
  const Camera& cam = dataset.views[view_idx].camera;

  const FrameBuffer fb = render(scene, cam);
  save_png_rgb(out_prefix + "_color.png", fb.width, fb.height, fb.rgb);

  std::vector<float> depth(fb.depth.begin(), fb.depth.end());
  save_pfm(out_prefix + "_depth.pfm", fb.width, fb.height, depth);
  double max_depth = 1e-9;
  for (double d : fb.depth) max_depth = std::max(max_depth, d);
  std::vector<double> depth_vis(fb.depth.size());
  for (std::size_t i = 0; i < fb.depth.size(); ++i) depth_vis[i] = fb.depth[i] / max_depth;
  save_png_gray(out_prefix + "_depth.png", fb.width, fb.height, depth_vis);

  const std::size_t npix = fb.depth.size();
  for (int s = 0; s < fb.num_planes; ++s) {
    std::vector<double> mask(npix);
    for (std::size_t i = 0; i < npix; ++i) mask[i] = fb.plane_masks[s * npix + i];
    save_png_gray(out_prefix + "_mask_" + std::to_string(scene.planes[s].id) + ".png", fb.width,
                  fb.height, mask);
  }
  std::cerr << "rendered view " << view_idx << " to " << out_prefix << "_*.png\n";
  return 0;
}

int cmd_extract_mesh(const std::string& scene_path, const std::string& dataset_dir,
                     const std::string& out_obj, std::string labels_path,
                     const MeshExtractConfig& cfg) {
  require_file(scene_path);
  require_file(dataset_dir + "/cameras.json");
  const Scene scene = load_scene_ply(scene_path);
  const Dataset dataset = load_dataset(dataset_dir);
  if (labels_path.empty())
    labels_path = fs::path(out_obj).replace_extension().string() + "_labels.json";

  LabeledMesh mesh;
  for (const Plane& plane : scene.planes) {
    const PlanarMesh part = extract_plane_mesh(scene, plane, dataset, cfg);
    std::cerr << "plane " << plane.id << ": " << part.triangles.size() << " triangles\n";
    mesh.append(part);
  }
  save_mesh_obj(mesh, out_obj, labels_path);
  std::cerr << "wrote " << mesh.triangles.size() << " triangles to " << out_obj << "\n";
  return 0;
}

int cmd_eval_nvs(const std::string& scene_path, const std::string& dataset_dir,
                 const std::string& out_path, const std::string& split) {
  require_file(scene_path);
  require_file(dataset_dir + "/cameras.json");
  const Scene scene = load_scene_ply(scene_path);
  const Dataset dataset = load_dataset(dataset_dir);
  const auto indices = dataset.split_indices(split);
  if (indices.empty()) throw UsageError("no views in split '" + split + "'");

  double psnr_sum = 0, ssim_sum = 0;
  DepthMetrics depth_sum;
  double planar_se = 0;
  std::size_t planar_n = 0;
  int depth_views = 0;
  for (int v : indices) {
    const DatasetView& view = dataset.views[v];
    const FrameBuffer fb = render(scene, view.camera);
    psnr_sum += psnr(fb.rgb, view.image);
    ssim_sum += ssim(fb.rgb, view.image, fb.width, fb.height);
    if (view.depth.empty()) continue;
    std::vector<double> gt(view.depth.begin(), view.depth.end());
    std::vector<std::uint8_t> validity(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) validity[i] = gt[i] > 0 ? 1 : 0;
    const DepthMetrics dm = depth_metrics(fb.depth, gt, validity);
    depth_sum.rmse += dm.rmse;
    depth_sum.mae += dm.mae;
    depth_sum.absrel += dm.absrel;
    depth_sum.delta1 += dm.delta1;
    depth_sum.delta2 += dm.delta2;
    depth_sum.delta3 += dm.delta3;
    ++depth_views;

    // depth error restricted to ground-truth planar-mask pixels
    for (const auto& [mask_id, mask] : view.masks) {
      for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i] || !validity[i]) continue;
        planar_se += (fb.depth[i] - gt[i]) * (fb.depth[i] - gt[i]);
        ++planar_n;
      }
    }
  }

  json out{{"psnr", psnr_sum / indices.size()},
           {"ssim", ssim_sum / indices.size()},
           {"n_views", indices.size()},
           {"n_primitives", scene.total_primitives()},
           {"pct_planar",
            scene.total_primitives() == 0
                ? 0.0
                : 100.0 * scene.planar.size() / scene.total_primitives()},
           {"n_planes", scene.planes.size()}};
  if (depth_views > 0) {
    out["rmse"] = depth_sum.rmse / depth_views;
    out["mae"] = depth_sum.mae / depth_views;
    out["absrel"] = depth_sum.absrel / depth_views;
    out["delta_1"] = depth_sum.delta1 / depth_views;
    out["delta_2"] = depth_sum.delta2 / depth_views;
    out["delta_3"] = depth_sum.delta3 / depth_views;
  }
  if (planar_n > 0) out["rmse_planar"] = std::sqrt(planar_se / planar_n);

  if (!out_path.empty()) write_json(out, out_path);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_eval_mesh(const std::string& pred_path, const std::string& pred_labels,
                  const std::string& gt_path, const std::string& gt_labels,
                  const std::string& out_path, double tau, int samples, std::uint64_t seed) {
  require_file(pred_path);
  require_file(gt_path);
  const LabeledMesh pred = load_mesh_obj(pred_path, pred_labels);
  const LabeledMesh gt = load_mesh_obj(gt_path, gt_labels);

  const MeshDistanceMetrics dist = mesh_distance_metrics(pred, gt, tau, samples, seed);

  // segmentation agreement on nearest-neighbor-matched samples
  const MeshSamples ps = sample_mesh(pred, samples, Rng::derive(seed, 1));
  const MeshSamples gs = sample_mesh(gt, samples, Rng::derive(seed, 1));
  std::vector<int> matched_pred(gs.points.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < static_cast<int>(gs.points.size()); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int label = -1;
    for (std::size_t j = 0; j < ps.points.size(); ++j) {
      const double d = (gs.points[i] - ps.points[j]).squaredNorm();
      if (d < best) {
        best = d;
        label = ps.labels[j];
      }
    }
    matched_pred[i] = label;
  }
  const SegmentationMetrics seg = segmentation_metrics(matched_pred, gs.labels);

  const json out{{"accuracy", dist.accuracy},
                 {"completeness", dist.completeness},
                 {"chamfer", dist.chamfer},
                 {"precision", dist.precision},
                 {"recall", dist.recall},
                 {"f1", dist.f1},
                 {"voi", seg.voi},
                 {"ri", seg.ri},
                 {"sc", seg.sc}};
  if (!out_path.empty()) write_json(out, out_path);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& entries, const std::string& out_path) {
  std::ostringstream md;
  md << "| Method | RMSE↓ | MAE↓ | AbsRel↓ | δ<1.25↑ | δ<1.25²↑ | δ<1.25³↑ | PSNR↑ | SSIM↑ | "
        "#primitives | (%planar) |\n";
  md << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  auto cell = [](const json& j, const char* key, int precision = 3) -> std::string {
    if (!j.contains(key)) return "--";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, j.at(key).get<double>());
    return buf;
  };
  for (const std::string& entry : entries) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw UsageError("report entries must be label=metrics.json, got: " + entry);
    const std::string label = entry.substr(0, eq);
    const std::string path = entry.substr(eq + 1);
    require_file(path);
    std::ifstream in(path);
    const json j = json::parse(in);
    md << "| " << label << " | " << cell(j, "rmse") << " | " << cell(j, "mae") << " | "
       << cell(j, "absrel") << " | " << cell(j, "delta_1") << " | " << cell(j, "delta_2")
       << " | " << cell(j, "delta_3") << " | " << cell(j, "psnr", 2) << " | "
       << cell(j, "ssim") << " | ";
    if (j.contains("n_primitives"))
      md << j.at("n_primitives").get<std::size_t>();
    else
      md << "--";
    md << " | ";
    if (j.contains("pct_planar")) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "(%.1f%%)", j.at("pct_planar").get<double>());
      md << buf;
    } else {
      md << "--";
    }
    md << " |\n";
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << md.str();
  }
  std::cout << md.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid planar/freeform Gaussian scene reconstruction"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "cap internal parallelism (0 = library default)");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic box-room dataset");
  std::string synth_config, synth_out = "dataset";
  std::uint64_t synth_seed = 0;
  synth->add_option("--config", synth_config, "box scene config JSON");
  synth->add_option("--out", synth_out, "output dataset directory")->required();
  synth->add_option("--seed", synth_seed, "rng seed");

  // train
  auto* tr = app.add_subcommand("train", "optimize a scene on a dataset");
  std::string train_dataset, train_out = "run", train_config_path;
  TrainConfig tc;
  tr->add_option("--dataset", train_dataset, "dataset directory")->required();
  tr->add_option("--out", train_out, "output directory")->required();
  tr->add_option("--config", train_config_path, "train config JSON");
  tr->add_option("--seed", tc.seed, "rng seed");
  tr->add_option("--mode", tc.mode, "hybrid or 3d-only")
      ->check(CLI::IsMember({"hybrid", "3d-only"}));
  tr->add_option("--total-iters", tc.total_iters);
  tr->add_option("--warmup-iters", tc.warmup_iters);
  tr->add_option("--plane-phase-iters", tc.plane_phase_iters);
  tr->add_option("--gaussian-phase-iters", tc.gaussian_phase_iters);
  tr->add_option("--budget", tc.budget);
  tr->add_option("--sh-degree", tc.sh_degree);
  tr->add_option("--lambda-mask", tc.lambda_mask);
  tr->add_option("--lambda-tv", tc.lambda_tv);
  tr->add_option("--lambda-scale", tc.lambda_scale);
  tr->add_option("--lambda-opacity", tc.lambda_opacity);
  tr->add_option("--sigma-perp", tc.sigma_perp);
  tr->add_option("--sigma-par", tc.sigma_par);
  tr->add_flag("--disable-tv", tc.disable_tv);
  tr->add_flag("--disable-mask", tc.disable_mask);
  tr->add_flag("--disable-plane-opt", tc.disable_plane_opt);
  tr->add_flag("--joint-opt", tc.joint_opt);
  tr->add_flag("--disable-snapping", tc.disable_snapping);
  tr->add_flag("--disable-relocation", tc.disable_relocation);

  // render
  auto* rd = app.add_subcommand("render", "render one dataset view from a scene");
  std::string render_scene, render_dataset, render_out = "render";
  int render_view = 0;
  rd->add_option("--scene", render_scene, "scene PLY")->required();
  rd->add_option("--dataset", render_dataset, "dataset directory (cameras)")->required();
  rd->add_option("--view", render_view, "view index");
  rd->add_option("--out", render_out, "output prefix");

  // extract-mesh
  auto* em = app.add_subcommand("extract-mesh", "extract the planar mesh from a scene");
  std::string em_scene, em_dataset, em_out = "mesh.obj", em_labels;
  MeshExtractConfig em_cfg;
  em->add_option("--scene", em_scene, "scene PLY")->required();
  em->add_option("--dataset", em_dataset, "dataset directory (masks + cameras)")->required();
  em->add_option("--out", em_out, "output OBJ path");
  em->add_option("--labels", em_labels, "labels JSON path (default: <out>_labels.json)");
  em->add_option("--voxel", em_cfg.voxel, "downsample voxel size");
  em->add_option("--cell", em_cfg.cell, "occupancy cell size");
  em->add_option("--min-contour", em_cfg.min_contour_vertices, "minimum contour vertices");

  // eval-nvs
  auto* en = app.add_subcommand("eval-nvs", "image and depth metrics against a dataset");
  std::string en_scene, en_dataset, en_out, en_split = "test";
  en->add_option("--scene", en_scene, "scene PLY")->required();
  en->add_option("--dataset", en_dataset, "dataset directory")->required();
  en->add_option("--out", en_out, "metrics JSON output");
  en->add_option("--split", en_split, "dataset split to evaluate");

  // eval-mesh
  auto* em2 = app.add_subcommand("eval-mesh", "mesh and segmentation metrics");
  std::string evm_pred, evm_pred_labels, evm_gt, evm_gt_labels, evm_out;
  double evm_tau = 0.05;
  int evm_samples = 10000;
  std::uint64_t evm_seed = 0;
  em2->add_option("--pred", evm_pred, "predicted mesh OBJ")->required();
  em2->add_option("--pred-labels", evm_pred_labels, "predicted labels JSON");
  em2->add_option("--gt", evm_gt, "ground-truth mesh OBJ")->required();
  em2->add_option("--gt-labels", evm_gt_labels, "ground-truth labels JSON");
  em2->add_option("--out", evm_out, "metrics JSON output");
  em2->add_option("--tau", evm_tau, "distance threshold");
  em2->add_option("--samples", evm_samples, "surface samples per mesh");
  em2->add_option("--seed", evm_seed, "sampling seed");

  // report
  auto* rp = app.add_subcommand("report", "markdown summary table from metrics files");
  std::vector<std::string> rp_entries;
  std::string rp_out;
  rp->add_option("--metrics", rp_entries, "entries label=metrics.json")->required();
  rp->add_option("--out", rp_out, "markdown output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*synth) return cmd_synth(synth_config, synth_out, synth_seed);
    if (*tr) {
      TrainConfig cfg;  // defaults < config file < explicit CLI flags
      if (!train_config_path.empty()) {
        require_file(train_config_path);
        std::ifstream in(train_config_path);
        train_config_from_json(json::parse(in), cfg);
      }
      // CLI11 already wrote parsed flags into tc; copy only explicitly set ones
      auto apply_if = [&](const char* name, auto member) {
        if (tr->get_option(name)->count() > 0) cfg.*member = tc.*member;
      };
      apply_if("--seed", &TrainConfig::seed);
      apply_if("--mode", &TrainConfig::mode);
      apply_if("--total-iters", &TrainConfig::total_iters);
      apply_if("--warmup-iters", &TrainConfig::warmup_iters);
      apply_if("--plane-phase-iters", &TrainConfig::plane_phase_iters);
      apply_if("--gaussian-phase-iters", &TrainConfig::gaussian_phase_iters);
      apply_if("--budget", &TrainConfig::budget);
      apply_if("--sh-degree", &TrainConfig::sh_degree);
      apply_if("--lambda-mask", &TrainConfig::lambda_mask);
      apply_if("--lambda-tv", &TrainConfig::lambda_tv);
      apply_if("--lambda-scale", &TrainConfig::lambda_scale);
      apply_if("--lambda-opacity", &TrainConfig::lambda_opacity);
      apply_if("--sigma-perp", &TrainConfig::sigma_perp);
      apply_if("--sigma-par", &TrainConfig::sigma_par);
      apply_if("--disable-tv", &TrainConfig::disable_tv);
      apply_if("--disable-mask", &TrainConfig::disable_mask);
      apply_if("--disable-plane-opt", &TrainConfig::disable_plane_opt);
      apply_if("--joint-opt", &TrainConfig::joint_opt);
      apply_if("--disable-snapping", &TrainConfig::disable_snapping);
      apply_if("--disable-relocation", &TrainConfig::disable_relocation);
      return cmd_train(train_dataset, train_out, cfg);
    }
    if (*rd) return cmd_render(render_scene, render_dataset, render_view, render_out);
    if (*em) return cmd_extract_mesh(em_scene, em_dataset, em_out, em_labels, em_cfg);
    if (*en) return cmd_eval_nvs(en_scene, en_dataset, en_out, en_split);
    if (*em2)
      return cmd_eval_mesh(evm_pred, evm_pred_labels, evm_gt, evm_gt_labels, evm_out, evm_tau,
                           evm_samples, evm_seed);
    if (*rp) return cmd_report(rp_entries, rp_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
