// Command-line front end: synthetic scene generation, training, rendering,
// metric evaluation and densifier inspection.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "splat/image_io.hpp"
#include "splat/metrics.hpp"
#include "splat/scene_io.hpp"
#include "splat/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  int threads = 0;
  std::string shading_mode = "full";
  std::vector<double> light_direction;
  std::vector<double> background{0.0, 0.0, 0.0};
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--threads", opts.threads,
                  "Worker threads (0 = all cores; 1 = deterministic single thread)");
  cmd->add_option("--shading-mode", opts.shading_mode,
                  "full, diffuse, specular or baseline")
      ->check(CLI::IsMember({"full", "diffuse", "specular", "baseline"}));
  cmd->add_option("--light-direction", opts.light_direction,
                  "Explicit unit light direction x y z (default: view direction)")
      ->expected(3);
  cmd->add_option("--background", opts.background, "Background color r g b")
      ->expected(3);
}

splat::ShadingConfig shading_from(const CommonOpts& opts) {
  splat::ShadingConfig cfg;
  if (opts.shading_mode == "diffuse") cfg.mode = splat::ShadingMode::kDiffuseOnly;
  else if (opts.shading_mode == "specular") cfg.mode = splat::ShadingMode::kSpecularOnly;
  else if (opts.shading_mode == "baseline") cfg.mode = splat::ShadingMode::kBaselineSh;
  if (!opts.light_direction.empty()) {
    splat::Vec3 d(opts.light_direction[0], opts.light_direction[1],
                  opts.light_direction[2]);
    cfg.light_direction = d.normalized();
  }
  return cfg;
}

splat::Vec3 background_from(const CommonOpts& opts) {
  return {opts.background[0], opts.background[1], opts.background[2]};
}

void apply_threads(const CommonOpts& opts) {
  if (opts.threads > 0) splat::set_thread_count(opts.threads);
}

splat::DensifyStrategy parse_strategy(const std::string& s) {
  if (s == "none") return splat::DensifyStrategy::kNone;
  if (s == "sparse") return splat::DensifyStrategy::kSparse;
  return splat::DensifyStrategy::kDense;
}

std::string format_metric(double v) {
  if (std::isinf(v)) return "INFINITE";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<fs::path> sorted_files(const std::string& dir, const char* ext) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

int cmd_synth(const std::string& spec_name, uint64_t seed, const std::string& out_dir,
              int width, int height, int n_views) {
  const auto spec = splat::parse_synthetic_spec(spec_name);
  const splat::SyntheticScene scene =
      splat::make_synthetic(spec, seed, width, height, n_views);
  fs::create_directories(out_dir);
  const fs::path base(out_dir);

  json echo;
  echo["scene"] = spec_name;
  echo["seed"] = seed;
  if (scene.shading.light_direction) {
    const auto& l = *scene.shading.light_direction;
    echo["light_direction"] = {l[0], l[1], l[2]};
  }
  splat::save_checkpoint(scene.cloud, (base / "scene.gsc").string(), echo.dump());
  splat::save_checkpoint(scene.generator, (base / "generator.gsc").string(),
                         echo.dump());

  std::vector<splat::CameraRecord> records;
  for (size_t v = 0; v < scene.views.size(); ++v) {
    char name[32];
    std::snprintf(name, sizeof(name), "gt_%03zu.ppm", v);
    splat::save_image(scene.views[v].gt, (base / name).string());
    records.push_back({scene.views[v].camera, (base / name).string()});
  }
  splat::save_cameras(records, (base / "cameras.txt").string());
  std::cout << "wrote " << scene.views.size() << " views and "
            << scene.cloud.size() << " gaussians to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& scene_path, const std::string& cameras_path,
              const std::string& out_dir, const CommonOpts& common,
              const splat::TrainConfig& tcfg, const splat::DensifyConfig& dcfg,
              const std::string& strategy) {
  apply_threads(common);
  splat::DensifyConfig dense_cfg = dcfg;
  dense_cfg.strategy = parse_strategy(strategy);

  splat::GaussianCloud cloud;
  if (scene_path.ends_with(".gsc")) {
    cloud = splat::load_checkpoint(scene_path).cloud;
  } else {
    cloud = splat::load_points(scene_path);
  }

  std::vector<splat::TrainView> views;
  for (const auto& rec : splat::load_cameras(cameras_path)) {
    if (rec.image_path.empty()) {
      throw std::runtime_error("train: view without a ground-truth image in " +
                               cameras_path);
    }
    views.push_back({rec.camera, splat::load_image(rec.image_path)});
  }

  const splat::ShadingConfig shading = shading_from(common);
  const splat::TrainResult result =
      splat::train(cloud, views, tcfg, dense_cfg, shading, background_from(common));

  fs::create_directories(out_dir);
  const fs::path base(out_dir);
  json echo;
  echo["iterations"] = tcfg.iterations;
  echo["seed"] = tcfg.seed;
  echo["shading_mode"] = common.shading_mode;
  echo["strategy"] = strategy;
  splat::save_checkpoint(cloud, (base / "checkpoint.gsc").string(), echo.dump());

  std::ofstream log((base / "train_log.csv").string());
  log << "iteration,loss,psnr,gaussian_count,split_count\n";
  for (const auto& entry : result.log) {
    log << splat::format_log_line(entry) << "\n";
  }
  if (!result.log.empty()) {
    std::cout << "final loss " << result.log.back().loss << ", psnr "
              << result.log.back().psnr << ", " << cloud.size() << " gaussians\n";
  }
  return 0;
}

int cmd_render(const std::string& checkpoint, const std::string& cameras_path,
               const std::string& out_dir, const CommonOpts& common) {
  apply_threads(common);
  const splat::GaussianCloud cloud = splat::load_checkpoint(checkpoint).cloud;
  const auto records = splat::load_cameras(cameras_path);
  const splat::ShadingConfig shading = shading_from(common);
  fs::create_directories(out_dir);
  for (size_t v = 0; v < records.size(); ++v) {
    const splat::Image img =
        splat::render(records[v].camera, cloud, shading, background_from(common));
    char name[32];
    std::snprintf(name, sizeof(name), "render_%03zu.ppm", v);
    splat::save_image(img, (fs::path(out_dir) / name).string());
  }
  std::cout << "rendered " << records.size() << " views to " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& render_dir, const std::string& gt_dir) {
  const auto renders = sorted_files(render_dir, ".ppm");
  const auto gts = sorted_files(gt_dir, ".ppm");
  if (renders.empty() || renders.size() != gts.size()) {
    throw std::runtime_error("eval: directories must hold matching .ppm counts (" +
                             std::to_string(renders.size()) + " vs " +
                             std::to_string(gts.size()) + ")");
  }
  double psnr_sum = 0.0, ssim_sum = 0.0;
  bool any_inf = false;
  for (size_t i = 0; i < renders.size(); ++i) {
    const splat::Image a = splat::load_image(renders[i].string());
    const splat::Image b = splat::load_image(gts[i].string());
    const double p = splat::psnr(a, b);
    if (std::isinf(p)) any_inf = true;
    else psnr_sum += p;
    ssim_sum += splat::ssim(a, b);
  }
  const double mean_psnr = any_inf ? std::numeric_limits<double>::infinity()
                                   : psnr_sum / double(renders.size());
  std::cout << "psnr=" << format_metric(mean_psnr) << "\n";
  std::cout << "ssim=" << format_metric(ssim_sum / double(renders.size())) << "\n";
  return 0;
}

int cmd_densify_inspect(const std::string& checkpoint, double omega,
                        const std::string& strategy, int resolution, int steps,
                        const std::string& dump_prefix) {
  splat::CheckpointData data = splat::load_checkpoint(checkpoint);
  splat::DensifyConfig cfg;
  cfg.omega = omega;
  cfg.strategy = parse_strategy(strategy);
  cfg.grid_resolution = resolution;

  splat::DensifyState state;
  std::map<int, int> level_totals;
  int total_split = 0, total_pruned = 0;
  for (int s = 0; s < steps; ++s) {
    const std::vector<double> zero_grads(data.cloud.size(), 0.0);
    const splat::DensifyReport report =
        splat::densify_step(data.cloud, zero_grads, cfg, state);
    for (const auto& [level, count] : report.hngd_level_counts) {
      level_totals[level] += count;
    }
    total_split += report.hngd_split_gaussians;
    total_pruned += report.pruned;
  }

  std::cout << "steps=" << steps << " strategy=" << strategy << " omega=" << omega
            << "\n";
  std::cout << "gaussians=" << data.cloud.size() << " split=" << total_split
            << " pruned=" << total_pruned << "\n";
  for (const auto& [level, count] : level_totals) {
    std::cout << "level_" << level << "=" << count << "\n";
  }

  if (!dump_prefix.empty()) {
    const splat::DensityGrid grid =
        splat::rasterize_density(data.cloud, cfg.grid_resolution);
    const splat::FusedGradientField field =
        splat::build_fused_gradient_field(grid, cfg.omega);
    auto dump = [&](const std::string& name, const std::vector<double>& values) {
      std::ofstream out(dump_prefix + "_" + name + ".grid", std::ios::binary);
      if (!out) throw std::runtime_error("densify-inspect: cannot write dump");
      int32_t dims[3] = {grid.dims[0], grid.dims[1], grid.dims[2]};
      out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
      out.write(reinterpret_cast<const char*>(&grid.voxel_size), sizeof(double));
      out.write(reinterpret_cast<const char*>(grid.origin.data()), 3 * sizeof(double));
      out.write(reinterpret_cast<const char*>(values.data()),
                std::streamsize(values.size() * sizeof(double)));
    };
    dump("density", grid.values);
    dump("fused", field.fused);
    std::cout << "dumped grids to " << dump_prefix << "_*.grid\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CPU differentiable Gaussian splatting with decomposed lighting"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene");
  std::string synth_spec;
  uint64_t synth_seed = 0;
  std::string synth_out = "scene";
  int synth_width = 64, synth_height = 64, synth_views = 8;
  synth->add_option("spec", synth_spec, "shell, grid or mirror-lit")->required();
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--width", synth_width);
  synth->add_option("--height", synth_height);
  synth->add_option("--views", synth_views);

  // train
  auto* train_cmd = app.add_subcommand("train", "Optimize a scene against views");
  std::string train_scene, train_cameras, train_out = "run";
  CommonOpts train_common;
  splat::TrainConfig tcfg;
  splat::DensifyConfig dcfg;
  std::string train_strategy = "sparse";
  train_cmd->add_option("scene", train_scene, "Checkpoint (.gsc) or point file")
      ->required();
  train_cmd->add_option("cameras", train_cameras, "Camera list with gt images")
      ->required();
  train_cmd->add_option("--out", train_out, "Output directory");
  add_common(train_cmd, train_common);
  train_cmd->add_option("--iterations", tcfg.iterations);
  train_cmd->add_option("--seed", tcfg.seed);
  train_cmd->add_option("--lambda", tcfg.loss_lambda, "SSIM weight in the loss");
  train_cmd->add_option("--lr-position", tcfg.lr_position);
  train_cmd->add_option("--lr-sh", tcfg.lr_sh);
  train_cmd->add_option("--lr-opacity", tcfg.lr_opacity);
  train_cmd->add_option("--lr-scale", tcfg.lr_scale);
  train_cmd->add_option("--lr-rotation", tcfg.lr_rotation);
  train_cmd->add_option("--lr-specular", tcfg.lr_specular);
  train_cmd->add_option("--lr-lighting", tcfg.lr_lighting);
  train_cmd->add_option("--densify-from", tcfg.densify_from);
  train_cmd->add_option("--densify-until", tcfg.densify_until);
  train_cmd->add_option("--densify-interval", dcfg.densify_interval);
  train_cmd->add_option("--strategy", train_strategy, "none, sparse or dense")
      ->check(CLI::IsMember({"none", "sparse", "dense"}));
  train_cmd->add_option("--omega", dcfg.omega, "Normal-gradient fusion weight");
  train_cmd->add_option("--grid-resolution", dcfg.grid_resolution);
  train_cmd->add_option("--clone-grad-threshold", dcfg.clone_grad_threshold);
  train_cmd->add_option("--prune-opacity", dcfg.prune_opacity);
  train_cmd->add_option("--max-gaussians", dcfg.max_gaussians);

  // render
  auto* render_cmd = app.add_subcommand("render", "Render a checkpoint");
  std::string render_ckpt, render_cameras, render_out = "renders";
  CommonOpts render_common;
  render_cmd->add_option("checkpoint", render_ckpt)->required();
  render_cmd->add_option("cameras", render_cameras)->required();
  render_cmd->add_option("--out", render_out, "Output directory");
  add_common(render_cmd, render_common);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM between image directories");
  std::string eval_renders, eval_gt;
  eval_cmd->add_option("renders", eval_renders)->required();
  eval_cmd->add_option("gt", eval_gt)->required();

  // densify-inspect
  auto* inspect = app.add_subcommand("densify-inspect",
                                     "Run the hierarchical densifier and report");
  std::string inspect_ckpt, inspect_strategy = "sparse", inspect_dump;
  double inspect_omega = 0.5;
  int inspect_resolution = 128, inspect_steps = 5;
  inspect->add_option("checkpoint", inspect_ckpt)->required();
  inspect->add_option("--omega", inspect_omega);
  inspect->add_option("--strategy", inspect_strategy)
      ->check(CLI::IsMember({"none", "sparse", "dense"}));
  inspect->add_option("--resolution", inspect_resolution);
  inspect->add_option("--steps", inspect_steps, "Accumulate-and-split passes");
  inspect->add_option("--dump", inspect_dump, "Prefix for binary grid dumps");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      return cmd_synth(synth_spec, synth_seed, synth_out, synth_width,
                       synth_height, synth_views);
    }
    if (train_cmd->parsed()) {
      return cmd_train(train_scene, train_cameras, train_out, train_common, tcfg,
                       dcfg, train_strategy);
    }
    if (render_cmd->parsed()) {
      return cmd_render(render_ckpt, render_cameras, render_out, render_common);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_renders, eval_gt);
    }
    if (inspect->parsed()) {
      return cmd_densify_inspect(inspect_ckpt, inspect_omega, inspect_strategy,
                                 inspect_resolution, inspect_steps, inspect_dump);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
