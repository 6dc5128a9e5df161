/* Copyright 2026 The CIM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
=============================================================================*/

// cim: class-irrelevant mapping command-line tool.
//
//   cim solve   <feature_map.npy> <feature_vector.npy>
//   cim heatmap <feature_map.npy> <feature_vector.npy> <image.png>
//   cim fla     <manifest.json> [--bboxes boxes.json]
//
// Exit codes: 0 ok, 1 usage, 2 solver hit max_iters, 3 bad input file,
// 4 shape mismatch, 5 numerical failure, 6 invalid config, 7 FLA input error.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cim/pipeline.hpp"

namespace {

using cim::pipeline::RunConfig;

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> output;
  std::optional<long long> seed;  // reserved; the pipeline is deterministic
  std::optional<double> alpha, rho, theta, tol, threshold, opacity;
  std::optional<int> max_iter;
  std::optional<std::string> colormap;
};

void add_solver_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--alpha", f.alpha, "Sparsity weight alpha (default 0.1)");
  cmd->add_option("--rho", f.rho, "ADMM penalty rho (default 1.0)");
  cmd->add_option("--theta", f.theta, "Dual step theta (default: rho)");
  cmd->add_option("--max-iter", f.max_iter, "Maximum ADMM iterations (default 1000)");
  cmd->add_option("--tol", f.tol, "Primal and dual residual tolerance (default 1e-6)");
}

void add_render_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--opacity", f.opacity, "Overlay opacity in [0,1] (default 0.5)");
  cmd->add_option("--colormap", f.colormap, "jet or grayscale (default jet)");
}

RunConfig resolve_config(const Flags& f) {
  RunConfig cfg;
  if (f.config) cfg = cim::pipeline::load_run_config(*f.config, cfg);
  if (f.alpha) cfg.solver.alpha = *f.alpha;
  if (f.rho) cfg.solver.rho = *f.rho;
  if (f.theta) cfg.solver.theta = *f.theta;
  if (f.max_iter) cfg.solver.max_iters = *f.max_iter;
  if (f.tol) cfg.solver.tol_primal = cfg.solver.tol_dual = *f.tol;
  if (f.threshold) cfg.threshold_fraction = *f.threshold;
  if (f.opacity) cfg.overlay_opacity = *f.opacity;
  if (f.colormap) cfg.colormap = cim::pipeline::parse_colormap(*f.colormap);
  if (f.output) cfg.output = *f.output;
  cfg.validate();
  return cfg;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-irrelevant mapping: sparse-coded channel weights, heatmaps and FLA scoring"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags flags;
  app.add_option("--config", flags.config, "JSON run configuration; explicit flags override it");
  app.add_option("--output", flags.output, "Output directory (default .)");
  app.add_option("--seed", flags.seed, "Reserved; currently unused");

  std::string fm_path, fv_path, image_path, manifest_path;
  std::optional<std::string> bboxes_path;
  bool trace = false, skip_errors = false, no_maps = false;
  unsigned jobs = 0;

  auto* solve_cmd = app.add_subcommand("solve", "Solve for channel weights; writes weights.npy and diagnostics.json");
  solve_cmd->add_option("feature_map", fm_path, "K x H x W feature map (.npy)")->required();
  solve_cmd->add_option("feature_vector", fv_path, "H*W feature vector (.npy)")->required();
  solve_cmd->add_flag("--trace", trace, "Include the per-iteration residual trace in diagnostics.json");
  add_solver_flags(solve_cmd, flags);

  auto* heatmap_cmd = app.add_subcommand("heatmap", "Render the heatmap overlay for one image");
  heatmap_cmd->add_option("feature_map", fm_path, "K x H x W feature map (.npy)")->required();
  heatmap_cmd->add_option("feature_vector", fv_path, "H*W feature vector (.npy)")->required();
  heatmap_cmd->add_option("image", image_path, "Source image (.png)")->required();
  add_solver_flags(heatmap_cmd, flags);
  add_render_flags(heatmap_cmd, flags);

  auto* fla_cmd = app.add_subcommand("fla", "Score a manifest of images with FLA-1 / FLA-2");
  fla_cmd->add_option("manifest", manifest_path, "Manifest JSON")->required();
  fla_cmd->add_option("--bboxes", bboxes_path, "Bounding-box JSON (default: the manifest's 'bboxes' entry)");
  fla_cmd->add_option("--threshold", flags.threshold, "Focus threshold as a fraction of 255 (default 0.6)");
  fla_cmd->add_flag("--skip-errors", skip_errors, "Record failing images and continue");
  fla_cmd->add_flag("--no-maps", no_maps, "Do not write per-image heatmap PNGs");
  fla_cmd->add_option("--jobs", jobs, "Worker threads (default: hardware concurrency)");
  add_solver_flags(fla_cmd, flags);
  add_render_flags(fla_cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cim::pipeline::kExitUsage;
  }

  namespace pl = cim::pipeline;
  try {
    const RunConfig cfg = resolve_config(flags);

    if (solve_cmd->parsed()) {
      cim::SolverConfig solver = cfg.solver;
      solver.record_trace = trace;
      const auto r = pl::run_solve(fm_path, fv_path, solver, cfg.output);
      std::cout << "weights: " << r.weights_path.string() << "\n"
                << "diagnostics: " << r.diagnostics_path.string() << "\n"
                << "iterations: " << r.weights.iterations_used << "  objective: " << r.weights.final_objective
                << "  converged: " << (r.weights.converged ? "yes" : "no") << "\n";
      if (!r.weights.converged) {
        std::cerr << "warning: solver hit max_iters before converging\n";
        return pl::kExitNotConverged;
      }
      return pl::kExitOk;
    }

    if (heatmap_cmd->parsed()) {
      const auto r = pl::run_heatmap(fm_path, fv_path, image_path, cfg, cfg.output);
      print_warnings(r.warnings);
      std::cout << "overlay: " << r.overlay_path.string() << "\n"
                << "heatmap: " << r.gray_path.string() << "\n"
                << "raw heatmap: " << r.raw_path.string() << "\n";
      return r.weights.converged ? pl::kExitOk : pl::kExitNotConverged;
    }

    const pl::Manifest manifest = pl::load_manifest(manifest_path);
    std::optional<std::filesystem::path> boxes_file = manifest.bboxes;
    if (bboxes_path) boxes_file = *bboxes_path;
    if (!boxes_file) throw cim::Error(cim::ErrorCode::NoBoxes, "no bounding-box file given (--bboxes)");
    const auto boxes = cim::load_bboxes(*boxes_file);

    pl::FlaOptions opts;
    opts.skip_errors = skip_errors;
    opts.save_maps = !no_maps;
    opts.jobs = jobs;
    const auto run = pl::run_fla(manifest, boxes, cfg, opts, cfg.output);
    for (const auto& s : run.report.skipped) std::cerr << "skipped " << s.image_id << ": " << s.error << "\n";
    std::cout << "images: " << run.report.n_images << "  degenerate: " << run.report.n_degenerate
              << "  skipped: " << run.report.skipped.size() << "\n"
              << "FLA-1: " << cim::format_percent(run.report.mean_fla1) << "%  FLA-2: "
              << cim::format_percent(run.report.mean_fla2) << "%\n"
              << "report: " << run.json_path.string() << ", " << run.csv_path.string() << "\n";
    return pl::kExitOk;
  } catch (const cim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::kExitUsage;
  }
}
