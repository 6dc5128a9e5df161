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

#pragma once

// Single-image and batch workflows behind the `cim` command-line tool:
// load -> solve -> synthesize -> normalize -> render / score.

#include <algorithm>
#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "cim/error.hpp"
#include "cim/fla.hpp"
#include "cim/image_io.hpp"
#include "cim/mapping.hpp"
#include "cim/solver.hpp"
#include "cim/tensor_io.hpp"
#include "cim/types.hpp"

namespace cim::pipeline {

namespace fs = std::filesystem;

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitShapeMismatch = 4;
inline constexpr int kExitNumeric = 5;
inline constexpr int kExitConfig = 6;
inline constexpr int kExitFla = 7;

inline int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedFile:
    case ErrorCode::UnsupportedDtype:
    case ErrorCode::UnsupportedRank:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::EmptyBox:
    case ErrorCode::OutOfImageBounds:
    case ErrorCode::IoError:
      return kExitInput;
    case ErrorCode::ShapeMismatch:
      return kExitShapeMismatch;
    case ErrorCode::SingularSystem:
    case ErrorCode::NonFiniteIterate:
    case ErrorCode::InstanceTooLarge:
      return kExitNumeric;
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidThreshold:
      return kExitConfig;
    case ErrorCode::NoBoxes:
    case ErrorCode::EmptyInput:
      return kExitFla;
  }
  return kExitUsage;
}

struct RunConfig {
  SolverConfig solver;
  double threshold_fraction = kDefaultThresholdFraction;
  Colormap colormap = Colormap::Jet;
  double overlay_opacity = 0.5;
  fs::path manifest;
  fs::path output = ".";

  void validate() const {
    solver.validate();
    if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0)) {
      throw Error(ErrorCode::InvalidThreshold, "threshold fraction must lie strictly between 0 and 1");
    }
    if (!(overlay_opacity >= 0.0 && overlay_opacity <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "overlay opacity must lie in [0, 1]");
    }
  }
};

inline Colormap parse_colormap(const std::string& name) {
  if (name == "jet") return Colormap::Jet;
  if (name == "grayscale" || name == "gray") return Colormap::Grayscale;
  throw Error(ErrorCode::InvalidConfig, "unknown colormap '" + name + "' (expected jet or grayscale)");
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed, const char* where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw Error(ErrorCode::InvalidConfig, std::string("unknown key '") + key + "' in " + where);
    }
  }
}

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "short write to '" + path.string() + "'");
}

inline fs::path resolve(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

}  // namespace detail

/// Reads a JSON RunConfig on top of `base`. Keys present in the file replace
/// the corresponding fields; explicit command-line flags are applied later.
inline RunConfig apply_config_json(RunConfig base, const nlohmann::json& j) {
  try {
    detail::reject_unknown_keys(j, {"solver", "threshold_fraction", "render", "manifest", "output"}, "run config");
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      detail::reject_unknown_keys(s, {"alpha", "rho", "theta", "max_iters", "tol_primal", "tol_dual"}, "solver config");
      if (s.contains("alpha")) base.solver.alpha = s.at("alpha").get<double>();
      if (s.contains("rho")) base.solver.rho = s.at("rho").get<double>();
      if (s.contains("theta")) base.solver.theta = s.at("theta").get<double>();
      if (s.contains("max_iters")) base.solver.max_iters = s.at("max_iters").get<int>();
      if (s.contains("tol_primal")) base.solver.tol_primal = s.at("tol_primal").get<double>();
      if (s.contains("tol_dual")) base.solver.tol_dual = s.at("tol_dual").get<double>();
    }
    if (j.contains("threshold_fraction")) base.threshold_fraction = j.at("threshold_fraction").get<double>();
    if (j.contains("render")) {
      const auto& r = j.at("render");
      detail::reject_unknown_keys(r, {"colormap", "overlay_opacity"}, "render config");
      if (r.contains("colormap")) base.colormap = parse_colormap(r.at("colormap").get<std::string>());
      if (r.contains("overlay_opacity")) base.overlay_opacity = r.at("overlay_opacity").get<double>();
    }
    if (j.contains("manifest")) base.manifest = j.at("manifest").get<std::string>();
    if (j.contains("output")) base.output = j.at("output").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("run config: ") + e.what());
  }
  return base;
}

inline RunConfig load_run_config(const fs::path& path, RunConfig base = {}) {
  return apply_config_json(std::move(base), detail::read_json(path));
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestRecord {
  std::string image_id;
  fs::path feature_map;
  fs::path feature_vector;
  std::optional<fs::path> image;
  std::optional<std::string> bbox;  // image_id to look up in the bbox file; defaults to image_id
};

struct Manifest {
  std::vector<ManifestRecord> records;
  std::optional<fs::path> bboxes;
};

/// Relative paths are resolved against `base_dir` (the manifest's directory).
inline Manifest parse_manifest(const nlohmann::json& j, const fs::path& base_dir) {
  Manifest m;
  try {
    if (!j.is_object() || !j.contains("records") || !j.at("records").is_array()) {
      throw Error(ErrorCode::MalformedFile, "manifest must be an object with a 'records' array");
    }
    detail::reject_unknown_keys(j, {"records", "bboxes"}, "manifest");
    if (j.contains("bboxes")) m.bboxes = detail::resolve(base_dir, j.at("bboxes").get<std::string>());
    std::set<std::string> ids;
    for (const auto& r : j.at("records")) {
      detail::reject_unknown_keys(r, {"image_id", "feature_map", "feature_vector", "image", "bbox"},
                                  "manifest record");
      ManifestRecord rec;
      rec.image_id = r.at("image_id").get<std::string>();
      rec.feature_map = detail::resolve(base_dir, r.at("feature_map").get<std::string>());
      rec.feature_vector = detail::resolve(base_dir, r.at("feature_vector").get<std::string>());
      if (r.contains("image") && !r.at("image").is_null()) {
        rec.image = detail::resolve(base_dir, r.at("image").get<std::string>());
      }
      if (r.contains("bbox") && !r.at("bbox").is_null()) rec.bbox = r.at("bbox").get<std::string>();
      if (!ids.insert(rec.image_id).second) {
        throw Error(ErrorCode::MalformedFile, "duplicate image_id '" + rec.image_id + "' in manifest");
      }
      m.records.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("manifest: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw Error(ErrorCode::MalformedFile, e.detail());
    throw;
  }
  return m;
}

inline Manifest load_manifest(const fs::path& path) {
  return parse_manifest(detail::read_json(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Single-image stages

/// Vector length must equal H*W of the feature map it is fitted against.
inline void check_sdfc_contract(const FeatureMap& fm, const FeatureVector& fv) {
  if (fv.dim() != fm.spatial_size()) {
    throw Error(ErrorCode::ShapeMismatch,
                "feature vector dim " + std::to_string(fv.dim()) + " != H*W = " + std::to_string(fm.spatial_size()) +
                    " of feature map (K=" + std::to_string(fm.channels()) + ", H=" + std::to_string(fm.height()) +
                    ", W=" + std::to_string(fm.width()) + ")");
  }
}

inline WeightVector solve_pair(const FeatureMap& fm, const FeatureVector& fv, const SolverConfig& cfg) {
  check_sdfc_contract(fm, fv);
  return solve(flatten_to_dictionary(fm), fv, cfg);
}

inline bool all_zero(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

/// Raw heatmap as a (1, H, W) tensor so it reloads through load_tensor.
inline void save_raw_heatmap(const fs::path& path, const Heatmap& hm) {
  save_feature_map(path, FeatureMap(1, hm.height, hm.width, hm.values));
}

struct SolveResult {
  WeightVector weights;
  fs::path weights_path;
  fs::path diagnostics_path;
};

/// Writes weights.npy and diagnostics.json into out_dir.
inline SolveResult run_solve(const fs::path& feature_map, const fs::path& feature_vector, const SolverConfig& cfg,
                             const fs::path& out_dir) {
  const FeatureMap fm = load_feature_map(feature_map);
  const FeatureVector fv = load_feature_vector(feature_vector);
  SolveResult r{solve_pair(fm, fv, cfg), out_dir / "weights.npy", out_dir / "diagnostics.json"};
  fs::create_directories(out_dir);
  save_vector(r.weights_path, r.weights.weights);
  detail::write_text(r.diagnostics_path, diagnostics_json(r.weights, cfg).dump(2) + "\n");
  return r;
}

struct HeatmapResult {
  WeightVector weights;
  Heatmap raw;
  NormalizedHeatmap normalized;
  fs::path overlay_path;
  fs::path raw_path;
  fs::path gray_path;
  std::vector<std::string> warnings;
};

/// solve -> synthesize -> normalize to the image size -> render. Writes
/// overlay.png, heatmap.png (normalized grayscale) and heatmap_raw.npy.
inline HeatmapResult run_heatmap(const fs::path& feature_map, const fs::path& feature_vector, const fs::path& image,
                                 const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const FeatureMap fm = load_feature_map(feature_map);
  const FeatureVector fv = load_feature_vector(feature_vector);
  const RgbImage base = read_png(image);

  HeatmapResult r;
  r.weights = solve_pair(fm, fv, cfg.solver);
  r.raw = synthesize(fm, r.weights);
  r.normalized = normalize_and_upsample(r.raw, base.width(), base.height());
  const RenderSpec spec{cfg.colormap, cfg.overlay_opacity, base.width(), base.height()};
  const RgbImage overlay = render(r.normalized, base, spec);

  if (!r.weights.converged) {
    r.warnings.push_back("solver hit max_iters (" + std::to_string(r.weights.iterations_used) + ") before converging");
  }
  if (all_zero(r.weights.weights)) {
    r.warnings.push_back("all channel weights are zero; the heatmap is uninformative");
  }

  fs::create_directories(out_dir);
  r.overlay_path = out_dir / "overlay.png";
  r.raw_path = out_dir / "heatmap_raw.npy";
  r.gray_path = out_dir / "heatmap.png";
  write_png(r.overlay_path, overlay);
  save_raw_heatmap(r.raw_path, r.raw);
  write_gray_png(r.gray_path, r.normalized.width, r.normalized.height, r.normalized.to_gray());
  return r;
}

// ---------------------------------------------------------------------------
// Batch FLA

struct FlaOptions {
  bool skip_errors = false;
  bool save_maps = true;
  unsigned jobs = 0;  // 0 = hardware concurrency
};

/// Characters outside [A-Za-z0-9._-] become '_' so ids are safe file stems.
inline std::string file_stem_for(const std::string& image_id) {
  std::string out = image_id;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '-';
    if (!ok) c = '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

/// Runs one manifest record through the pipeline and scores it. The heatmap
/// is normalized to the image size declared by the record's boxes.
inline FlaScore score_record(const ManifestRecord& rec, const std::vector<BoundingBox>& boxes, const RunConfig& cfg,
                             const fs::path& maps_dir, bool save_maps) {
  if (boxes.empty()) {
    throw Error(ErrorCode::NoBoxes, "no bounding box for '" + rec.bbox.value_or(rec.image_id) + "'");
  }
  const FeatureMap fm = load_feature_map(rec.feature_map);
  const FeatureVector fv = load_feature_vector(rec.feature_vector);
  const auto width = static_cast<std::size_t>(boxes.front().image_width);
  const auto height = static_cast<std::size_t>(boxes.front().image_height);

  const WeightVector w = solve_pair(fm, fv, cfg.solver);
  const NormalizedHeatmap nhm = normalize_and_upsample(synthesize(fm, w), width, height);
  FlaScore s = score(threshold_focus(nhm, cfg.threshold_fraction), boxes);
  s.image_id = rec.image_id;

  if (save_maps) {
    const std::string stem = file_stem_for(rec.image_id);
    write_gray_png(maps_dir / (stem + "_heatmap.png"), width, height, nhm.to_gray());
    if (rec.image) {
      const RgbImage base = read_png(*rec.image);
      const RenderSpec spec{cfg.colormap, cfg.overlay_opacity, width, height};
      write_png(maps_dir / (stem + "_overlay.png"), render(nhm, base, spec));
    }
  }
  return s;
}

struct FlaRun {
  FlaReport report;
  fs::path json_path;
  fs::path csv_path;
};

/// Scores every record (concurrently when jobs > 1), then aggregates in
/// manifest order. Without skip_errors the first failing record, in manifest
/// order, is rethrown and no report is written.
inline FlaRun run_fla(const Manifest& manifest, const std::vector<BoundingBox>& boxes, const RunConfig& cfg,
                      const FlaOptions& opts, const fs::path& out_dir) {
  cfg.validate();
  if (manifest.records.empty()) throw Error(ErrorCode::EmptyInput, "manifest has no records");

  std::map<std::string, std::vector<BoundingBox>> by_id;
  for (const auto& b : boxes) by_id[b.image_id].push_back(b);

  const fs::path maps_dir = out_dir / "maps";
  fs::create_directories(out_dir);
  if (opts.save_maps) fs::create_directories(maps_dir);

  const std::size_t n = manifest.records.size();
  std::vector<std::optional<FlaScore>> scores(n);
  std::vector<std::optional<Error>> errors(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& rec = manifest.records[i];
      try {
        const auto it = by_id.find(rec.bbox.value_or(rec.image_id));
        static const std::vector<BoundingBox> kNone;
        scores[i] = score_record(rec, it == by_id.end() ? kNone : it->second, cfg, maps_dir, opts.save_maps);
      } catch (const Error& e) {
        errors[i] = Error(e.code(), rec.image_id + ": " + e.detail());
      } catch (const std::exception& e) {
        errors[i] = Error(ErrorCode::IoError, rec.image_id + ": " + e.what());
      }
    }
  };

  unsigned jobs = opts.jobs ? opts.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }

  std::vector<FlaScore> ok;
  std::vector<SkippedRecord> skipped;
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) {
      if (!opts.skip_errors) throw *errors[i];
      skipped.push_back({manifest.records[i].image_id, errors[i]->what()});
    } else {
      ok.push_back(std::move(*scores[i]));
    }
  }
  if (ok.empty()) throw Error(ErrorCode::EmptyInput, "every manifest record failed");

  FlaRun run{aggregate(std::move(ok), cfg.threshold_fraction), out_dir / "report.json", out_dir / "report.csv"};
  run.report.skipped = std::move(skipped);
  detail::write_text(run.json_path, to_json(run.report).dump(2) + "\n");
  detail::write_text(run.csv_path, to_csv(run.report));
  return run;
}

}  // namespace cim::pipeline
