#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vecsynth/guidance.hpp"
#include "vecsynth/layout.hpp"
#include "vecsynth/losses.hpp"
#include "vecsynth/raster.hpp"
#include "vecsynth/scene.hpp"

namespace vecsynth {

enum class Style { sketch, clipart, abstract, primitive };

std::string_view to_string(Style style);
Style style_from_string(std::string_view name);  // DomainError on unknown names

struct PipelineConfig {
  Style style = Style::clipart;
  std::size_t strokes = 1024;
  double stroke_width = 4.0;
  double initial_opacity = 0.3;
  double jitter_radius = 4.0;
  ShapeKind primitive = ShapeKind::circle;
  int iters = 500;
  double lr_points = 0.1;
  double lr_width = 0.01;
  double lr_color = 0.01;
  double lr_opacity = 0.01;
  double mlp_lr = 1e-5;
  /// MLP_d learns from a handful of labels in mlp_bg_iters steps; at
  /// mlp_lr its sigmoid outputs barely leave 0.5.
  double mlp_bg_lr = 1e-3;
  int mlp_fg_iters = 500;
  int mlp_bg_iters = 100;
  std::uint64_t seed = 0;
  double softness = 1.0;
  int width = 512;
  int height = 512;
  /// Layout boxes are grown by this factor about their centers before
  /// they bound keypoint placement.
  double box_scale = 1.1;
  double gamma_alpha = 4.0;
  LossWeights weights;
  CorrectionOptions correction;
  unsigned workers = 0;

  /// DomainError on a nonpositive size, rate or count.
  void validate() const;
};

struct MetricsReport {
  std::vector<double> delta_rec;
  std::vector<double> loss;
  double psnr_initial = 0.0;
  double psnr_final = 0.0;
  std::size_t strokes = 0;
  std::size_t visible_strokes = 0;
  double seconds = 0.0;
  std::string style;
  std::optional<double> composition_energy;  // absent when a box map is flat
  std::optional<double> align;               // abstract style only
  std::size_t combined_features = 0;         // abstract style only
};

/// JSON object with the fields above; optional values become null.
std::string metrics_to_json(const MetricsReport& report);

struct PipelineResult {
  GroundedLayout layout;  // corrected layout in 512 x 512 layout space
  GroundedLayout canvas_layout;  // the same boxes in canvas pixels
  Canvas canvas;
  std::string svg;
  RasterImage target;
  RasterImage image;
  std::vector<std::size_t> background_indices;
  MetricsReport metrics;
};

/// Layout correction, guidance, attention fusion, keypoint selection,
/// initialization, canvas optimization and, for the abstract style, the
/// two-network abstraction stage. Generator and guidance failures surface
/// as BackendError tagged "layout" or "guidance".
PipelineResult run_pipeline(const std::string& prompt, LayoutGenerator& gen, GuidanceSource& guide, const PipelineConfig& cfg);

/// A stroke is visible when it has positive opacity and color alpha.
std::size_t visible_stroke_count(const Canvas& canvas);

}  // namespace vecsynth
