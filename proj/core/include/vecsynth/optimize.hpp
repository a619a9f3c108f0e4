#pragma once

#include <vector>

#include "vecsynth/attention.hpp"
#include "vecsynth/encoder.hpp"
#include "vecsynth/layout.hpp"
#include "vecsynth/losses.hpp"
#include "vecsynth/raster.hpp"
#include "vecsynth/scene.hpp"

namespace vecsynth {

struct OptimizeConfig {
  int iters = 500;
  double lr_points = 0.1;
  double lr_width = 0.01;
  double lr_color = 0.01;
  double lr_opacity = 0.01;
  double softness = 1.0;
  bool optimize_color = true;
  double min_width = 0.1;
  unsigned workers = 0;
  /// When non-empty, a stroke whose anchor leaves every box is translated
  /// back onto the nearest box after each step. Strokes listed in
  /// `unconfined` are exempt.
  std::vector<BBox> anchor_region;
  std::vector<std::size_t> unconfined;
};

struct OptimizeResult {
  Canvas canvas;
  /// L_synth before the first step and after every step (iters + 1 values).
  std::vector<double> loss;
  std::vector<double> perceptual;
  std::vector<double> sop;
  double psnr_initial = 0.0;
  double psnr_final = 0.0;
};

/// Adam on perceptual + lambda_sop * sop against `target`. After every
/// step opacities are clamped to [0, 1], colors to [0, 1] and widths
/// floored at min_width. Affine-only strokes take the least-squares affine
/// map closest to their proposed control-point step, so they stay affine
/// images of their template.
OptimizeResult optimize_canvas(const Canvas& canvas, const RasterImage& target, const AttentionMap& s1_map,
                               const PerceptualEncoder& enc, const LossWeights& weights, const OptimizeConfig& cfg = {});

}  // namespace vecsynth
