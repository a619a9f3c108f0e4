#pragma once

#include <cstdint>
#include <vector>

#include "vecsynth/attention.hpp"
#include "vecsynth/raster.hpp"
#include "vecsynth/scene.hpp"

namespace vecsynth {

struct InitConfig {
  std::size_t num_strokes = 1024;
  double initial_width = 4.0;
  double initial_opacity = 0.3;
  double jitter_radius = 4.0;
  ShapeKind primitive_kind = ShapeKind::bezier;
  std::uint64_t seed = 0;

  /// DomainError on a nonpositive width or jitter radius, or an opacity
  /// outside [0, 1].
  void validate() const;
};

/// `eta` distinct pixel centers inside `mask`, drawn without replacement
/// with probability proportional to the attention value (weighted
/// reservoir keys u^(1/w)). DegenerateError when eta > 0 and the mask
/// carries no attention; DomainError when fewer than eta in-mask pixels
/// have positive attention.
std::vector<Point> select_keypoints(const AttentionMap& attention, const Mask& mask, std::size_t eta, std::uint64_t seed);

/// One cubic per keypoint: P0 at the keypoint, P1..P3 jittered uniformly
/// inside a disk of radius jitter_radius. Colors are sampled from
/// `color_source` at the keypoint when given (clipart), black otherwise.
Canvas init_strokes(const std::vector<Point>& keypoints, const InitConfig& cfg, int width, int height,
                    const RasterImage* color_source = nullptr);

/// Canonical template of a primitive whose control-point bounding box is
/// centered on `center` with extent `size` (the line's endpoints are
/// `size` apart).
std::vector<Point> primitive_template(ShapeKind kind, Point center, double size);

/// One affine-only primitive of cfg.primitive_kind per keypoint, template
/// size jitter_radius. DomainError if the kind is bezier.
Canvas init_primitives(const std::vector<Point>& keypoints, const InitConfig& cfg, int width, int height,
                       const RasterImage* color_source = nullptr);

}  // namespace vecsynth
