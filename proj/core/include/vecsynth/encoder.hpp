#pragma once

#include <vector>

#include "vecsynth/attention.hpp"
#include "vecsynth/raster.hpp"

namespace vecsynth {

using Embedding = std::vector<double>;

/// Image-to-embedding map with a pullback for its gradient. Implementations
/// are stateless so one instance may serve several threads.
class PerceptualEncoder {
 public:
  virtual ~PerceptualEncoder() = default;
  virtual std::size_t dimension() const = 0;
  virtual Embedding encode(const RasterImage& image) const = 0;
  /// d(loss)/d(image) given d(loss)/d(encode(image)).
  virtual ImageGradient backward(const RasterImage& image, const Embedding& upstream) const = 0;

  /// Encodes a scalar map as a gray image.
  Embedding encode(const AttentionMap& map) const;
};

/// Pyramid of pooled cells: level k splits the image into a grid of
/// base_grid * 2^k cells per side and records, per cell, the mean color
/// and the mean smoothed |dL/dx|, |dL/dy| of luminance. The dimension is
/// independent of the image size; images need at least
/// base_grid * 2^(levels-1) pixels per side.
class PyramidEncoder final : public PerceptualEncoder {
 public:
  explicit PyramidEncoder(int base_grid = 8, int levels = 3, double gradient_smoothing = 1e-3);

  std::size_t dimension() const override { return dimension_; }
  Embedding encode(const RasterImage& image) const override;
  ImageGradient backward(const RasterImage& image, const Embedding& upstream) const override;
  using PerceptualEncoder::encode;

  static constexpr int kFeaturesPerCell = 5;

 private:
  void check(const RasterImage& image) const;

  int base_grid_;
  int levels_;
  double eps_;
  std::size_t dimension_;
};

}  // namespace vecsynth
