#pragma once

#include <string>
#include <vector>

#include "vecsynth/attention.hpp"
#include "vecsynth/layout.hpp"
#include "vecsynth/raster.hpp"

namespace vecsynth {

/// Per-object attention and the target image a guidance backend produces.
struct Guidance {
  std::vector<AttentionMap> maps;  // one per layout object, in order
  RasterImage target;
};

/// Source of the per-box attention maps and target image. Boxes are given
/// in canvas pixels.
class GuidanceSource {
 public:
  virtual ~GuidanceSource() = default;
  virtual Guidance guide(const GroundedLayout& layout, int width, int height) = 0;
};

/// Deterministic stand-in for a diffusion model. Each box gets an
/// anisotropic Gaussian blob (sigma = box size / 4) pushed through
/// box_attention, so the map is softmax-normalized like a real one; the
/// target flat-fills every box with a color derived from its label over a
/// light background.
class SyntheticGuidance final : public GuidanceSource {
 public:
  struct Options {
    Color background{0.96, 0.96, 0.96, 1.0};
    /// Added to the blob before taking logits; keeps the map positive
    /// away from the box so fused products of disjoint boxes survive.
    double floor = 0.05;
  };

  SyntheticGuidance() = default;
  explicit SyntheticGuidance(Options options) : options_(options) {}

  Guidance guide(const GroundedLayout& layout, int width, int height) override;

  /// Saturated color picked by hashing the label.
  static Color label_color(const std::string& label);

 private:
  Options options_;
};

/// Loads `target.png` and `attn_<i>.pgm` (i = 0 .. objects-1) from a
/// directory. Files that are missing or sized differently from the canvas
/// raise std::runtime_error.
class FileGuidance final : public GuidanceSource {
 public:
  explicit FileGuidance(std::string directory) : dir_(std::move(directory)) {}
  Guidance guide(const GroundedLayout& layout, int width, int height) override;

 private:
  std::string dir_;
};

/// Writes a Guidance in the layout FileGuidance reads.
void save_guidance(const Guidance& guidance, const std::string& directory);

}  // namespace vecsynth
