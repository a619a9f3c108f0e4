#pragma once

#include <cstdint>
#include <vector>

#include "vecsynth/layout.hpp"

namespace vecsynth {

/// Nonnegative scalar field, row-major.
struct AttentionMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  AttentionMap() = default;
  AttentionMap(int w, int h, double fill = 0.0);

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x); }
  double at(int x, int y) const { return values[index(x, y)]; }
  double& at(int x, int y) { return values[index(x, y)]; }
  std::size_t size() const { return values.size(); }
  double max() const;

  friend bool operator==(const AttentionMap&, const AttentionMap&) = default;
};

/// Binary mask, 1 inside.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  std::size_t count() const;
  bool at(int x, int y) const { return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] != 0; }
};

/// Real tensor stored as (y, x, channel).
struct LatentTensor {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  LatentTensor() = default;
  LatentTensor(int w, int h, int c, double fill = 0.0);

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c);
  }
  double at(int x, int y, int c) const { return data[index(x, y, c)]; }

  friend bool operator==(const LatentTensor&, const LatentTensor&) = default;
};

/// Dense row-major feature matrix: `rows` vectors of length `dim`.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> data;

  const double* row(std::size_t r) const { return data.data() + r * dim; }
};

struct EnergyConfig {
  double beta = 7.5;
  double gamma_e = 3.5;
  double topk_fraction = 0.2;
};

/// i.i.d. Gamma(alpha, 1) / alpha draws (mean 1, variance 1/alpha) from a
/// seeded mt19937_64. DomainError unless alpha > 1.
LatentTensor sample_gamma_latent(int width, int height, int channels, double alpha, std::uint64_t seed);

/// Softmax over pixels of <Q_x, sum_y K_y> / d^2, before any rescaling; the
/// result sums to 1. `queries` holds one row per pixel (width * height).
AttentionMap attention_probabilities(const FeatureMatrix& queries, const FeatureMatrix& keys, int width, int height);
/// attention_probabilities rescaled to a maximum of 1. DomainError if the
/// feature dimension is 0 or the shapes disagree.
AttentionMap box_attention(const FeatureMatrix& queries, const FeatureMatrix& keys, int width, int height);

/// Scaled so the maximum is 1; an all-zero map is returned unchanged.
AttentionMap rescale_to_max(AttentionMap map);

/// Running element-wise product, rescaled to max 1 after every factor. A
/// single map is returned as is. DomainError on an empty list or
/// mismatched sizes.
AttentionMap fuse_attention(const std::vector<AttentionMap>& maps);
/// Plain element-wise product without rescaling (may underflow).
AttentionMap attention_product(const std::vector<AttentionMap>& maps);

/// Mean of the k largest values; DomainError unless 1 <= k <= size.
double topk_mean(std::vector<double> values, std::size_t k);

/// 1 for pixels whose center lies in the box clamped to the canvas.
/// DomainError when no pixel is covered.
Mask mask_from_box(const BBox& box, int width, int height);

/// Composition energy over boxes i:
///   sum_i [-topk(A_i * Zfg_i) + beta * topk(A_i * Zbg_i)]
///   + gamma_e * sum_i mean_{mask_i} |A_i - A_s| / sigma_i
/// topk is taken per latent channel over all pixels with
/// k = ceil(topk_fraction * |mask_i|) and averaged over channels; sigma_i is
/// the standard deviation of A_i over mask_i. DegenerateError if a sigma
/// is 0 while gamma_e > 0; DomainError on shape mismatches.
double composition_energy(const AttentionMap& fused, const std::vector<AttentionMap>& per_box,
                          const std::vector<Mask>& masks, const std::vector<LatentTensor>& fg,
                          const std::vector<LatentTensor>& bg, const EnergyConfig& cfg = {});

/// bg outside every mask; inside mask i the value of fg_i, later masks
/// winning on overlap.
LatentTensor composite_latents(const std::vector<LatentTensor>& fg, const std::vector<Mask>& masks, const LatentTensor& bg);

}  // namespace vecsynth
