#pragma once

#include <vector>

#include "vecsynth/attention.hpp"
#include "vecsynth/encoder.hpp"
#include "vecsynth/raster.hpp"

namespace vecsynth {

struct LossWeights {
  double lambda_sop = 0.3;
  double lambda_align = 0.5;
  double epsilon_align = 1e-6;
};

/// sum |s1_i - s_fg_i|. DomainError on a dimension mismatch.
double l1_embed(const Embedding& s1, const Embedding& s_fg);
/// Gradient with respect to s_fg: sign(s_fg - s1), 0 where equal.
Embedding l1_embed_grad(const Embedding& s1, const Embedding& s_fg);

/// mean_i ((s2_i - s_fg_i) / den_i)^2 with den_i = s2_i - s_bg_i. A
/// denominator smaller than eps in magnitude becomes +-eps (sign kept,
/// +eps for an exact zero).
double align_loss(const Embedding& s2, const Embedding& s_fg, const Embedding& s_bg, double eps = 1e-6);

struct AlignGradient {
  Embedding s2, s_fg, s_bg;
};
/// Inside the eps floor the denominator is constant, so s_bg gets no
/// gradient there.
AlignGradient align_loss_grad(const Embedding& s2, const Embedding& s_fg, const Embedding& s_bg, double eps = 1e-6);

/// |1 - max(s1 * lum(rendered)) / max(s1 * lum(target))|. DegenerateError
/// when the target maximum is not positive; DomainError on size mismatch.
double sop_loss(const AttentionMap& s1, const RasterImage& target, const RasterImage& rendered);
/// Gradient with respect to `rendered`, routed through the first pixel
/// attaining the maximum.
ImageGradient sop_loss_grad(const AttentionMap& s1, const RasterImage& target, const RasterImage& rendered);

/// Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
double ce_loss(const std::vector<double>& probs, const std::vector<int>& labels);
/// d/dp of ce_loss; 0 where a probability was clamped.
std::vector<double> ce_loss_grad(const std::vector<double>& probs, const std::vector<int>& labels);

/// ||enc(a) - enc(b)||^2 / D.
double perceptual_loss(const RasterImage& a, const RasterImage& b, const PerceptualEncoder& enc);
/// Gradient with respect to `b`.
ImageGradient perceptual_loss_grad(const RasterImage& a, const RasterImage& b, const PerceptualEncoder& enc);

/// perceptual + lambda_sop * sop + lambda_align * align.
double synth_loss(double perceptual, double sop, double align, const LossWeights& w = {});

}  // namespace vecsynth
