#include "vecsynth/losses.hpp"

#include <algorithm>
#include <cmath>

#include "vecsynth/error.hpp"

namespace vecsynth {

namespace {

constexpr double kProbClamp = 1e-7;

void same_dim(const Embedding& a, const Embedding& b, const char* what) {
  if (a.size() != b.size()) throw DomainError(std::string(what) + ": embedding dimensions differ");
}

double floored(double den, double eps) {
  if (std::abs(den) >= eps) return den;
  return den < 0.0 ? -eps : eps;
}

struct MaxAt {
  double value;
  std::size_t pixel;
};

MaxAt masked_max(const AttentionMap& s1, const RasterImage& img) {
  MaxAt m{-INFINITY, 0};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double v = s1.at(x, y) * luminance(img, x, y);
      if (v > m.value) m = {v, s1.index(x, y)};
    }
  }
  return m;
}

void check_sop(const AttentionMap& s1, const RasterImage& target, const RasterImage& rendered) {
  if (s1.width != target.width || s1.height != target.height || rendered.width != target.width ||
      rendered.height != target.height) {
    throw DomainError("sop_loss: map and image sizes differ");
  }
}

}  // namespace

double l1_embed(const Embedding& s1, const Embedding& s_fg) {
  same_dim(s1, s_fg, "l1_embed");
  double acc = 0.0;
  for (std::size_t i = 0; i < s1.size(); ++i) acc += std::abs(s1[i] - s_fg[i]);
  return acc;
}

Embedding l1_embed_grad(const Embedding& s1, const Embedding& s_fg) {
  same_dim(s1, s_fg, "l1_embed");
  Embedding g(s1.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = s_fg[i] > s1[i] ? 1.0 : s_fg[i] < s1[i] ? -1.0 : 0.0;
  return g;
}

double align_loss(const Embedding& s2, const Embedding& s_fg, const Embedding& s_bg, double eps) {
  same_dim(s2, s_fg, "align_loss");
  same_dim(s2, s_bg, "align_loss");
  if (s2.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < s2.size(); ++i) {
    const double r = (s2[i] - s_fg[i]) / floored(s2[i] - s_bg[i], eps);
    acc += r * r;
  }
  return acc / static_cast<double>(s2.size());
}

AlignGradient align_loss_grad(const Embedding& s2, const Embedding& s_fg, const Embedding& s_bg, double eps) {
  same_dim(s2, s_fg, "align_loss");
  same_dim(s2, s_bg, "align_loss");
  const std::size_t n = s2.size();
  AlignGradient g{Embedding(n), Embedding(n), Embedding(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double raw = s2[i] - s_bg[i];
    const double den = floored(raw, eps);
    const double r = (s2[i] - s_fg[i]) / den;
    const double d_num = 2.0 * r / den / static_cast<double>(n);
    const double d_den = std::abs(raw) >= eps ? -2.0 * r * r / den / static_cast<double>(n) : 0.0;
    g.s2[i] = d_num + d_den;
    g.s_fg[i] = -d_num;
    g.s_bg[i] = -d_den;
  }
  return g;
}

double sop_loss(const AttentionMap& s1, const RasterImage& target, const RasterImage& rendered) {
  check_sop(s1, target, rendered);
  const MaxAt t = masked_max(s1, target);
  if (!(t.value > 0.0)) throw DegenerateError("sop_loss: target has no attention-weighted luminance");
  return std::abs(1.0 - masked_max(s1, rendered).value / t.value);
}

ImageGradient sop_loss_grad(const AttentionMap& s1, const RasterImage& target, const RasterImage& rendered) {
  check_sop(s1, target, rendered);
  const MaxAt t = masked_max(s1, target);
  if (!(t.value > 0.0)) throw DegenerateError("sop_loss: target has no attention-weighted luminance");
  const MaxAt r = masked_max(s1, rendered);
  ImageGradient g(rendered);
  const double gap = 1.0 - r.value / t.value;
  const double sign = gap > 0.0 ? 1.0 : gap < 0.0 ? -1.0 : 0.0;
  const double d = -sign / t.value * s1.values[r.pixel];
  const std::size_t i = r.pixel * 3;
  g.data[i] = d * 0.299;
  g.data[i + 1] = d * 0.587;
  g.data[i + 2] = d * 0.114;
  return g;
}

double ce_loss(const std::vector<double>& probs, const std::vector<int>& labels) {
  if (probs.size() != labels.size()) throw DomainError("ce_loss: probs and labels differ in length");
  if (probs.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    acc -= labels[i] ? std::log(p) : std::log1p(-p);
  }
  return acc / static_cast<double>(probs.size());
}

std::vector<double> ce_loss_grad(const std::vector<double>& probs, const std::vector<int>& labels) {
  if (probs.size() != labels.size()) throw DomainError("ce_loss: probs and labels differ in length");
  std::vector<double> g(probs.size(), 0.0);
  const auto n = static_cast<double>(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (p < kProbClamp || p > 1.0 - kProbClamp) continue;
    g[i] = (labels[i] ? -1.0 / p : 1.0 / (1.0 - p)) / n;
  }
  return g;
}

double perceptual_loss(const RasterImage& a, const RasterImage& b, const PerceptualEncoder& enc) {
  const Embedding ea = enc.encode(a), eb = enc.encode(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < ea.size(); ++i) acc += (ea[i] - eb[i]) * (ea[i] - eb[i]);
  return acc / static_cast<double>(ea.size());
}

ImageGradient perceptual_loss_grad(const RasterImage& a, const RasterImage& b, const PerceptualEncoder& enc) {
  const Embedding ea = enc.encode(a), eb = enc.encode(b);
  Embedding up(ea.size());
  for (std::size_t i = 0; i < up.size(); ++i) up[i] = 2.0 * (eb[i] - ea[i]) / static_cast<double>(up.size());
  return enc.backward(b, up);
}

double synth_loss(double perceptual, double sop, double align, const LossWeights& w) {
  return perceptual + w.lambda_sop * sop + w.lambda_align * align;
}

}  // namespace vecsynth
