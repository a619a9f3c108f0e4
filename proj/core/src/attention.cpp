#include "vecsynth/attention.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "vecsynth/error.hpp"

namespace vecsynth {

AttentionMap::AttentionMap(int w, int h, double fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw DomainError("AttentionMap dimensions must be positive");
  values.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
}

double AttentionMap::max() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }

std::size_t Mask::count() const { return static_cast<std::size_t>(std::count(values.begin(), values.end(), 1)); }

LatentTensor::LatentTensor(int w, int h, int c, double fill) : width(w), height(h), channels(c) {
  if (w <= 0 || h <= 0 || c <= 0) throw DomainError("LatentTensor dimensions must be positive");
  data.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(c), fill);
}

LatentTensor sample_gamma_latent(int width, int height, int channels, double alpha, std::uint64_t seed) {
  if (!(alpha > 1.0)) throw DomainError("sample_gamma_latent: alpha must exceed 1");
  LatentTensor z(width, height, channels);
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  for (auto& v : z.data) v = gamma(rng) / alpha;
  return z;
}

AttentionMap attention_probabilities(const FeatureMatrix& queries, const FeatureMatrix& keys, int width, int height) {
  if (queries.dim == 0 || keys.dim == 0) throw DomainError("box_attention: feature dimension must be positive");
  if (queries.dim != keys.dim) throw DomainError("box_attention: query and key dimensions differ");
  if (queries.rows != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DomainError("box_attention: one query row per pixel required");
  }
  const std::size_t d = queries.dim;
  std::vector<double> key_sum(d, 0.0);
  for (std::size_t r = 0; r < keys.rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) key_sum[c] += keys.row(r)[c];
  }
  const double scale = 1.0 / static_cast<double>(d * d);
  AttentionMap out(width, height);
  double peak = -INFINITY;
  for (std::size_t p = 0; p < queries.rows; ++p) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += queries.row(p)[c] * key_sum[c];
    out.values[p] = s * scale;
    peak = std::max(peak, out.values[p]);
  }
  double total = 0.0;
  for (auto& v : out.values) total += (v = std::exp(v - peak));
  for (auto& v : out.values) v /= total;
  return out;
}

AttentionMap box_attention(const FeatureMatrix& queries, const FeatureMatrix& keys, int width, int height) {
  return rescale_to_max(attention_probabilities(queries, keys, width, height));
}

AttentionMap rescale_to_max(AttentionMap map) {
  const double m = map.max();
  if (m > 0.0) {
    for (auto& v : map.values) v /= m;
  }
  return map;
}

AttentionMap fuse_attention(const std::vector<AttentionMap>& maps) {
  if (maps.empty()) throw DomainError("fuse_attention: no maps");
  if (maps.size() == 1) return maps.front();
  AttentionMap acc = maps.front();
  for (std::size_t i = 1; i < maps.size(); ++i) {
    if (maps[i].width != acc.width || maps[i].height != acc.height) throw DomainError("fuse_attention: size mismatch");
    for (std::size_t p = 0; p < acc.size(); ++p) acc.values[p] *= maps[i].values[p];
    acc = rescale_to_max(std::move(acc));
  }
  return acc;
}

AttentionMap attention_product(const std::vector<AttentionMap>& maps) {
  if (maps.empty()) throw DomainError("attention_product: no maps");
  AttentionMap acc = maps.front();
  for (std::size_t i = 1; i < maps.size(); ++i) {
    if (maps[i].width != acc.width || maps[i].height != acc.height) throw DomainError("attention_product: size mismatch");
    for (std::size_t p = 0; p < acc.size(); ++p) acc.values[p] *= maps[i].values[p];
  }
  return acc;
}

double topk_mean(std::vector<double> values, std::size_t k) {
  if (k < 1 || k > values.size()) throw DomainError("topk_mean: k out of range");
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1), values.end(), std::greater<>());
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += values[i];
  return s / static_cast<double>(k);
}

Mask mask_from_box(const BBox& box, int width, int height) {
  if (width <= 0 || height <= 0) throw DomainError("mask_from_box: canvas dimensions must be positive");
  Mask m{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0)};
  const double x0 = std::max(0.0, box.x), y0 = std::max(0.0, box.y);
  const double x1 = std::min<double>(width, box.x + box.w), y1 = std::min<double>(height, box.y + box.h);
  for (int y = 0; y < height; ++y) {
    const double cy = y + 0.5;
    if (cy < y0 || cy > y1) continue;
    for (int x = 0; x < width; ++x) {
      const double cx = x + 0.5;
      if (cx >= x0 && cx <= x1) m.values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] = 1;
    }
  }
  if (m.count() == 0) throw DomainError("mask_from_box: box covers no pixel center of the canvas");
  return m;
}

namespace {

double masked_topk(const AttentionMap& a, const LatentTensor& z, std::size_t k) {
  double acc = 0.0;
  std::vector<double> prod(a.size());
  for (int c = 0; c < z.channels; ++c) {
    for (int y = 0; y < a.height; ++y) {
      for (int x = 0; x < a.width; ++x) prod[a.index(x, y)] = a.at(x, y) * z.at(x, y, c);
    }
    acc += topk_mean(prod, k);
  }
  return acc / static_cast<double>(z.channels);
}

}  // namespace

double composition_energy(const AttentionMap& fused, const std::vector<AttentionMap>& per_box,
                          const std::vector<Mask>& masks, const std::vector<LatentTensor>& fg,
                          const std::vector<LatentTensor>& bg, const EnergyConfig& cfg) {
  const std::size_t n = per_box.size();
  if (masks.size() != n || fg.size() != n || bg.size() != n) throw DomainError("composition_energy: list sizes differ");
  if (!(cfg.topk_fraction > 0.0 && cfg.topk_fraction <= 1.0)) throw DomainError("composition_energy: topk_fraction must lie in (0, 1]");
  auto same = [&](int w, int h) { return w == fused.width && h == fused.height; };
  double energy = 0.0, consistency = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const AttentionMap& a = per_box[i];
    if (!same(a.width, a.height) || !same(masks[i].width, masks[i].height) || !same(fg[i].width, fg[i].height) ||
        !same(bg[i].width, bg[i].height)) {
      throw DomainError("composition_energy: shape mismatch");
    }
    const std::size_t area = masks[i].count();
    if (area == 0) throw DomainError("composition_energy: empty mask");
    const auto k = std::min(a.size(), static_cast<std::size_t>(std::ceil(cfg.topk_fraction * static_cast<double>(area))));
    energy += -masked_topk(a, fg[i], k) + cfg.beta * masked_topk(a, bg[i], k);

    if (cfg.gamma_e == 0.0) continue;
    double mean = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) mean += masks[i].values[p] ? a.values[p] : 0.0;
    mean /= static_cast<double>(area);
    double var = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) {
      if (masks[i].values[p]) var += (a.values[p] - mean) * (a.values[p] - mean);
    }
    const double sigma = std::sqrt(var / static_cast<double>(area));
    if (!(sigma > 0.0)) throw DegenerateError("composition_energy: attention is constant inside box " + std::to_string(i));
    double dev = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) {
      if (masks[i].values[p]) dev += std::abs(a.values[p] - fused.values[p]) / sigma;
    }
    consistency += dev / static_cast<double>(area);
  }
  return energy + cfg.gamma_e * consistency;
}

LatentTensor composite_latents(const std::vector<LatentTensor>& fg, const std::vector<Mask>& masks, const LatentTensor& bg) {
  if (fg.size() != masks.size()) throw DomainError("composite_latents: one mask per foreground latent");
  LatentTensor out = bg;
  for (std::size_t i = 0; i < fg.size(); ++i) {
    if (fg[i].width != bg.width || fg[i].height != bg.height || fg[i].channels != bg.channels ||
        masks[i].width != bg.width || masks[i].height != bg.height) {
      throw DomainError("composite_latents: shape mismatch");
    }
    for (int y = 0; y < bg.height; ++y) {
      for (int x = 0; x < bg.width; ++x) {
        if (!masks[i].at(x, y)) continue;
        for (int c = 0; c < bg.channels; ++c) out.data[out.index(x, y, c)] = fg[i].at(x, y, c);
      }
    }
  }
  return out;
}

}  // namespace vecsynth
