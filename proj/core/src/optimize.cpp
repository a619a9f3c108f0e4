#include "vecsynth/optimize.hpp"

#include <algorithm>
#include <limits>

#include "vecsynth/adam.hpp"
#include "vecsynth/error.hpp"

namespace vecsynth {

namespace {

// Flat parameter vector: per stroke its control points, width, opacity,
// then r, g, b.
struct Packing {
  std::vector<std::size_t> offsets;
  std::size_t size = 0;

  explicit Packing(const Canvas& c) {
    for (const auto& s : c.strokes) {
      offsets.push_back(size);
      size += 2 * s.path.size() + 5;
    }
  }
};

std::vector<double> pack(const Canvas& c, const Packing& pk) {
  std::vector<double> v(pk.size);
  for (std::size_t i = 0; i < c.strokes.size(); ++i) {
    const Stroke& s = c.strokes[i];
    double* p = v.data() + pk.offsets[i];
    for (const Point& q : s.path.control_points()) {
      *p++ = q.x;
      *p++ = q.y;
    }
    *p++ = s.width;
    *p++ = s.opacity;
    *p++ = s.color.r;
    *p++ = s.color.g;
    *p++ = s.color.b;
  }
  return v;
}

std::vector<double> pack_grad(const RasterGradients& g, const Canvas& c, const Packing& pk) {
  std::vector<double> v(pk.size);
  for (std::size_t i = 0; i < c.strokes.size(); ++i) {
    const StrokeGradient& s = g.strokes[i];
    double* p = v.data() + pk.offsets[i];
    for (const Point& q : s.control_points) {
      *p++ = q.x;
      *p++ = q.y;
    }
    *p++ = s.width;
    *p++ = s.opacity;
    for (int k = 0; k < 3; ++k) *p++ = s.color[static_cast<std::size_t>(k)];
  }
  return v;
}

std::vector<double> learning_rates(const Canvas& c, const Packing& pk, const OptimizeConfig& cfg) {
  std::vector<double> lr(pk.size);
  for (std::size_t i = 0; i < c.strokes.size(); ++i) {
    double* p = lr.data() + pk.offsets[i];
    const std::size_t n = 2 * c.strokes[i].path.size();
    std::fill(p, p + n, cfg.lr_points);
    p[n] = cfg.lr_width;
    p[n + 1] = cfg.lr_opacity;
    std::fill(p + n + 2, p + n + 5, cfg.optimize_color ? cfg.lr_color : 0.0);
  }
  return lr;
}

// Writes the stepped vector back into the canvas with the projections, then
// re-reads it so the optimizer state tracks the projected parameters.
void unpack(std::vector<double>& v, Canvas& c, const Packing& pk, const OptimizeConfig& cfg) {
  for (std::size_t i = 0; i < c.strokes.size(); ++i) {
    Stroke& s = c.strokes[i];
    double* p = v.data() + pk.offsets[i];
    const std::size_t n = s.path.size();
    std::vector<Point> proposed(n);
    for (std::size_t k = 0; k < n; ++k) proposed[k] = {p[2 * k], p[2 * k + 1]};
    if (s.transform_class == TransformClass::affine_only) {
      const auto old = s.path.control_points();
      const AffineTransform a = fit_affine(old, proposed);
      for (std::size_t k = 0; k < n; ++k) proposed[k] = apply_affine(a, old[k]);
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (is_finite(proposed[k])) s.path.set(k, proposed[k]);
      p[2 * k] = s.path[k].x;
      p[2 * k + 1] = s.path[k].y;
    }
    double* q = p + 2 * n;
    s.width = q[0] = std::max(q[0], cfg.min_width);
    s.opacity = q[1] = std::clamp(q[1], 0.0, 1.0);
    s.color.r = q[2] = std::clamp(q[2], 0.0, 1.0);
    s.color.g = q[3] = std::clamp(q[3], 0.0, 1.0);
    s.color.b = q[4] = std::clamp(q[4], 0.0, 1.0);
  }
}

Point nearest_in(const BBox& b, Point p) {
  return {std::clamp(p.x, b.x, b.x + b.w), std::clamp(p.y, b.y, b.y + b.h)};
}

void confine_anchor(Stroke& s, const std::vector<BBox>& region) {
  const Point a = stroke_anchor(s);
  Point best = a;
  double best_d = std::numeric_limits<double>::infinity();
  for (const BBox& b : region) {
    const Point q = nearest_in(b, a);
    const double d = (q.x - a.x) * (q.x - a.x) + (q.y - a.y) * (q.y - a.y);
    if (d == 0.0) return;
    if (d < best_d) best_d = d, best = q;
  }
  const Point shift = best - a;
  for (std::size_t k = 0; k < s.path.size(); ++k) s.path.set(k, s.path[k] + shift);
}

}  // namespace

OptimizeResult optimize_canvas(const Canvas& canvas, const RasterImage& target, const AttentionMap& s1_map,
                               const PerceptualEncoder& enc, const LossWeights& weights, const OptimizeConfig& cfg) {
  if (cfg.iters < 0) throw DomainError("optimize_canvas: iters must be nonnegative");
  if (target.width != canvas.width || target.height != canvas.height) throw DomainError("optimize_canvas: target size differs from the canvas");
  if (s1_map.width != canvas.width || s1_map.height != canvas.height) throw DomainError("optimize_canvas: attention size differs from the canvas");

  OptimizeResult res{canvas, {}, {}, {}, 0.0, 0.0};
  SoftRasterizer raster(RenderOptions{cfg.softness, cfg.workers, 16});
  const Packing pk(canvas);
  std::vector<double> params = pack(canvas, pk);
  const std::vector<double> lr = learning_rates(canvas, pk, cfg);
  AdamState adam;
  std::vector<bool> confined(canvas.strokes.size(), !cfg.anchor_region.empty());
  for (std::size_t k : cfg.unconfined) {
    if (k < confined.size()) confined[k] = false;
  }

  for (int it = 0;; ++it) {
    const RasterImage img = raster.forward(res.canvas);
    const double perc = perceptual_loss(target, img, enc);
    const double sop = weights.lambda_sop != 0.0 ? sop_loss(s1_map, target, img) : 0.0;
    res.perceptual.push_back(perc);
    res.sop.push_back(sop);
    res.loss.push_back(synth_loss(perc, sop, 0.0, weights));
    if (it == 0) res.psnr_initial = psnr(img, target);
    if (it == cfg.iters) {
      res.psnr_final = psnr(img, target);
      break;
    }
    if (res.canvas.strokes.empty()) continue;

    ImageGradient up = perceptual_loss_grad(target, img, enc);
    if (weights.lambda_sop != 0.0) {
      const ImageGradient g = sop_loss_grad(s1_map, target, img);
      for (std::size_t i = 0; i < up.data.size(); ++i) up.data[i] += weights.lambda_sop * g.data[i];
    }
    const std::vector<double> grads = pack_grad(raster.backward(up), res.canvas, pk);
    adam_step(params, grads, adam, lr);
    unpack(params, res.canvas, pk, cfg);
    if (!cfg.anchor_region.empty()) {
      for (std::size_t i = 0; i < confined.size(); ++i) {
        if (confined[i]) confine_anchor(res.canvas.strokes[i], cfg.anchor_region);
      }
      params = pack(res.canvas, pk);
    }
  }
  return res;
}

}  // namespace vecsynth
