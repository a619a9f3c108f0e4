#pragma once

// Shared fixtures and brute-force oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "vecsynth/raster.hpp"
#include "vecsynth/scene.hpp"

namespace vecsynth::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Stroke random_stroke(std::mt19937_64& rng, int w, int h, bool primitives) {
  ShapeKind kind = ShapeKind::bezier;
  if (primitives) {
    constexpr ShapeKind kinds[] = {ShapeKind::bezier, ShapeKind::line, ShapeKind::circle, ShapeKind::semicircle,
                                   ShapeKind::triangle, ShapeKind::square, ShapeKind::l_shape, ShapeKind::u_shape};
    kind = kinds[std::uniform_int_distribution<int>(0, 7)(rng)];
  }
  std::size_t n = required_points(kind);
  if (n == 0) n = static_cast<std::size_t>(std::uniform_int_distribution<int>(2, 5)(rng));
  const Point c{uniform(rng, 0.25 * w, 0.75 * w), uniform(rng, 0.25 * h, 0.75 * h)};
  const double r = 0.3 * std::min(w, h);
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(c + Point{uniform(rng, -r, r), uniform(rng, -r, r)});
  Stroke s{BezierPath(pts)};
  s.shape = kind;
  s.width = uniform(rng, 1.5, 8.0);
  s.opacity = uniform(rng, 0.2, 0.9);
  s.color = Color{uniform(rng, 0.05, 0.95), uniform(rng, 0.05, 0.95), uniform(rng, 0.05, 0.95), uniform(rng, 0.3, 0.95)};
  if (kind != ShapeKind::bezier) s.transform_class = TransformClass::affine_only;
  return s;
}

inline Canvas random_canvas(std::mt19937_64& rng, int w, int h, int strokes, bool primitives = false) {
  Canvas c;
  c.width = w;
  c.height = h;
  c.background = Color{uniform(rng, 0.6, 1), uniform(rng, 0.6, 1), uniform(rng, 0.6, 1), 1.0};
  for (int i = 0; i < strokes; ++i) c.strokes.push_back(random_stroke(rng, w, h, primitives));
  return c;
}

/// Scalar test loss sum_i weight_i * pixel_i and its upstream gradient.
struct LinearLoss {
  ImageGradient weights;
  double operator()(const RasterImage& img) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < img.data.size(); ++i) acc += weights.data[i] * img.data[i];
    return acc;
  }
};

inline LinearLoss random_linear_loss(std::mt19937_64& rng, int w, int h) {
  LinearLoss l{ImageGradient(w, h)};
  for (auto& v : l.weights.data) v = uniform(rng, -1.0, 1.0);
  return l;
}

struct FdReport {
  std::size_t checked = 0;
  std::size_t failed = 0;
  // Mismatches whose stencil straddles a jump of the closest point (two
  // curve branches equidistant from a pixel), where the distance has a kink.
  std::size_t nondifferentiable = 0;
  double worst_rel = 0.0;
};

/// True if, for some pixel near the stroke, the closest point on stroke k
/// jumps between the two canvases instead of moving continuously.
inline bool closest_point_jumps(const Canvas& a, const Canvas& b, std::size_t k, double softness) {
  const auto pa = expand_pieces(a.strokes[k]), pb = expand_pieces(b.strokes[k]);
  const double reach = 0.5 * std::max(a.strokes[k].width, b.strokes[k].width) - kCoverageCutoff * softness;
  auto closest = [](const std::vector<std::vector<Point>>& pieces, Point p) {
    ClosestPoint best{0, {}, 1e300};
    for (const auto& piece : pieces) {
      const auto c = closest_point(piece, p);
      if (c.distance < best.distance) best = c;
    }
    return best;
  };
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      const Point p{x + 0.5, y + 0.5};
      const auto ca = closest(pa, p), cb = closest(pb, p);
      if (std::min(ca.distance, cb.distance) > reach) continue;
      if (distance(ca.point, cb.point) > 0.05) return true;
    }
  }
  return false;
}

/// Compares analytic raster gradients with central differences over every
/// parameter of every stroke. A parameter passes when
/// |a - n| <= max(rel * max(|a|, |n|), abs_floor).
inline FdReport check_raster_gradients(const Canvas& canvas, const LinearLoss& loss, double softness, double h,
                                        double rel, double abs_floor) {
  const RasterGradients g = render_with_grad(canvas, softness, loss.weights);
  FdReport rep;
  std::size_t k = 0;
  auto compare = [&](double analytic, auto&& perturb) {
    Canvas plus = canvas, minus = canvas;
    perturb(plus, h);
    perturb(minus, -h);
    const double numeric = (loss(render(plus, softness)) - loss(render(minus, softness))) / (2.0 * h);
    const double err = std::abs(analytic - numeric);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    ++rep.checked;
    if (err <= std::max(rel * scale, abs_floor)) {
      if (scale > abs_floor) rep.worst_rel = std::max(rep.worst_rel, err / scale);
    } else if (closest_point_jumps(plus, minus, k, softness)) {
      ++rep.nondifferentiable;
    } else {
      ++rep.failed;
      rep.worst_rel = std::max(rep.worst_rel, err / scale);
    }
  };
  for (; k < canvas.strokes.size(); ++k) {
    const auto& sg = g.strokes[k];
    for (std::size_t j = 0; j < canvas.strokes[k].path.size(); ++j) {
      compare(sg.control_points[j].x, [&](Canvas& c, double d) {
        Point p = c.strokes[k].path[j];
        p.x += d;
        c.strokes[k].path.set(j, p);
      });
      compare(sg.control_points[j].y, [&](Canvas& c, double d) {
        Point p = c.strokes[k].path[j];
        p.y += d;
        c.strokes[k].path.set(j, p);
      });
    }
    compare(sg.width, [&](Canvas& c, double d) { c.strokes[k].width += d; });
    compare(sg.opacity, [&](Canvas& c, double d) { c.strokes[k].opacity += d; });
    compare(sg.color[0], [&](Canvas& c, double d) { c.strokes[k].color.r += d; });
    compare(sg.color[1], [&](Canvas& c, double d) { c.strokes[k].color.g += d; });
    compare(sg.color[2], [&](Canvas& c, double d) { c.strokes[k].color.b += d; });
    compare(sg.color[3], [&](Canvas& c, double d) { c.strokes[k].color.a += d; });
  }
  return rep;
}

}  // namespace vecsynth::testing
