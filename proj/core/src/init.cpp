#include "vecsynth/init.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "vecsynth/error.hpp"

namespace vecsynth {

void InitConfig::validate() const {
  if (!(initial_width > 0.0)) throw DomainError("InitConfig: initial_width must be positive");
  if (!(jitter_radius > 0.0)) throw DomainError("InitConfig: jitter_radius must be positive");
  if (!(initial_opacity >= 0.0 && initial_opacity <= 1.0)) throw DomainError("InitConfig: initial_opacity must lie in [0, 1]");
}

std::vector<Point> select_keypoints(const AttentionMap& attention, const Mask& mask, std::size_t eta, std::uint64_t seed) {
  if (eta == 0) return {};
  if (mask.width != attention.width || mask.height != attention.height) throw DomainError("select_keypoints: mask and attention sizes differ");

  // Efraimidis-Spirakis: the eta largest keys log(u) / w form a weighted
  // sample without replacement.
  struct Keyed {
    double key;
    std::size_t pixel;
  };
  std::vector<Keyed> keys;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double mass = 0.0;
  for (std::size_t p = 0; p < attention.size(); ++p) {
    if (!mask.values[p]) continue;
    const double w = attention.values[p];
    const double r = u(rng);  // drawn for every in-mask pixel so the stream does not depend on weights
    if (!(w > 0.0)) continue;
    mass += w;
    keys.push_back({std::log(std::max(r, 1e-300)) / w, p});
  }
  if (!(mass > 0.0)) throw DegenerateError("select_keypoints: no attention mass inside the mask");
  if (keys.size() < eta) {
    throw DomainError("select_keypoints: " + std::to_string(eta) + " keypoints requested but only " +
                      std::to_string(keys.size()) + " pixels carry attention");
  }
  auto by_key = [](const Keyed& a, const Keyed& b) { return a.key > b.key || (a.key == b.key && a.pixel < b.pixel); };
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(eta), keys.end(), by_key);
  std::vector<Point> out;
  out.reserve(eta);
  for (std::size_t i = 0; i < eta; ++i) {
    const auto x = static_cast<int>(keys[i].pixel % static_cast<std::size_t>(attention.width));
    const auto y = static_cast<int>(keys[i].pixel / static_cast<std::size_t>(attention.width));
    out.push_back({x + 0.5, y + 0.5});
  }
  return out;
}

namespace {

Color sample_color(const RasterImage* img, Point p) {
  if (!img) return Color::black();
  const int x = std::clamp(static_cast<int>(std::floor(p.x)), 0, img->width - 1);
  const int y = std::clamp(static_cast<int>(std::floor(p.y)), 0, img->height - 1);
  return Color::clamped(img->at(x, y, 0), img->at(x, y, 1), img->at(x, y, 2));
}

Point in_disk(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = radius * std::sqrt(u(rng));
  const double a = 2.0 * std::numbers::pi * u(rng);
  return {r * std::cos(a), r * std::sin(a)};
}

Canvas blank(int width, int height) {
  if (width <= 0 || height <= 0) throw DomainError("canvas dimensions must be positive");
  Canvas c;
  c.width = width;
  c.height = height;
  return c;
}

}  // namespace

Canvas init_strokes(const std::vector<Point>& keypoints, const InitConfig& cfg, int width, int height,
                    const RasterImage* color_source) {
  cfg.validate();
  Canvas canvas = blank(width, height);
  std::mt19937_64 rng(cfg.seed);
  for (const Point& k : keypoints) {
    std::vector<Point> pts{k};
    for (int i = 0; i < 3; ++i) pts.push_back(k + in_disk(rng, cfg.jitter_radius));
    Stroke s{BezierPath(std::move(pts))};
    s.width = cfg.initial_width;
    s.opacity = cfg.initial_opacity;
    s.color = sample_color(color_source, k);
    canvas.strokes.push_back(std::move(s));
  }
  return canvas;
}

std::vector<Point> primitive_template(ShapeKind kind, Point c, double size) {
  const double h = 0.5 * size;
  switch (kind) {
    case ShapeKind::line:
    case ShapeKind::circle:
    case ShapeKind::semicircle: return {c + Point{-h, 0}, c + Point{h, 0}};
    case ShapeKind::triangle: {
      const double hy = 0.5 * size * std::numbers::sqrt3 / 2.0;
      return {c + Point{-h, hy}, c + Point{h, hy}, c + Point{0, -hy}};
    }
    case ShapeKind::square: return {c + Point{-h, -h}, c + Point{h, -h}, c + Point{h, h}, c + Point{-h, h}};
    case ShapeKind::l_shape: return {c + Point{-h, -h}, c + Point{-h, h}, c + Point{h, h}};
    case ShapeKind::u_shape: return {c + Point{-h, -h}, c + Point{-h, h}, c + Point{h, h}, c + Point{h, -h}};
    case ShapeKind::bezier: break;
  }
  throw DomainError("primitive_template: bezier has no template");
}

Canvas init_primitives(const std::vector<Point>& keypoints, const InitConfig& cfg, int width, int height,
                       const RasterImage* color_source) {
  cfg.validate();
  if (cfg.primitive_kind == ShapeKind::bezier) throw DomainError("init_primitives: primitive_kind must not be bezier");
  Canvas canvas = blank(width, height);
  for (const Point& k : keypoints) {
    Stroke s{BezierPath(primitive_template(cfg.primitive_kind, k, cfg.jitter_radius))};
    s.shape = cfg.primitive_kind;
    s.transform_class = TransformClass::affine_only;
    s.width = cfg.initial_width;
    s.opacity = cfg.initial_opacity;
    s.color = sample_color(color_source, k);
    canvas.strokes.push_back(std::move(s));
  }
  return canvas;
}

}  // namespace vecsynth
