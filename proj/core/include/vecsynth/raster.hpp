#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "vecsynth/geometry.hpp"
#include "vecsynth/scene.hpp"

namespace vecsynth {

/// Row-major RGB image, three doubles per pixel, values in [0, 1].
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  RasterImage() = default;
  RasterImage(int w, int h, const Color& fill = Color::white());

  std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3; }
  double at(int x, int y, int c) const { return data[index(x, y) + static_cast<std::size_t>(c)]; }
  double& at(int x, int y, int c) { return data[index(x, y) + static_cast<std::size_t>(c)]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

/// d(loss)/d(pixel channel); same layout as RasterImage, unbounded values.
struct ImageGradient {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  ImageGradient() = default;
  ImageGradient(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0.0) {}
  explicit ImageGradient(const RasterImage& like) : ImageGradient(like.width, like.height) {}

  std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3; }
  ImageGradient& operator+=(const ImageGradient& o);
};

/// Gradients of one stroke's parameters, mirroring Stroke.
struct StrokeGradient {
  std::vector<Point> control_points;
  double width = 0.0;
  double opacity = 0.0;
  std::array<double, 4> color{};  // r, g, b, a

  StrokeGradient& operator+=(const StrokeGradient& o);
};

struct RasterGradients {
  std::vector<StrokeGradient> strokes;
};

/// 0.299 R + 0.587 G + 0.114 B.
double luminance(double r, double g, double b);
double luminance(const RasterImage& img, int x, int y);

/// Closest point on one Bezier curve: uniform parameter samples followed by
/// Newton refinement. Ties resolve to the smallest parameter.
struct ClosestPoint {
  double t = 0.0;
  Point point;
  double distance = 0.0;
};

inline constexpr int kDistanceSamples = 64;
inline constexpr int kNewtonSteps = 20;

ClosestPoint closest_point(std::span<const Point> control_points, Point p);
double distance_to_path(Point pt, const BezierPath& path);
/// Distance to the rendered centerline of a stroke (all of its pieces).
double distance_to_stroke(Point pt, const Stroke& stroke);

struct RenderOptions {
  /// Smoothing length of the coverage sigmoid in pixels.
  double softness = 1.0;
  /// Worker threads for tile rendering; 0 picks hardware concurrency.
  unsigned workers = 0;
  int tile_size = 16;
};

/// Coverage uses sqrt(d^2 + e^2) - e in place of the centerline distance d.
inline constexpr double kDistanceSmoothing = 0.05;

/// Coverage sigmoid arguments below this are treated as zero coverage.
inline constexpr double kCoverageCutoff = -16.0;

/// Soft rasterizer that keeps the per-pixel stroke contributions of its
/// last forward pass so that backward() does not repeat the distance
/// searches. Pixel centers sit at (i + 0.5, j + 0.5).
class SoftRasterizer {
 public:
  explicit SoftRasterizer(RenderOptions options = {});
  ~SoftRasterizer();
  SoftRasterizer(const SoftRasterizer&) = delete;
  SoftRasterizer& operator=(const SoftRasterizer&) = delete;
  SoftRasterizer(SoftRasterizer&&) noexcept;
  SoftRasterizer& operator=(SoftRasterizer&&) noexcept;

  RasterImage forward(const Canvas& canvas);
  /// Chain rule through the last forward pass. DomainError if the upstream
  /// shape does not match or forward() has not run.
  RasterGradients backward(const ImageGradient& upstream) const;

  const RenderOptions& options() const { return options_; }

 private:
  struct State;
  RenderOptions options_;
  std::unique_ptr<State> state_;
};

RasterImage render(const Canvas& canvas, double softness = 1.0);
RasterGradients render_with_grad(const Canvas& canvas, double softness, const ImageGradient& upstream);

/// Peak signal-to-noise ratio in dB over all channels (peak value 1).
double psnr(const RasterImage& a, const RasterImage& b);

}  // namespace vecsynth
