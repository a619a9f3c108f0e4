#include "vecsynth/encoder.hpp"

#include <cmath>

#include "vecsynth/error.hpp"

namespace vecsynth {

namespace {

constexpr double kLum[3] = {0.299, 0.587, 0.114};

struct Span {
  int lo, hi;
};

Span cell_span(int i, int cells, int extent) {
  return {static_cast<int>(static_cast<long>(i) * extent / cells), static_cast<int>(static_cast<long>(i + 1) * extent / cells)};
}

// Forward differences of luminance, zero on the last column / row.
double grad_x(const RasterImage& img, int x, int y) {
  return x + 1 < img.width ? luminance(img, x + 1, y) - luminance(img, x, y) : 0.0;
}
double grad_y(const RasterImage& img, int x, int y) {
  return y + 1 < img.height ? luminance(img, x, y + 1) - luminance(img, x, y) : 0.0;
}

}  // namespace

Embedding PerceptualEncoder::encode(const AttentionMap& map) const {
  RasterImage img(map.width, map.height);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = map.at(x, y);
    }
  }
  return encode(img);
}

PyramidEncoder::PyramidEncoder(int base_grid, int levels, double gradient_smoothing)
    : base_grid_(base_grid), levels_(levels), eps_(gradient_smoothing), dimension_(0) {
  if (base_grid < 1 || levels < 1 || levels > 12) throw DomainError("PyramidEncoder: base_grid and levels must be positive");
  if (!(gradient_smoothing > 0.0)) throw DomainError("PyramidEncoder: gradient_smoothing must be positive");
  for (int k = 0; k < levels; ++k) {
    const auto g = static_cast<std::size_t>(base_grid) << k;
    dimension_ += g * g * kFeaturesPerCell;
  }
}

void PyramidEncoder::check(const RasterImage& image) const {
  const int finest = base_grid_ << (levels_ - 1);
  if (image.width < finest || image.height < finest) {
    throw DomainError("PyramidEncoder: images need at least " + std::to_string(finest) + " pixels per side");
  }
}

Embedding PyramidEncoder::encode(const RasterImage& image) const {
  check(image);
  Embedding e;
  e.reserve(dimension_);
  for (int k = 0; k < levels_; ++k) {
    const int g = base_grid_ << k;
    for (int cy = 0; cy < g; ++cy) {
      const Span ys = cell_span(cy, g, image.height);
      for (int cx = 0; cx < g; ++cx) {
        const Span xs = cell_span(cx, g, image.width);
        double acc[kFeaturesPerCell] = {};
        for (int y = ys.lo; y < ys.hi; ++y) {
          for (int x = xs.lo; x < xs.hi; ++x) {
            for (int c = 0; c < 3; ++c) acc[c] += image.at(x, y, c);
            const double gx = grad_x(image, x, y), gy = grad_y(image, x, y);
            acc[3] += std::sqrt(gx * gx + eps_ * eps_);
            acc[4] += std::sqrt(gy * gy + eps_ * eps_);
          }
        }
        const double n = static_cast<double>((ys.hi - ys.lo) * (xs.hi - xs.lo));
        for (double v : acc) e.push_back(v / n);
      }
    }
  }
  return e;
}

ImageGradient PyramidEncoder::backward(const RasterImage& image, const Embedding& upstream) const {
  check(image);
  if (upstream.size() != dimension_) throw DomainError("PyramidEncoder::backward: upstream has the wrong dimension");
  ImageGradient out(image);
  auto add_lum = [&](int x, int y, double v) {
    const std::size_t i = out.index(x, y);
    for (int c = 0; c < 3; ++c) out.data[i + static_cast<std::size_t>(c)] += v * kLum[c];
  };
  std::size_t f = 0;
  for (int k = 0; k < levels_; ++k) {
    const int g = base_grid_ << k;
    for (int cy = 0; cy < g; ++cy) {
      const Span ys = cell_span(cy, g, image.height);
      for (int cx = 0; cx < g; ++cx, f += kFeaturesPerCell) {
        const Span xs = cell_span(cx, g, image.width);
        const double n = static_cast<double>((ys.hi - ys.lo) * (xs.hi - xs.lo));
        const double* u = upstream.data() + f;
        for (int y = ys.lo; y < ys.hi; ++y) {
          for (int x = xs.lo; x < xs.hi; ++x) {
            const std::size_t i = out.index(x, y);
            for (int c = 0; c < 3; ++c) out.data[i + static_cast<std::size_t>(c)] += u[c] / n;
            if (u[3] != 0.0 && x + 1 < image.width) {
              const double gx = grad_x(image, x, y);
              const double d = u[3] / n * gx / std::sqrt(gx * gx + eps_ * eps_);
              add_lum(x + 1, y, d);
              add_lum(x, y, -d);
            }
            if (u[4] != 0.0 && y + 1 < image.height) {
              const double gy = grad_y(image, x, y);
              const double d = u[4] / n * gy / std::sqrt(gy * gy + eps_ * eps_);
              add_lum(x, y + 1, d);
              add_lum(x, y, -d);
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace vecsynth
