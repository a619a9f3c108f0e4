#include "vecsynth/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "vecsynth/image_io.hpp"

namespace vecsynth {

namespace {

// HSV with s, v in [0, 1] and h in [0, 6).
Color hsv(double h, double s, double v) {
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  return Color::clamped(r + v - c, g + v - c, b + v - c);
}

AttentionMap blob_attention(const BBox& box, int width, int height, double floor) {
  const double sx = std::max(box.w / 4.0, 0.5), sy = std::max(box.h / 4.0, 0.5);
  FeatureMatrix q{static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 1, {}};
  q.data.reserve(q.rows);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dx = (x + 0.5 - box.cx()) / sx, dy = (y + 0.5 - box.cy()) / sy;
      q.data.push_back(std::log(std::exp(-0.5 * (dx * dx + dy * dy)) + floor));
    }
  }
  // A single unit key makes the logit at each pixel exactly its query.
  return box_attention(q, FeatureMatrix{1, 1, {1.0}}, width, height);
}

}  // namespace

Color SyntheticGuidance::label_color(const std::string& label) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ull;
  }
  const double hue = static_cast<double>(h % 3600) / 600.0;
  const double sat = 0.55 + 0.3 * static_cast<double>((h >> 16) % 100) / 100.0;
  const double val = 0.55 + 0.3 * static_cast<double>((h >> 32) % 100) / 100.0;
  return hsv(hue, sat, val);
}

Guidance SyntheticGuidance::guide(const GroundedLayout& layout, int width, int height) {
  Guidance g;
  g.target = RasterImage(width, height, options_.background);
  for (const auto& o : layout.objects) {
    g.maps.push_back(blob_attention(o.box, width, height, options_.floor));
    const Color c = label_color(o.label);
    const auto m = mask_from_box(o.box, width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (!m.at(x, y)) continue;
        g.target.at(x, y, 0) = c.r;
        g.target.at(x, y, 1) = c.g;
        g.target.at(x, y, 2) = c.b;
      }
    }
  }
  return g;
}

Guidance FileGuidance::guide(const GroundedLayout& layout, int width, int height) {
  namespace fs = std::filesystem;
  const fs::path dir(dir_);
  auto check = [&](int w, int h, const fs::path& p) {
    if (w != width || h != height) {
      throw std::runtime_error(p.string() + " is " + std::to_string(w) + "x" + std::to_string(h) + ", canvas is " +
                               std::to_string(width) + "x" + std::to_string(height));
    }
  };
  Guidance g;
  const auto target = dir / "target.png";
  g.target = read_png(target.string());
  check(g.target.width, g.target.height, target);
  for (std::size_t i = 0; i < layout.objects.size(); ++i) {
    const auto p = dir / ("attn_" + std::to_string(i) + ".pgm");
    g.maps.push_back(read_pgm(p.string()));
    check(g.maps.back().width, g.maps.back().height, p);
  }
  return g;
}

void save_guidance(const Guidance& guidance, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  write_png((fs::path(directory) / "target.png").string(), guidance.target);
  for (std::size_t i = 0; i < guidance.maps.size(); ++i) {
    write_pgm16((fs::path(directory) / ("attn_" + std::to_string(i) + ".pgm")).string(), guidance.maps[i]);
  }
}

}  // namespace vecsynth
