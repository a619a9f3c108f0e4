#include "vecsynth/raster.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "vecsynth/error.hpp"

namespace vecsynth {

RasterImage::RasterImage(int w, int h, const Color& fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw DomainError("RasterImage dimensions must be positive");
  data.resize(pixel_count() * 3);
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    data[i * 3 + 0] = fill.r;
    data[i * 3 + 1] = fill.g;
    data[i * 3 + 2] = fill.b;
  }
}

ImageGradient& ImageGradient::operator+=(const ImageGradient& o) {
  if (o.width != width || o.height != height) throw DomainError("ImageGradient shape mismatch");
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
  return *this;
}

StrokeGradient& StrokeGradient::operator+=(const StrokeGradient& o) {
  if (control_points.size() < o.control_points.size()) control_points.resize(o.control_points.size());
  for (std::size_t i = 0; i < o.control_points.size(); ++i) control_points[i] += o.control_points[i];
  width += o.width;
  opacity += o.opacity;
  for (std::size_t c = 0; c < 4; ++c) color[c] += o.color[c];
  return *this;
}

double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

double luminance(const RasterImage& img, int x, int y) {
  const std::size_t i = img.index(x, y);
  return luminance(img.data[i], img.data[i + 1], img.data[i + 2]);
}

namespace {

// A Bezier piece prepared for repeated distance queries: power-basis
// coefficients for fast evaluation plus fixed parameter samples.
struct PreparedPiece {
  std::vector<Point> control;
  std::vector<Point> power;  // B(t) = sum power[k] t^k
  std::array<Point, kDistanceSamples> samples{};
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;  // control hull bounds
};

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

PreparedPiece prepare_piece(std::span<const Point> cp) {
  PreparedPiece pp;
  pp.control.assign(cp.begin(), cp.end());
  const std::size_t n = cp.size() - 1;
  pp.power.assign(n + 1, Point{});
  for (std::size_t k = 0; k <= n; ++k) {
    Point acc;
    for (std::size_t i = 0; i <= k; ++i) {
      const double sign = ((k - i) % 2 == 0) ? 1.0 : -1.0;
      acc += (sign * binomial(k, i)) * cp[i];
    }
    pp.power[k] = binomial(n, k) * acc;
  }
  for (int s = 0; s < kDistanceSamples; ++s) {
    const double t = static_cast<double>(s) / (kDistanceSamples - 1);
    pp.samples[static_cast<std::size_t>(s)] = (s == 0) ? cp.front() : (s == kDistanceSamples - 1 ? cp.back() : eval_bezier(cp, t));
  }
  pp.xmin = pp.xmax = cp[0].x;
  pp.ymin = pp.ymax = cp[0].y;
  for (const auto& p : cp) {
    pp.xmin = std::min(pp.xmin, p.x);
    pp.xmax = std::max(pp.xmax, p.x);
    pp.ymin = std::min(pp.ymin, p.y);
    pp.ymax = std::max(pp.ymax, p.y);
  }
  return pp;
}

// Value, first and second derivative by Horner's rule.
void eval_power(const std::vector<Point>& c, double t, Point& b, Point& d1, Point& d2) {
  const std::size_t n = c.size() - 1;
  b = c[n];
  d1 = Point{};
  d2 = Point{};
  for (std::size_t k = n; k-- > 0;) {
    d2 = d2 * t + 2.0 * d1;
    d1 = d1 * t + b;
    b = b * t + c[k];
  }
}

ClosestPoint closest_on_piece(const PreparedPiece& pp, Point p) {
  const auto& cp = pp.control;
  if (cp.size() == 2) {
    const Point seg = cp[1] - cp[0];
    const double len2 = dot(seg, seg);
    double t = len2 > 0.0 ? std::clamp(dot(p - cp[0], seg) / len2, 0.0, 1.0) : 0.0;
    const Point q = cp[0] + t * seg;
    return {t, q, distance(p, q)};
  }
  std::array<double, kDistanceSamples> d2{};
  for (std::size_t s = 0; s < pp.samples.size(); ++s) {
    const double dx = pp.samples[s].x - p.x, dy = pp.samples[s].y - p.y;
    d2[s] = dx * dx + dy * dy;
  }
  // Refine every local minimum of the sampled distance so that the global
  // minimum is not lost when the best sample sits in the wrong basin.
  ClosestPoint best{0.0, pp.samples[0], std::numeric_limits<double>::infinity()};
  double best_d2 = std::numeric_limits<double>::infinity();
  const std::size_t last = d2.size() - 1;
  for (std::size_t s = 0; s <= last; ++s) {
    if (s > 0 && d2[s - 1] < d2[s]) continue;
    if (s < last && d2[s + 1] < d2[s]) continue;
    const double t0 = static_cast<double>(s) / static_cast<double>(last);
    double t = t0;
    Point b, d1, dd;
    for (int it = 0; it < kNewtonSteps; ++it) {
      eval_power(pp.power, t, b, d1, dd);
      const Point r = b - p;
      const double f = dot(r, d1);
      const double fp = dot(d1, d1) + dot(r, dd);
      if (!(fp > 1e-12)) break;
      const double next = std::clamp(t - f / fp, 0.0, 1.0);
      const double step = next - t;
      t = next;
      if (std::abs(step) < 1e-13) break;
    }
    eval_power(pp.power, t, b, d1, dd);
    const double dx = b.x - p.x, dy = b.y - p.y;
    double cand_d2 = dx * dx + dy * dy;
    Point cand = b;
    if (cand_d2 > d2[s]) {
      t = t0;
      cand = pp.samples[s];
      cand_d2 = d2[s];
    }
    if (cand_d2 < best_d2 || (cand_d2 == best_d2 && t < best.t)) {
      best_d2 = cand_d2;
      best = {t, cand, 0.0};
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

}  // namespace

ClosestPoint closest_point(std::span<const Point> control_points, Point p) {
  if (control_points.size() < 2) throw DomainError("closest_point: at least two control points");
  return closest_on_piece(prepare_piece(control_points), p);
}

double distance_to_path(Point pt, const BezierPath& path) { return closest_point(path.control_points(), pt).distance; }

double distance_to_stroke(Point pt, const Stroke& stroke) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& piece : expand_pieces(stroke)) best = std::min(best, closest_point(piece, pt).distance);
  return best;
}

// --------------------------------------------------------------------------

namespace {

struct PreparedStroke {
  std::vector<PreparedPiece> pieces;
  std::vector<PieceBasis> bases;
  double half_width = 0;
  double reach = 0;  // distance beyond which coverage is cut off
  double opacity = 0;
  Color color;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;  // expanded by reach
  std::size_t control_points = 0;
};

struct Hit {
  std::uint32_t stroke = 0;
  std::uint32_t piece = 0;
  double t = 0;
  Point closest;
  double dist = 0;
  double coverage = 0;
  double alpha = 0;
};

struct Tile {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::vector<std::uint32_t> candidates;
  std::vector<Hit> hits;
  std::vector<std::uint32_t> offsets;  // per tile pixel, size = pixels + 1
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// sqrt(d^2 + e^2) - e: removes the kink of |d| where a curve crosses a
// pixel center while staying within e of the exact distance.
double smoothed_distance(double d) { return std::sqrt(d * d + kDistanceSmoothing * kDistanceSmoothing) - kDistanceSmoothing; }

template <class Fn>
void run_tiles(std::size_t count, unsigned workers, Fn&& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

struct SoftRasterizer::State {
  int width = 0, height = 0;
  Color background;
  double softness = 1.0;
  std::vector<PreparedStroke> strokes;
  std::vector<Tile> tiles;
};

SoftRasterizer::SoftRasterizer(RenderOptions options) : options_(options) {
  if (!(options_.softness > 0.0)) throw DomainError("softness must be positive");
  if (options_.tile_size <= 0) throw DomainError("tile_size must be positive");
}

SoftRasterizer::~SoftRasterizer() = default;
SoftRasterizer::SoftRasterizer(SoftRasterizer&&) noexcept = default;
SoftRasterizer& SoftRasterizer::operator=(SoftRasterizer&&) noexcept = default;

RasterImage SoftRasterizer::forward(const Canvas& canvas) {
  if (canvas.width <= 0 || canvas.height <= 0) throw DomainError("canvas dimensions must be positive");
  auto st = std::make_unique<State>();
  st->width = canvas.width;
  st->height = canvas.height;
  st->background = canvas.background;
  st->softness = options_.softness;
  const double s = options_.softness;

  st->strokes.reserve(canvas.strokes.size());
  for (const auto& stroke : canvas.strokes) {
    PreparedStroke ps;
    ps.bases = shape_pieces(stroke.shape, stroke.path.size());
    ps.control_points = stroke.path.size();
    for (const auto& piece : expand_pieces(stroke)) ps.pieces.push_back(prepare_piece(piece));
    ps.half_width = 0.5 * stroke.width;
    ps.reach = ps.half_width - kCoverageCutoff * s;
    ps.opacity = stroke.opacity;
    ps.color = stroke.color;
    ps.xmin = ps.ymin = std::numeric_limits<double>::infinity();
    ps.xmax = ps.ymax = -std::numeric_limits<double>::infinity();
    for (auto& pp : ps.pieces) {
      pp.xmin -= ps.reach;
      pp.xmax += ps.reach;
      pp.ymin -= ps.reach;
      pp.ymax += ps.reach;
      ps.xmin = std::min(ps.xmin, pp.xmin);
      ps.xmax = std::max(ps.xmax, pp.xmax);
      ps.ymin = std::min(ps.ymin, pp.ymin);
      ps.ymax = std::max(ps.ymax, pp.ymax);
    }
    st->strokes.push_back(std::move(ps));
  }

  const int ts = options_.tile_size;
  const int tx = (canvas.width + ts - 1) / ts, ty = (canvas.height + ts - 1) / ts;
  st->tiles.resize(static_cast<std::size_t>(tx) * static_cast<std::size_t>(ty));
  for (int j = 0; j < ty; ++j) {
    for (int i = 0; i < tx; ++i) {
      Tile& tile = st->tiles[static_cast<std::size_t>(j * tx + i)];
      tile.x0 = i * ts;
      tile.y0 = j * ts;
      tile.x1 = std::min(canvas.width, tile.x0 + ts);
      tile.y1 = std::min(canvas.height, tile.y0 + ts);
      // Pixel centers inside the tile span [x0 + 0.5, x1 - 0.5].
      for (std::uint32_t k = 0; k < st->strokes.size(); ++k) {
        const auto& ps = st->strokes[k];
        if (ps.xmax < tile.x0 + 0.5 || ps.xmin > tile.x1 - 0.5 || ps.ymax < tile.y0 + 0.5 || ps.ymin > tile.y1 - 0.5) continue;
        if (ps.opacity * ps.color.a <= 0.0) continue;
        tile.candidates.push_back(k);
      }
    }
  }

  RasterImage image(canvas.width, canvas.height, canvas.background);
  State& state = *st;
  run_tiles(state.tiles.size(), options_.workers, [&](std::size_t index) {
    Tile& tile = state.tiles[index];
    const int tw = tile.x1 - tile.x0;
    const std::size_t pixels = static_cast<std::size_t>(tw) * static_cast<std::size_t>(tile.y1 - tile.y0);
    tile.offsets.assign(pixels + 1, 0);
    tile.hits.clear();
    for (int y = tile.y0; y < tile.y1; ++y) {
      for (int x = tile.x0; x < tile.x1; ++x) {
        const std::size_t local = static_cast<std::size_t>((y - tile.y0) * tw + (x - tile.x0));
        tile.offsets[local] = static_cast<std::uint32_t>(tile.hits.size());
        const Point p{x + 0.5, y + 0.5};
        double rgb[3] = {state.background.r, state.background.g, state.background.b};
        for (std::uint32_t k : tile.candidates) {
          const auto& ps = state.strokes[k];
          if (p.x < ps.xmin || p.x > ps.xmax || p.y < ps.ymin || p.y > ps.ymax) continue;
          Hit hit;
          hit.stroke = k;
          hit.dist = std::numeric_limits<double>::infinity();
          for (std::uint32_t q = 0; q < ps.pieces.size(); ++q) {
            const auto& pp = ps.pieces[q];
            if (p.x < pp.xmin || p.x > pp.xmax || p.y < pp.ymin || p.y > pp.ymax) continue;
            const ClosestPoint c = closest_on_piece(pp, p);
            if (c.distance < hit.dist) {
              hit.dist = c.distance;
              hit.t = c.t;
              hit.closest = c.point;
              hit.piece = q;
            }
          }
          const double z = (ps.half_width - smoothed_distance(hit.dist)) / state.softness;
          if (!(z >= kCoverageCutoff)) continue;
          hit.coverage = sigmoid(z);
          hit.alpha = hit.coverage * ps.opacity * ps.color.a;
          rgb[0] = rgb[0] * (1.0 - hit.alpha) + hit.alpha * ps.color.r;
          rgb[1] = rgb[1] * (1.0 - hit.alpha) + hit.alpha * ps.color.g;
          rgb[2] = rgb[2] * (1.0 - hit.alpha) + hit.alpha * ps.color.b;
          tile.hits.push_back(hit);
        }
        const std::size_t o = image.index(x, y);
        for (int c = 0; c < 3; ++c) image.data[o + static_cast<std::size_t>(c)] = std::clamp(rgb[c], 0.0, 1.0);
      }
    }
    tile.offsets[pixels] = static_cast<std::uint32_t>(tile.hits.size());
  });

  state_ = std::move(st);
  return image;
}

RasterGradients SoftRasterizer::backward(const ImageGradient& upstream) const {
  if (!state_) throw DomainError("backward() called before forward()");
  const State& state = *state_;
  if (upstream.width != state.width || upstream.height != state.height) {
    throw DomainError("upstream gradient shape does not match the render");
  }

  // Per-tile partial sums over the tile's candidate strokes, merged in tile
  // order so the result does not depend on the worker count.
  std::vector<std::vector<StrokeGradient>> partial(state.tiles.size());
  run_tiles(state.tiles.size(), options_.workers, [&](std::size_t index) {
    const Tile& tile = state.tiles[index];
    auto& grads = partial[index];
    grads.resize(tile.candidates.size());
    if (tile.candidates.empty()) return;
    std::vector<std::uint32_t> slot(state.strokes.size(), 0);
    for (std::uint32_t c = 0; c < tile.candidates.size(); ++c) {
      slot[tile.candidates[c]] = c;
      grads[c].control_points.assign(state.strokes[tile.candidates[c]].control_points, Point{});
    }
    std::vector<std::array<double, 3>> before;
    const int tw = tile.x1 - tile.x0;
    for (int y = tile.y0; y < tile.y1; ++y) {
      for (int x = tile.x0; x < tile.x1; ++x) {
        const std::size_t local = static_cast<std::size_t>((y - tile.y0) * tw + (x - tile.x0));
        const std::size_t h0 = tile.offsets[local], h1 = tile.offsets[local + 1];
        if (h0 == h1) continue;
        const std::size_t o = upstream.index(x, y);
        double g[3] = {upstream.data[o], upstream.data[o + 1], upstream.data[o + 2]};
        if (g[0] == 0.0 && g[1] == 0.0 && g[2] == 0.0) continue;

        // Replay the composite to recover the color beneath each hit.
        before.resize(h1 - h0);
        std::array<double, 3> rgb{state.background.r, state.background.g, state.background.b};
        for (std::size_t h = h0; h < h1; ++h) {
          const Hit& hit = tile.hits[h];
          const Color& c = state.strokes[hit.stroke].color;
          before[h - h0] = rgb;
          rgb[0] = rgb[0] * (1.0 - hit.alpha) + hit.alpha * c.r;
          rgb[1] = rgb[1] * (1.0 - hit.alpha) + hit.alpha * c.g;
          rgb[2] = rgb[2] * (1.0 - hit.alpha) + hit.alpha * c.b;
        }
        const Point p{x + 0.5, y + 0.5};
        for (std::size_t h = h1; h-- > h0;) {
          const Hit& hit = tile.hits[h];
          const PreparedStroke& ps = state.strokes[hit.stroke];
          StrokeGradient& sg = grads[slot[hit.stroke]];
          const auto& under = before[h - h0];
          const double col[3] = {ps.color.r, ps.color.g, ps.color.b};
          double d_alpha = 0.0;
          for (int c = 0; c < 3; ++c) {
            d_alpha += g[c] * (col[c] - under[static_cast<std::size_t>(c)]);
            sg.color[static_cast<std::size_t>(c)] += g[c] * hit.alpha;
            g[c] *= (1.0 - hit.alpha);
          }
          const double ga = ps.opacity * ps.color.a;
          sg.opacity += d_alpha * hit.coverage * ps.color.a;
          sg.color[3] += d_alpha * hit.coverage * ps.opacity;
          const double dz = d_alpha * ga * hit.coverage * (1.0 - hit.coverage);
          sg.width += dz * 0.5 / state.softness;
          const double d_dist = -dz / state.softness;
          if (d_dist == 0.0) continue;
          // Envelope theorem: the closest parameter is stationary, so only the
          // explicit dependence of B(t*) on the control points remains.
          const Point d_closest = (d_dist / (smoothed_distance(hit.dist) + kDistanceSmoothing)) * (hit.closest - p);
          const PreparedPiece& pp = ps.pieces[hit.piece];
          const PieceBasis& basis = ps.bases[hit.piece];
          const auto bern = bernstein_basis(pp.control.size() - 1, hit.t);
          for (std::size_t k = 0; k < basis.piece_points; ++k) {
            const Point gk = bern[k] * d_closest;
            const Point gk_perp{gk.y, -gk.x};  // perp^T applied to gk
            for (std::size_t j = 0; j < basis.stroke_points; ++j) {
              const double al = basis.along[k * basis.stroke_points + j];
              const double ac = basis.across[k * basis.stroke_points + j];
              if (al != 0.0) sg.control_points[j] += al * gk;
              if (ac != 0.0) sg.control_points[j] += ac * gk_perp;
            }
          }
        }
      }
    }
  });

  RasterGradients out;
  out.strokes.resize(state.strokes.size());
  for (std::size_t k = 0; k < state.strokes.size(); ++k) out.strokes[k].control_points.assign(state.strokes[k].control_points, Point{});
  for (std::size_t t = 0; t < state.tiles.size(); ++t) {
    const Tile& tile = state.tiles[t];
    for (std::size_t c = 0; c < tile.candidates.size(); ++c) out.strokes[tile.candidates[c]] += partial[t][c];
  }
  return out;
}

RasterImage render(const Canvas& canvas, double softness) {
  SoftRasterizer r(RenderOptions{softness});
  return r.forward(canvas);
}

RasterGradients render_with_grad(const Canvas& canvas, double softness, const ImageGradient& upstream) {
  SoftRasterizer r(RenderOptions{softness});
  r.forward(canvas);
  return r.backward(upstream);
}

double psnr(const RasterImage& a, const RasterImage& b) {
  if (a.width != b.width || a.height != b.height) throw DomainError("psnr: image shapes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) acc += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  const double mse = acc / static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace vecsynth
