#include "vecsynth/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "vecsynth/error.hpp"

namespace vecsynth {

Color Color::clamped(double r, double g, double b, double a) {
  auto c = [](double v) { return std::clamp(v, 0.0, 1.0); };
  return {c(r), c(g), c(b), c(a)};
}

namespace {

constexpr std::array<std::pair<ShapeKind, std::string_view>, 8> kShapeNames{{
    {ShapeKind::bezier, "bezier"},
    {ShapeKind::line, "line"},
    {ShapeKind::circle, "circle"},
    {ShapeKind::semicircle, "semicircle"},
    {ShapeKind::triangle, "triangle"},
    {ShapeKind::square, "square"},
    {ShapeKind::l_shape, "l_shape"},
    {ShapeKind::u_shape, "u_shape"},
}};

// Cubic approximation constant for a quarter circle.
constexpr double kKappa = 0.5522847498307936;

}  // namespace

std::string_view to_string(ShapeKind kind) {
  for (const auto& [k, name] : kShapeNames) {
    if (k == kind) return name;
  }
  return "bezier";
}

ShapeKind shape_from_string(std::string_view name) {
  for (const auto& [k, n] : kShapeNames) {
    if (n == name) return k;
  }
  throw DomainError("unknown shape kind '" + std::string(name) + "'");
}

std::size_t required_points(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::bezier: return 0;
    case ShapeKind::line:
    case ShapeKind::circle:
    case ShapeKind::semicircle: return 2;
    case ShapeKind::triangle:
    case ShapeKind::l_shape: return 3;
    case ShapeKind::square:
    case ShapeKind::u_shape: return 4;
  }
  return 0;
}

bool is_closed(ShapeKind kind) {
  return kind == ShapeKind::circle || kind == ShapeKind::triangle || kind == ShapeKind::square;
}

void Stroke::validate() const {
  if (!(width > 0.0) || !std::isfinite(width)) throw DomainError("stroke width must be positive");
  if (!(opacity >= 0.0 && opacity <= 1.0)) throw DomainError("stroke opacity must lie in [0, 1]");
  for (double c : {color.r, color.g, color.b, color.a}) {
    if (!(c >= 0.0 && c <= 1.0)) throw DomainError("stroke color channels must lie in [0, 1]");
  }
  const std::size_t need = required_points(shape);
  if (need != 0 && path.size() != need) {
    throw DomainError(std::string(to_string(shape)) + " needs " + std::to_string(need) + " control points");
  }
}

Point stroke_anchor(const Stroke& stroke) {
  const auto pts = stroke.path.control_points();
  if (stroke.shape == ShapeKind::bezier) return pts.front();
  Point lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  return 0.5 * (lo + hi);
}

namespace {

PieceBasis make_basis(std::size_t piece_points, std::size_t stroke_points) {
  PieceBasis b;
  b.piece_points = piece_points;
  b.stroke_points = stroke_points;
  b.along.assign(piece_points * stroke_points, 0.0);
  b.across.assign(piece_points * stroke_points, 0.0);
  return b;
}

std::vector<PieceBasis> polyline_pieces(std::size_t n, bool closed) {
  std::vector<PieceBasis> out;
  const std::size_t segments = closed ? n : n - 1;
  for (std::size_t s = 0; s < segments; ++s) {
    PieceBasis b = make_basis(2, n);
    b.along[0 * n + s] = 1.0;
    b.along[1 * n + (s + 1) % n] = 1.0;
    out.push_back(std::move(b));
  }
  return out;
}

// Quarter arcs of the circle with diameter endpoints P0, P1. A point
// c + alpha*u + beta*perp(u) with c = (P0+P1)/2, u = (P0-P1)/2 is written
// into row `k` of the basis.
std::vector<PieceBasis> arc_pieces(std::size_t quarters) {
  auto put = [](PieceBasis& b, std::size_t k, double alpha, double beta) {
    b.along[k * 2 + 0] = 0.5 + 0.5 * alpha;
    b.along[k * 2 + 1] = 0.5 - 0.5 * alpha;
    b.across[k * 2 + 0] = 0.5 * beta;
    b.across[k * 2 + 1] = -0.5 * beta;
  };
  // R_k in the (u, perp u) frame; perp(alpha, beta) = (-beta, alpha).
  constexpr std::array<std::array<double, 2>, 4> radius{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
  std::vector<PieceBasis> out;
  for (std::size_t k = 0; k < quarters; ++k) {
    const auto [ra, rb] = radius[k];
    const double ja = -rb, jb = ra;
    PieceBasis b = make_basis(4, 2);
    put(b, 0, ra, rb);
    put(b, 1, ra + kKappa * ja, rb + kKappa * jb);
    put(b, 2, ja + kKappa * ra, jb + kKappa * rb);
    put(b, 3, ja, jb);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace

std::vector<PieceBasis> shape_pieces(ShapeKind kind, std::size_t n) {
  const std::size_t need = required_points(kind);
  if (need != 0 && n != need) throw DomainError("shape_pieces: wrong control point count");
  if (n < 2) throw DomainError("shape_pieces: at least two control points");
  switch (kind) {
    case ShapeKind::bezier: {
      PieceBasis b = make_basis(n, n);
      for (std::size_t i = 0; i < n; ++i) b.along[i * n + i] = 1.0;
      return {b};
    }
    case ShapeKind::line: return polyline_pieces(2, false);
    case ShapeKind::circle: return arc_pieces(4);
    case ShapeKind::semicircle: return arc_pieces(2);
    case ShapeKind::triangle: return polyline_pieces(3, true);
    case ShapeKind::square: return polyline_pieces(4, true);
    case ShapeKind::l_shape: return polyline_pieces(3, false);
    case ShapeKind::u_shape: return polyline_pieces(4, false);
  }
  return {};
}

std::vector<std::vector<Point>> expand_pieces(const Stroke& stroke) {
  const auto pts = stroke.path.control_points();
  std::vector<std::vector<Point>> out;
  for (const auto& basis : shape_pieces(stroke.shape, pts.size())) {
    std::vector<Point> piece(basis.piece_points);
    for (std::size_t k = 0; k < basis.piece_points; ++k) {
      Point acc;
      for (std::size_t j = 0; j < basis.stroke_points; ++j) {
        const double al = basis.along[k * basis.stroke_points + j];
        const double ac = basis.across[k * basis.stroke_points + j];
        if (al != 0.0) acc += al * pts[j];
        if (ac != 0.0) acc += ac * perp(pts[j]);
      }
      piece[k] = acc;
    }
    out.push_back(std::move(piece));
  }
  return out;
}

std::size_t stroke_count(const Canvas& canvas) { return canvas.strokes.size(); }

Canvas add_stroke(Canvas canvas, Stroke stroke) {
  canvas.strokes.push_back(std::move(stroke));
  return canvas;
}

std::string format_number(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s(buf);
  if (s.find('.') != std::string::npos) {
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

}  // namespace vecsynth
