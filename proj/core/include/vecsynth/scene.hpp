#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "vecsynth/geometry.hpp"

namespace vecsynth {

/// RGBA, every channel in [0, 1].
struct Color {
  double r = 0.0, g = 0.0, b = 0.0, a = 1.0;

  static Color clamped(double r, double g, double b, double a = 1.0);
  static Color black() { return {0.0, 0.0, 0.0, 1.0}; }
  static Color white() { return {1.0, 1.0, 1.0, 1.0}; }

  friend bool operator==(const Color&, const Color&) = default;
};

/// Geometry template of a stroke. `bezier` is one curve of degree p-1;
/// the others are primitives with a fixed number of control points.
enum class ShapeKind { bezier, line, circle, semicircle, triangle, square, l_shape, u_shape };

enum class TransformClass { projective, affine_only };

std::string_view to_string(ShapeKind kind);
ShapeKind shape_from_string(std::string_view name);  // DomainError on unknown names

/// Number of control points a primitive requires; 0 for `bezier` (any p >= 2).
std::size_t required_points(ShapeKind kind);
bool is_closed(ShapeKind kind);

struct Stroke {
  BezierPath path;
  double width = 4.0;
  double opacity = 1.0;
  Color color = Color::black();
  TransformClass transform_class = TransformClass::projective;
  ShapeKind shape = ShapeKind::bezier;

  /// DomainError if width <= 0, opacity outside [0, 1], a color channel is
  /// outside [0, 1], or the point count does not match the shape.
  void validate() const;

  friend bool operator==(const Stroke&, const Stroke&) = default;
};

/// Reference point used to audit placement: the first control point for
/// Bezier strokes, the control-point bounding-box center for primitives.
Point stroke_anchor(const Stroke& stroke);

/// One rendered Bezier piece of a stroke, expressed as a linear function of
/// the stroke's control points: piece point k = sum_j along[k][j] * P_j +
/// across[k][j] * perp(P_j). Primitives expand into several pieces
/// (segments, quarter arcs).
struct PieceBasis {
  std::size_t piece_points = 0;
  std::size_t stroke_points = 0;
  std::vector<double> along;   // piece_points x stroke_points
  std::vector<double> across;  // piece_points x stroke_points
};

/// Pieces of a shape with `stroke_points` control points.
std::vector<PieceBasis> shape_pieces(ShapeKind kind, std::size_t stroke_points);

/// Control points of every piece of `stroke`.
std::vector<std::vector<Point>> expand_pieces(const Stroke& stroke);

/// Width/height in pixels; later strokes composite on top.
struct Canvas {
  int width = 512;
  int height = 512;
  std::vector<Stroke> strokes;
  Color background = Color::white();

  friend bool operator==(const Canvas&, const Canvas&) = default;
};

std::size_t stroke_count(const Canvas& canvas);
Canvas add_stroke(Canvas canvas, Stroke stroke);

/// Serializes as an SVG 1.1 document: one <path> per stroke built from M
/// and C commands. Numbers carry at most six decimals.
std::string to_svg(const Canvas& canvas);

/// Reads the subset written by to_svg. Unknown elements raise a ParseError
/// naming the element; malformed path data raises a ParseError carrying
/// the byte offset in `document`.
Canvas from_svg(std::string_view document);

/// Fixed-point text with at most `decimals` digits, trailing zeros removed,
/// never scientific notation, "-0" printed as "0".
std::string format_number(double value, int decimals = 6);

}  // namespace vecsynth
