#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace vecsynth {

struct Point {
  double x = 0.0;
  double y = 0.0;

  constexpr Point& operator+=(Point o) { x += o.x; y += o.y; return *this; }
  constexpr Point& operator-=(Point o) { x -= o.x; y -= o.y; return *this; }
  constexpr Point& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point operator-(Point a) { return {-a.x, -a.y}; }
  friend constexpr Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend constexpr Point operator*(Point a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point a, Point b) = default;
};

constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }
/// Counter-clockwise quarter turn (x, y) -> (-y, x).
constexpr Point perp(Point a) { return {-a.y, a.x}; }
inline bool is_finite(Point a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// A single Bezier curve of degree `size() - 1`.
class BezierPath {
 public:
  /// Throws DomainError unless there are at least two finite points.
  explicit BezierPath(std::vector<Point> control_points);

  std::span<const Point> control_points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  std::size_t degree() const { return points_.size() - 1; }
  const Point& operator[](std::size_t i) const { return points_[i]; }
  /// Replaces one control point; DomainError if `p` is not finite.
  void set(std::size_t i, Point p);

  friend bool operator==(const BezierPath&, const BezierPath&) = default;

 private:
  std::vector<Point> points_;
};

/// de Casteljau evaluation at t in [0, 1]; DomainError outside.
Point eval_bezier(const BezierPath& path, double t);
Point eval_bezier(std::span<const Point> control_points, double t);

/// Bernstein weights b_k(t) for a curve of `degree`.
std::vector<double> bernstein_basis(std::size_t degree, double t);

/// x' = A x + t with A = [[a11, a12], [a21, a22]].
struct AffineTransform {
  double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0;
  double tx = 0.0, ty = 0.0;

  static AffineTransform identity() { return {}; }
  static AffineTransform translation(double dx, double dy) { return {1.0, 0.0, 0.0, 1.0, dx, dy}; }
  static AffineTransform rotation(double radians);
  static AffineTransform scaling(double sx, double sy) { return {sx, 0.0, 0.0, sy, 0.0, 0.0}; }

  /// (*this) after `inner`: x -> this(inner(x)).
  AffineTransform compose(const AffineTransform& inner) const;

  friend bool operator==(const AffineTransform&, const AffineTransform&) = default;
};

Point apply_affine(const AffineTransform& transform, Point pt);

/// Row-major 3x3 homogeneous matrix. The constructor rejects singular
/// matrices.
class ProjectiveTransform {
 public:
  explicit ProjectiveTransform(const std::array<double, 9>& m);
  static ProjectiveTransform identity();
  static ProjectiveTransform from_affine(const AffineTransform& a);

  const std::array<double, 9>& matrix() const { return m_; }
  double operator()(int row, int col) const { return m_[static_cast<std::size_t>(row * 3 + col)]; }
  bool is_affine() const { return m_[6] == 0.0 && m_[7] == 0.0 && m_[8] == 1.0; }

 private:
  std::array<double, 9> m_;
};

/// Perspective-divided image of `pt`; SingularityError if |w| < 1e-12.
Point apply_projective(const ProjectiveTransform& transform, Point pt);

/// Linear part A = R(theta) R(-phi) diag(s1, orientation * s2) R(phi).
///
/// `orientation` is -1 when det A < 0 (the factorization then carries a
/// reflection in its second axis), +1 otherwise.
struct AffineDecomposition {
  double theta = 0.0;
  double phi = 0.0;
  double s1 = 1.0;
  double s2 = 1.0;
  int orientation = 1;
};

using Matrix2 = std::array<double, 4>;  // row-major [a11, a12, a21, a22]

AffineDecomposition decompose_affine(const Matrix2& linear);
inline AffineDecomposition decompose_affine(const AffineTransform& t) {
  return decompose_affine(Matrix2{t.a11, t.a12, t.a21, t.a22});
}
Matrix2 rotation_matrix(double radians);
Matrix2 reconstruct(const AffineDecomposition& d);
double frobenius_distance(const Matrix2& a, const Matrix2& b);

/// Least-squares affine map taking `from[i]` to `to[i]`. For fewer than
/// three non-collinear points the minimum-norm linear part is returned.
/// `residual` (optional) receives the RMS fitting error.
AffineTransform fit_affine(std::span<const Point> from, std::span<const Point> to, double* residual = nullptr);

}  // namespace vecsynth
