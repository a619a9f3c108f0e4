#include "vecsynth/geometry.hpp"

#include <algorithm>
#include <numbers>

#include "vecsynth/error.hpp"

namespace vecsynth {

BezierPath::BezierPath(std::vector<Point> control_points) : points_(std::move(control_points)) {
  if (points_.size() < 2) throw DomainError("BezierPath needs at least two control points");
  for (const auto& p : points_) {
    if (!is_finite(p)) throw DomainError("BezierPath control points must be finite");
  }
}

void BezierPath::set(std::size_t i, Point p) {
  if (!is_finite(p)) throw DomainError("BezierPath control points must be finite");
  points_.at(i) = p;
}

Point eval_bezier(std::span<const Point> control_points, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("eval_bezier: t must lie in [0, 1]");
  if (control_points.empty()) throw DomainError("eval_bezier: no control points");
  // Endpoints exactly, without rounding through the recurrence.
  if (t == 0.0) return control_points.front();
  if (t == 1.0) return control_points.back();
  std::vector<Point> work(control_points.begin(), control_points.end());
  for (std::size_t level = work.size() - 1; level > 0; --level) {
    for (std::size_t i = 0; i < level; ++i) work[i] = (1.0 - t) * work[i] + t * work[i + 1];
  }
  return work[0];
}

Point eval_bezier(const BezierPath& path, double t) { return eval_bezier(path.control_points(), t); }

std::vector<double> bernstein_basis(std::size_t degree, double t) {
  std::vector<double> b(degree + 1, 0.0);
  b[0] = 1.0;
  // Build row by row: b_k^{n} = (1-t) b_k^{n-1} + t b_{k-1}^{n-1}.
  for (std::size_t n = 1; n <= degree; ++n) {
    for (std::size_t k = n; k > 0; --k) b[k] = (1.0 - t) * b[k] + t * b[k - 1];
    b[0] *= (1.0 - t);
  }
  return b;
}

AffineTransform AffineTransform::rotation(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  return {c, -s, s, c, 0.0, 0.0};
}

AffineTransform AffineTransform::compose(const AffineTransform& in) const {
  return {a11 * in.a11 + a12 * in.a21,
          a11 * in.a12 + a12 * in.a22,
          a21 * in.a11 + a22 * in.a21,
          a21 * in.a12 + a22 * in.a22,
          a11 * in.tx + a12 * in.ty + tx,
          a21 * in.tx + a22 * in.ty + ty};
}

Point apply_affine(const AffineTransform& t, Point p) {
  return {t.a11 * p.x + t.a12 * p.y + t.tx, t.a21 * p.x + t.a22 * p.y + t.ty};
}

ProjectiveTransform::ProjectiveTransform(const std::array<double, 9>& m) : m_(m) {
  for (double v : m_) {
    if (!std::isfinite(v)) throw DomainError("ProjectiveTransform: non-finite entry");
  }
  const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                     m[2] * (m[3] * m[7] - m[4] * m[6]);
  double scale = 0.0;
  for (double v : m_) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || std::abs(det) <= 1e-14 * scale * scale * scale) {
    throw SingularityError("ProjectiveTransform: matrix is singular");
  }
}

ProjectiveTransform ProjectiveTransform::identity() { return ProjectiveTransform({1, 0, 0, 0, 1, 0, 0, 0, 1}); }

ProjectiveTransform ProjectiveTransform::from_affine(const AffineTransform& a) {
  return ProjectiveTransform({a.a11, a.a12, a.tx, a.a21, a.a22, a.ty, 0.0, 0.0, 1.0});
}

Point apply_projective(const ProjectiveTransform& t, Point p) {
  const auto& m = t.matrix();
  const double w = m[6] * p.x + m[7] * p.y + m[8];
  if (std::abs(w) < 1e-12) throw SingularityError("apply_projective: homogeneous coordinate vanishes");
  const double x = m[0] * p.x + m[1] * p.y + m[2];
  const double y = m[3] * p.x + m[4] * p.y + m[5];
  if (w == 1.0) return {x, y};
  return {x / w, y / w};
}

namespace {

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  while (a <= -pi) a += 2.0 * pi;
  while (a > pi) a -= 2.0 * pi;
  return a;
}

}  // namespace

AffineDecomposition decompose_affine(const Matrix2& m) {
  // Closed-form 2x2 SVD: A = R(beta) diag(q + r, q - r) R(gamma).
  const double e = 0.5 * (m[0] + m[3]);
  const double f = 0.5 * (m[0] - m[3]);
  const double g = 0.5 * (m[2] + m[1]);
  const double h = 0.5 * (m[2] - m[1]);
  const double q = std::hypot(e, h);
  const double r = std::hypot(f, g);
  const double a1 = std::atan2(g, f);
  const double a2 = std::atan2(h, e);

  AffineDecomposition d;
  d.s1 = q + r;
  d.s2 = std::abs(q - r);
  d.orientation = (q - r) < 0.0 ? -1 : 1;
  if (r <= 1e-15 * q) {
    // Repeated singular values: the right rotation is arbitrary, pin it.
    d.phi = 0.0;
    d.theta = wrap_angle(a2);
    d.s1 = d.s2 = q;
    d.orientation = 1;
  } else {
    // U = R(beta), V^T = R(gamma); theta = beta + gamma, phi = gamma.
    d.phi = wrap_angle(0.5 * (a2 - a1));
    d.theta = wrap_angle(a2);
  }
  return d;
}

Matrix2 rotation_matrix(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  return {c, -s, s, c};
}

namespace {

Matrix2 mul(const Matrix2& a, const Matrix2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
          a[2] * b[1] + a[3] * b[3]};
}

}  // namespace

Matrix2 reconstruct(const AffineDecomposition& d) {
  const Matrix2 s{d.s1, 0.0, 0.0, d.orientation * d.s2};
  return mul(mul(mul(rotation_matrix(d.theta), rotation_matrix(-d.phi)), s), rotation_matrix(d.phi));
}

double frobenius_distance(const Matrix2& a, const Matrix2& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < 4; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

AffineTransform fit_affine(std::span<const Point> from, std::span<const Point> to, double* residual) {
  if (from.size() != to.size() || from.empty()) throw DomainError("fit_affine: point lists must match and be non-empty");
  const double n = static_cast<double>(from.size());
  Point pc, qc;
  for (std::size_t i = 0; i < from.size(); ++i) {
    pc += from[i];
    qc += to[i];
  }
  pc *= 1.0 / n;
  qc *= 1.0 / n;

  // X = sum dp dp^T (symmetric), Y = sum dq dp^T.
  double xa = 0, xb = 0, xc = 0;
  Matrix2 y{0, 0, 0, 0};
  for (std::size_t i = 0; i < from.size(); ++i) {
    const Point dp = from[i] - pc, dq = to[i] - qc;
    xa += dp.x * dp.x;
    xb += dp.x * dp.y;
    xc += dp.y * dp.y;
    y[0] += dq.x * dp.x;
    y[1] += dq.x * dp.y;
    y[2] += dq.y * dp.x;
    y[3] += dq.y * dp.y;
  }

  // Pseudo-inverse of X through its eigendecomposition.
  const double mean = 0.5 * (xa + xc);
  const double rad = std::hypot(0.5 * (xa - xc), xb);
  const double l1 = mean + rad, l2 = mean - rad;
  Point v1 = std::abs(xb) > 0.0 ? Point{l1 - xc, xb} : (xa >= xc ? Point{1, 0} : Point{0, 1});
  v1 *= 1.0 / norm(v1);
  const Point v2 = perp(v1);
  const double tol = 1e-12 * std::max(l1, 1e-300);
  Matrix2 xinv{0, 0, 0, 0};
  if (l1 > tol) {
    xinv[0] += v1.x * v1.x / l1; xinv[1] += v1.x * v1.y / l1;
    xinv[2] += v1.y * v1.x / l1; xinv[3] += v1.y * v1.y / l1;
  }
  if (l2 > tol) {
    xinv[0] += v2.x * v2.x / l2; xinv[1] += v2.x * v2.y / l2;
    xinv[2] += v2.y * v2.x / l2; xinv[3] += v2.y * v2.y / l2;
  }
  const Matrix2 lin = mul(y, xinv);
  AffineTransform t{lin[0], lin[1], lin[2], lin[3], 0.0, 0.0};
  const Point mapped_center = apply_affine(t, pc);
  t.tx = qc.x - mapped_center.x;
  t.ty = qc.y - mapped_center.y;

  if (residual) {
    double acc = 0.0;
    for (std::size_t i = 0; i < from.size(); ++i) {
      const Point d = apply_affine(t, from[i]) - to[i];
      acc += dot(d, d);
    }
    *residual = std::sqrt(acc / n);
  }
  return t;
}

}  // namespace vecsynth
