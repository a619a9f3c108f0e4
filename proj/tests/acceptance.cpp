// Acceptance run: prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Runs A2 at 128 x 128 to stay within its budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "support.hpp"
#include "vecsynth/abstraction.hpp"
#include "vecsynth/attention.hpp"
#include "vecsynth/error.hpp"
#include "vecsynth/geometry.hpp"
#include "vecsynth/guidance.hpp"
#include "vecsynth/init.hpp"
#include "vecsynth/layout.hpp"
#include "vecsynth/layout_generator.hpp"
#include "vecsynth/pipeline.hpp"
#include "vecsynth/scene.hpp"

using namespace vecsynth;
using testing::uniform;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool inside_any(Point p, const GroundedLayout& boxes) {
  for (const auto& o : boxes.objects) {
    const BBox& b = o.box;
    if (p.x >= b.x && p.x <= b.x + b.w && p.y >= b.y && p.y <= b.y + b.h) return true;
  }
  return false;
}

Outcome a1_raster_gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  testing::FdReport total;
  const int canvases = 24;
  for (int i = 0; i < canvases; ++i) {
    const Canvas c = testing::random_canvas(rng, 64, 64, 1 + i % 5, i % 2 == 1);
    const auto loss = testing::random_linear_loss(rng, 64, 64);
    const auto r = testing::check_raster_gradients(c, loss, 1.0, 1e-3, 1e-2, 1e-4);
    total.checked += r.checked;
    total.failed += r.failed;
    total.nondifferentiable += r.nondifferentiable;
    total.worst_rel = std::max(total.worst_rel, r.worst_rel);
  }
  const double secs = seconds_since(t0);
  return {total.failed == 0 && secs < 60.0,
          fmt("%d canvases, %zu parameters, %zu mismatched, %zu at nondifferentiable kinks, worst rel %.2e, %.1f s", canvases,
              total.checked, total.failed, total.nondifferentiable, total.worst_rel, secs)};
}

Outcome a2_desk_synthesis() {
  MockLayoutGenerator gen;
  SyntheticGuidance guide;
  PipelineConfig cfg;
  cfg.width = cfg.height = 128;
  cfg.strokes = 256;
  cfg.iters = 500;
  const auto t0 = Clock::now();
  const PipelineResult r = run_pipeline("two disks", gen, guide, cfg);
  const double secs = seconds_since(t0);
  const auto& m = r.metrics;
  const double ratio = m.loss.back() / m.loss.front();
  const double gain = m.psnr_final - m.psnr_initial;
  const GroundedLayout scaled = scale_boxes(r.canvas_layout, cfg.box_scale, cfg.width, cfg.height);
  int outside = 0;
  for (const auto& s : r.canvas.strokes) outside += s.opacity > 0.0 && !inside_any(stroke_anchor(s), scaled);
  return {r.canvas_layout.objects.size() == 2 && ratio < 0.5 && gain >= 3.0 && secs < 300.0 && outside == 0,
          fmt("%zu boxes, L_synth %.4f -> %.4f (ratio %.4f), PSNR %.2f -> %.2f dB (+%.2f), %d anchors outside, %.1f s",
              r.canvas_layout.objects.size(), m.loss.front(), m.loss.back(), ratio, m.psnr_initial, m.psnr_final, gain, outside,
              secs)};
}

Outcome a3_layout_correction() {
  const std::vector<std::string> prompts = {"two disks", "a red apple and a blue cup", "a cat sitting next to a dog under a tree",
                                            "three yellow stars above a small house"};
  std::size_t worst_iters = 0;
  bool ok = true;
  for (const auto& p : prompts) {
    MockLayoutGenerator gen;
    const CorrectionResult r = correct_layout(gen, p);
    const std::size_t n = r.trace.size();
    worst_iters = std::max(worst_iters, n);
    const double min = *std::min_element(r.trace.begin(), r.trace.end());
    const double returned = reconstruction_error(p, caption_from_layout(r.layout));
    ok = ok && n <= 10 && n >= 2 && std::abs(r.trace[n - 1] - r.trace[n - 2]) < 1e-4 && returned == min && r.trace[r.best_index] == min;
  }
  return {ok, fmt("%zu prompts, at most %zu iterations, converged with returned delta_rec equal to the trace minimum", prompts.size(),
                  worst_iters)};
}

// Term-by-term energy for one configuration, written over explicit pixel lists.
double energy_oracle(const AttentionMap& fused, const std::vector<AttentionMap>& maps, const std::vector<Mask>& masks,
                     const std::vector<LatentTensor>& fg, const std::vector<LatentTensor>& bg, const EnergyConfig& cfg) {
  double total = 0.0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    std::vector<int> in;
    for (int p = 0; p < 4; ++p) {
      if (masks[i].values[static_cast<std::size_t>(p)]) in.push_back(p);
    }
    const auto k = static_cast<std::size_t>(std::ceil(cfg.topk_fraction * static_cast<double>(in.size())));
    auto topk = [&](const LatentTensor& z) {
      double sum = 0.0;
      for (int c = 0; c < z.channels; ++c) {
        std::vector<double> v;
        for (int p = 0; p < 4; ++p) v.push_back(maps[i].values[static_cast<std::size_t>(p)] * z.at(p % 2, p / 2, c));
        std::sort(v.rbegin(), v.rend());
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += v[j];
        sum += s / static_cast<double>(k);
      }
      return sum / z.channels;
    };
    const double fg_term = -topk(fg[i]);
    const double bg_term = cfg.beta * topk(bg[i]);
    double mean = 0.0;
    for (int p : in) mean += maps[i].values[static_cast<std::size_t>(p)];
    mean /= static_cast<double>(in.size());
    double var = 0.0;
    for (int p : in) var += std::pow(maps[i].values[static_cast<std::size_t>(p)] - mean, 2);
    const double sigma = std::sqrt(var / static_cast<double>(in.size()));
    double dev = 0.0;
    for (int p : in) dev += std::abs(maps[i].values[static_cast<std::size_t>(p)] - fused.values[static_cast<std::size_t>(p)]) / sigma;
    const double consistency_term = cfg.gamma_e * dev / static_cast<double>(in.size());
    total += fg_term + bg_term + consistency_term;
  }
  return total;
}

Outcome a4_fusion_and_energy() {
  std::mt19937_64 rng(404);
  double worst_fuse = 0.0;
  for (int n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<AttentionMap> maps;
      for (int i = 0; i < n; ++i) {
        AttentionMap m(17, 13);
        for (auto& v : m.values) v = uniform(rng, 0.01, 1.0);
        maps.push_back(std::move(m));
      }
      const AttentionMap got = attention_product(maps);
      for (std::size_t p = 0; p < got.size(); ++p) {
        double prod = 1.0;
        for (const auto& m : maps) prod *= m.values[p];
        worst_fuse = std::max(worst_fuse, std::abs(got.values[p] - prod));
      }
      if (n == 1) {
        // A single map passes through fusion unchanged.
        const AttentionMap f = fuse_attention(maps);
        for (std::size_t p = 0; p < f.size(); ++p) worst_fuse = std::max(worst_fuse, std::abs(f.values[p] - maps[0].values[p]));
      }
    }
  }

  double worst_energy = 0.0;
  const EnergyConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 3;
    std::vector<AttentionMap> maps;
    std::vector<Mask> masks;
    std::vector<LatentTensor> fg, bg;
    for (int i = 0; i < n; ++i) {
      AttentionMap a(2, 2);
      for (auto& v : a.values) v = uniform(rng, 0.0, 1.0);
      Mask m{2, 2, {1, 1, 0, 0}};
      for (auto& v : m.values) v = uniform(rng, 0.0, 1.0) < 0.6;
      m.values[static_cast<std::size_t>(trial % 4)] = 1;
      m.values[static_cast<std::size_t>((trial + 1) % 4)] = 1;
      LatentTensor zf(2, 2, 1 + trial % 4), zb(2, 2, 1 + trial % 4);
      for (auto& v : zf.data) v = uniform(rng, 0.1, 2.0);
      for (auto& v : zb.data) v = uniform(rng, 0.1, 2.0);
      maps.push_back(a);
      masks.push_back(m);
      fg.push_back(zf);
      bg.push_back(zb);
    }
    const AttentionMap fused = fuse_attention(maps);
    const double got = composition_energy(fused, maps, masks, fg, bg, cfg);
    worst_energy = std::max(worst_energy, std::abs(got - energy_oracle(fused, maps, masks, fg, bg, cfg)));
  }
  return {worst_fuse <= 1e-12 && worst_energy <= 1e-10,
          fmt("product vs N-way oracle (N=1..6) max err %.1e; energy vs 2x2 term oracle (50 fixtures) max err %.1e", worst_fuse,
              worst_energy)};
}

Outcome a5_gamma_latents() {
  bool ok = true;
  std::string detail;
  for (double alpha : {2.0, 4.0, 8.0}) {
    const LatentTensor z = sample_gamma_latent(100, 100, 10, alpha, 55 + static_cast<std::uint64_t>(alpha));
    double mean = 0.0;
    for (double v : z.data) mean += v;
    mean /= static_cast<double>(z.data.size());
    double var = 0.0;
    for (double v : z.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(z.data.size() - 1);
    const double mean_err = std::abs(mean - 1.0), var_err = std::abs(var * alpha - 1.0);
    ok = ok && z.data.size() == 100000 && mean_err < 0.01 && var_err < 0.05;
    detail += fmt("alpha=%g mean %.4f var %.4f (1/alpha %.4f); ", alpha, mean, var, 1.0 / alpha);
  }
  detail.resize(detail.size() - 2);
  return {ok, "n=100000, " + detail};
}

Outcome a6_affine() {
  std::mt19937_64 rng(606);
  double worst_rec = 0.0, worst_proj = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Matrix2 m{uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3)};
    worst_rec = std::max(worst_rec, frobenius_distance(reconstruct(decompose_affine(m)), m));
    const AffineTransform a{m[0], m[1], m[2], m[3], uniform(rng, -50, 50), uniform(rng, -50, 50)};
    const ProjectiveTransform p = ProjectiveTransform::from_affine(a);
    for (int k = 0; k < 10; ++k) {
      const Point q{uniform(rng, -100, 100), uniform(rng, -100, 100)};
      const Point u = apply_projective(p, q), v = apply_affine(a, q);
      worst_proj = std::max({worst_proj, std::abs(u.x - v.x), std::abs(u.y - v.y)});
    }
  }
  return {worst_rec <= 1e-9 && worst_proj <= 1e-12,
          fmt("100 matrices: reconstruction max Frobenius %.1e; projective vs affine max err %.1e", worst_rec, worst_proj)};
}

Outcome a7_svg_round_trip() {
  std::mt19937_64 rng(707);
  double worst = 0.0;
  bool structure = true, deterministic = true;
  for (int i = 0; i < 20; ++i) {
    const Canvas c = testing::random_canvas(rng, 64 + 16 * (i % 3), 64, 1 + i % 6, i % 2 == 1);
    const std::string svg = to_svg(c);
    deterministic = deterministic && svg == to_svg(c);
    const Canvas back = from_svg(svg);
    deterministic = deterministic && to_svg(back) == svg;
    structure = structure && back.width == c.width && back.height == c.height && back.strokes.size() == c.strokes.size();
    if (!structure) break;
    for (std::size_t k = 0; k < c.strokes.size(); ++k) {
      const Stroke &a = c.strokes[k], &b = back.strokes[k];
      structure = structure && a.shape == b.shape && a.transform_class == b.transform_class && a.path.size() == b.path.size();
      if (!structure) break;
      for (std::size_t j = 0; j < a.path.size(); ++j) {
        worst = std::max({worst, std::abs(a.path[j].x - b.path[j].x), std::abs(a.path[j].y - b.path[j].y)});
      }
      worst = std::max({worst, std::abs(a.width - b.width), std::abs(a.opacity - b.opacity), std::abs(a.color.r - b.color.r),
                        std::abs(a.color.g - b.color.g), std::abs(a.color.b - b.color.b), std::abs(a.color.a - b.color.a)});
    }
  }
  return {structure && deterministic && worst <= 1e-6,
          fmt("20 canvases: max parameter err %.1e, structure %s, byte-deterministic %s", worst, structure ? "kept" : "LOST",
              deterministic ? "yes" : "NO")};
}

Outcome a8_keypoint_sampling() {
  const int size = 64, eta = 200, seeds = 100;
  AttentionMap uniform_map(size, size);
  std::fill(uniform_map.values.begin(), uniform_map.values.end(), 1.0);
  const Mask all = mask_from_box({0, 0, double(size), double(size)}, size, size);
  std::vector<double> bins(16, 0.0);
  for (int s = 0; s < seeds; ++s) {
    for (const Point& p : select_keypoints(uniform_map, all, eta, static_cast<std::uint64_t>(s))) {
      const int bx = std::min(3, static_cast<int>(p.x) * 4 / size), by = std::min(3, static_cast<int>(p.y) * 4 / size);
      bins[static_cast<std::size_t>(by * 4 + bx)] += 1.0;
    }
  }
  const double expected = static_cast<double>(eta) * seeds / 16.0;
  double chi2 = 0.0;
  for (double o : bins) chi2 += (o - expected) * (o - expected) / expected;
  const double p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(15.0), chi2));

  // All mass on one pixel, then on a 3 x 3 block.
  AttentionMap delta(size, size);
  delta.values[static_cast<std::size_t>(21 * size + 37)] = 1.0;
  bool concentrated = true;
  for (int s = 0; s < seeds; ++s) {
    const auto pts = select_keypoints(delta, all, 1, static_cast<std::uint64_t>(s));
    concentrated = concentrated && pts.size() == 1 && static_cast<int>(pts[0].x) == 37 && static_cast<int>(pts[0].y) == 21;
  }
  AttentionMap block(size, size);
  for (int y = 10; y < 13; ++y)
    for (int x = 40; x < 43; ++x) block.values[static_cast<std::size_t>(y * size + x)] = 1.0 + x - y;
  for (int s = 0; s < seeds; ++s) {
    for (const Point& p : select_keypoints(block, all, 9, static_cast<std::uint64_t>(s))) {
      concentrated = concentrated && p.x >= 40 && p.x < 43 && p.y >= 10 && p.y < 13;
    }
  }
  return {p_value > 0.01 && concentrated,
          fmt("uniform map, 4x4 bins, %d seeds x %d picks: chi2 %.2f (df 15), p %.3f; delta maps concentrate all picks: %s", seeds,
              eta, chi2, p_value, concentrated ? "yes" : "NO")};
}

Outcome a9_mlp() {
  std::mt19937_64 rng(909);
  auto dot = [](const Embedding& a, const Embedding& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  double worst = 0.0;
  std::size_t checked = 0;
  const MlpSpec toy{4, {6, 5}, 3, MlpHead::linear};
  auto p = init_mlp(toy, 8);
  Embedding x(4), up(3);
  for (auto& v : x) v = uniform(rng, -1, 1);
  for (auto& v : up) v = uniform(rng, -1, 1);
  const auto g = mlp_backward(toy, p, x, up);
  const double h = 1e-4;
  for (std::size_t i = 0; i < p.values.size(); ++i, ++checked) {
    const double keep = p.values[i];
    p.values[i] = keep + h;
    const double a = dot(up, mlp_forward(toy, p, x));
    p.values[i] = keep - h;
    const double b = dot(up, mlp_forward(toy, p, x));
    p.values[i] = keep;
    const double fd = (a - b) / (2 * h);
    worst = std::max(worst, std::abs(fd - g.params[i]) / std::max(std::abs(fd), 1e-4));
  }

  const auto t0 = Clock::now();
  const Embedding s1{0.4, -0.3};
  const MlpSpec spec{2, MlpSpec::default_widths(), 2, MlpHead::linear};
  const TrainResult r = foreground_abstract(s1, spec, 500, 1e-5, 0);
  const double reduction = r.loss.front() / r.loss.back();
  return {worst <= 1e-4 && reduction >= 10.0,
          fmt("3-layer FD over %zu params max rel err %.1e; foreground loss %.4f -> %.6f (%.0fx) in 500 iterations at lr 1e-5, %.1f s",
              checked, worst, r.loss.front(), r.loss.back(), reduction, seconds_since(t0))};
}

double interior_angle(Point prev, Point at, Point next) {
  const Point u = prev - at, v = next - at;
  return std::atan2(u.x * v.y - u.y * v.x, u.x * v.x + u.y * v.y);
}

Outcome a10_style_contracts() {
  MockLayoutGenerator gen;
  SyntheticGuidance guide;
  PipelineConfig cfg;
  cfg.width = cfg.height = 64;
  cfg.strokes = 64;
  cfg.iters = 20;
  cfg.mlp_fg_iters = 5;
  cfg.style = Style::abstract;
  const PipelineResult ab = run_pipeline("two disks", gen, guide, cfg);
  // Only background strokes may be hidden, and only by the simplification.
  std::size_t hidden = 0, hidden_bg = 0;
  for (const auto& s : ab.canvas.strokes) hidden += s.opacity == 0.0;
  for (std::size_t k : ab.background_indices) hidden_bg += ab.canvas.strokes[k].opacity == 0.0;
  const bool hidden_ok = hidden > 0 && hidden == hidden_bg;
  const bool abstract_ok = ab.metrics.visible_strokes <= 64 && ab.canvas.strokes.size() <= 64 &&
                           ab.metrics.visible_strokes + hidden == ab.canvas.strokes.size() && hidden_ok;

  MockLayoutGenerator gen2;
  cfg.style = Style::primitive;
  cfg.primitive = ShapeKind::triangle;
  cfg.strokes = 32;
  const PipelineResult pr = run_pipeline("two disks", gen2, guide, cfg);
  bool flags = !pr.canvas.strokes.empty();
  double worst_angle = 0.0, worst_scale = 0.0;
  std::mt19937_64 rng(1010);
  for (const auto& s : pr.canvas.strokes) {
    flags = flags && s.transform_class == TransformClass::affine_only;
    // A rigid proposal projected onto affine motion must come back rigid.
    const auto pts = s.path.control_points();
    const AffineTransform rigid = AffineTransform::translation(uniform(rng, -10, 10), uniform(rng, -10, 10))
                                      .compose(AffineTransform::rotation(uniform(rng, -std::numbers::pi, std::numbers::pi)));
    std::vector<Point> proposed;
    for (const Point& q : pts) proposed.push_back(apply_affine(rigid, q));
    const AffineTransform fitted = fit_affine(pts, proposed);
    const auto d = decompose_affine(fitted);
    worst_scale = std::max({worst_scale, std::abs(d.s1 - 1.0), std::abs(d.s2 - 1.0)});
    const std::size_t n = pts.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Point a0 = pts[(k + n - 1) % n], a1 = pts[k], a2 = pts[(k + 1) % n];
      const double before = interior_angle(a0, a1, a2);
      const double after = interior_angle(apply_affine(fitted, a0), apply_affine(fitted, a1), apply_affine(fitted, a2));
      worst_angle = std::max(worst_angle, std::abs(before - after));
    }
  }
  return {abstract_ok && flags && worst_angle <= 1e-6 && worst_scale <= 1e-6,
          fmt("abstract: %zu visible of %zu (%zu hidden at opacity 0); primitive: affine-only flags %s, rigid-motion angle err %.1e, "
              "scale err %.1e",
              ab.metrics.visible_strokes, ab.canvas.strokes.size(), hidden, flags ? "kept" : "LOST", worst_angle, worst_scale)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"A1", a1_raster_gradients}, {"A2", a2_desk_synthesis},   {"A3", a3_layout_correction}, {"A4", a4_fusion_and_energy},
      {"A5", a5_gamma_latents},    {"A6", a6_affine},           {"A7", a7_svg_round_trip},    {"A8", a8_keypoint_sampling},
      {"A9", a9_mlp},              {"A10", a10_style_contracts}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
