#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "vecsynth/error.hpp"
#include "vecsynth/guidance.hpp"
#include "vecsynth/losses.hpp"

using namespace vecsynth;
using vecsynth::testing::uniform;

namespace {

Embedding random_embedding(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  Embedding e(n);
  for (auto& v : e) v = uniform(rng, lo, hi);
  return e;
}

RasterImage random_image(std::mt19937_64& rng, int w, int h) {
  RasterImage img(w, h);
  for (auto& v : img.data) v = uniform(rng, 0.0, 1.0);
  return img;
}

AttentionMap random_map(std::mt19937_64& rng, int w, int h) {
  AttentionMap m(w, h);
  for (auto& v : m.values) v = uniform(rng, 0.0, 1.0);
  return m;
}

RasterImage gray(int w, int h, double v) { return RasterImage(w, h, Color{v, v, v, 1.0}); }

// Central difference of f over every image channel, compared with g.
template <class F>
void check_image_gradient(const RasterImage& img, const ImageGradient& g, F f, double h, double rel) {
  RasterImage work = img;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    work.data[i] = img.data[i] + h;
    const double up = f(work);
    work.data[i] = img.data[i] - h;
    const double down = f(work);
    work.data[i] = img.data[i];
    const double fd = (up - down) / (2 * h);
    CHECK(std::abs(fd - g.data[i]) <= rel * std::max(std::abs(fd), 1e-6));
  }
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("l1 embedding distance") {
    CHECK(l1_embed({1, 2}, {1, 2}) == 0.0);
    CHECK(l1_embed({1, 2}, {0, 0}) == 3.0);
    CHECK_THROWS_AS(l1_embed({1}, {1, 2}), DomainError);
    std::mt19937_64 rng(1);
    const auto a = random_embedding(rng, 50), b = random_embedding(rng, 50);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    CHECK(l1_embed(a, b) == doctest::Approx(s).epsilon(1e-14));
    const auto g = l1_embed_grad(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(g[i] == (b[i] > a[i] ? 1.0 : -1.0));
  }

  TEST_CASE("alignment loss") {
    CHECK(align_loss({3}, {1}, {2}) == 4.0);
    CHECK(align_loss({3, 1}, {3, 1}, {0, 0}) == 0.0);
    const double eps = 1e-6;
    const double v = align_loss({3}, {1}, {3}, eps);
    CHECK(std::isfinite(v));
    CHECK(v <= (2.0 / eps) * (2.0 / eps) * (1 + 1e-12));
    // The floor keeps the sign of a tiny denominator.
    CHECK(align_loss({1}, {0}, {1 + 1e-9}, 1e-3) == doctest::Approx(1e6));
  }

  TEST_CASE("alignment gradient matches finite differences") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      auto s2 = random_embedding(rng, 6), fg = random_embedding(rng, 6), bg = random_embedding(rng, 6);
      for (std::size_t i = 0; i < 6; ++i)
        if (std::abs(s2[i] - bg[i]) < 0.1) bg[i] = s2[i] - 0.5;
      const auto g = align_loss_grad(s2, fg, bg);
      const double h = 1e-6;
      for (Embedding* which : {&s2, &fg, &bg}) {
        const Embedding& gw = which == &s2 ? g.s2 : which == &fg ? g.s_fg : g.s_bg;
        for (std::size_t i = 0; i < 6; ++i) {
          const double keep = (*which)[i];
          (*which)[i] = keep + h;
          const double up = align_loss(s2, fg, bg);
          (*which)[i] = keep - h;
          const double down = align_loss(s2, fg, bg);
          (*which)[i] = keep;
          const double fd = (up - down) / (2 * h);
          CHECK(std::abs(fd - gw[i]) <= 1e-3 * std::max(std::abs(fd), 1e-6));
        }
      }
    }
  }

  TEST_CASE("semantic opacity loss arithmetic") {
    AttentionMap s1(2, 1, 1.0);
    RasterImage target = gray(2, 1, 0.0), rendered = gray(2, 1, 0.0);
    // Luminance of gray v is v, so the maxima are 4 and 2.
    s1.values = {4.0, 1.0};
    target.at(0, 0, 0) = target.at(0, 0, 1) = target.at(0, 0, 2) = 1.0;
    rendered.at(0, 0, 0) = rendered.at(0, 0, 1) = rendered.at(0, 0, 2) = 0.5;
    CHECK(sop_loss(s1, target, rendered) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(sop_loss(s1, target, target) == 0.0);
    CHECK_THROWS_AS(sop_loss(s1, gray(2, 1, 0.0), rendered), DegenerateError);
    CHECK_THROWS_AS(sop_loss(s1, gray(3, 1, 0.5), rendered), DomainError);
  }

  TEST_CASE("semantic opacity loss matches an exhaustive scan and ignores a common luminance scale") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const auto s1 = random_map(rng, 9, 7);
      const auto t = random_image(rng, 9, 7), r = random_image(rng, 9, 7);
      double mt = 0.0, mr = 0.0;
      for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 9; ++x) {
          const double a = s1.at(x, y);
          mt = std::max(mt, a * (0.299 * t.at(x, y, 0) + 0.587 * t.at(x, y, 1) + 0.114 * t.at(x, y, 2)));
          mr = std::max(mr, a * (0.299 * r.at(x, y, 0) + 0.587 * r.at(x, y, 1) + 0.114 * r.at(x, y, 2)));
        }
      CHECK(std::abs(sop_loss(s1, t, r) - std::abs(1 - mr / mt)) < 1e-12);
      RasterImage ts = t, rs = r;
      for (auto& v : ts.data) v *= 0.6;
      for (auto& v : rs.data) v *= 0.6;
      CHECK(sop_loss(s1, ts, rs) == doctest::Approx(sop_loss(s1, t, r)).epsilon(1e-12));
    }
  }

  TEST_CASE("semantic opacity gradient matches finite differences away from ties") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      const auto s1 = random_map(rng, 6, 5);
      const auto t = random_image(rng, 6, 5), r = random_image(rng, 6, 5);
      const auto g = sop_loss_grad(s1, t, r);
      // h far below the gap between the two largest products keeps the argmax fixed.
      check_image_gradient(r, g, [&](const RasterImage& img) { return sop_loss(s1, t, img); }, 1e-8, 1e-3);
    }
  }

  TEST_CASE("cross-entropy") {
    CHECK(ce_loss({1 - 1e-7}, {1}) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(ce_loss({0.5}, {0}) == doctest::Approx(std::log(2.0)));
    CHECK(ce_loss({0.5}, {1}) == doctest::Approx(std::log(2.0)));
    CHECK(std::isfinite(ce_loss({0.0, 1.0}, {1, 0})));
    CHECK(ce_loss({0.0}, {1}) == doctest::Approx(-std::log(1e-7)));
    CHECK_THROWS_AS(ce_loss({0.5}, {1, 0}), DomainError);
    std::mt19937_64 rng(5);
    std::vector<double> p(30);
    std::vector<int> y(30);
    double ref = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = uniform(rng, 0.01, 0.99);
      y[i] = static_cast<int>(i % 3 == 0);
      ref += -(y[i] * std::log(p[i]) + (1 - y[i]) * std::log(1 - p[i]));
    }
    CHECK(ce_loss(p, y) == doctest::Approx(ref / 30.0).epsilon(1e-13));
    const auto g = ce_loss_grad(p, y);
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto q = p;
      q[i] += 1e-7;
      const double up = ce_loss(q, y);
      q[i] -= 2e-7;
      const double fd = (up - ce_loss(q, y)) / 2e-7;
      CHECK(fd == doctest::Approx(g[i]).epsilon(1e-5));
    }
  }

  TEST_CASE("pyramid encoder dimension and constraints") {
    const PyramidEncoder enc;
    CHECK(enc.dimension() == 5u * (64 + 256 + 1024));
    CHECK(enc.encode(gray(32, 32, 0.5)).size() == enc.dimension());
    CHECK(enc.encode(gray(100, 77, 0.5)).size() == enc.dimension());
    CHECK_THROWS_AS(enc.encode(gray(31, 64, 0.5)), DomainError);
    const auto e = enc.encode(gray(64, 64, 0.25));
    CHECK(e[0] == doctest::Approx(0.25));
    CHECK(e[3] == doctest::Approx(1e-3));
    AttentionMap m(64, 64, 0.25);
    CHECK(enc.encode(m) == e);
  }

  TEST_CASE("pyramid encoder backward matches finite differences") {
    std::mt19937_64 rng(6);
    const PyramidEncoder enc(2, 2, 1e-2);
    const auto img = random_image(rng, 6, 5);
    const auto up = random_embedding(rng, enc.dimension());
    auto f = [&](const RasterImage& x) {
      const auto e = enc.encode(x);
      double s = 0.0;
      for (std::size_t i = 0; i < e.size(); ++i) s += up[i] * e[i];
      return s;
    };
    check_image_gradient(img, enc.backward(img, up), f, 1e-6, 1e-5);
  }

  TEST_CASE("perceptual loss") {
    std::mt19937_64 rng(7);
    const PyramidEncoder enc;
    const auto a = random_image(rng, 40, 40), b = random_image(rng, 40, 40);
    CHECK(perceptual_loss(a, a, enc) == 0.0);
    CHECK(perceptual_loss(a, b, enc) == perceptual_loss(b, a, enc));

    GroundedLayout layout;
    layout.objects = {{"disk", {10, 30, 40, 40}}, {"disk", {75, 40, 40, 40}}};
    const auto g = SyntheticGuidance().guide(layout, 128, 128);
    CHECK(perceptual_loss(g.target, gray(128, 128, 1.0), enc) > 1e-3);

    const PyramidEncoder small(2, 2, 1e-2);
    const auto c = random_image(rng, 6, 6), d = random_image(rng, 6, 6);
    check_image_gradient(d, perceptual_loss_grad(c, d, small),
                         [&](const RasterImage& x) { return perceptual_loss(c, x, small); }, 1e-6, 1e-5);
  }

  TEST_CASE("combined objective") {
    CHECK(synth_loss(0, 0, 0) == 0.0);
    CHECK(synth_loss(1, 1, 1) == doctest::Approx(1.8));
    CHECK(synth_loss(0.7, 3, 4, {0.0, 0.0, 1e-6}) == 0.7);
  }
}
