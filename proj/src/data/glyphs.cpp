#include "hyperinv/data/glyphs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hyperinv/errors.hpp"

namespace hyperinv::data {

namespace {

struct Point {
  double x, y;
};
using Stroke = std::vector<Point>;
using Glyph = std::vector<Stroke>;

// Angles in degrees, y axis pointing down.
Stroke arc(double cx, double cy, double r, double from_deg, double to_deg, int segments = 10) {
  Stroke s;
  for (int i = 0; i <= segments; ++i) {
    const double a = (from_deg + (to_deg - from_deg) * i / segments) * std::numbers::pi / 180.0;
    s.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
  }
  return s;
}

Stroke join(Stroke a, const Stroke& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Glyph primary_glyph(int cls) {
  switch (cls) {
    case 0:  // L
      return {{{-0.45, -0.75}, {-0.45, 0.75}, {0.5, 0.75}}};
    case 1:  // 7
      return {{{-0.5, -0.75}, {0.5, -0.75}, {-0.15, 0.8}}};
    case 2:  // F
      return {{{-0.4, 0.8}, {-0.4, -0.75}, {0.5, -0.75}}, {{-0.4, -0.05}, {0.3, -0.05}}};
    case 3:  // P
      return {join({{-0.4, 0.8}, {-0.4, -0.75}, {0.1, -0.75}}, join(arc(0.1, -0.4, 0.35, -90, 90), {{-0.4, -0.05}}))};
    case 4:  // J
      return {join({{0.35, -0.75}, {0.35, 0.4}}, arc(0.0, 0.4, 0.35, 0, 180))};
    case 5:  // 4
      return {{{0.25, 0.8}, {0.25, -0.8}, {-0.5, 0.3}, {0.55, 0.3}}};
    case 6:  // h
      return {{{-0.4, -0.8}, {-0.4, 0.8}}, {{-0.4, 0.0}, {0.35, -0.2}, {0.35, 0.8}}};
    case 7:  // C
      return {arc(0.0, 0.0, 0.65, 40, 320, 14)};
    case 8:  // 2
      return {join(arc(0.0, -0.35, 0.42, 180, 390, 10), {{-0.5, 0.75}, {0.55, 0.75}})};
    case 9:  // 9
      return {arc(0.0, -0.35, 0.38, 0, 360, 14), {{0.38, -0.35}, {0.3, 0.8}}};
  }
  throw ContractError("glyph class out of range");
}

Glyph secondary_glyph(int cls) {
  switch (cls) {
    case 0:  // K
      return {{{-0.4, -0.8}, {-0.4, 0.8}}, {{0.45, -0.8}, {-0.4, 0.1}}, {{-0.15, -0.1}, {0.5, 0.8}}};
    case 1:  // R
      return {join({{-0.4, 0.8}, {-0.4, -0.75}, {0.1, -0.75}}, join(arc(0.1, -0.4, 0.35, -90, 90), {{-0.4, -0.05}})),
              {{-0.05, -0.05}, {0.5, 0.8}}};
    case 2:  // G
      return {arc(0.0, 0.0, 0.65, 20, 320, 14), {{0.61, 0.22}, {0.15, 0.22}}};
    case 3:  // Y
      return {{{-0.5, -0.8}, {0.0, 0.0}}, {{0.5, -0.8}, {0.0, 0.0}, {0.0, 0.8}}};
    case 4:  // b
      return {{{-0.4, -0.8}, {-0.4, 0.8}}, arc(0.0, 0.4, 0.4, 0, 360, 14)};
    case 5:  // t
      return {{{-0.1, -0.8}, {-0.1, 0.55}, {0.1, 0.8}, {0.4, 0.7}}, {{-0.5, -0.3}, {0.35, -0.3}}};
    case 6:  // 5
      return {join({{0.5, -0.75}, {-0.35, -0.75}, {-0.4, -0.1}}, arc(0.0, 0.3, 0.45, -130, 140, 12))};
    case 7:  // arrow
      return {{{-0.65, 0.0}, {0.6, 0.0}}, {{0.2, -0.4}, {0.6, 0.0}, {0.2, 0.4}}, {{-0.65, 0.0}, {-0.65, 0.35}}};
    case 8:  // r
      return {{{-0.3, 0.8}, {-0.3, -0.5}}, {{-0.3, -0.2}, {0.0, -0.55}, {0.45, -0.5}}};
    case 9:  // 3
      return {arc(0.0, -0.38, 0.37, -150, 90, 10), arc(0.0, 0.38, 0.37, -90, 150, 10)};
  }
  throw ContractError("glyph class out of range");
}

double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

Image render_glyph(int cls, GlyphAlphabet alphabet, Rng& rng) {
  if (cls < 0 || cls >= static_cast<int>(kGlyphClasses)) throw ContractError("glyph class out of range");
  Glyph glyph = alphabet == GlyphAlphabet::primary ? primary_glyph(cls) : secondary_glyph(cls);

  // Random affine: small rotation, anisotropic scale, shear, translation.
  const double rot = rng.uniform(-8.0, 8.0) * std::numbers::pi / 180.0;
  const double sx = rng.uniform(0.85, 1.08), sy = rng.uniform(0.85, 1.08);
  const double shear = rng.uniform(-0.15, 0.15);
  const double tx = rng.uniform(-1.5, 1.5), ty = rng.uniform(-1.5, 1.5);
  const double half_width = rng.uniform(0.9, 1.5);
  const double c = std::cos(rot), s = std::sin(rot);
  const double centre = (static_cast<double>(kGlyphSize) - 1.0) / 2.0;
  const double extent = 10.0;

  std::vector<std::vector<Point>> strokes;
  for (auto& stroke : glyph) {
    std::vector<Point> pts;
    for (auto p : stroke) {
      const double jx = p.x + rng.uniform(-0.04, 0.04), jy = p.y + rng.uniform(-0.04, 0.04);
      const double ax = sx * (jx + shear * jy), ay = sy * jy;
      pts.push_back({centre + tx + extent * (c * ax - s * ay), centre + ty + extent * (s * ax + c * ay)});
    }
    strokes.push_back(std::move(pts));
  }

  Image img = Image::zeros(1, kGlyphSize, kGlyphSize);
  for (std::size_t y = 0; y < kGlyphSize; ++y) {
    for (std::size_t x = 0; x < kGlyphSize; ++x) {
      const Point p{static_cast<double>(x), static_cast<double>(y)};
      double d = 1e9;
      for (const auto& st : strokes)
        for (std::size_t i = 0; i + 1 < st.size(); ++i) d = std::min(d, segment_distance(p, st[i], st[i + 1]));
      img.at(0, y, x) = std::clamp(half_width + 0.5 - d, 0.0, 1.0);
    }
  }
  return img;
}

GlyphSet synth_glyph_dataset(std::size_t n_per_class, std::uint64_t seed, GlyphAlphabet alphabet) {
  GlyphSet set;
  set.images = ImageStack(1, kGlyphSize, kGlyphSize);
  const std::size_t total = n_per_class * kGlyphClasses;
  const char* label = alphabet == GlyphAlphabet::primary ? "glyph-primary" : "glyph-secondary";
  for (std::size_t i = 0; i < total; ++i) {
    const int cls = static_cast<int>(i % kGlyphClasses);
    Rng rng(derive_seed(seed, label, i));
    set.images.push_back(render_glyph(cls, alphabet, rng));
    set.labels.push_back(cls);
  }
  return set;
}

}  // namespace hyperinv::data
