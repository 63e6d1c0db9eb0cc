#include "skssl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "skssl/error.hpp"

namespace skssl {

namespace {

constexpr double kPi = 3.14159265358979323846;

using Pt = std::pair<double, double>;
using Poly = std::vector<Pt>;

Poly line(Pt a, Pt b) { return {a, b}; }

// Base shapes live in the unit square, y growing downward as in the source
// drawing format, drawn the way a person would orient them. Orientation
// asymmetry is deliberate: the rotation pretext needs a canonical "up".

std::vector<Poly> shape_arrow() {
  return {line({0.08, 0.5}, {0.78, 0.5}),
          line({0.78, 0.5}, {0.56, 0.3}),
          line({0.78, 0.5}, {0.56, 0.7})};
}

std::vector<Poly> shape_house() {
  return {{{0.2, 0.9}, {0.2, 0.45}, {0.5, 0.12}, {0.8, 0.45}, {0.8, 0.9}, {0.2, 0.9}},
          {{0.44, 0.9}, {0.44, 0.62}, {0.58, 0.62}, {0.58, 0.9}}};
}

std::vector<Poly> shape_stairs() {
  Poly p{{0.08, 0.92}};
  double x = 0.08, y = 0.92;
  for (int i = 0; i < 4; ++i) {
    y -= 0.2;
    p.push_back({x, y});
    x += 0.21;
    p.push_back({x, y});
  }
  return {p};
}

std::vector<Poly> shape_zigzag() {
  Poly p;
  for (int i = 0; i <= 8; ++i) {
    p.push_back({0.06 + 0.11 * i, i % 2 == 0 ? 0.62 : 0.34});
  }
  return {p};
}

std::vector<Poly> shape_wave() {
  Poly p;
  for (int i = 0; i <= 26; ++i) {
    const double t = static_cast<double>(i) / 26.0;
    p.push_back({0.05 + 0.9 * t, 0.5 + 0.22 * std::sin(3.0 * kPi * t)});
  }
  return {p};
}

std::vector<Poly> shape_spiral() {
  Poly p;
  const int n = 44;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const double th = 2.4 * 2.0 * kPi * t;
    const double r = 0.04 + 0.38 * t;
    p.push_back({0.5 + r * std::cos(th), 0.48 + r * std::sin(th)});
  }
  return {p};
}

std::vector<Poly> shape_ladder() {
  std::vector<Poly> s{line({0.36, 0.08}, {0.36, 0.92}), line({0.64, 0.08}, {0.64, 0.92})};
  for (int i = 0; i < 4; ++i) {
    const double y = 0.2 + 0.18 * i;
    s.push_back(line({0.36, y}, {0.64, y}));
  }
  return s;
}

std::vector<Poly> shape_tree() {
  return {line({0.5, 0.92}, {0.5, 0.55}),
          {{0.22, 0.55}, {0.5, 0.12}, {0.78, 0.55}, {0.22, 0.55}},
          line({0.34, 0.38}, {0.66, 0.38})};
}

std::vector<Poly> shape_flag() {
  return {line({0.26, 0.95}, {0.26, 0.08}),
          {{0.26, 0.08}, {0.78, 0.18}, {0.26, 0.3}}};
}

std::vector<Poly> shape_cup() {
  std::vector<Poly> s{{{0.24, 0.3}, {0.3, 0.82}, {0.66, 0.82}, {0.72, 0.3}},
                      line({0.24, 0.3}, {0.72, 0.3})};
  Poly handle;
  for (int i = 0; i <= 10; ++i) {
    const double th = -0.5 * kPi + kPi * static_cast<double>(i) / 10.0;
    handle.push_back({0.72 + 0.14 * std::cos(th), 0.52 + 0.16 * std::sin(th)});
  }
  s.push_back(handle);
  return s;
}

struct Family {
  const char* name;
  std::vector<Poly> (*build)();
};

const Family kFamilies[] = {
    {"arrow", shape_arrow},   {"house", shape_house}, {"stairs", shape_stairs},
    {"zigzag", shape_zigzag}, {"wave", shape_wave},   {"spiral", shape_spiral},
    {"ladder", shape_ladder}, {"tree", shape_tree},   {"flag", shape_flag},
    {"cup", shape_cup},
};

// Long segments get subdivided so pose jitter and later deformations bend
// lines instead of merely tilting their endpoints.
Poly subdivide(const Poly& p, double max_len) {
  Poly out;
  out.push_back(p.front());
  for (std::size_t i = 1; i < p.size(); ++i) {
    const auto [x0, y0] = p[i - 1];
    const auto [x1, y1] = p[i];
    const double len = std::hypot(x1 - x0, y1 - y0);
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / max_len)));
    for (int k = 1; k <= pieces; ++k) {
      const double t = static_cast<double>(k) / pieces;
      out.push_back({x0 + t * (x1 - x0), y0 + t * (y1 - y0)});
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& synth_category_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& f : kFamilies) v.emplace_back(f.name);
    return v;
  }();
  return names;
}

RawSketch synth_sketch(const std::string& category, Rng& rng) {
  const Family* fam = nullptr;
  for (const auto& f : kFamilies)
    if (category == f.name) fam = &f;
  if (!fam) throw ValidationError("unknown synthetic category '" + category + "'");

  std::uniform_real_distribution<double> angle(-10.0 * kPi / 180.0, 10.0 * kPi / 180.0);
  std::uniform_real_distribution<double> scale(0.82, 1.18);
  std::uniform_real_distribution<double> shear(-0.15, 0.15);
  std::uniform_real_distribution<double> shift(-0.05, 0.05);
  std::uniform_real_distribution<double> sigma_pick(0.004, 0.014);
  const double phi = angle(rng), sx = scale(rng), sy = scale(rng), sh = shear(rng);
  const double dx = shift(rng), dy = shift(rng);
  std::normal_distribution<double> noise(0.0, sigma_pick(rng));
  const double c = std::cos(phi), s = std::sin(phi);

  RawSketch raw;
  raw.category = category;
  std::size_t total = 0;
  for (const auto& poly : fam->build()) {
    Poly p = subdivide(poly, 0.09);
    std::vector<std::pair<int, int>> stroke;
    for (auto [x, y] : p) {
      if (total >= 90) break;
      x -= 0.5;
      y -= 0.5;
      double xr = c * x - s * y, yr = s * x + c * y;
      xr = sx * (xr + sh * yr);
      yr = sy * yr;
      xr += 0.5 + dx + noise(rng);
      yr += 0.5 + dy + noise(rng);
      const int xi = static_cast<int>(std::lround(std::clamp(xr, 0.0, 1.0) * 255.0));
      const int yi = static_cast<int>(std::lround(std::clamp(yr, 0.0, 1.0) * 255.0));
      if (!stroke.empty() && stroke.back() == std::make_pair(xi, yi)) continue;
      stroke.push_back({xi, yi});
      ++total;
    }
    if (stroke.size() >= 2) raw.strokes.push_back(std::move(stroke));
  }
  if (raw.strokes.empty()) throw ValidationError("degenerate synthetic sketch");
  return raw;
}

void write_synth_ndjson(const SynthConfig& cfg, const std::filesystem::path& path) {
  if (cfg.per_category == 0) throw ValidationError("per_category must be positive");
  const std::vector<std::string>& cats =
      cfg.categories.empty() ? synth_category_names() : cfg.categories;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  for (const auto& cat : cats) {
    Rng rng = make_rng(cfg.seed, "synth/" + cat);
    for (std::size_t i = 0; i < cfg.per_category; ++i) {
      RawSketch raw = synth_sketch(cat, rng);
      os << "{\"word\":\"" << raw.category << "\",\"drawing\":[";
      for (std::size_t st = 0; st < raw.strokes.size(); ++st) {
        if (st) os << ',';
        os << "[[";
        for (std::size_t p = 0; p < raw.strokes[st].size(); ++p) {
          if (p) os << ',';
          os << raw.strokes[st][p].first;
        }
        os << "],[";
        for (std::size_t p = 0; p < raw.strokes[st].size(); ++p) {
          if (p) os << ',';
          os << raw.strokes[st][p].second;
        }
        os << "]]";
      }
      os << "]}\n";
    }
  }
  if (!os) throw DataError("short write to " + path.string());
}

}  // namespace skssl
