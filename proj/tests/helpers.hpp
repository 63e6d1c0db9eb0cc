#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "skssl/rng.hpp"
#include "skssl/stroke.hpp"

namespace skssl::testutil {

// Builds a PointSeq from per-stroke (x, y) lists; stroke_end flags are set on
// each stroke's last point.
inline PointSeq make_seq(const std::vector<std::vector<std::pair<double, double>>>& strokes,
                         int category = 0) {
  PointSeq seq;
  seq.category_id = category;
  for (const auto& stroke : strokes) {
    for (std::size_t i = 0; i < stroke.size(); ++i) {
      seq.points.push_back({stroke[i].first, stroke[i].second, i + 1 == stroke.size()});
    }
  }
  return seq;
}

// Random normalized sequence with 1..3 strokes of 2..6 points. When `denom`
// is nonzero, coordinates snap to k/denom so pixel rounding never hits a tie.
inline PointSeq rand_seq(Rng& rng, int denom = 0) {
  std::uniform_int_distribution<int> stroke_count(1, 3);
  std::uniform_int_distribution<int> point_count(2, 6);
  std::uniform_real_distribution<double> coord(0.0, 1.0);
  std::vector<std::vector<std::pair<double, double>>> strokes(stroke_count(rng));
  for (auto& s : strokes) {
    const int n = point_count(rng);
    for (int i = 0; i < n; ++i) {
      double x = coord(rng), y = coord(rng);
      if (denom > 0) {
        std::uniform_int_distribution<int> k(0, denom);
        x = static_cast<double>(k(rng)) / denom;
        y = static_cast<double>(k(rng)) / denom;
      }
      s.emplace_back(x, y);
    }
  }
  return make_seq(strokes);
}

// Fresh per-test scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "skssl_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
  std::vector<unsigned char> out;
  FILE* f = std::fopen(p.string().c_str(), "rb");
  if (!f) return out;
  unsigned char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.insert(out.end(), buf, buf + n);
  std::fclose(f);
  return out;
}

}  // namespace skssl::testutil
