#include "skssl/stroke.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skssl/error.hpp"

namespace skssl {

std::size_t PointSeq::stroke_count() const {
  std::size_t n = 0;
  for (const auto& p : points) n += p.stroke_end ? 1 : 0;
  return n;
}

PointSeq normalize(const RawSketch& raw) {
  if (raw.strokes.empty()) throw ValidationError("normalize: empty sketch");

  int min_x = std::numeric_limits<int>::max(), max_x = std::numeric_limits<int>::min();
  int min_y = min_x, max_y = max_x;
  for (const auto& stroke : raw.strokes) {
    if (stroke.empty()) throw ValidationError("normalize: empty stroke");
    for (auto [x, y] : stroke) {
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }
  }

  const double width = max_x - min_x;
  const double height = max_y - min_y;
  const double extent = std::max(width, height);
  if (extent <= 0.0)
    throw ValidationError("normalize: degenerate geometry (zero extent)");

  const double scale = 1.0 / extent;
  const double x_off = (1.0 - width * scale) / 2.0;
  const double y_off = (1.0 - height * scale) / 2.0;

  PointSeq seq;
  for (const auto& stroke : raw.strokes) {
    for (std::size_t i = 0; i < stroke.size(); ++i) {
      StrokePoint p;
      // 1/extent is inexact, so the product can sit a few ulps outside [0,1];
      // pin that residue to the boundary.
      p.x = std::clamp((stroke[i].first - min_x) * scale + x_off, 0.0, 1.0);
      p.y = std::clamp((stroke[i].second - min_y) * scale + y_off, 0.0, 1.0);
      p.stroke_end = (i + 1 == stroke.size());
      seq.points.push_back(p);
    }
  }
  return seq;
}

EncodedSeq encode(const PointSeq& seq) {
  EncodedSeq enc;
  enc.category_id = seq.category_id;
  const std::size_t n = std::min<std::size_t>(seq.points.size(), kSeqRows);
  enc.valid_len = static_cast<std::uint8_t>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = seq.points[i];
    float* row = &enc.rows[i * kSeqCols];
    row[0] = static_cast<float>(p.x);
    row[1] = static_cast<float>(p.y);
    row[2] = p.stroke_end ? 0.0f : 1.0f;
    row[3] = p.stroke_end ? 1.0f : 0.0f;
  }
  // A stroke cut by truncation still needs its stop point so every encoded
  // stroke carries exactly one (0,1) row.
  if (n > 0) {
    float* last = &enc.rows[(n - 1) * kSeqCols];
    last[2] = 0.0f;
    last[3] = 1.0f;
  }
  return enc;
}

PointSeq decode_points(const EncodedSeq& enc) {
  PointSeq seq;
  seq.category_id = enc.category_id;
  for (int i = 0; i < enc.valid_len; ++i) {
    StrokePoint p;
    p.x = enc.at(i, 0);
    p.y = enc.at(i, 1);
    p.stroke_end = enc.at(i, 3) != 0.0f;
    seq.points.push_back(p);
  }
  if (!seq.points.empty()) seq.points.back().stroke_end = true;
  return seq;
}

}  // namespace skssl
