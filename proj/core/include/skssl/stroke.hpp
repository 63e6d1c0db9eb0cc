#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace skssl {

// A sketch exactly as parsed from the source record: ordered strokes of
// integer (x, y) coordinates, plus its category word.
struct RawSketch {
  std::string category;
  std::vector<std::vector<std::pair<int, int>>> strokes;
};

struct StrokePoint {
  double x = 0.0;
  double y = 0.0;
  bool stroke_end = false;
};

// Normalized point sequence. Coordinates lie in [0,1]; the last point of each
// stroke (and only those) carries stroke_end.
struct PointSeq {
  std::vector<StrokePoint> points;
  int category_id = -1;

  std::size_t size() const { return points.size(); }
  std::size_t stroke_count() const;
};

inline constexpr int kSeqRows = 100;
inline constexpr int kSeqCols = 4;

// Fixed 100x4 encoding: row = (x, y, 1, 0) mid-stroke, (x, y, 0, 1) at a
// stroke stop point; rows at and beyond valid_len are all zero.
struct EncodedSeq {
  std::array<float, kSeqRows * kSeqCols> rows{};
  std::uint8_t valid_len = 0;
  int category_id = -1;

  float at(int r, int c) const { return rows[r * kSeqCols + c]; }
};

// Isotropic min-max normalization: the longest bounding-box side is scaled to
// span [0,1] and the shorter axis is centered, preserving aspect ratio.
// Throws ValidationError on zero extent (all points identical).
PointSeq normalize(const RawSketch& raw);

// Truncate/pad to exactly 100 rows. Truncation keeps the first 100 points;
// padding rows are all-zero (including the pen-state bits).
EncodedSeq encode(const PointSeq& seq);

// Recover the point sequence stored in an encoding (the first valid_len rows).
// The final point is flagged as a stroke end even if truncation cut one off.
PointSeq decode_points(const EncodedSeq& enc);

}  // namespace skssl
