#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "skssl/deform.hpp"
#include "skssl/stroke.hpp"
#include "skssl/tensor.hpp"

namespace skssl {

// Square binary pixel grid, row-major, 0 background / 1 stroke.
struct RasterSketch {
  std::size_t side = 0;
  std::vector<std::uint8_t> grid;

  RasterSketch() = default;
  explicit RasterSketch(std::size_t side_) : side(side_), grid(side_ * side_, 0) {}

  std::uint8_t& at(std::size_t row, std::size_t col) { return grid[row * side + col]; }
  std::uint8_t at(std::size_t row, std::size_t col) const { return grid[row * side + col]; }
  std::size_t pixel_count() const;
};

struct RenderConfig {
  std::size_t side = 64;
  std::size_t margin = 0;
};

void validate_render_config(const RenderConfig& cfg);

// Maps x to column and y to row: px = margin + round(t * (side-1-2*margin)),
// round half away from zero. Consecutive points within a stroke are joined by
// 1-pixel discrete line segments; nothing is drawn across a stroke boundary.
RasterSketch render(const PointSeq& seq, const RenderConfig& cfg);

std::size_t coord_to_px(double t, const RenderConfig& cfg);

// Lossless quarter-turn index permutation, chosen to agree with the stroke
// rotation through the render mapping: for 90 degrees, out(r,c) = in(side-1-c, r).
RasterSketch rotate_raster(const RasterSketch& r, RotationAngle angle);

// Three identical brightness channels as a [3,H,W] float tensor.
Tensor<float> tile_channels(const RasterSketch& r);

// P5 binary PGM, stroke pixels 0 (black), background 255.
void export_pgm(const RasterSketch& r, const std::filesystem::path& path);
RasterSketch read_pgm(const std::filesystem::path& path);

}  // namespace skssl
