#include "skssl/raster.hpp"

#include <cmath>
#include <cstdlib>

#include "skssl/binio.hpp"

namespace skssl {

std::size_t RasterSketch::pixel_count() const {
  std::size_t n = 0;
  for (auto v : grid) n += v != 0;
  return n;
}

void validate_render_config(const RenderConfig& cfg) {
  if (cfg.side < 2) throw ValidationError("raster side must be at least 2");
  if (2 * cfg.margin >= cfg.side) {
    throw ValidationError("margin " + std::to_string(cfg.margin) +
                          " too large for side " + std::to_string(cfg.side));
  }
}

std::size_t coord_to_px(double t, const RenderConfig& cfg) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ValidationError("coordinate " + std::to_string(t) + " outside [0,1]");
  }
  const double span = static_cast<double>(cfg.side - 1 - 2 * cfg.margin);
  return cfg.margin + static_cast<std::size_t>(std::lround(t * span));
}

namespace {

void draw_segment(RasterSketch& r, long r0, long c0, long r1, long c1) {
  // Integer midpoint segment; produces an 8-connected run of pixels.
  const long dc = std::labs(c1 - c0), sc = c0 < c1 ? 1 : -1;
  const long dr = -std::labs(r1 - r0), sr = r0 < r1 ? 1 : -1;
  long err = dc + dr;
  for (;;) {
    r.at(static_cast<std::size_t>(r0), static_cast<std::size_t>(c0)) = 1;
    if (r0 == r1 && c0 == c1) break;
    const long e2 = 2 * err;
    if (e2 >= dr) {
      err += dr;
      c0 += sc;
    }
    if (e2 <= dc) {
      err += dc;
      r0 += sr;
    }
  }
}

}  // namespace

RasterSketch render(const PointSeq& seq, const RenderConfig& cfg) {
  validate_render_config(cfg);
  if (seq.points.empty()) throw ValidationError("cannot render an empty sequence");
  RasterSketch out(cfg.side);
  for (std::size_t i = 0; i < seq.points.size(); ++i) {
    const auto& p = seq.points[i];
    const long row = static_cast<long>(coord_to_px(p.y, cfg));
    const long col = static_cast<long>(coord_to_px(p.x, cfg));
    out.at(static_cast<std::size_t>(row), static_cast<std::size_t>(col)) = 1;
    if (i + 1 < seq.points.size() && !p.stroke_end) {
      const auto& q = seq.points[i + 1];
      draw_segment(out, row, col, static_cast<long>(coord_to_px(q.y, cfg)),
                   static_cast<long>(coord_to_px(q.x, cfg)));
    }
  }
  return out;
}

RasterSketch rotate_raster(const RasterSketch& r, RotationAngle angle) {
  if (r.side == 0) throw ValidationError("cannot rotate an empty raster");
  const std::size_t S = r.side;
  RasterSketch out(S);
  switch (angle) {
    case RotationAngle::Deg0:
      out = r;
      break;
    case RotationAngle::Deg90:
      for (std::size_t row = 0; row < S; ++row)
        for (std::size_t col = 0; col < S; ++col)
          out.at(row, col) = r.at(S - 1 - col, row);
      break;
    case RotationAngle::Deg180:
      for (std::size_t row = 0; row < S; ++row)
        for (std::size_t col = 0; col < S; ++col)
          out.at(row, col) = r.at(S - 1 - row, S - 1 - col);
      break;
    case RotationAngle::Deg270:
      for (std::size_t row = 0; row < S; ++row)
        for (std::size_t col = 0; col < S; ++col)
          out.at(row, col) = r.at(col, S - 1 - row);
      break;
  }
  return out;
}

Tensor<float> tile_channels(const RasterSketch& r) {
  if (r.side == 0) throw ValidationError("cannot tile an empty raster");
  Tensor<float> out({3, r.side, r.side});
  const std::size_t plane = r.side * r.side;
  for (std::size_t i = 0; i < plane; ++i) {
    const float v = r.grid[i] ? 1.0f : 0.0f;
    out.data[i] = v;
    out.data[plane + i] = v;
    out.data[2 * plane + i] = v;
  }
  return out;
}

void export_pgm(const RasterSketch& r, const std::filesystem::path& path) {
  if (r.side == 0) throw ValidationError("cannot export an empty raster");
  auto os = open_out(path.string());
  os << "P5\n" << r.side << " " << r.side << "\n255\n";
  std::vector<unsigned char> payload(r.grid.size());
  for (std::size_t i = 0; i < r.grid.size(); ++i) payload[i] = r.grid[i] ? 0 : 255;
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size()));
  if (!os) throw DataError("write failed: " + path.string());
}

namespace {

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& is, const std::string& path) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw DataError("truncated PGM header in " + path);
  return tok;
}

}  // namespace

RasterSketch read_pgm(const std::filesystem::path& path) {
  auto is = open_in(path.string());
  if (pgm_token(is, path.string()) != "P5") {
    throw DataError("not a P5 PGM file: " + path.string());
  }
  const auto w = std::stoul(pgm_token(is, path.string()));
  const auto h = std::stoul(pgm_token(is, path.string()));
  const auto maxval = std::stoul(pgm_token(is, path.string()));
  if (w != h) throw DataError("non-square PGM " + path.string());
  if (w == 0) throw DataError("empty PGM " + path.string());
  if (maxval != 255) throw DataError("unsupported PGM maxval in " + path.string());
  RasterSketch out(w);
  std::vector<unsigned char> payload(w * h);
  is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (is.gcount() != static_cast<std::streamsize>(payload.size())) {
    throw DataError("truncated PGM payload in " + path.string());
  }
  for (std::size_t i = 0; i < payload.size(); ++i) out.grid[i] = payload[i] < 128 ? 1 : 0;
  return out;
}

}  // namespace skssl
