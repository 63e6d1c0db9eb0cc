#include "skssl/ndjson.hpp"

#include <fstream>

#include <json.hpp>

#include "skssl/error.hpp"

namespace skssl {

namespace {

int as_coord(const nlohmann::json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (d == static_cast<int>(d)) return static_cast<int>(d);
  }
  throw DataError("drawing coordinate is not an integer");
}

}  // namespace

RawSketch parse_line(std::string_view text) {
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON record: ") + e.what(), e.byte);
  }
  if (!record.is_object() || !record.contains("word") ||
      !record.contains("drawing"))
    throw DataError("record missing 'word' or 'drawing' field");
  if (!record["word"].is_string())
    throw DataError("'word' field is not a string");
  const auto& drawing = record["drawing"];
  if (!drawing.is_array()) throw DataError("'drawing' field is not an array");
  if (drawing.empty()) throw DataError("empty sketch: drawing has no strokes");

  RawSketch sketch;
  sketch.category = record["word"].get<std::string>();
  for (const auto& stroke : drawing) {
    if (!stroke.is_array() || stroke.size() != 2)
      throw DataError("stroke is not a pair of coordinate lists");
    const auto& xs = stroke[0];
    const auto& ys = stroke[1];
    if (!xs.is_array() || !ys.is_array() || xs.size() != ys.size())
      throw DataError("mismatched x/y list lengths in stroke");
    if (xs.empty()) throw DataError("stroke has no points");
    std::vector<std::pair<int, int>> pts;
    pts.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      pts.emplace_back(as_coord(xs[i]), as_coord(ys[i]));
    sketch.strokes.push_back(std::move(pts));
  }
  return sketch;
}

std::vector<RawSketch> parse_ndjson_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open NDJSON input: " + path);
  std::vector<RawSketch> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_line(line));
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace skssl
