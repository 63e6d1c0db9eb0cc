#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "skssl/stroke.hpp"

namespace skssl {

// Parse one newline-delimited JSON record of the stroke-drawing format:
//   {"word": "cat", "drawing": [[[x0,x1,...],[y0,y1,...]], ...]}
// Throws ParseError (with byte offset) on malformed JSON, DataError on an
// empty drawing or mismatched x/y list lengths.
RawSketch parse_line(std::string_view text);

// Parse every non-blank line of an NDJSON file.
std::vector<RawSketch> parse_ndjson_file(const std::string& path);

}  // namespace skssl
