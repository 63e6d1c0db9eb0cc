#pragma once

#include <stdexcept>
#include <string>

namespace skssl {

// Error taxonomy mirrored by the CLI exit codes:
//   ValidationError -> 2, DataError -> 3, DivergenceError -> 4.

// Bad parameters, invalid configs, broken invariants detected up front.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable, malformed, or inconsistent input data and files.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// NDJSON/record-level parse failure; carries the byte offset when known.
class ParseError : public DataError {
public:
  ParseError(const std::string& msg, std::size_t byte_offset)
      : DataError(msg + " (byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
  std::size_t byte_offset_;
};

// Training blew up (non-finite loss).
class DivergenceError : public std::runtime_error {
public:
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: an operation was called in a state that forbids it.
class StateError : public std::logic_error {
public:
  explicit StateError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace skssl
