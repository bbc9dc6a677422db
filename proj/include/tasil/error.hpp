#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tasil {

// Input data failed validation (bad file contents, degenerate cohort, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// TLG or CSV content that could not be parsed. Carries the 1-based line.
class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tasil
