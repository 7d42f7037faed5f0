#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tapt {

/// Malformed or inconsistent input data (files, datasets, checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;

  DataError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  /// 1-based line of the offending record, 0 when not line-oriented.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

}  // namespace tapt
