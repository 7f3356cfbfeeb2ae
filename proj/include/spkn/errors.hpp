#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace spkn {

// Malformed file contents. `where` is a byte offset or a section name.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::string where)
      : std::runtime_error(what + " (at " + where + ")"), where_(std::move(where)) {}
  FormatError(const std::string& what, std::size_t offset)
      : FormatError(what, "byte " + std::to_string(offset)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

// A numerical routine failed to converge or produced non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spkn
