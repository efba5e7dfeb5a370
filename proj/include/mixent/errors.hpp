#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mixent {

// Raised when an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a simulation cannot reach a verdict, e.g. too few samples landed
// in a conditioning shell.
class Inconclusive : public std::runtime_error {
 public:
  Inconclusive(const std::string& what, std::size_t hits)
      : std::runtime_error(what), hits_(hits) {}

  std::size_t hits() const noexcept { return hits_; }

 private:
  std::size_t hits_;
};

}  // namespace mixent
