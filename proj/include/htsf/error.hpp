#pragma once

#include <stdexcept>
#include <string>

namespace htsf {

// Invalid input, configuration or data supplied by the caller (CLI exit code 1).
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Broken internal invariant (CLI exit code 2).
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace htsf
