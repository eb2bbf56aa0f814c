#pragma once

#include <stdexcept>
#include <string>

namespace dbl {

// Base error for anything that goes wrong at runtime (I/O, numerics, shape
// mismatches). The CLI maps this to exit code 1.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or usage (bad flag combinations, malformed sidecars,
// unsupported model versions). The CLI maps this to exit code 2.
class config_error : public error {
 public:
  using error::error;
};

}  // namespace dbl
