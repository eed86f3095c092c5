#pragma once

#include <stdexcept>
#include <string>

namespace mbseg {

/// Malformed input or a violated precondition. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation that cannot produce a finite, meaningful result
/// (degenerate pooled model, no density, ...). The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mbseg
