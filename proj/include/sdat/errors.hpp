#pragma once

#include <stdexcept>
#include <string>

namespace sdat {

// Tensor or batch dimensions that do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Out-of-range index, bad scalar parameter, empty input list.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mathematically undefined input, e.g. a zero-norm vector handed to a cosine.
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Problem size refused up front (factorial brute force).
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// A training routine finished its budget without meeting its quality bar.
class TrainingFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent file / configuration content.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sdat
