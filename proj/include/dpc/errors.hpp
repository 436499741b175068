#pragma once

#include <stdexcept>
#include <string>

namespace dpc {

// Pivot below the conditioning threshold in logdet/inverse.
class SingularMatrix : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotHermitian : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotSiso : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GridTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Algorithm 1 observed a row update that raised its Jensen bound.
class NonDecreasingBound : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Algorithm 2 fell more than 0.5 bits below its best iterate.
class Diverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientTail : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace dpc
