#pragma once

#include <stdexcept>
#include <string>

namespace vtm {

/// Malformed or inconsistent input data (files, schemes, dimensions).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A factorization or solve could not be carried out (non-SPD, singular).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Message-passing wiring violated (missing or duplicated boundary message).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vtm
