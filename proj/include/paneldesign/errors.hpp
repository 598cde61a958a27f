#pragma once

#include <stdexcept>

namespace paneldesign {

// Bad configuration or flag combination. Maps to CLI exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data. Maps to CLI exit code 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure or a refused problem size. Maps to CLI exit code 4.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace paneldesign
