#pragma once

#include <stdexcept>
#include <string>

namespace physio {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration or CLI usage. Maps to exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed or inconsistent input data (schema, ordering, alignment,
// anchoring). Maps to exit code 3.
struct DataError : Error {
  using Error::Error;
};

// Tensor shape mismatch. Programming or wiring fault, exit code 4.
struct ShapeError : Error {
  using Error::Error;
};

// API contract violation (non-scalar loss, short sequences, ...). Exit 4.
struct ContractError : Error {
  using Error::Error;
};

}  // namespace physio
