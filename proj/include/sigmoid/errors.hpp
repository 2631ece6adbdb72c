#pragma once

#include <stdexcept>
#include <string>

namespace sigmoid {

// Invalid or inconsistent configuration; CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Artifacts that do not belong together (model trained for system A fed a
// dataset for system B, grid mismatches); CLI exit code 3.
struct ArtifactMismatchError : std::runtime_error {
  explicit ArtifactMismatchError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: integration blow-up, non-finite loss, discriminator
// divergence; CLI exit code 4.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sigmoid
