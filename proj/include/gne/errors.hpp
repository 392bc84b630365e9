// Error taxonomy shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace gne {

// Invalid argument values: bad dimensions, out-of-range indices, non-positive
// weights, malformed parameter combinations.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// The communication graph is not connected (or has no nodes to connect).
class ConnectivityError : public std::runtime_error {
 public:
  explicit ConnectivityError(const std::string& what)
      : std::runtime_error(what) {}
};

// A numeric quantity became non-finite, or an iteration diverged.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what)
      : std::runtime_error(what) {}
};

// Step-size certification cannot be completed for the requested design
// (e.g. consensus gain too small for restricted monotonicity).
class CertificationError : public std::runtime_error {
 public:
  explicit CertificationError(const std::string& what)
      : std::runtime_error(what) {}
};

// Scenario file problems; message carries the offending key path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// The centralized reference solve failed to reach the requested tolerance,
// or two independent reference oracles disagree.
class OracleError : public std::runtime_error {
 public:
  explicit OracleError(const std::string& what) : std::runtime_error(what) {}
};

// Report bundles being compared do not describe the same game.
class ComparisonError : public std::runtime_error {
 public:
  explicit ComparisonError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace gne
