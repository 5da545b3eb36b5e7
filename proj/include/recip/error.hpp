#pragma once

#include <stdexcept>
#include <string>

namespace recip {

// Invalid experiment, network or environment configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// An API was called out of order (e.g. backward before forward).
class UsageError : public std::logic_error {
 public:
  explicit UsageError(const std::string& what) : std::logic_error(what) {}
};

// Numerical failure during optimization (non-finite gradient or loss).
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace recip
