// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_ERRORS_HPP_
#define LAYERSIM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace layersim {

// Input file could not be parsed (bad JSON/CSV, wrong schema).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Parsed fine but violates a documented invariant.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Run configuration is unusable (missing paths, contradictory modes).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Illegal use of a stateful object (e.g. stepping a finished episode).
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& msg) : std::logic_error(msg) {}
};

// Numerical failure during optimization (non-finite gradients).
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace layersim

#endif  // LAYERSIM_ERRORS_HPP_
