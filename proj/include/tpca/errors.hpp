#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tpca {

// Operands of one algebraic expression disagree in TensorShape or dimension.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent files: sidecars, payloads, model headers.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Floating-point results that violate an algebraic guarantee, e.g. a
// spectrum declared real that inverts to a visibly complex signal.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-facing parameters (d out of range, bad fractions, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using WarningHandler = std::function<void(std::string_view)>;

/// Process-wide sink for non-fatal numerical warnings. Defaults to stderr.
inline WarningHandler& warning_handler() {
  static WarningHandler handler = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}

inline void warn(std::string_view msg) {
  if (auto& h = warning_handler()) h(msg);
}

}  // namespace tpca
