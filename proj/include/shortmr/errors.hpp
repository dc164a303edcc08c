#pragma once

#include <stdexcept>
#include <string>

namespace shortmr {

// Bad inputs, configs, file contents. The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures during execution (IO, divergence, missing artifacts). Exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace shortmr
