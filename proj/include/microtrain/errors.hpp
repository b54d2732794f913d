#pragma once

#include <stdexcept>
#include <string>

namespace microtrain {

// Bad config file, bad manifest, unreadable input. CLI maps this to exit 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss during training. CLI maps this to exit 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace microtrain
