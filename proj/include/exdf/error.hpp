#pragma once

#include <stdexcept>
#include <string>

namespace exdf {

/// Malformed data files or arguments outside an operation's contract.
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid model or run configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace exdf
