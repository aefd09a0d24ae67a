#pragma once

#include <stdexcept>
#include <string>

namespace dlca {

// Error categories map onto the CLI exit codes:
//   ConfigError -> 2, IoError -> 3, NumericalError -> 4.

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dlca
