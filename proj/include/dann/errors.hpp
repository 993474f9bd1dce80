#pragma once

#include <stdexcept>
#include <string>

namespace dann {

// Error taxonomy maps onto CLI exit codes: argument/config -> 1,
// I/O and file format -> 2, numerical failure -> 3.
class ArgumentError : public std::runtime_error {
 public:
  explicit ArgumentError(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionError : public ArgumentError {
 public:
  explicit DimensionError(const std::string& msg) : ArgumentError(msg) {}
};

class StateError : public ArgumentError {
 public:
  explicit StateError(const std::string& msg) : ArgumentError(msg) {}
};

class ConfigError : public ArgumentError {
 public:
  explicit ConfigError(const std::string& msg) : ArgumentError(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

class FormatError : public IoError {
 public:
  explicit FormatError(const std::string& msg) : IoError(msg) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dann
