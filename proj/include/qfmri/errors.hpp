#pragma once

#include <stdexcept>
#include <string>

namespace qfmri {

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

struct EncodingError : std::runtime_error {
  explicit EncodingError(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct MetricError : std::runtime_error {
  explicit MetricError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericsError : std::runtime_error {
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateError : std::runtime_error {
  explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qfmri
