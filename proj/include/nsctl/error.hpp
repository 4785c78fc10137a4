#pragma once

#include <stdexcept>
#include <string>

namespace nsctl {

enum class ErrorKind {
  invalid_mode,
  invalid_geometry,
  invalid_argument,
  truncation,
  configuration,
  validation,
  numerical,
  io,
};

const char* to_string(ErrorKind kind) noexcept;

// All library failures surface as this one exception type; the C API maps
// `kind()` onto status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace nsctl
