#include "nsctl/error.hpp"

namespace nsctl {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_mode: return "invalid_mode";
    case ErrorKind::invalid_geometry: return "invalid_geometry";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::truncation: return "truncation";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::validation: return "validation";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace nsctl
