#include "uavids/error.hpp"

namespace uavids {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Version: return "version";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

}  // namespace uavids
