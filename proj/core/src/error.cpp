#include "senh/error.hpp"

namespace senh {

const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::config: return "config";
    case ErrorCategory::io: return "io";
    case ErrorCategory::format: return "format";
    case ErrorCategory::data: return "data";
    case ErrorCategory::shape: return "shape";
    case ErrorCategory::model: return "model";
    case ErrorCategory::train: return "train";
    case ErrorCategory::internal: return "internal";
  }
  return "internal";
}

}  // namespace senh
