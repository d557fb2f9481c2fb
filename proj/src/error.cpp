#include "fxtrain/error.hpp"

namespace fxtrain {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_numeric: return "invalid_numeric";
    case Errc::format_mismatch: return "format_mismatch";
    case Errc::accumulator_overflow: return "accumulator_overflow";
    case Errc::invalid_format: return "invalid_format";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::invalid_config: return "invalid_config";
    case Errc::missing_cache: return "missing_cache";
    case Errc::empty_dataset: return "empty_dataset";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::io: return "io";
    case Errc::bad_magic: return "bad_magic";
    case Errc::truncated: return "truncated";
    case Errc::count_mismatch: return "count_mismatch";
  }
  return "unknown";
}

}  // namespace fxtrain
