#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fxtrain {

enum class Errc {
  invalid_numeric,       // non-finite input to quantize
  format_mismatch,       // operands in different (I,F) formats
  accumulator_overflow,  // MAC chain exceeded the wide accumulator headroom
  invalid_format,        // bad (I,F) pair or unparsable "(I,F)" text
  shape_mismatch,
  invalid_config,
  missing_cache,         // backward pass before forward
  empty_dataset,
  length_mismatch,
  invalid_argument,
  io,                    // file missing / unreadable / unwritable
  bad_magic,
  truncated,
  count_mismatch,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace fxtrain
