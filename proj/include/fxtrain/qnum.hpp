#pragma once

// Signed fixed-point arithmetic in an explicit (I,F) format.
//
// A format (I,F) has one sign bit, I integer bits and F fraction bits, stored
// two's complement: total width 1+I+F, range [-2^I, 2^I - 2^-F], step 2^-F.
// Every operation rounds half-to-even and saturates; nothing ever wraps.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fxtrain/error.hpp"

namespace fxtrain::qnum {

using wide_t = __int128;

class QFormat {
 public:
  static constexpr int kMaxWidth = 32;

  QFormat(int int_bits, int frac_bits);

  int int_bits() const noexcept { return int_bits_; }
  int frac_bits() const noexcept { return frac_bits_; }
  int width() const noexcept { return 1 + int_bits_ + frac_bits_; }

  std::int64_t max_raw() const noexcept { return (std::int64_t{1} << (int_bits_ + frac_bits_)) - 1; }
  std::int64_t min_raw() const noexcept { return -(std::int64_t{1} << (int_bits_ + frac_bits_)); }
  double max_value() const noexcept;
  double min_value() const noexcept;
  double step() const noexcept;

  /// "(I,F)"
  std::string to_string() const;
  /// Accepts "(I,F)" with optional surrounding whitespace.
  static QFormat parse(std::string_view text);
  /// Comma-separated list, e.g. "(2,12),(2,12),(1,12)".
  static std::vector<QFormat> parse_list(std::string_view text);

  friend bool operator==(const QFormat&, const QFormat&) = default;

 private:
  int int_bits_;
  int frac_bits_;
};

class QValue {
 public:
  /// Zero in format (0,1).
  QValue() : raw_(0), fmt_(0, 1) {}
  /// Builds a value from a raw scaled integer, saturating into the format.
  static QValue from_raw(wide_t raw, QFormat fmt) noexcept;
  static QValue zero(QFormat fmt) noexcept { return QValue(0, fmt); }

  std::int32_t raw() const noexcept { return raw_; }
  const QFormat& fmt() const noexcept { return fmt_; }
  double to_real() const noexcept;

  friend bool operator==(const QValue&, const QValue&) = default;

 private:
  QValue(std::int32_t raw, QFormat fmt) noexcept : raw_(raw), fmt_(fmt) {}

  std::int32_t raw_;
  QFormat fmt_;
};

// Raw-integer kernels shared by QValue and the training engine's hot loops.

/// v * 2^-shift rounded half-to-even (shift <= 0 is an exact left shift).
wide_t round_shift(wide_t v, int shift) noexcept;

inline std::int32_t saturate(wide_t v, const QFormat& fmt) noexcept {
  if (v > fmt.max_raw()) return static_cast<std::int32_t>(fmt.max_raw());
  if (v < fmt.min_raw()) return static_cast<std::int32_t>(fmt.min_raw());
  return static_cast<std::int32_t>(v);
}

/// Requantizes a value carried at `frac` fraction bits into `out`.
inline std::int32_t requantize(wide_t v, int frac, const QFormat& out) noexcept {
  return saturate(round_shift(v, frac - out.frac_bits()), out);
}

/// Exact product of two raws (fraction bits fa + fb) requantized into `out`.
inline std::int32_t mul_raw(std::int32_t a, int fa, std::int32_t b, int fb, const QFormat& out) noexcept {
  return requantize(static_cast<std::int64_t>(a) * b, fa + fb, out);
}

/// Round-half-even quotient of an integer by a positive divisor.
wide_t div_round(wide_t num, std::int64_t den) noexcept;

std::int32_t quantize_raw(double x, const QFormat& fmt);

// Value-level operations.

QValue quantize(double x, QFormat fmt);
QValue requantize(const QValue& v, QFormat out) noexcept;
QValue q_add(const QValue& a, const QValue& b);
QValue q_sub(const QValue& a, const QValue& b);
QValue q_neg(const QValue& a) noexcept;
QValue q_mul(const QValue& a, const QValue& b, QFormat out_fmt) noexcept;

/// Wide multiply-accumulate register. Products accumulate exactly at the
/// operands' combined fraction scale; `finalize` rounds exactly once.
class WideAcc {
 public:
  /// Headroom above the product width: chains of up to 2^16 terms never overflow.
  static constexpr int kHeadroomBits = 16;
  static constexpr std::int64_t kMaxTerms = std::int64_t{1} << kHeadroomBits;

  WideAcc() = default;

  wide_t raw() const noexcept { return raw_; }
  /// Fraction bits of the accumulated products, or -1 before the first MAC.
  int frac_bits() const noexcept { return frac_bits_; }
  std::int64_t terms() const noexcept { return terms_; }

  friend WideAcc mac(WideAcc acc, const QValue& a, const QValue& b);

 private:
  wide_t raw_ = 0;
  int frac_bits_ = -1;
  int product_width_ = 0;
  std::int64_t terms_ = 0;
};

/// Accumulates a*b. Throws format_mismatch if the operand formats differ from
/// each other or from the accumulator's established product format, and
/// accumulator_overflow past the headroom.
WideAcc mac(WideAcc acc, const QValue& a, const QValue& b);
QValue finalize(const WideAcc& acc, QFormat out_fmt) noexcept;

}  // namespace fxtrain::qnum
