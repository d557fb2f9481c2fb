#include "fxtrain/qnum.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace fxtrain::qnum {

QFormat::QFormat(int int_bits, int frac_bits) : int_bits_(int_bits), frac_bits_(frac_bits) {
  if (int_bits < 0 || frac_bits < 1 || 1 + int_bits + frac_bits > kMaxWidth) {
    throw Error(Errc::invalid_format, "invalid fixed-point format (" + std::to_string(int_bits) + "," +
                                          std::to_string(frac_bits) + "): need I >= 0, F >= 1, 1+I+F <= 32");
  }
}

double QFormat::max_value() const noexcept { return std::ldexp(static_cast<double>(max_raw()), -frac_bits_); }
double QFormat::min_value() const noexcept { return std::ldexp(static_cast<double>(min_raw()), -frac_bits_); }
double QFormat::step() const noexcept { return std::ldexp(1.0, -frac_bits_); }

std::string QFormat::to_string() const {
  return "(" + std::to_string(int_bits_) + "," + std::to_string(frac_bits_) + ")";
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

int parse_int(std::string_view s, std::string_view whole) {
  s = trim(s);
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(Errc::invalid_format, "cannot parse fixed-point format \"" + std::string(whole) + "\"");
  }
  return value;
}

}  // namespace

QFormat QFormat::parse(std::string_view text) {
  const std::string_view s = trim(text);
  const auto comma = s.find(',');
  if (s.size() < 5 || s.front() != '(' || s.back() != ')' || comma == std::string_view::npos) {
    throw Error(Errc::invalid_format, "cannot parse fixed-point format \"" + std::string(text) + "\"");
  }
  const int i = parse_int(s.substr(1, comma - 1), text);
  const int f = parse_int(s.substr(comma + 1, s.size() - comma - 2), text);
  return QFormat(i, f);
}

std::vector<QFormat> QFormat::parse_list(std::string_view text) {
  std::vector<QFormat> out;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find('(', pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find(')', open);
    if (close == std::string_view::npos) {
      throw Error(Errc::invalid_format, "unterminated format in \"" + std::string(text) + "\"");
    }
    const auto between = trim(text.substr(pos, open - pos));
    if (!between.empty() && between != ",") {
      throw Error(Errc::invalid_format, "unexpected text in format list \"" + std::string(text) + "\"");
    }
    out.push_back(parse(text.substr(open, close - open + 1)));
    pos = close + 1;
  }
  if (!trim(text.substr(pos)).empty() || out.empty()) {
    throw Error(Errc::invalid_format, "cannot parse format list \"" + std::string(text) + "\"");
  }
  return out;
}

QValue QValue::from_raw(wide_t raw, QFormat fmt) noexcept { return QValue(saturate(raw, fmt), fmt); }

double QValue::to_real() const noexcept { return std::ldexp(static_cast<double>(raw_), -fmt_.frac_bits()); }

wide_t round_shift(wide_t v, int shift) noexcept {
  if (shift <= 0) return v * (wide_t{1} << -shift);
  const wide_t q = v >> shift;  // floor
  const wide_t rem = v - q * (wide_t{1} << shift);
  const wide_t half = wide_t{1} << (shift - 1);
  if (rem > half || (rem == half && (q & 1) != 0)) return q + 1;
  return q;
}

wide_t div_round(wide_t num, std::int64_t den) noexcept {
  wide_t q = num / den;
  wide_t r = num % den;
  if (r < 0) {  // make it a floor division
    q -= 1;
    r += den;
  }
  const wide_t twice = 2 * r;
  if (twice > den || (twice == den && (q & 1) != 0)) return q + 1;
  return q;
}

std::int32_t quantize_raw(double x, const QFormat& fmt) {
  if (!std::isfinite(x)) {
    throw Error(Errc::invalid_numeric, "cannot quantize a non-finite value");
  }
  // Clamp first so the scaled value stays well inside the int64 range; the
  // scaling by a power of two is exact.
  if (x >= fmt.max_value()) return static_cast<std::int32_t>(fmt.max_raw());
  if (x <= fmt.min_value()) return static_cast<std::int32_t>(fmt.min_raw());
  const double scaled = std::ldexp(x, fmt.frac_bits());
  const double fl = std::floor(scaled);
  const double diff = scaled - fl;
  auto r = static_cast<std::int64_t>(fl);
  if (diff > 0.5 || (diff == 0.5 && (r & 1) != 0)) ++r;
  return saturate(r, fmt);
}

QValue quantize(double x, QFormat fmt) { return QValue::from_raw(quantize_raw(x, fmt), fmt); }

QValue requantize(const QValue& v, QFormat out) noexcept {
  return QValue::from_raw(round_shift(v.raw(), v.fmt().frac_bits() - out.frac_bits()), out);
}

namespace {

void require_same(const QValue& a, const QValue& b, const char* op) {
  if (a.fmt() != b.fmt()) {
    throw Error(Errc::format_mismatch, std::string(op) + ": operand formats differ " + a.fmt().to_string() +
                                           " vs " + b.fmt().to_string());
  }
}

}  // namespace

QValue q_add(const QValue& a, const QValue& b) {
  require_same(a, b, "q_add");
  return QValue::from_raw(wide_t{a.raw()} + b.raw(), a.fmt());
}

QValue q_sub(const QValue& a, const QValue& b) {
  require_same(a, b, "q_sub");
  return QValue::from_raw(wide_t{a.raw()} - b.raw(), a.fmt());
}

QValue q_neg(const QValue& a) noexcept { return QValue::from_raw(-wide_t{a.raw()}, a.fmt()); }

QValue q_mul(const QValue& a, const QValue& b, QFormat out_fmt) noexcept {
  return QValue::from_raw(mul_raw(a.raw(), a.fmt().frac_bits(), b.raw(), b.fmt().frac_bits(), out_fmt), out_fmt);
}

WideAcc mac(WideAcc acc, const QValue& a, const QValue& b) {
  require_same(a, b, "mac");
  const int frac = 2 * a.fmt().frac_bits();
  const int width = 2 * a.fmt().width();
  if (acc.frac_bits_ < 0) {
    acc.frac_bits_ = frac;
    acc.product_width_ = width;
  } else if (acc.frac_bits_ != frac || acc.product_width_ != width) {
    throw Error(Errc::format_mismatch, "mac: operand format " + a.fmt().to_string() +
                                           " differs from the accumulator's product format");
  }
  if (acc.terms_ >= WideAcc::kMaxTerms) {
    throw Error(Errc::accumulator_overflow,
                "mac: more than 2^16 terms in one accumulation chain; layer fan-in too large");
  }
  acc.raw_ += static_cast<std::int64_t>(a.raw()) * b.raw();
  ++acc.terms_;
  return acc;
}

QValue finalize(const WideAcc& acc, QFormat out_fmt) noexcept {
  if (acc.frac_bits() < 0) return QValue::zero(out_fmt);
  return QValue::from_raw(requantize(acc.raw(), acc.frac_bits(), out_fmt), out_fmt);
}

}  // namespace fxtrain::qnum
