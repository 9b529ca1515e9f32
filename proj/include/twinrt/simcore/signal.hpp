#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace twinrt::sim {

enum class Kind { Real, Integer, Boolean, Text };

std::string_view to_string(Kind kind);
Kind kind_from_string(std::string_view text);

/// Scalar value carried by a port or across the twin link.
class SignalValue {
public:
  SignalValue() : value_(0.0) {}
  SignalValue(double v) : value_(v) {}
  SignalValue(std::int64_t v) : value_(v) {}
  SignalValue(int v) : value_(static_cast<std::int64_t>(v)) {}
  SignalValue(bool v) : value_(v) {}
  SignalValue(std::string v) : value_(std::move(v)) {}
  SignalValue(const char* v) : value_(std::string(v)) {}

  static SignalValue default_for(Kind kind);

  Kind kind() const { return static_cast<Kind>(value_.index()); }

  double as_real() const;
  std::int64_t as_integer() const;
  bool as_boolean() const;
  const std::string& as_text() const;

  /// Bit-exact for reals (distinguishes -0.0 and compares NaN payloads).
  bool identical(const SignalValue& other) const;

  bool operator==(const SignalValue& other) const { return identical(other); }

  std::string debug_string() const;

private:
  std::variant<double, std::int64_t, bool, std::string> value_;
};

class KindError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace twinrt::sim
