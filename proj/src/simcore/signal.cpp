#include "twinrt/simcore/signal.hpp"

#include <bit>
#include <charconv>

namespace twinrt::sim {

std::string_view to_string(Kind kind) {
  switch (kind) {
  case Kind::Real:
    return "real";
  case Kind::Integer:
    return "integer";
  case Kind::Boolean:
    return "boolean";
  case Kind::Text:
    return "text";
  }
  return "?";
}

Kind kind_from_string(std::string_view text) {
  if (text == "real") return Kind::Real;
  if (text == "integer") return Kind::Integer;
  if (text == "boolean") return Kind::Boolean;
  if (text == "text") return Kind::Text;
  throw KindError("unknown signal kind '" + std::string(text) + "'");
}

SignalValue SignalValue::default_for(Kind kind) {
  switch (kind) {
  case Kind::Real:
    return SignalValue(0.0);
  case Kind::Integer:
    return SignalValue(std::int64_t{0});
  case Kind::Boolean:
    return SignalValue(false);
  case Kind::Text:
    return SignalValue(std::string());
  }
  return {};
}

namespace {
[[noreturn]] void wrong_kind(Kind want, Kind have) {
  throw KindError("signal is " + std::string(to_string(have)) + ", not " +
                  std::string(to_string(want)));
}
} // namespace

double SignalValue::as_real() const {
  if (auto* v = std::get_if<double>(&value_)) return *v;
  wrong_kind(Kind::Real, kind());
}

std::int64_t SignalValue::as_integer() const {
  if (auto* v = std::get_if<std::int64_t>(&value_)) return *v;
  wrong_kind(Kind::Integer, kind());
}

bool SignalValue::as_boolean() const {
  if (auto* v = std::get_if<bool>(&value_)) return *v;
  wrong_kind(Kind::Boolean, kind());
}

const std::string& SignalValue::as_text() const {
  if (auto* v = std::get_if<std::string>(&value_)) return *v;
  wrong_kind(Kind::Text, kind());
}

bool SignalValue::identical(const SignalValue& other) const {
  if (kind() != other.kind()) return false;
  if (kind() == Kind::Real) {
    return std::bit_cast<std::uint64_t>(as_real()) == std::bit_cast<std::uint64_t>(other.as_real());
  }
  return value_ == other.value_;
}

std::string SignalValue::debug_string() const {
  switch (kind()) {
  case Kind::Real: {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), as_real());
    return std::string(buf, end);
  }
  case Kind::Integer:
    return std::to_string(as_integer());
  case Kind::Boolean:
    return as_boolean() ? "true" : "false";
  case Kind::Text:
    return "\"" + as_text() + "\"";
  }
  return {};
}

} // namespace twinrt::sim
