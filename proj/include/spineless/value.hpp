#pragma once

#include <bit>
#include <cstdint>
#include <string>

namespace spineless {

enum class ValueType : std::uint8_t { Unknown, Number, Bool, String, Length };

const char* to_string(ValueType type);

/// Runtime value. The static type lives in the program, so the payload is
/// untagged: numbers and bools use `number`, interned strings use `tag`, and
/// lengths use `number` plus `tag` (0 absolute, 1 percentage).
struct Value {
  double number = 0.0;
  std::uint32_t tag = 0;

  static Value of_number(double n) { return {n, 0}; }
  static Value of_bool(bool b) { return {b ? 1.0 : 0.0, 0}; }
  static Value of_string(std::uint32_t id) { return {0.0, id}; }
  static Value of_length(double magnitude, bool percent) { return {magnitude, percent ? 1u : 0u}; }

  bool as_bool() const { return number != 0.0; }
  bool is_percent() const { return tag != 0; }
};

/// Change detection compares bit patterns, so it never depends on
/// floating-point equality quirks.
inline bool identical(const Value& a, const Value& b) {
  return std::bit_cast<std::uint64_t>(a.number) == std::bit_cast<std::uint64_t>(b.number) &&
         a.tag == b.tag;
}

/// Shortest round-trip decimal form of a double.
std::string format_number(double n);

}  // namespace spineless
