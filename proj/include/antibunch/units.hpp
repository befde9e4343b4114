#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace antibunch {

enum class Dimension { dimensionless, length, angle, wavenumber };

inline std::string_view dimension_name(Dimension d) {
  switch (d) {
    case Dimension::dimensionless: return "dimensionless";
    case Dimension::length: return "length";
    case Dimension::angle: return "angle";
    case Dimension::wavenumber: return "wavenumber";
  }
  return "?";
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

/// Parses a whole string as a double; throws std::invalid_argument otherwise.
inline double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty())
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  return value;
}

namespace detail {

struct UnitEntry {
  std::string_view symbol;
  Dimension dimension;
  double to_si;
};

inline constexpr std::array kUnits{
    UnitEntry{"m", Dimension::length, 1.0},
    UnitEntry{"cm", Dimension::length, 1e-2},
    UnitEntry{"mm", Dimension::length, 1e-3},
    UnitEntry{"um", Dimension::length, 1e-6},
    UnitEntry{"\xC2\xB5m", Dimension::length, 1e-6},  // µm
    UnitEntry{"nm", Dimension::length, 1e-9},
    UnitEntry{"rad", Dimension::angle, 1.0},
    UnitEntry{"mrad", Dimension::angle, 1e-3},
    UnitEntry{"deg", Dimension::angle, std::numbers::pi / 180.0},
    UnitEntry{"rad/m", Dimension::wavenumber, 1.0},
    UnitEntry{"1/m", Dimension::wavenumber, 1.0},
    UnitEntry{"rad/mm", Dimension::wavenumber, 1e3},
    UnitEntry{"1/mm", Dimension::wavenumber, 1e3},
    UnitEntry{"rad/um", Dimension::wavenumber, 1e6},
    UnitEntry{"1/um", Dimension::wavenumber, 1e6},
};

}  // namespace detail

/// Parses "<number> <unit>" (whitespace optional) into SI units. Physical
/// dimensions require a unit suffix; dimensionless values must not carry one.
inline double parse_quantity(std::string_view text, Dimension expected) {
  text = trim(text);
  std::size_t split = text.size();
  // The numeric part ends where the first letter or unit glyph starts; an
  // exponent 'e'/'E' directly followed by a sign or digit belongs to the number.
  for (std::size_t i = 0; i < text.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    const bool exponent = (c == 'e' || c == 'E') && i > 0 && i + 1 < text.size() &&
                          (std::isdigit(static_cast<unsigned char>(text[i + 1])) || text[i + 1] == '-' ||
                           text[i + 1] == '+');
    if (exponent) continue;
    if (std::isalpha(c) || c >= 0x80 || c == '/' || std::isspace(c)) {
      split = i;
      break;
    }
  }
  const std::string_view number = trim(text.substr(0, split));
  const std::string_view unit = trim(text.substr(split));
  const double value = parse_double(number);
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite value: '" + std::string(text) + "'");

  if (expected == Dimension::dimensionless) {
    if (!unit.empty()) throw std::invalid_argument("unexpected unit '" + std::string(unit) + "' on dimensionless value");
    return value;
  }
  if (unit.empty())
    throw std::invalid_argument("missing unit on " + std::string(dimension_name(expected)) + " value '" +
                                std::string(text) + "'");
  for (const auto& entry : detail::kUnits) {
    if (entry.symbol == unit) {
      if (entry.dimension != expected)
        throw std::invalid_argument("unit '" + std::string(unit) + "' is not a " +
                                    std::string(dimension_name(expected)) + " unit");
      return value * entry.to_si;
    }
  }
  throw std::invalid_argument("unknown unit '" + std::string(unit) + "'");
}

/// SI value with its base unit, in a form parse_quantity reads back exactly.
inline std::string format_quantity(double value, Dimension d) {
  switch (d) {
    case Dimension::dimensionless: return format_double(value);
    case Dimension::length: return format_double(value) + " m";
    case Dimension::angle: return format_double(value) + " rad";
    case Dimension::wavenumber: return format_double(value) + " rad/m";
  }
  return format_double(value);
}

}  // namespace antibunch
