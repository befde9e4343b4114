#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "antibunch/amplitude.hpp"
#include "antibunch/aperture.hpp"
#include "antibunch/core_model.hpp"
#include "antibunch/correlation.hpp"
#include "antibunch/montecarlo.hpp"
#include "antibunch/numerics.hpp"
#include "antibunch/units.hpp"

namespace antibunch {

/// Configuration problem tied to a line of the source file (0 when the value
/// came from a command-line override or a missing key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& message)
      : std::runtime_error(format(source, line, message)), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& source, std::size_t line, const std::string& message) {
    if (line == 0) return source + ": " + message;
    return source + ":" + std::to_string(line) + ": " + message;
  }
  std::size_t line_;
};

struct RawEntry {
  std::string value;
  std::size_t line = 0;
};

/// Sectioned key-value text, keyed by "section.key".
struct RawConfig {
  std::string source = "<config>";
  std::map<std::string, RawEntry> entries;
  std::map<std::string, std::size_t> sections;  // section name -> header line
};

inline const std::set<std::string>& known_sections() {
  static const std::set<std::string> names{"setup",  "aperture", "detection",  "quadrature",
                                           "source", "witness",  "montecarlo", "output"};
  return names;
}

inline RawConfig parse_raw_config(std::istream& is, const std::string& source = "<config>") {
  RawConfig raw;
  raw.source = source;
  std::string section;
  std::string line;
  std::size_t number = 0;
  while (std::getline(is, line)) {
    ++number;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(source, number, "malformed section header");
      section = std::string(trim(text.substr(1, text.size() - 2)));
      if (!known_sections().count(section)) throw ConfigError(source, number, "unknown section [" + section + "]");
      if (raw.sections.count(section)) throw ConfigError(source, number, "duplicate section [" + section + "]");
      raw.sections[section] = number;
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError(source, number, "expected 'key = value'");
    if (section.empty()) throw ConfigError(source, number, "key outside of any section");
    const std::string key(trim(text.substr(0, eq)));
    const std::string value(trim(text.substr(eq + 1)));
    if (key.empty()) throw ConfigError(source, number, "empty key");
    if (value.empty()) throw ConfigError(source, number, "empty value for '" + key + "'");
    const std::string full = section + "." + key;
    if (raw.entries.count(full)) throw ConfigError(source, number, "duplicate key '" + key + "'");
    raw.entries[full] = {value, number};
  }
  return raw;
}

inline RawConfig load_raw_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string(), 0, "cannot open config file");
  return parse_raw_config(is, path.string());
}

/// Replaces or adds "section.key" (line 0 marks it as an override).
inline void set_override(RawConfig& raw, const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size())
    throw ConfigError(raw.source, 0, "override key must look like section.key, got '" + dotted_key + "'");
  if (!known_sections().count(dotted_key.substr(0, dot)))
    throw ConfigError(raw.source, 0, "unknown section in override '" + dotted_key + "'");
  raw.entries[dotted_key] = {std::string(trim(value)), 0};
}

struct RunConfig {
  PhysicalSetup setup;
  ApertureFunction aperture;
  Window window{-5.265e-3, 5.265e-3};
  std::size_t points = 61;
  AmplitudePath path = AmplitudePath::closed_form;
  ClosedFormTerms terms = ClosedFormTerms::full;
  DetectionKernel kernel = DetectionKernel::fraunhofer;
  std::optional<QuadratureSpec> quadrature;
  Source source = QuantumSource{};
  double witness_tolerance = 1e-9;
  double homogeneity_floor = 1e-6;
  std::size_t mc_events = 1000000;
  std::size_t mc_bins = 101;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;
  bool paraxial_warning = false;
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(const RawConfig& raw) : raw_(raw) {}

  bool has(const std::string& key) const { return raw_.entries.count(key) != 0; }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    const auto it = raw_.entries.find(key);
    std::size_t line = 0;
    if (it != raw_.entries.end()) line = it->second.line;
    else if (const auto s = raw_.sections.find(key.substr(0, key.find('.'))); s != raw_.sections.end())
      line = s->second;
    throw ConfigError(raw_.source, line, key + ": " + message);
  }

  std::optional<std::string> text(const std::string& key) {
    const auto it = raw_.entries.find(key);
    if (it == raw_.entries.end()) return std::nullopt;
    used_.insert(key);
    return it->second.value;
  }

  double quantity(const std::string& key, Dimension dim, double fallback) {
    const auto value = text(key);
    if (!value) return fallback;
    try {
      return parse_quantity(*value, dim);
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    const auto value = text(key);
    if (!value) return fallback;
    std::uint64_t out = 0;
    const auto res = std::from_chars(value->data(), value->data() + value->size(), out);
    if (res.ec != std::errc{} || res.ptr != value->data() + value->size())
      fail(key, "expected a non-negative integer, got '" + *value + "'");
    return out;
  }

  std::string choice(const std::string& key, const std::string& fallback, std::initializer_list<const char*> allowed) {
    const auto value = text(key);
    if (!value) return fallback;
    for (const char* a : allowed)
      if (*value == a) return *value;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    fail(key, "expected one of {" + list + "}, got '" + *value + "'");
  }

  std::map<std::string, std::string> prefixed(const std::string& prefix) {
    std::map<std::string, std::string> out;
    for (const auto& [key, entry] : raw_.entries) {
      if (key.rfind(prefix, 0) == 0) {
        out[key.substr(key.find('.') + 1)] = entry.value;
        used_.insert(key);
      }
    }
    return out;
  }

  void reject_unused() const {
    for (const auto& [key, entry] : raw_.entries)
      if (!used_.count(key)) throw ConfigError(raw_.source, entry.line, "unknown key '" + key + "'");
  }

 private:
  const RawConfig& raw_;
  std::set<std::string> used_;
};

// 90 deg lands within an ulp or two of pi/2; treat it as the exact quarter wave.
inline double snap_quarter_wave(double retardance) {
  return std::abs(retardance - std::numbers::pi / 2) <= 4e-16 ? std::numbers::pi / 2 : retardance;
}

}  // namespace detail

/// Validates every block and rejects unknown keys. Nothing is computed here.
inline RunConfig parse_run_config(const RawConfig& raw) {
  detail::ConfigReader r(raw);
  RunConfig c;
  PhysicalSetup& s = c.setup;

  s.pump_wavelength = r.quantity("setup.pump_wavelength", Dimension::length, s.pump_wavelength);
  if (r.has("setup.downconverted_wavelength")) {
    const double lambda = r.quantity("setup.downconverted_wavelength", Dimension::length, 0.0);
    if (std::abs(lambda - 2.0 * s.pump_wavelength) > 1e-9 * lambda)
      r.fail("setup.downconverted_wavelength", "only degenerate down-conversion is supported (must be twice the pump wavelength)");
  }
  s.crystal_length = r.quantity("setup.crystal_length", Dimension::length, s.crystal_length);
  s.crystal_aperture_distance =
      r.quantity("setup.crystal_aperture_distance", Dimension::length, s.crystal_aperture_distance);
  s.aperture_detector_distance =
      r.quantity("setup.aperture_detector_distance", Dimension::length, s.aperture_detector_distance);
  s.slit_separation = r.quantity("setup.slit_separation", Dimension::length, s.slit_separation);
  s.slit_width = r.quantity("setup.slit_width", Dimension::length, s.slit_width);
  s.pump_waist = r.quantity("setup.pump_waist", Dimension::length, s.pump_waist);
  auto positive = [&](const std::string& key, double v) {
    if (!(v > 0.0)) r.fail(key, "must be positive");
  };
  positive("setup.pump_wavelength", s.pump_wavelength);
  positive("setup.crystal_length", s.crystal_length);
  positive("setup.aperture_detector_distance", s.aperture_detector_distance);
  positive("setup.slit_separation", s.slit_separation);
  positive("setup.pump_waist", s.pump_waist);
  if (!(s.crystal_aperture_distance >= 0.0)) r.fail("setup.crystal_aperture_distance", "must be non-negative");
  if (!(s.slit_width >= 0.0)) r.fail("setup.slit_width", "must be non-negative");

  const std::string type = r.choice("aperture.type", "birefringent_double_slit", {"birefringent_double_slit", "elements"});
  const double retardance =
      detail::snap_quarter_wave(r.quantity("aperture.retardance", Dimension::angle, std::numbers::pi / 2));
  const auto elements = r.prefixed("aperture.element.");
  if (type == "birefringent_double_slit") {
    if (!elements.empty()) r.fail("aperture.type", "element entries need type = elements");
    if (s.slit_width >= s.slit_separation) r.fail("setup.slit_width", "must be smaller than slit_separation");
    c.aperture = birefringent_double_slit(s.slit_separation, s.slit_width, retardance);
  } else {
    if (r.has("aperture.retardance")) r.fail("aperture.retardance", "only used with type = birefringent_double_slit");
    if (elements.empty()) r.fail("aperture.type", "type = elements needs element.<i>.* entries");
    try {
      c.aperture = read_aperture_entries(elements);
    } catch (const std::invalid_argument& e) {
      r.fail("aperture.type", e.what());
    }
  }

  c.window.x_min = r.quantity("detection.x_min", Dimension::length, c.window.x_min);
  c.window.x_max = r.quantity("detection.x_max", Dimension::length, c.window.x_max);
  if (!(c.window.x_max > c.window.x_min)) r.fail("detection.x_max", "must exceed detection.x_min");
  c.points = r.count("detection.points", c.points);
  if (c.points < 3) r.fail("detection.points", "need at least 3 grid points");
  c.path = r.choice("detection.path", "closed_form", {"closed_form", "numeric"}) == "numeric"
               ? AmplitudePath::numeric
               : AmplitudePath::closed_form;
  c.terms = r.choice("detection.terms", "full", {"full", "focused_limit"}) == "focused_limit"
                ? ClosedFormTerms::focused_limit
                : ClosedFormTerms::full;
  c.kernel = r.choice("detection.kernel", "fraunhofer", {"fraunhofer", "fresnel"}) == "fresnel"
                 ? DetectionKernel::fresnel
                 : DetectionKernel::fraunhofer;
  if (c.path == AmplitudePath::closed_form) {
    if (const auto form = as_birefringent_double_slit(c.aperture); !form || form->separation != s.slit_separation)
      r.fail("detection.path", "closed_form needs a birefringent double slit matching setup.slit_separation");
  }
  c.paraxial_warning = !paraxial_ok(s, c.window);

  const bool any_quadrature = r.has("quadrature.half_width_sum") || r.has("quadrature.half_width_diff") ||
                              r.has("quadrature.nodes_sum") || r.has("quadrature.nodes_diff") ||
                              r.has("quadrature.rule") || r.has("quadrature.tolerance");
  if (any_quadrature) {
    QuadratureSpec q = default_quadrature(s, c.aperture);
    q.half_width[0] = r.quantity("quadrature.half_width_sum", Dimension::wavenumber, q.half_width[0]);
    q.half_width[1] = r.quantity("quadrature.half_width_diff", Dimension::wavenumber, q.half_width[1]);
    q.nodes[0] = r.count("quadrature.nodes_sum", q.nodes[0]);
    q.nodes[1] = r.count("quadrature.nodes_diff", q.nodes[1]);
    q.rule = r.choice("quadrature.rule", "gauss_legendre", {"gauss_legendre", "trapezoid"}) == "trapezoid"
                 ? QuadratureRule::trapezoid
                 : QuadratureRule::gauss_legendre;
    q.tolerance = r.quantity("quadrature.tolerance", Dimension::dimensionless, q.tolerance);
    try {
      check_quadrature_coverage(q, s);
    } catch (const std::invalid_argument& e) {
      r.fail("quadrature.half_width_sum", e.what());
    }
    c.quadrature = q;
  }

  const std::string source = r.choice("source.type", "quantum", {"quantum", "classical"});
  if (source == "classical") {
    const double v = r.quantity("source.visibility", Dimension::dimensionless, 0.5);
    if (!(v >= 0.0 && v <= 0.5)) r.fail("source.visibility", "must lie in [0, 0.5]");
    c.source = ClassicalSource{v};
  } else if (r.has("source.visibility")) {
    r.fail("source.visibility", "only used with type = classical");
  }

  c.witness_tolerance = r.quantity("witness.tolerance", Dimension::dimensionless, c.witness_tolerance);
  if (!(c.witness_tolerance >= 0.0)) r.fail("witness.tolerance", "must be non-negative");
  c.homogeneity_floor = r.quantity("witness.homogeneity_floor", Dimension::dimensionless, c.homogeneity_floor);
  if (!(c.homogeneity_floor >= 0.0)) r.fail("witness.homogeneity_floor", "must be non-negative");

  c.mc_events = r.count("montecarlo.events", c.mc_events);
  if (c.mc_events < 1) r.fail("montecarlo.events", "need at least one event");
  c.mc_bins = r.count("montecarlo.bins", c.mc_bins);
  if (c.mc_bins < 2) r.fail("montecarlo.bins", "need at least 2 bins");
  c.seed = r.count("montecarlo.seed", c.seed);

  if (const auto dir = r.text("output.directory")) c.output_dir = *dir;
  const auto threads = r.count("output.threads", c.threads);
  if (threads < 1 || threads > 1024) r.fail("output.threads", "must be between 1 and 1024");
  c.threads = static_cast<unsigned>(threads);

  r.reject_unused();
  return c;
}

}  // namespace antibunch
