#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "antibunch/core_model.hpp"
#include "antibunch/numerics.hpp"
#include "antibunch/units.hpp"

namespace antibunch {

/// One slit: a uniform strip of the given width (0 means a delta line) with a
/// complex amplitude transmission.
struct SlitElement {
  double center = 0.0;
  double width = 0.0;
  std::complex<double> transmission{1.0, 0.0};

  bool is_delta() const noexcept { return width == 0.0; }
};

/// Polarization-resolved aperture A_{in,out}(xi). Slits are infinite along y,
/// so only the x profile is stored. Polarization-rotating (cross) channels are
/// not supported and always evaluate to zero.
class ApertureFunction {
 public:
  std::vector<SlitElement>& channel(Polarization in, Polarization out) { return channels_[index(in, out)]; }
  const std::vector<SlitElement>& channel(Polarization in, Polarization out) const {
    return channels_[index(in, out)];
  }

  bool all_delta() const {
    return std::all_of(channels_.begin(), channels_.end(), [](const auto& elements) {
      return std::all_of(elements.begin(), elements.end(), [](const SlitElement& s) { return s.is_delta(); });
    });
  }

  /// Largest |center| + width / 2 over all elements.
  double max_extent() const {
    double extent = 0.0;
    for (const auto& elements : channels_)
      for (const auto& s : elements) extent = std::max(extent, std::abs(s.center) + 0.5 * s.width);
    return extent;
  }

  void validate() const {
    if (!channel(Polarization::e, Polarization::o).empty() || !channel(Polarization::o, Polarization::e).empty())
      throw std::invalid_argument("aperture: polarization-rotating channels are not supported");
    for (const auto& elements : channels_) {
      for (const auto& s : elements) {
        if (!std::isfinite(s.center)) throw std::invalid_argument("aperture: slit center must be finite");
        if (!(s.width >= 0.0) || !std::isfinite(s.width))
          throw std::invalid_argument("aperture: slit width must be non-negative");
        if (!(std::abs(s.transmission) <= 1.0 + 1e-12))
          throw std::invalid_argument("aperture: |transmission| must not exceed 1");
      }
      std::vector<SlitElement> sorted = elements;
      std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.center < b.center; });
      for (std::size_t i = 1; i < sorted.size(); ++i) {
        const double gap = sorted[i].center - sorted[i - 1].center;
        if (gap <= 0.0 || gap < 0.5 * (sorted[i].width + sorted[i - 1].width))
          throw std::invalid_argument("aperture: slits within a channel overlap");
      }
    }
  }

  friend bool operator==(const ApertureFunction& a, const ApertureFunction& b) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (a.channels_[c].size() != b.channels_[c].size()) return false;
      for (std::size_t i = 0; i < a.channels_[c].size(); ++i) {
        const auto& x = a.channels_[c][i];
        const auto& y = b.channels_[c][i];
        if (x.center != y.center || x.width != y.width || x.transmission != y.transmission) return false;
      }
    }
    return true;
  }

 private:
  static std::size_t index(Polarization in, Polarization out) {
    return 2 * static_cast<std::size_t>(in == Polarization::o) + static_cast<std::size_t>(out == Polarization::o);
  }

  std::array<std::vector<SlitElement>, 4> channels_{};
};

/// exp(-i retardance), exact at the quarter-wave and zero-retardance points.
inline std::complex<double> wave_plate_factor(double retardance) {
  if (retardance == std::numbers::pi / 2) return {0.0, -1.0};
  if (retardance == 0.0) return {1.0, 0.0};
  return std::polar(1.0, -retardance);
}

/// Double slit with orthogonal wave plates over the two slits. Each
/// polarization picks up exp(-i retardance) at one slit: o at +d/2, e at -d/2.
inline ApertureFunction birefringent_double_slit(double separation, double width,
                                                 double retardance = std::numbers::pi / 2) {
  if (!(separation > 0.0)) throw std::invalid_argument("birefringent_double_slit: separation must be positive");
  if (!(width >= 0.0)) throw std::invalid_argument("birefringent_double_slit: width must be non-negative");
  if (width >= separation) throw std::invalid_argument("birefringent_double_slit: slit width must be below separation");
  if (!std::isfinite(retardance)) throw std::invalid_argument("birefringent_double_slit: retardance must be finite");
  const std::complex<double> plate = wave_plate_factor(retardance);
  const double half = 0.5 * separation;
  ApertureFunction ap;
  ap.channel(Polarization::o, Polarization::o) = {{+half, width, plate}, {-half, width, 1.0}};
  ap.channel(Polarization::e, Polarization::e) = {{+half, width, 1.0}, {-half, width, plate}};
  return ap;
}

/// Fourier transform of one channel, sum_j t_j exp(-i q c_j) [a_j sinc(q a_j / 2)].
inline std::complex<double> transfer_function(const ApertureFunction& ap, Polarization in, Polarization out,
                                              double qx) {
  std::complex<double> sum{};
  for (const SlitElement& s : ap.channel(in, out)) {
    std::complex<double> term = s.transmission * std::polar(1.0, -qx * s.center);
    if (!s.is_delta()) term *= s.width * sinc(0.5 * qx * s.width);
    sum += term;
  }
  return sum;
}

/// Parameters of an aperture recognised as a birefringent double slit.
struct DoubleSlitForm {
  double separation = 0.0;
  double width = 0.0;
  double retardance = 0.0;
};

/// Recognises the layout produced by birefringent_double_slit (any retardance).
inline std::optional<DoubleSlitForm> as_birefringent_double_slit(const ApertureFunction& ap) {
  const auto& oo = ap.channel(Polarization::o, Polarization::o);
  const auto& ee = ap.channel(Polarization::e, Polarization::e);
  if (oo.size() != 2 || ee.size() != 2) return std::nullopt;
  if (!ap.channel(Polarization::e, Polarization::o).empty() || !ap.channel(Polarization::o, Polarization::e).empty())
    return std::nullopt;
  auto by_center = [](std::vector<SlitElement> v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.center < b.center; });
    return v;
  };
  const auto o_sorted = by_center(oo);
  const auto e_sorted = by_center(ee);
  const double half = o_sorted[1].center;
  const double width = o_sorted[0].width;
  if (!(half > 0.0) || o_sorted[0].center != -half || e_sorted[0].center != -half || e_sorted[1].center != half)
    return std::nullopt;
  if (o_sorted[1].width != width || e_sorted[0].width != width || e_sorted[1].width != width) return std::nullopt;
  const std::complex<double> plate = o_sorted[1].transmission;
  if (o_sorted[0].transmission != std::complex<double>{1.0, 0.0} ||
      e_sorted[1].transmission != std::complex<double>{1.0, 0.0} || e_sorted[0].transmission != plate)
    return std::nullopt;
  if (std::abs(std::abs(plate) - 1.0) > 1e-12) return std::nullopt;
  double retardance = -std::arg(plate);
  if (plate == std::complex<double>{0.0, -1.0}) retardance = std::numbers::pi / 2;
  if (retardance < 0.0) retardance += 2.0 * std::numbers::pi;
  return DoubleSlitForm{2.0 * half, width, retardance};
}

// Flat key-value form, one element per index:
//   element.<i>.channel = ee | oo
//   element.<i>.center = <length>
//   element.<i>.width = <length>
//   element.<i>.modulus = <number>
//   element.<i>.phase = <angle>

inline void write_aperture_entries(std::ostream& os, const ApertureFunction& ap) {
  std::size_t index = 0;
  for (Polarization p : {Polarization::e, Polarization::o}) {
    for (const SlitElement& s : ap.channel(p, p)) {
      const std::string prefix = "element." + std::to_string(index++) + ".";
      const char sym = polarization_symbol(p);
      os << prefix << "channel = " << sym << sym << '\n';
      os << prefix << "center = " << format_quantity(s.center, Dimension::length) << '\n';
      os << prefix << "width = " << format_quantity(s.width, Dimension::length) << '\n';
      os << prefix << "modulus = " << format_double(std::abs(s.transmission)) << '\n';
      os << prefix << "phase = " << format_quantity(std::arg(s.transmission), Dimension::angle) << '\n';
    }
  }
}

/// Builds an aperture from element.<i>.<field> entries (values as written by
/// write_aperture_entries). Unknown fields and incomplete elements throw.
inline ApertureFunction read_aperture_entries(const std::map<std::string, std::string>& entries) {
  struct Partial {
    std::optional<Polarization> channel;
    std::optional<double> center, width, modulus, phase;
  };
  std::map<std::size_t, Partial> parts;
  for (const auto& [key, value] : entries) {
    const auto first = key.find('.');
    const auto second = key.find('.', first + 1);
    if (key.rfind("element.", 0) != 0 || second == std::string::npos)
      throw std::invalid_argument("aperture: unexpected key '" + key + "'");
    const std::string idx_text = key.substr(first + 1, second - first - 1);
    if (idx_text.empty() || !std::all_of(idx_text.begin(), idx_text.end(), ::isdigit))
      throw std::invalid_argument("aperture: bad element index in '" + key + "'");
    Partial& part = parts[std::stoul(idx_text)];
    const std::string field = key.substr(second + 1);
    if (field == "channel") {
      const std::string_view v = trim(value);
      if (v == "ee") part.channel = Polarization::e;
      else if (v == "oo") part.channel = Polarization::o;
      else throw std::invalid_argument("aperture: channel must be ee or oo, got '" + std::string(v) + "'");
    } else if (field == "center") {
      part.center = parse_quantity(value, Dimension::length);
    } else if (field == "width") {
      part.width = parse_quantity(value, Dimension::length);
    } else if (field == "modulus") {
      part.modulus = parse_quantity(value, Dimension::dimensionless);
    } else if (field == "phase") {
      part.phase = parse_quantity(value, Dimension::angle);
    } else {
      throw std::invalid_argument("aperture: unknown element field '" + field + "'");
    }
  }
  ApertureFunction ap;
  for (const auto& [idx, part] : parts) {
    if (!part.channel || !part.center || !part.width || !part.modulus || !part.phase)
      throw std::invalid_argument("aperture: element " + std::to_string(idx) + " is incomplete");
    std::complex<double> t = std::polar(*part.modulus, *part.phase);
    if (*part.phase == -std::numbers::pi / 2 && *part.modulus == 1.0) t = {0.0, -1.0};
    if (*part.phase == 0.0) t = {*part.modulus, 0.0};
    ap.channel(*part.channel, *part.channel).push_back({*part.center, *part.width, t});
  }
  ap.validate();
  return ap;
}

}  // namespace antibunch
