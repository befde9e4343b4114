#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <numbers>
#include <stdexcept>
#include <string>

#include "antibunch/numerics.hpp"

namespace antibunch {

using namespace std::complex_literals;

enum class Polarization { e, o };

inline char polarization_symbol(Polarization p) { return p == Polarization::e ? 'e' : 'o'; }

/// Transverse wave vector (rad/m) or transverse position (m), depending on use.
struct TransverseVector {
  double x = 0.0;
  double y = 0.0;

  double norm2() const noexcept { return x * x + y * y; }
  friend TransverseVector operator+(TransverseVector a, TransverseVector b) { return {a.x + b.x, a.y + b.y}; }
  friend TransverseVector operator-(TransverseVector a, TransverseVector b) { return {a.x - b.x, a.y - b.y}; }
};

/// Geometry and optics of the collinear, degenerate type-II source followed by
/// a double slit. SI units throughout.
///
/// The down-converted wavenumber is always half the pump wavenumber; it is
/// derived rather than stored so that the two cannot disagree.
struct PhysicalSetup {
  double pump_wavelength = 351e-9;
  double crystal_length = 1e-3;             // L
  double crystal_aperture_distance = 1e-3;  // s
  double aperture_detector_distance = 1.0;  // z
  double slit_separation = 200e-6;          // d
  double slit_width = 0.0;                  // a, 0 for ideal delta slits
  double pump_waist = 20e-6;                // w0, waist located on the aperture plane

  double pump_wavenumber() const noexcept { return 2.0 * std::numbers::pi / pump_wavelength; }
  double wavenumber() const noexcept { return 0.5 * pump_wavenumber(); }
  double downconverted_wavelength() const noexcept { return 2.0 * pump_wavelength; }

  /// k d / z: phase per metre of detector separation in the fourth-order fringe.
  double fringe_wavenumber() const noexcept {
    return wavenumber() * slit_separation / aperture_detector_distance;
  }
  /// Detector separation of the first coincidence maximum, pi z / (k d).
  double fringe_half_period() const noexcept { return std::numbers::pi / fringe_wavenumber(); }
  /// Weight of the x1 + x2 term relative to the x1 - x2 term, exp(-(d / 2 w0)^2).
  double sum_term_weight() const noexcept {
    const double r = slit_separation / (2.0 * pump_waist);
    return std::exp(-r * r);
  }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
    };
    auto non_negative = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be non-negative");
    };
    positive(pump_wavelength, "pump_wavelength");
    positive(crystal_length, "crystal_length");
    non_negative(crystal_aperture_distance, "crystal_aperture_distance");
    positive(aperture_detector_distance, "aperture_detector_distance");
    positive(slit_separation, "slit_separation");
    non_negative(slit_width, "slit_width");
    positive(pump_waist, "pump_waist");
  }
};

/// Detection window shared by both detectors, [x_min, x_max].
struct Window {
  double x_min = -1e-3;
  double x_max = 1e-3;

  double width() const noexcept { return x_max - x_min; }
  double center() const noexcept { return 0.5 * (x_min + x_max); }
  double max_abs() const noexcept { return std::max(std::abs(x_min), std::abs(x_max)); }

  void validate() const {
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min))
      throw std::invalid_argument("detection window must satisfy x_min < x_max");
  }
};

/// True when every detector position stays within `max_ratio` * z of the axis.
inline bool paraxial_ok(const PhysicalSetup& setup, const Window& window, double max_ratio = 0.05) {
  return window.max_abs() <= max_ratio * setup.aperture_detector_distance;
}

/// Bare gaussian pump spectrum exp(-w0^2 |q|^2 / 4), real and peaked at q = 0.
struct GaussianPump {
  std::complex<double> operator()(TransverseVector q, const PhysicalSetup& setup) const {
    const double w0 = setup.pump_waist;
    return std::exp(-0.25 * w0 * w0 * q.norm2());
  }
};

/// Pump spectrum at the crystal for a gaussian beam whose waist sits on the
/// aperture plane. Free propagation over s multiplies this by
/// exp[i s (K - q^2 / 2K)], which leaves the real gaussian on the aperture.
struct FocusedOnAperturePump {
  std::complex<double> operator()(TransverseVector q, const PhysicalSetup& setup) const {
    const double big_k = setup.pump_wavenumber();
    const double s = setup.crystal_aperture_distance;
    const double phase = -s * (big_k - q.norm2() / (2.0 * big_k));
    return GaussianPump{}(q, setup) * std::polar(1.0, phase);
  }
};

template <class P>
concept PumpSpectrum = std::invocable<const P&, TransverseVector, const PhysicalSetup&> &&
                       std::convertible_to<std::invoke_result_t<const P&, TransverseVector, const PhysicalSetup&>,
                                           std::complex<double>>;

inline std::complex<double> pump_angular_spectrum(TransverseVector q, const PhysicalSetup& setup) {
  return FocusedOnAperturePump{}(q, setup);
}

/// Two-photon angular spectrum at the crystal,
/// sqrt(2L / pi^2 K) v(q1 + q2) sinc(L |q1 - q2|^2 / 4K).
template <PumpSpectrum Pump = GaussianPump>
std::complex<double> biphoton_angular_spectrum(TransverseVector q1, TransverseVector q2, const PhysicalSetup& setup,
                                               const Pump& pump = {}) {
  const double big_k = setup.pump_wavenumber();
  const double length = setup.crystal_length;
  const double prefactor = std::sqrt(2.0 * length / (std::numbers::pi * std::numbers::pi * big_k));
  const double mismatch = length * (q1 - q2).norm2() / (4.0 * big_k);
  return prefactor * pump(q1 + q2, setup) * sinc(mismatch);
}

/// Crystal-to-aperture phase for the degenerate pair, global exp(iKs) dropped.
inline std::complex<double> propagate_to_aperture(TransverseVector q1, TransverseVector q2,
                                                  const PhysicalSetup& setup) {
  const double big_k = setup.pump_wavenumber();
  const double s = setup.crystal_aperture_distance;
  const double phase = -s / (2.0 * big_k) * ((q1 + q2).norm2() + (q1 - q2).norm2());
  return std::polar(1.0, phase);
}

/// Angular spectrum of the pair on the aperture plane (pump waist on that plane).
inline std::complex<double> aperture_plane_spectrum(TransverseVector q1, TransverseVector q2,
                                                    const PhysicalSetup& setup) {
  return biphoton_angular_spectrum(q1, q2, setup, FocusedOnAperturePump{}) * propagate_to_aperture(q1, q2, setup);
}

}  // namespace antibunch
