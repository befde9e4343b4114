#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "antibunch/amplitude.hpp"
#include "antibunch/aperture.hpp"
#include "antibunch/core_model.hpp"
#include "antibunch/parallel.hpp"

namespace antibunch {

/// Sampled fourth-order correlation G(x1, x2) on a square detector grid.
/// values[i * n + j] belongs to (axis[i], axis[j]); x1 runs along rows.
struct CorrelationGrid {
  std::vector<double> axis;
  std::vector<double> values;
  PhysicalSetup setup;

  std::size_t n() const noexcept { return axis.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * n() + j]; }
  double step() const { return (axis.back() - axis.front()) / static_cast<double>(n() - 1); }
  Window window() const { return {axis.front(), axis.back()}; }
  double mean() const {
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
};

/// Evenly spaced detector positions x_min + i (x_max - x_min) / (n - 1).
inline std::vector<double> grid_axis(const Window& window, std::size_t n) {
  window.validate();
  if (n < 3) throw std::invalid_argument("correlation grid needs at least 3 points per axis");
  std::vector<double> axis(n);
  const double h = window.width() / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) axis[i] = window.x_min + static_cast<double>(i) * h;
  return axis;
}

inline void normalize_to_unit_mean(CorrelationGrid& grid) {
  for (double v : grid.values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::runtime_error("correlation grid has a negative or non-finite value");
  const double mean = grid.mean();
  if (!(mean > 0.0)) throw std::runtime_error("correlation grid vanishes on the whole window");
  for (double& v : grid.values) v /= mean;
}

enum class AmplitudePath { closed_form, numeric };

struct QuantumGridOptions {
  AmplitudePath path = AmplitudePath::closed_form;
  ClosedFormTerms terms = ClosedFormTerms::full;          // closed form only
  std::optional<QuadratureSpec> quadrature;               // numeric only; default_quadrature otherwise
  DetectionKernel kernel = DetectionKernel::fraunhofer;   // numeric only
  unsigned threads = 1;
};

/// G(x1, x2) = ||Psi||^2 over the grid, rescaled to unit mean.
///
/// The closed-form path requires a birefringent double slit matching the
/// setup's slit separation (any retardance); it evaluates from x1 + x2 and
/// (i - j) h so that every constant-separation line sees bit-identical
/// separations.
inline CorrelationGrid g22_grid(const PhysicalSetup& setup, const ApertureFunction& ap, const Window& window,
                                std::size_t n, const QuantumGridOptions& options = {}) {
  setup.validate();
  ap.validate();
  CorrelationGrid grid;
  grid.axis = grid_axis(window, n);
  grid.setup = setup;
  grid.values.assign(n * n, 0.0);
  const double h = window.width() / static_cast<double>(n - 1);

  if (options.path == AmplitudePath::closed_form) {
    const auto form = as_birefringent_double_slit(ap);
    if (!form) throw std::invalid_argument("closed-form path needs a birefringent double slit aperture");
    if (std::abs(form->separation - setup.slit_separation) > 1e-12 * setup.slit_separation)
      throw std::invalid_argument("closed-form path: aperture slit separation differs from the setup");
    const ClosedFormOptions cf{form->retardance, options.terms};
    parallel_for(n, options.threads, [&](std::size_t i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double difference = (static_cast<double>(i) - static_cast<double>(j)) * h;
        const auto amp = detail::closed_form_sum_difference(grid.axis[i] + grid.axis[j], difference, setup, cf);
        grid.values[i * n + j] = coincidence_probability(amp);
      }
    });
  } else {
    const QuadratureSpec spec = options.quadrature.value_or(default_quadrature(setup, ap));
    const NumericAmplitude amplitude(setup, ap, spec, options.kernel);
    const auto amps = amplitude.evaluate_grid(grid.axis, grid.axis, options.threads);
    for (std::size_t i = 0; i < amps.size(); ++i) grid.values[i] = coincidence_probability(amps[i]);
  }
  normalize_to_unit_mean(grid);
  return grid;
}

/// Intensity-interferometer coincidence rate 1 + v cos[kd (x1 - x2) / z], 0 <= v <= 1/2.
inline double classical_coincidence(DetectorPair p, const PhysicalSetup& setup, double visibility) {
  if (!(visibility >= 0.0 && visibility <= 0.5))
    throw std::invalid_argument("classical visibility must lie in [0, 1/2]");
  return 1.0 + visibility * std::cos(setup.fringe_wavenumber() * (p.x1 - p.x2));
}

/// Classical single-count profile exp(-x^2 / 2 sigma^2), sigma = z / (k a), peak 1.
inline double classical_singles(double x, const PhysicalSetup& setup) {
  if (!(setup.slit_width > 0.0)) throw std::invalid_argument("classical singles need a finite slit width");
  const double sigma = setup.aperture_detector_distance / (setup.wavenumber() * setup.slit_width);
  return std::exp(-x * x / (2.0 * sigma * sigma));
}

/// Classical coincidence grid, rescaled to unit mean.
inline CorrelationGrid classical_grid(const PhysicalSetup& setup, const Window& window, std::size_t n,
                                      double visibility) {
  setup.validate();
  if (!(visibility >= 0.0 && visibility <= 0.5))
    throw std::invalid_argument("classical visibility must lie in [0, 1/2]");
  CorrelationGrid grid;
  grid.axis = grid_axis(window, n);
  grid.setup = setup;
  grid.values.resize(n * n);
  const double h = window.width() / static_cast<double>(n - 1);
  const double kappa = setup.fringe_wavenumber();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      grid.values[i * n + j] =
          1.0 + visibility * std::cos(kappa * (static_cast<double>(i) - static_cast<double>(j)) * h);
  normalize_to_unit_mean(grid);
  return grid;
}

/// Values on the line i - j = offset (constant detector separation).
inline std::vector<double> separation_line(const CorrelationGrid& grid, std::ptrdiff_t offset) {
  const auto n = static_cast<std::ptrdiff_t>(grid.n());
  std::vector<double> line;
  for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, offset); i < std::min(n, n + offset); ++i)
    line.push_back(grid.at(static_cast<std::size_t>(i), static_cast<std::size_t>(i - offset)));
  return line;
}

inline double line_mean(const std::vector<double>& line) {
  return std::accumulate(line.begin(), line.end(), 0.0) / static_cast<double>(line.size());
}

struct WitnessReport {
  double g_zero = 0.0;         // mean of G on the diagonal
  double g_max_offdiag = 0.0;  // largest mean of G along a line of constant separation != 0
  double delta_at_max = 0.0;   // that separation x1 - x2 (m)
  bool violated = false;
  double margin = 0.0;         // (g_max_offdiag - g_zero) / grid mean
};

/// Tests G(delta) <= G(0) on the grid. G at each separation is the mean along
/// its constant-separation line; the reference G(0) is the diagonal mean. Ties
/// (within 1e-12 relative) resolve to the smallest |delta|, positive first.
inline WitnessReport schwarz_witness(const CorrelationGrid& grid, double tolerance = 1e-9) {
  if (grid.n() < 2) throw std::invalid_argument("witness needs a grid");
  const double mean = grid.mean();
  if (!(mean > 0.0)) throw std::invalid_argument("witness needs a grid with positive mean");
  const auto n = static_cast<std::ptrdiff_t>(grid.n());
  WitnessReport report;
  report.g_zero = line_mean(separation_line(grid, 0));
  bool first = true;
  for (std::ptrdiff_t m = 1; m < n; ++m) {
    for (std::ptrdiff_t offset : {m, -m}) {
      const double g = line_mean(separation_line(grid, offset));
      if (first || g > report.g_max_offdiag * (1.0 + 1e-12)) {
        report.g_max_offdiag = g;
        report.delta_at_max = static_cast<double>(offset) * grid.step();
        first = false;
      }
    }
  }
  // A difference at rounding level is a tie, not a violation.
  const double gap = report.g_max_offdiag - report.g_zero;
  const double scale = std::max(std::abs(report.g_max_offdiag), std::abs(report.g_zero));
  report.margin = std::abs(gap) <= 1e-12 * scale ? 0.0 : gap / mean;
  report.violated = report.margin > tolerance;
  return report;
}

/// Largest (max - min) / mean along lines of constant x1 - x2, over lines whose
/// mean exceeds floor * grid mean. Zero for a perfectly homogeneous grid.
inline double homogeneity_check(const CorrelationGrid& grid, double floor = 1e-6) {
  const double threshold = floor * grid.mean();
  const auto n = static_cast<std::ptrdiff_t>(grid.n());
  double worst = 0.0;
  for (std::ptrdiff_t offset = -(n - 1); offset < n; ++offset) {
    const auto line = separation_line(grid, offset);
    const double m = line_mean(line);
    if (!(m > threshold)) continue;
    const auto [lo, hi] = std::minmax_element(line.begin(), line.end());
    worst = std::max(worst, (*hi - *lo) / m);
  }
  return worst;
}

/// Largest |G - G^T| relative to the largest entry.
inline double transpose_asymmetry(const CorrelationGrid& grid) {
  double worst = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < grid.n(); ++i) {
    for (std::size_t j = 0; j < grid.n(); ++j) {
      worst = std::max(worst, std::abs(grid.at(i, j) - grid.at(j, i)));
      scale = std::max(scale, std::abs(grid.at(i, j)));
    }
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

/// Grid values along a line of constant x1 + x2 (index sum i + j), ordered by x1 - x2.
struct FringeSlice {
  double sum = 0.0;
  std::vector<double> delta;
  std::vector<double> g22;
};

inline FringeSlice fringe_slice(const CorrelationGrid& grid, std::size_t index_sum) {
  const std::size_t n = grid.n();
  if (index_sum > 2 * (n - 1)) throw std::out_of_range("fringe_slice: index sum outside the grid");
  FringeSlice slice;
  const double h = grid.step();
  const std::size_t j_lo = index_sum >= n - 1 ? index_sum - (n - 1) : 0;
  const std::size_t j_hi = std::min(index_sum, n - 1);
  // Walking j downward walks x1 - x2 upward.
  for (std::size_t j = j_hi + 1; j-- > j_lo;) {
    const std::size_t i = index_sum - j;
    slice.delta.push_back((static_cast<double>(i) - static_cast<double>(j)) * h);
    slice.g22.push_back(grid.at(i, j));
  }
  slice.sum = grid.axis[index_sum - j_hi] + grid.axis[j_hi];
  return slice;
}

}  // namespace antibunch
