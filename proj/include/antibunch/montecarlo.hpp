#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include "antibunch/core_model.hpp"
#include "antibunch/parallel.hpp"

namespace antibunch {

/// Focused-pump two-photon source: coincidence density 1 - cos[kd (x1 - x2) / z].
struct QuantumSource {};

/// Intensity-correlated classical source: 1 + v cos[kd (x1 - x2) / z].
struct ClassicalSource {
  double visibility = 0.5;
};

using Source = std::variant<QuantumSource, ClassicalSource>;

inline void validate_source(const Source& source) {
  if (const auto* c = std::get_if<ClassicalSource>(&source)) {
    if (!(c->visibility >= 0.0 && c->visibility <= 0.5))
      throw std::invalid_argument("classical visibility must lie in [0, 1/2]");
  }
}

/// Coefficient c of the density 1 + c cos(kappa delta).
inline double fringe_coefficient(const Source& source) {
  if (std::holds_alternative<QuantumSource>(source)) return -1.0;
  return std::get<ClassicalSource>(source).visibility;
}

inline double source_density(const Source& source, double kappa, double delta) {
  return 1.0 + fringe_coefficient(source) * std::cos(kappa * delta);
}

/// Maximum of source_density, used as the rejection envelope.
inline double source_envelope(const Source& source) { return 1.0 + std::abs(fringe_coefficient(source)); }

struct CoincidenceEvent {
  double x1 = 0.0;
  double x2 = 0.0;
};

struct EventSample {
  Window window;
  std::vector<CoincidenceEvent> events;
  std::uint64_t proposals = 0;

  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(events.size()) / static_cast<double>(proposals);
  }
};

/// Events per RNG substream. Fixed, so the stream does not depend on the thread count.
inline constexpr std::size_t kShardSize = std::size_t{1} << 16;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t shard_seed(std::uint64_t seed, std::uint64_t shard) {
  return splitmix64(splitmix64(seed) ^ splitmix64(shard + 0x632BE59BD9B4E019ull));
}

// 53 random bits mapped to [0, 1); bit-identical on every platform.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Independent (x1, x2) draws from the source density restricted to the
/// square window, by rejection against the constant envelope. Deterministic
/// for a given seed regardless of `threads`.
inline EventSample sample_coincidences(const PhysicalSetup& setup, const Source& source, const Window& window,
                                       std::size_t n_events, std::uint64_t seed, unsigned threads = 1) {
  setup.validate();
  validate_source(source);
  if (!(window.width() > 0.0) || !std::isfinite(window.width()))
    throw std::invalid_argument("sample_coincidences: degenerate detection window");
  if (n_events < 1) throw std::invalid_argument("sample_coincidences: need at least one event");

  const double kappa = setup.fringe_wavenumber();
  const double envelope = source_envelope(source);
  const double width = window.width();
  const std::size_t shards = (n_events + kShardSize - 1) / kShardSize;

  EventSample sample;
  sample.window = window;
  sample.events.resize(n_events);
  std::vector<std::uint64_t> proposals(shards, 0);

  parallel_for(shards, threads, [&](std::size_t shard) {
    std::mt19937_64 rng(detail::shard_seed(seed, shard));
    const std::size_t begin = shard * kShardSize;
    const std::size_t end = std::min(n_events, begin + kShardSize);
    std::uint64_t tries = 0;
    for (std::size_t i = begin; i < end;) {
      const double x1 = window.x_min + width * detail::uniform01(rng);
      const double x2 = window.x_min + width * detail::uniform01(rng);
      const double u = envelope * detail::uniform01(rng);
      ++tries;
      if (u < source_density(source, kappa, x1 - x2)) sample.events[i++] = {x1, x2};
    }
    proposals[shard] = tries;
  });
  for (std::uint64_t p : proposals) sample.proposals += p;
  return sample;
}

/// Mean of the source density over the square window divided by the envelope.
inline double expected_acceptance(const PhysicalSetup& setup, const Source& source, const Window& window) {
  const double kw = setup.fringe_wavenumber() * window.width();
  // E[cos(kappa (x1 - x2))] for x1, x2 uniform on the window.
  const double mean_cos = kw == 0.0 ? 1.0 : 2.0 * (1.0 - std::cos(kw)) / (kw * kw);
  return (1.0 + fringe_coefficient(source) * mean_cos) / source_envelope(source);
}

/// Counts of x1 - x2 in equal bins over [-W, W], W the window width.
struct CoincidenceHistogram {
  std::vector<double> edges;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  double span = 0.0;  // W

  std::size_t bins() const noexcept { return counts.size(); }

  std::size_t bin_of(double delta) const {
    const double position = (delta + span) / (2.0 * span) * static_cast<double>(bins());
    const double clamped = std::clamp(std::floor(position), 0.0, static_cast<double>(bins() - 1));
    return static_cast<std::size_t>(clamped);
  }
};

inline CoincidenceHistogram histogram_delta(const EventSample& sample, std::size_t bins) {
  if (bins < 2) throw std::invalid_argument("histogram_delta: need at least 2 bins");
  CoincidenceHistogram hist;
  hist.span = sample.window.width();
  hist.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    const double offset = 2.0 * static_cast<double>(b) - static_cast<double>(bins);
    hist.edges[b] = hist.span * offset / static_cast<double>(bins);
  }
  hist.counts.assign(bins, 0);
  for (const auto& e : sample.events) ++hist.counts[hist.bin_of(e.x1 - e.x2)];
  hist.total = sample.events.size();
  return hist;
}

namespace detail {

// Antiderivative of (W - |t|)(1 + c cos(kappa t)), zero at t = 0.
inline double triangle_weighted_primitive(double t, double span, double c, double kappa) {
  const double u = std::abs(t);
  double h = span * u - 0.5 * u * u;
  if (c != 0.0)
    h += c * ((span - u) * std::sin(kappa * u) / kappa + (1.0 - std::cos(kappa * u)) / (kappa * kappa));
  return t < 0.0 ? -h : h;
}

}  // namespace detail

/// Exact bin probabilities of x1 - x2 for the source density seen through the
/// square window: the density times the triangular acceptance W - |delta|.
inline std::vector<double> delta_reference(const PhysicalSetup& setup, const Source& source, double span,
                                           const std::vector<double>& edges) {
  validate_source(source);
  const double c = fringe_coefficient(source);
  const double kappa = setup.fringe_wavenumber();
  const double norm = 2.0 * detail::triangle_weighted_primitive(span, span, c, kappa);
  std::vector<double> p(edges.size() - 1);
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    const double lo = std::clamp(edges[b], -span, span);
    const double hi = std::clamp(edges[b + 1], -span, span);
    p[b] = (detail::triangle_weighted_primitive(hi, span, c, kappa) -
            detail::triangle_weighted_primitive(lo, span, c, kappa)) /
           norm;
  }
  return p;
}

/// Sum over bins of |observed fraction - reference probability|.
inline double l1_distance(const CoincidenceHistogram& hist, const std::vector<double>& reference) {
  if (reference.size() != hist.bins()) throw std::invalid_argument("l1_distance: bin count mismatch");
  if (hist.total == 0) throw std::invalid_argument("l1_distance: empty histogram");
  double sum = 0.0;
  for (std::size_t b = 0; b < hist.bins(); ++b)
    sum += std::abs(static_cast<double>(hist.counts[b]) / static_cast<double>(hist.total) - reference[b]);
  return sum;
}

/// Zero-separation coincidence level relative to a flat source with the same
/// number of events, so a flat source gives 1. The central region is the bin
/// containing 0 for an odd bin count and the two bins meeting at 0 otherwise.
struct DipEstimate {
  double value = 0.0;
  double standard_error = 0.0;  // Poisson
  double delta_lo = 0.0;
  double delta_hi = 0.0;
};

inline DipEstimate estimate_g2_dip(const CoincidenceHistogram& hist) {
  if (hist.total == 0 || hist.bins() < 2) throw std::invalid_argument("estimate_g2_dip: empty histogram");
  const std::size_t b = hist.bins();
  const std::size_t first = b % 2 == 1 ? b / 2 : b / 2 - 1;
  const std::size_t last = b / 2;
  std::uint64_t count = 0;
  for (std::size_t i = first; i <= last; ++i) count += hist.counts[i];
  DipEstimate dip;
  dip.delta_lo = hist.edges[first];
  dip.delta_hi = hist.edges[last + 1];
  const double flat_fraction = (detail::triangle_weighted_primitive(dip.delta_hi, hist.span, 0.0, 1.0) -
                                detail::triangle_weighted_primitive(dip.delta_lo, hist.span, 0.0, 1.0)) /
                               (hist.span * hist.span);
  const double total = static_cast<double>(hist.total);
  dip.value = static_cast<double>(count) / total / flat_fraction;
  dip.standard_error = std::sqrt(static_cast<double>(count)) / total / flat_fraction;
  return dip;
}

}  // namespace antibunch
