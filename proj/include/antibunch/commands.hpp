#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "antibunch/config.hpp"
#include "antibunch/correlation.hpp"
#include "antibunch/io.hpp"
#include "antibunch/montecarlo.hpp"

namespace antibunch {

enum ExitCode : int { exit_ok = 0, exit_error = 1, exit_violated = 10, exit_not_violated = 11 };

/// Quantum or classical coincidence grid, as selected by the config.
inline CorrelationGrid build_grid(const RunConfig& c) {
  if (const auto* classical = std::get_if<ClassicalSource>(&c.source))
    return classical_grid(c.setup, c.window, c.points, classical->visibility);
  QuantumGridOptions options;
  options.path = c.path;
  options.terms = c.terms;
  options.quadrature = c.quadrature;
  options.kernel = c.kernel;
  options.threads = c.threads;
  return g22_grid(c.setup, c.aperture, c.window, c.points, options);
}

/// Index sums of the constant-(x1 + x2) slices: the centre line and two
/// neighbours of the same parity, so all three share the same separations.
inline std::vector<std::size_t> slice_index_sums(std::size_t n) {
  const std::size_t centre = n - 1;
  const std::size_t shift = 2 * (n / 8);
  if (shift == 0) return {centre};
  return {centre - shift, centre, centre + shift};
}

inline void write_fringe_outputs(const CorrelationGrid& grid, const std::filesystem::path& dir) {
  atomic_write_file(dir / "grid.csv", render(write_grid_csv, grid));
  atomic_write_file(dir / "fringe.csv", render(write_fringe_csv, fringe_slice(grid, grid.n() - 1)));
  std::vector<FringeSlice> slices;
  for (std::size_t s : slice_index_sums(grid.n())) slices.push_back(fringe_slice(grid, s));
  atomic_write_file(dir / "fringe_slices.csv", render(write_fringe_slices_csv, slices));
}

inline void warn_paraxial(const RunConfig& c) {
  if (c.paraxial_warning)
    std::cerr << "warning: detection window exceeds the paraxial bound (|x| <= 0.05 z)\n";
}

inline int cmd_fringe(const RunConfig& c) {
  warn_paraxial(c);
  write_fringe_outputs(build_grid(c), c.output_dir);
  return exit_ok;
}

inline int cmd_witness(const RunConfig& c) {
  warn_paraxial(c);
  const auto grid = build_grid(c);
  const auto report = schwarz_witness(grid, c.witness_tolerance);
  atomic_write_file(c.output_dir / "witness.txt", render(write_witness_report, report));
  return report.violated ? exit_violated : exit_not_violated;
}

inline int cmd_montecarlo(const RunConfig& c) {
  const auto sample = sample_coincidences(c.setup, c.source, c.window, c.mc_events, c.seed, c.threads);
  const auto hist = histogram_delta(sample, c.mc_bins);
  const auto dip = estimate_g2_dip(hist);
  atomic_write_file(c.output_dir / "events.csv", render(write_events_csv, sample));
  atomic_write_file(c.output_dir / "histogram.csv", render(write_histogram_csv, hist));
  atomic_write_file(c.output_dir / "dip.txt", render(write_dip_report, dip, sample));
  return exit_ok;
}

/// Directory name for the i-th sweep value.
inline std::string sweep_directory(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sweep_%03zu", index);
  return buf;
}

/// Runs fringe and witness once per value of `key` (section.key), each into
/// its own sweep_NNN directory, plus summary.csv (value, margin, homogeneity,
/// violated) in the output directory. Every value is validated before any run.
inline int cmd_sweep(const RawConfig& base, const std::string& key, const std::vector<std::string>& values,
                     const std::filesystem::path& output_dir) {
  if (values.empty()) throw ConfigError(base.source, 0, "sweep needs at least one value");
  std::vector<RunConfig> runs;
  for (const auto& value : values) {
    RawConfig raw = base;
    set_override(raw, key, value);
    RunConfig c = parse_run_config(raw);
    c.output_dir = output_dir;
    runs.push_back(std::move(c));
  }
  std::ostringstream summary;
  summary << "value,margin,homogeneity,violated\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    RunConfig& c = runs[i];
    warn_paraxial(c);
    const auto dir = output_dir / sweep_directory(i);
    const auto grid = build_grid(c);
    write_fringe_outputs(grid, dir);
    const auto report = schwarz_witness(grid, c.witness_tolerance);
    atomic_write_file(dir / "witness.txt", render(write_witness_report, report));
    summary << values[i] << ',' << format_double(report.margin) << ','
            << format_double(homogeneity_check(grid, c.homogeneity_floor)) << ','
            << (report.violated ? "true" : "false") << '\n';
  }
  atomic_write_file(output_dir / "summary.csv", summary.str());
  return exit_ok;
}

}  // namespace antibunch
