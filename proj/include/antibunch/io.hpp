#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "antibunch/correlation.hpp"
#include "antibunch/montecarlo.hpp"
#include "antibunch/units.hpp"

namespace antibunch {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.emplace_back(trim(field));
  return fields;
}

inline void expect_header(std::istream& is, const std::string& header) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != header)
    throw std::runtime_error("csv: expected header '" + header + "'");
}

}  // namespace detail

/// Writes `content` next to `path` and renames it into place.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Grid CSV: x1_m,x2_m,g22 with x1 as the slow index.

inline void write_grid_csv(std::ostream& os, const CorrelationGrid& grid) {
  os << "x1_m,x2_m,g22\n";
  for (std::size_t i = 0; i < grid.n(); ++i)
    for (std::size_t j = 0; j < grid.n(); ++j)
      os << format_double(grid.axis[i]) << ',' << format_double(grid.axis[j]) << ','
         << format_double(grid.at(i, j)) << '\n';
}

/// Reads a grid written by write_grid_csv. The setup snapshot is not part of
/// the file and is left at its defaults.
inline CorrelationGrid read_grid_csv(std::istream& is) {
  detail::expect_header(is, "x1_m,x2_m,g22");
  std::vector<double> x1, x2, g;
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 3) throw std::runtime_error("grid csv: expected 3 columns in '" + line + "'");
    x1.push_back(parse_double(f[0]));
    x2.push_back(parse_double(f[1]));
    g.push_back(parse_double(f[2]));
  }
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(g.size()))));
  if (n < 2 || n * n != g.size()) throw std::runtime_error("grid csv: row count is not a square");
  CorrelationGrid grid;
  grid.axis.assign(x2.begin(), x2.begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (x1[i * n + j] != grid.axis[i] || x2[i * n + j] != grid.axis[j])
        throw std::runtime_error("grid csv: rows are not a square grid in x1-major order");
  grid.values = std::move(g);
  return grid;
}

inline void write_events_csv(std::ostream& os, const EventSample& sample) {
  os << "x1_m,x2_m\n";
  for (const auto& e : sample.events) os << format_double(e.x1) << ',' << format_double(e.x2) << '\n';
}

inline std::vector<CoincidenceEvent> read_events_csv(std::istream& is) {
  detail::expect_header(is, "x1_m,x2_m");
  std::vector<CoincidenceEvent> events;
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 2) throw std::runtime_error("events csv: expected 2 columns in '" + line + "'");
    events.push_back({parse_double(f[0]), parse_double(f[1])});
  }
  return events;
}

inline void write_histogram_csv(std::ostream& os, const CoincidenceHistogram& hist) {
  os << "delta_lo_m,delta_hi_m,count\n";
  for (std::size_t b = 0; b < hist.bins(); ++b)
    os << format_double(hist.edges[b]) << ',' << format_double(hist.edges[b + 1]) << ',' << hist.counts[b] << '\n';
}

inline void write_fringe_csv(std::ostream& os, const FringeSlice& slice) {
  os << "delta_m,g22\n";
  for (std::size_t i = 0; i < slice.delta.size(); ++i)
    os << format_double(slice.delta[i]) << ',' << format_double(slice.g22[i]) << '\n';
}

/// Several constant-(x1 + x2) slices in one long-format table.
inline void write_fringe_slices_csv(std::ostream& os, const std::vector<FringeSlice>& slices) {
  os << "sum_m,delta_m,g22\n";
  for (const auto& slice : slices)
    for (std::size_t i = 0; i < slice.delta.size(); ++i)
      os << format_double(slice.sum) << ',' << format_double(slice.delta[i]) << ',' << format_double(slice.g22[i])
         << '\n';
}

inline void write_witness_report(std::ostream& os, const WitnessReport& r) {
  os << "g_zero = " << format_double(r.g_zero) << '\n';
  os << "g_max_offdiag = " << format_double(r.g_max_offdiag) << '\n';
  os << "delta_at_max_m = " << format_double(r.delta_at_max) << '\n';
  os << "violated = " << (r.violated ? "true" : "false") << '\n';
  os << "margin = " << format_double(r.margin) << '\n';
}

inline WitnessReport read_witness_report(std::istream& is) {
  WitnessReport r;
  std::string line;
  int seen = 0;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw std::runtime_error("witness report: malformed line '" + line + "'");
    const std::string key(trim(std::string_view(line).substr(0, eq)));
    const std::string value(trim(std::string_view(line).substr(eq + 1)));
    if (key == "g_zero") r.g_zero = parse_double(value);
    else if (key == "g_max_offdiag") r.g_max_offdiag = parse_double(value);
    else if (key == "delta_at_max_m") r.delta_at_max = parse_double(value);
    else if (key == "margin") r.margin = parse_double(value);
    else if (key == "violated") {
      if (value != "true" && value != "false") throw std::runtime_error("witness report: violated must be true/false");
      r.violated = value == "true";
    } else {
      throw std::runtime_error("witness report: unknown key '" + key + "'");
    }
    ++seen;
  }
  if (seen != 5) throw std::runtime_error("witness report: expected 5 keys");
  return r;
}

inline void write_dip_report(std::ostream& os, const DipEstimate& dip, const EventSample& sample) {
  os << "dip = " << format_double(dip.value) << '\n';
  os << "dip_stderr = " << format_double(dip.standard_error) << '\n';
  os << "central_lo_m = " << format_double(dip.delta_lo) << '\n';
  os << "central_hi_m = " << format_double(dip.delta_hi) << '\n';
  os << "events = " << sample.events.size() << '\n';
  os << "proposals = " << sample.proposals << '\n';
  os << "acceptance = " << format_double(sample.acceptance_rate()) << '\n';
}

template <class Writer, class... Args>
std::string render(Writer&& writer, const Args&... args) {
  std::ostringstream os;
  writer(os, args...);
  return os.str();
}

}  // namespace antibunch
