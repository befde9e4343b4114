#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "antibunch.hpp"

using namespace antibunch;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("antibunch_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RawConfig raw_from(const std::string& text) {
  std::istringstream is(text);
  return parse_raw_config(is, "test.conf");
}

RawConfig sample_config(const std::string& name) {
  return load_raw_config(fs::path(ANTIBUNCH_CONFIGS) / name);
}

RunConfig run_config(const std::string& name, const fs::path& out) {
  auto raw = sample_config(name);
  set_override(raw, "output.directory", out.string());
  return parse_run_config(raw);
}

std::size_t error_line(const std::string& text) {
  try {
    parse_run_config(raw_from(text));
  } catch (const ConfigError& e) {
    return e.line();
  }
  return static_cast<std::size_t>(-1);
}

// delta -> g22 for one slice of the long-format slices file.
std::map<double, double> slice_from_file(const fs::path& file, std::size_t which) {
  std::ifstream is(file);
  std::string line;
  std::getline(is, line);
  std::map<double, std::map<double, double>> by_sum;
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    by_sum[parse_double(a)][parse_double(b)] = parse_double(c);
  }
  auto it = by_sum.begin();
  std::advance(it, static_cast<long>(which));
  return it->second;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ANTIBUNCH_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, SampleConfigsParse) {
  const auto q = parse_run_config(sample_config("quantum.conf"));
  EXPECT_DOUBLE_EQ(q.setup.pump_wavelength, 351e-9);
  EXPECT_DOUBLE_EQ(q.setup.pump_waist, 20e-6);
  EXPECT_EQ(q.points, 61u);
  EXPECT_TRUE(std::holds_alternative<QuantumSource>(q.source));
  ASSERT_TRUE(as_birefringent_double_slit(q.aperture).has_value());
  EXPECT_DOUBLE_EQ(as_birefringent_double_slit(q.aperture)->separation, 200e-6);
  EXPECT_EQ(as_birefringent_double_slit(q.aperture)->retardance, std::numbers::pi / 2);
  const auto c = parse_run_config(sample_config("classical.conf"));
  EXPECT_EQ(std::get<ClassicalSource>(c.source).visibility, 0.5);
  EXPECT_NO_THROW(parse_run_config(sample_config("numeric_finite_slits.conf")));
}

TEST(Config, ErrorsCarryTheirLineNumber) {
  EXPECT_EQ(error_line("[setup]\npump_waist = 20\n"), 2u);
  EXPECT_EQ(error_line("[setup]\n\n# note\nmystery = 3 mm\n"), 4u);
  EXPECT_EQ(error_line("[setup]\npump_waist = 20 um\n[colours]\n"), 3u);
  EXPECT_EQ(error_line("[setup]\npump_waist = 20 um\npump_waist = 30 um\n"), 3u);
  EXPECT_EQ(error_line("pump_waist = 20 um\n"), 1u);
  EXPECT_EQ(error_line("[source]\ntype = classical\nvisibility = 0.75\n"), 3u);
  EXPECT_EQ(error_line("[source]\ntype = quantum\nvisibility = 0.25\n"), 3u);
  EXPECT_EQ(error_line("[setup]\npump_wavelength = 351 nm\ndownconverted_wavelength = 800 nm\n"), 3u);
  EXPECT_EQ(error_line("[detection]\npoints = 2\n"), 2u);
  EXPECT_EQ(error_line("[detection]\npath = magic\n"), 2u);
  EXPECT_EQ(error_line("[setup]\nslit_width = 300 um\n"), 2u);
  EXPECT_EQ(error_line("[montecarlo]\nevents = -4\n"), 2u);
}

TEST(Config, ExplicitElementsAperture) {
  std::ostringstream os;
  os << "[aperture]\ntype = elements\n";
  write_aperture_entries(os, birefringent_double_slit(200e-6, 0.0));
  os << "[detection]\npath = numeric\n";
  const auto c = parse_run_config(raw_from(os.str()));
  EXPECT_EQ(c.aperture, birefringent_double_slit(200e-6, 0.0));
  EXPECT_EQ(c.path, AmplitudePath::numeric);
}

TEST(Config, OverridesReplaceFileValues) {
  auto raw = sample_config("quantum.conf");
  set_override(raw, "setup.pump_waist", "200 um");
  set_override(raw, "montecarlo.seed", "17");
  const auto c = parse_run_config(raw);
  EXPECT_DOUBLE_EQ(c.setup.pump_waist, 200e-6);
  EXPECT_EQ(c.seed, 17u);
  EXPECT_THROW(set_override(raw, "nosection", "1"), ConfigError);
  EXPECT_THROW(set_override(raw, "colours.red", "1"), ConfigError);
}

TEST(Io, GridCsvRoundTripsExactly) {
  const PhysicalSetup s;
  const auto grid = g22_grid(s, birefringent_double_slit(s.slit_separation, 0.0), {-4e-3, 3.3e-3}, 17);
  const std::string text = render(write_grid_csv, grid);
  std::istringstream is(text);
  const auto back = read_grid_csv(is);
  EXPECT_EQ(back.axis, grid.axis);
  EXPECT_EQ(back.values, grid.values);
  EXPECT_EQ(render(write_grid_csv, back), text);
}

TEST(Io, EventsAndWitnessRoundTrip) {
  const PhysicalSetup s;
  const auto sample = sample_coincidences(s, QuantumSource{}, {-5e-3, 5e-3}, 500, 2);
  std::istringstream is(render(write_events_csv, sample));
  const auto events = read_events_csv(is);
  ASSERT_EQ(events.size(), sample.events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(events[i].x1, sample.events[i].x1);
    EXPECT_EQ(events[i].x2, sample.events[i].x2);
  }
  const WitnessReport r{1e-22, 2.0005, 1.755e-3, true, 2.0005};
  std::istringstream ws(render(write_witness_report, r));
  const auto back = read_witness_report(ws);
  EXPECT_EQ(back.g_zero, r.g_zero);
  EXPECT_EQ(back.g_max_offdiag, r.g_max_offdiag);
  EXPECT_EQ(back.delta_at_max, r.delta_at_max);
  EXPECT_EQ(back.violated, r.violated);
  EXPECT_EQ(back.margin, r.margin);
}

TEST(CmdFringe, QuantumMinimumAndClassicalMaximumAtZeroSeparation) {
  for (const auto& [name, want_min] : {std::pair{"quantum.conf", true}, std::pair{"classical.conf", false}}) {
    const auto dir = scratch_dir(std::string("fringe_") + name);
    EXPECT_EQ(cmd_fringe(run_config(name, dir)), exit_ok);
    std::ifstream is(dir / "fringe.csv");
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "delta_m,g22");
    double at_zero = NAN, lo = INFINITY, hi = -INFINITY;
    while (std::getline(is, line)) {
      const double delta = parse_double(line.substr(0, line.find(',')));
      const double g = parse_double(line.substr(line.find(',') + 1));
      if (delta == 0.0) at_zero = g;
      lo = std::min(lo, g);
      hi = std::max(hi, g);
    }
    ASSERT_FALSE(std::isnan(at_zero)) << name;
    if (want_min) EXPECT_LE(at_zero, lo + 1e-12 * hi) << name;
    else EXPECT_GE(at_zero, hi * (1 - 1e-12)) << name;
    EXPECT_GT(hi - lo, 0.5) << name;
    EXPECT_TRUE(fs::exists(dir / "grid.csv"));
  }
}

TEST(CmdFringe, SlicesAtDifferentSumsAgree) {
  const auto dir = scratch_dir("slices");
  cmd_fringe(run_config("quantum.conf", dir));
  const auto low = slice_from_file(dir / "fringe_slices.csv", 0);
  const auto mid = slice_from_file(dir / "fringe_slices.csv", 1);
  const auto high = slice_from_file(dir / "fringe_slices.csv", 2);
  std::size_t compared = 0;
  for (const auto& [delta, g] : mid) {
    for (const auto* other : {&low, &high}) {
      const auto it = other->find(delta);
      if (it == other->end()) continue;
      EXPECT_NEAR(it->second, g, 1e-8) << delta;
      ++compared;
    }
  }
  EXPECT_GT(compared, 60u);
}

TEST(CmdFringe, RerunIsByteIdentical) {
  const auto a = scratch_dir("rerun_a");
  const auto b = scratch_dir("rerun_b");
  cmd_fringe(run_config("quantum.conf", a));
  cmd_fringe(run_config("quantum.conf", b));
  for (const char* f : {"grid.csv", "fringe.csv", "fringe_slices.csv"})
    EXPECT_EQ(read_text_file(a / f), read_text_file(b / f)) << f;
}

TEST(CmdWitness, QuantumViolatesClassicalDoesNot) {
  const auto dq = scratch_dir("witness_q");
  EXPECT_EQ(cmd_witness(run_config("quantum.conf", dq)), exit_violated);
  std::ifstream q(dq / "witness.txt");
  EXPECT_TRUE(read_witness_report(q).violated);
  const auto dc = scratch_dir("witness_c");
  EXPECT_EQ(cmd_witness(run_config("classical.conf", dc)), exit_not_violated);
  std::ifstream c(dc / "witness.txt");
  EXPECT_FALSE(read_witness_report(c).violated);
}

TEST(CmdMontecarlo, SeedRepeatIsByteIdentical) {
  const auto a = scratch_dir("mc_a");
  const auto b = scratch_dir("mc_b");
  for (const auto& dir : {a, b}) {
    auto raw = sample_config("quantum.conf");
    set_override(raw, "montecarlo.events", "20000");
    set_override(raw, "output.directory", dir.string());
    EXPECT_EQ(cmd_montecarlo(parse_run_config(raw)), exit_ok);
  }
  for (const char* f : {"events.csv", "histogram.csv", "dip.txt"})
    EXPECT_EQ(read_text_file(a / f), read_text_file(b / f)) << f;
}

TEST(CmdMontecarlo, MillionQuantumEventsShowDip) {
  const auto dir = scratch_dir("mc_dip");
  EXPECT_EQ(cmd_montecarlo(run_config("quantum.conf", dir)), exit_ok);
  std::ifstream is(dir / "dip.txt");
  std::string line;
  std::getline(is, line);
  ASSERT_EQ(line.rfind("dip = ", 0), 0u);
  EXPECT_LT(parse_double(line.substr(6)), 0.05);
}

TEST(CmdSweep, WaistSweepHomogeneityIncreases) {
  const auto dir = scratch_dir("sweep_w0");
  cmd_sweep(sample_config("quantum.conf"), "setup.pump_waist", {"10 um", "20 um", "100 um", "200 um"}, dir);
  std::ifstream is(dir / "summary.csv");
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "value,margin,homogeneity,violated");
  std::vector<double> h;
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::string v, m, hom;
    std::getline(ss, v, ',');
    std::getline(ss, m, ',');
    std::getline(ss, hom, ',');
    h.push_back(parse_double(hom));
  }
  ASSERT_EQ(h.size(), 4u);
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_GE(h[i], h[i - 1] * (1 - 1e-12)) << i;
  EXPECT_LT(h[1], 1e-9);
  EXPECT_GT(h[3], 0.1);
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(fs::exists(dir / sweep_directory(static_cast<std::size_t>(i)) / "witness.txt"));
}

TEST(CmdSweep, SingleValueMatchesSingleRun) {
  const auto sweep = scratch_dir("sweep_one");
  const auto single = scratch_dir("sweep_single");
  cmd_sweep(sample_config("quantum.conf"), "setup.pump_waist", {"20 um"}, sweep);
  const auto config = run_config("quantum.conf", single);
  cmd_fringe(config);
  cmd_witness(config);
  for (const char* f : {"grid.csv", "fringe.csv", "fringe_slices.csv", "witness.txt"})
    EXPECT_EQ(read_text_file(sweep / "sweep_000" / f), read_text_file(single / f)) << f;
}

TEST(CmdSweep, RetardanceSweepFlipsWitness) {
  const auto dir = scratch_dir("sweep_phi");
  cmd_sweep(sample_config("quantum.conf"), "aperture.retardance", {"90 deg", "0 deg"}, dir);
  std::ifstream a(dir / "sweep_000" / "witness.txt");
  std::ifstream b(dir / "sweep_001" / "witness.txt");
  EXPECT_TRUE(read_witness_report(a).violated);
  EXPECT_FALSE(read_witness_report(b).violated);
}

TEST(Binary, ExitCodesDistinguishOutcomes) {
  const auto dir = scratch_dir("binary");
  const std::string configs = ANTIBUNCH_CONFIGS;
  EXPECT_EQ(run_cli("witness --config " + configs + "/quantum.conf --out " + (dir / "q").string()), 10);
  EXPECT_EQ(run_cli("witness --config " + configs + "/classical.conf --out " + (dir / "c").string()), 11);
  EXPECT_EQ(run_cli("fringe --config " + configs + "/quantum.conf --out " + (dir / "f").string()), 0);
  std::ofstream(dir / "bad.conf") << "[source]\ntype = classical\nvisibility = 0.9\n";
  EXPECT_EQ(run_cli("montecarlo --config " + (dir / "bad.conf").string() + " --out " + (dir / "m").string()), 1);
  EXPECT_EQ(run_cli("fringe --config " + (dir / "missing.conf").string()), 1);
  EXPECT_EQ(run_cli("teleport"), 1);
  EXPECT_EQ(run_cli("sweep --config " + configs + "/quantum.conf --param setup.pump_waist --values \"20 um,40 um\" --out " +
                    (dir / "s").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "s" / "summary.csv"));
}
