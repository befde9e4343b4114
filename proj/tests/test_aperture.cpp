#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "antibunch/aperture.hpp"

using namespace antibunch;

namespace {

constexpr double kD = 200e-6;
const std::complex<double> kMinusI{0.0, -1.0};

std::map<std::string, std::string> entries_of(const ApertureFunction& ap) {
  std::ostringstream os;
  write_aperture_entries(os, ap);
  std::istringstream is(os.str());
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find(" = ");
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

std::vector<double> qx_samples() {
  std::vector<double> q;
  for (int i = -5; i < 5; ++i) q.push_back(i * 7.3e3 + 1.1e3);
  return q;
}

}  // namespace

TEST(BirefringentDoubleSlit, DeltaFormHasQuarterWavePhases) {
  const auto ap = birefringent_double_slit(kD, 0.0);
  const auto& oo = ap.channel(Polarization::o, Polarization::o);
  const auto& ee = ap.channel(Polarization::e, Polarization::e);
  ASSERT_EQ(oo.size(), 2u);
  ASSERT_EQ(ee.size(), 2u);
  EXPECT_EQ(oo[0].center, kD / 2);
  EXPECT_EQ(oo[0].transmission, kMinusI);
  EXPECT_EQ(oo[1].center, -kD / 2);
  EXPECT_EQ(oo[1].transmission, std::complex<double>(1.0));
  EXPECT_EQ(ee[0].center, kD / 2);
  EXPECT_EQ(ee[0].transmission, std::complex<double>(1.0));
  EXPECT_EQ(ee[1].center, -kD / 2);
  EXPECT_EQ(ee[1].transmission, kMinusI);
  EXPECT_TRUE(ap.channel(Polarization::e, Polarization::o).empty());
  EXPECT_TRUE(ap.channel(Polarization::o, Polarization::e).empty());
  EXPECT_TRUE(ap.all_delta());
}

TEST(BirefringentDoubleSlit, ChannelsSwapUnderSlitExchange) {
  const auto ap = birefringent_double_slit(kD, 20e-6);
  for (const auto& o : ap.channel(Polarization::o, Polarization::o)) {
    bool found = false;
    for (const auto& e : ap.channel(Polarization::e, Polarization::e))
      found |= e.center == -o.center && e.transmission == o.transmission && e.width == o.width;
    EXPECT_TRUE(found);
  }
}

TEST(BirefringentDoubleSlit, WithoutPlatesBothChannelsArePlainDoubleSlit) {
  const auto ap = birefringent_double_slit(kD, 0.0, 0.0);
  for (Polarization p : {Polarization::e, Polarization::o})
    for (const auto& s : ap.channel(p, p)) EXPECT_EQ(s.transmission, std::complex<double>(1.0));
  for (double q : qx_samples())
    EXPECT_EQ(transfer_function(ap, Polarization::e, Polarization::e, q),
              transfer_function(ap, Polarization::o, Polarization::o, q));
}

TEST(BirefringentDoubleSlit, RejectsOverlappingOrDegenerateSlits) {
  EXPECT_THROW(birefringent_double_slit(kD, kD), std::invalid_argument);
  EXPECT_THROW(birefringent_double_slit(kD, 2 * kD), std::invalid_argument);
  EXPECT_THROW(birefringent_double_slit(0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(birefringent_double_slit(kD, -1e-6), std::invalid_argument);
  EXPECT_NO_THROW(birefringent_double_slit(kD, 0.99 * kD));
}

TEST(ApertureValidation, RejectsCrossChannelsOverlapAndGain) {
  ApertureFunction cross;
  cross.channel(Polarization::e, Polarization::o) = {{0.0, 0.0, 1.0}};
  EXPECT_THROW(cross.validate(), std::invalid_argument);
  ApertureFunction overlap;
  overlap.channel(Polarization::e, Polarization::e) = {{0.0, 10e-6, 1.0}, {5e-6, 10e-6, 1.0}};
  EXPECT_THROW(overlap.validate(), std::invalid_argument);
  ApertureFunction gain;
  gain.channel(Polarization::o, Polarization::o) = {{0.0, 0.0, 1.5}};
  EXPECT_THROW(gain.validate(), std::invalid_argument);
}

TEST(TransferFunction, PlainSlitAtZeroFrequencyIsSumOfTransmissions) {
  const auto ap = birefringent_double_slit(kD, 0.0, 0.0);
  EXPECT_EQ(transfer_function(ap, Polarization::o, Polarization::o, 0.0), std::complex<double>(2.0));
  ApertureFunction mixed;
  mixed.channel(Polarization::e, Polarization::e) = {{-1e-4, 0.0, {0.3, 0.4}}, {1e-4, 0.0, 0.5}};
  const auto t0 = transfer_function(mixed, Polarization::e, Polarization::e, 0.0);
  EXPECT_NEAR(t0.real(), 0.8, 1e-15);
  EXPECT_NEAR(t0.imag(), 0.4, 1e-15);
}

TEST(TransferFunction, OrdinaryDeltaFormMatchesFourierTransform) {
  const auto ap = birefringent_double_slit(kD, 0.0);
  for (double q : qx_samples()) {
    const std::complex<double> expected =
        kMinusI * std::exp(std::complex<double>(0.0, -q * kD / 2)) + std::exp(std::complex<double>(0.0, q * kD / 2));
    const auto got = transfer_function(ap, Polarization::o, Polarization::o, q);
    EXPECT_NEAR(std::abs(got - expected), 0.0, 1e-15) << q;
  }
}

TEST(TransferFunction, FiniteWidthConvergesToDeltaForm) {
  const double a = kD / 1e6;
  const auto delta = birefringent_double_slit(kD, 0.0);
  const auto thin = birefringent_double_slit(kD, a);
  for (Polarization p : {Polarization::e, Polarization::o}) {
    for (double q : qx_samples()) {
      const auto d = transfer_function(delta, p, p, q);
      const auto f = transfer_function(thin, p, p, q) / a;
      EXPECT_LT(std::abs(f - d), 1e-6 * std::abs(d)) << q;
    }
  }
}

TEST(TransferFunction, TriangleInequalityBound) {
  const double a = 30e-6;
  const auto ap = birefringent_double_slit(kD, a);
  for (int i = -200; i <= 200; ++i) {
    const double q = i * 997.0;
    for (Polarization p : {Polarization::e, Polarization::o})
      EXPECT_LE(std::abs(transfer_function(ap, p, p, q)), 2.0 * a * (1 + 1e-15));
  }
}

TEST(TransferFunction, ExtraordinaryChannelIsMirroredOrdinaryChannel) {
  for (double a : {0.0, 25e-6}) {
    const auto ap = birefringent_double_slit(kD, a);
    for (int i = -100; i <= 100; ++i) {
      const double q = i * 1.7e3;
      const auto ee = transfer_function(ap, Polarization::e, Polarization::e, q);
      const auto oo = transfer_function(ap, Polarization::o, Polarization::o, -q);
      EXPECT_LT(std::abs(ee - oo), 1e-15 * (1 + std::abs(ee)));
    }
  }
}

TEST(TransferFunction, CrossChannelsVanish) {
  const auto ap = birefringent_double_slit(kD, 10e-6);
  for (double q : qx_samples()) {
    EXPECT_EQ(transfer_function(ap, Polarization::e, Polarization::o, q), std::complex<double>(0.0));
    EXPECT_EQ(transfer_function(ap, Polarization::o, Polarization::e, q), std::complex<double>(0.0));
  }
}

TEST(ApertureEntries, RoundTripIsExactForQuarterWaveAndPlainSlits) {
  for (double retardance : {std::numbers::pi / 2, 0.0}) {
    const auto ap = birefringent_double_slit(kD, 12e-6, retardance);
    EXPECT_EQ(read_aperture_entries(entries_of(ap)), ap);
  }
}

TEST(ApertureEntries, GeneralRetardanceRoundTripsToRounding) {
  const auto ap = birefringent_double_slit(kD, 0.0, 1.234);
  const auto back = read_aperture_entries(entries_of(ap));
  for (Polarization p : {Polarization::e, Polarization::o}) {
    ASSERT_EQ(back.channel(p, p).size(), 2u);
    for (std::size_t i = 0; i < 2; ++i)
      EXPECT_LT(std::abs(back.channel(p, p)[i].transmission - ap.channel(p, p)[i].transmission), 1e-15);
  }
  const auto form = as_birefringent_double_slit(back);
  ASSERT_TRUE(form.has_value());
  EXPECT_NEAR(form->retardance, 1.234, 1e-15);
}

TEST(ApertureEntries, RejectsUnknownFieldsAndIncompleteElements) {
  auto entries = entries_of(birefringent_double_slit(kD, 0.0));
  entries["element.0.colour"] = "red";
  EXPECT_THROW(read_aperture_entries(entries), std::invalid_argument);
  entries = entries_of(birefringent_double_slit(kD, 0.0));
  entries.erase("element.1.phase");
  EXPECT_THROW(read_aperture_entries(entries), std::invalid_argument);
  entries = entries_of(birefringent_double_slit(kD, 0.0));
  entries["element.0.channel"] = "eo";
  EXPECT_THROW(read_aperture_entries(entries), std::invalid_argument);
}

TEST(ApertureEntries, RecognisesDoubleSlitLayout) {
  const auto form = as_birefringent_double_slit(birefringent_double_slit(kD, 5e-6));
  ASSERT_TRUE(form.has_value());
  EXPECT_EQ(form->separation, kD);
  EXPECT_EQ(form->width, 5e-6);
  EXPECT_EQ(form->retardance, std::numbers::pi / 2);
  ApertureFunction single;
  single.channel(Polarization::e, Polarization::e) = {{0.0, 0.0, 1.0}};
  EXPECT_FALSE(as_birefringent_double_slit(single).has_value());
}
