#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "sixsim/core.hpp"
#include "sixsim/propagation.hpp"
#include "sixsim/rng.hpp"

using namespace sixsim;

TEST_CASE("free-space loss matches hand-computed references") {
  // 20*log10(4*pi*d*f/c), evaluated independently.
  CHECK(std::abs((friis_path_loss_db(10.0, 2.4e9)) - (60.05)) <= 0.01);
  CHECK(std::abs((friis_path_loss_db(10.0, 868e6)) - (51.22)) <= 0.01);
  // +6.02 dB per distance doubling, +20 dB per decade.
  const double base = friis_path_loss_db(10.0, 2.4e9);
  CHECK(friis_path_loss_db(20.0, 2.4e9) ==
        doctest::Approx(base + 20.0 * std::log10(2.0)));
  CHECK(friis_path_loss_db(100.0, 2.4e9) == doctest::Approx(base + 20.0));
  // The band gap at equal distance is 20*log10(2400/868) ~ 8.83 dB.
  CHECK(friis_path_loss_db(25.0, 2.4e9) - friis_path_loss_db(25.0, 868e6) ==
        doctest::Approx(20.0 * std::log10(2.4e9 / 868e6)));
}

TEST_CASE("signal draws sit in a 40 dB band below line-of-sight") {
  const BandConfig band = default_band24();
  const double d = 25.0;
  const double friis = friis_path_loss_db(d, band.center_frequency_hz);
  const double best = band.tx_power_dbm - friis;

  RngStream rng(4242);
  const int n = 100'000;
  double sum = 0.0;
  double worst_lo = 0.0, worst_hi = -1e9;
  for (int i = 0; i < n; ++i) {
    const double rssi = sample_rssi_dbm(d, band, rng);
    REQUIRE(rssi <= best + 1e-9);
    REQUIRE(rssi >= best - kExcessLossSpreadDb - 1e-9);
    sum += rssi;
    worst_lo = std::min(worst_lo, rssi - best);
    worst_hi = std::max(worst_hi, rssi - best);
  }
  // Mean sits at the band midpoint.
  CHECK(std::abs((sum / n) - (best - 20.0)) <= 0.3);
  // Both edges of the spread get visited.
  CHECK(worst_lo < -39.0);
  CHECK(worst_hi > -1.0);
}

TEST_CASE("excess loss is uniform (Kolmogorov-Smirnov)") {
  const BandConfig band = default_band24();
  const double d = 40.0;
  const double friis = friis_path_loss_db(d, band.center_frequency_hz);

  RngStream rng(777);
  const int n = 100'000;
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) {
    const double loss = band.tx_power_dbm - sample_rssi_dbm(d, band, rng);
    u[static_cast<std::size_t>(i)] = (loss - friis) / kExcessLossSpreadDb;
  }
  std::sort(u.begin(), u.end());
  double dmax = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = u[static_cast<std::size_t>(i)];
    dmax = std::max(dmax, std::abs((i + 1.0) / n - x));
    dmax = std::max(dmax, std::abs(x - static_cast<double>(i) / n));
  }
  // alpha = 0.01 critical value 1.628 / sqrt(n).
  CHECK(dmax < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("waterfall table interpolates between its anchors") {
  const WaterfallTable t = WaterfallTable::default_24ghz();
  CHECK(t.validate().empty());
  CHECK(rssi_to_pdr(-97.0, t) == doctest::Approx(0.0));
  CHECK(rssi_to_pdr(-83.0, t) == doctest::Approx(1.0));
  // Clamped outside the anchor span.
  CHECK(rssi_to_pdr(-120.0, t) == doctest::Approx(0.0));
  CHECK(rssi_to_pdr(-50.0, t) == doctest::Approx(1.0));
  // Linear ramp: midpoint and quarter points.
  CHECK(rssi_to_pdr(-90.0, t) == doctest::Approx(7.0 / 14.0));
  CHECK(rssi_to_pdr(-96.5, t) == doctest::Approx(0.5 / 14.0));
  CHECK(rssi_to_pdr(-83.5, t) == doctest::Approx(13.5 / 14.0));
  // Monotone non-decreasing over a fine sweep.
  double prev = -1.0;
  for (double r = -120.0; r <= -60.0; r += 0.25) {
    const double p = rssi_to_pdr(r, t);
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("waterfall validation rejects malformed tables") {
  WaterfallTable t;
  CHECK(!t.validate().empty());  // empty

  t.anchors = {{-90.0, 0.0}, {-90.0, 1.0}};
  CHECK(!t.validate().empty());  // non-increasing rssi

  t.anchors = {{-97.0, 0.0}, {-90.0, 0.8}, {-83.0, 0.4}};
  CHECK(!t.validate().empty());  // decreasing pdr

  t.anchors = {{-97.0, 0.2}, {-83.0, 1.0}};
  CHECK(!t.validate().empty());  // does not span 0..1
}

TEST_CASE("waterfall text form round-trips") {
  const WaterfallTable t = WaterfallTable::default_24ghz();
  std::istringstream in(t.serialize());
  const WaterfallTable back = WaterfallTable::parse(in);
  REQUIRE(back.anchors.size() == t.anchors.size());
  for (std::size_t i = 0; i < t.anchors.size(); ++i) {
    CHECK(back.anchors[i].rssi_dbm == doctest::Approx(t.anchors[i].rssi_dbm));
    CHECK(back.anchors[i].pdr == doctest::Approx(t.anchors[i].pdr));
  }

  std::istringstream cm("# comment line\n-97 0\n-83 1\n");
  const WaterfallTable parsed = WaterfallTable::parse(cm);
  REQUIRE(parsed.anchors.size() == 2);
  CHECK(parsed.anchors[0].rssi_dbm == doctest::Approx(-97.0));
}

TEST_CASE("sensitivity shift equals evaluating the base table higher up") {
  const WaterfallTable base = WaterfallTable::default_24ghz();
  const WaterfallTable shifted = offset_table(base, kSubGhzOffsetDb);
  // Exact identity on a grid of exactly representable sixteenth-dB steps.
  for (int k = 0; k < 1000; ++k) {
    const double r = -130.0 + static_cast<double>(k) * 0.0625;
    CHECK(rssi_to_pdr(r, shifted) == rssi_to_pdr(r + kSubGhzOffsetDb, base));
  }
}

TEST_CASE("interference arithmetic") {
  // No interferers: SINR is signal over noise.
  CHECK(sinr_db(-60.0, {}, -105.0) == doctest::Approx(45.0));
  // One equal-power interferer drives SINR to ~0 dB.
  const std::vector<double> equal{-60.0};
  CHECK(std::abs(sinr_db(-60.0, equal, -105.0)) <= 0.001);
  // A 3 dB stronger signal against one interferer: ~3 dB (minus noise).
  const std::vector<double> weaker{-63.0};
  CHECK(std::abs((sinr_db(-60.0, weaker, -105.0)) - (3.0)) <= 0.01);
  // Two equal interferers cost ~3 dB more than one.
  const std::vector<double> two{-60.0, -60.0};
  CHECK(std::abs((sinr_db(-60.0, two, -105.0)) - (-10.0 * std::log10(2.0))) <= 0.01);
}

TEST_CASE("reception probability reduces to the waterfall when clean") {
  const WaterfallTable t = WaterfallTable::default_24ghz();
  const double noise = -105.0;
  for (double rssi = -100.0; rssi <= -80.0; rssi += 0.5) {
    CHECK(sinr_reception_pdr(rssi, {}, noise, t) ==
          doctest::Approx(rssi_to_pdr(rssi, t)));
  }
}

TEST_CASE("an equal-power collision is undecodable on the 2.4 GHz table") {
  const WaterfallTable t = WaterfallTable::default_24ghz();
  // SINR ~ 0 dB; the lookup lands at noise floor + 0 = -105 dBm, far below
  // the -97 dBm zero-success anchor.
  const std::vector<double> equal{-70.0};
  CHECK(sinr_reception_pdr(-70.0, equal, -105.0, t) == doctest::Approx(0.0));
  RngStream rng(5);
  int decoded = 0;
  for (int i = 0; i < 1000; ++i)
    if (sinr_reception(-70.0, equal, -105.0, t, rng)) ++decoded;
  CHECK(decoded == 0);
}

TEST_CASE("capture: a dominant signal survives a weak interferer") {
  const WaterfallTable t = WaterfallTable::default_24ghz();
  // Signal -60 dBm vs interferer -95 dBm: SINR ~ 35 dB, lookup at -70 dBm
  // which the table maps to certain decode.
  const std::vector<double> weak{-95.0};
  CHECK(sinr_reception_pdr(-60.0, weak, -105.0, t) == doctest::Approx(1.0));
}
