#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sixsim/core.hpp"
#include "sixsim/propagation.hpp"
#include "sixsim/topology.hpp"

using namespace sixsim;

TEST_CASE("grid deployment with an exactly filled grid") {
  // n = 5: four nodes on a 2x2 grid of cell centers, root at the center.
  const Topology t = generate_linear(5, 100.0);
  REQUIRE(t.node_count() == 5);
  CHECK(t.positions[0].x == doctest::Approx(50.0));
  CHECK(t.positions[0].y == doctest::Approx(50.0));
  std::set<std::pair<double, double>> got;
  for (int i = 1; i < 5; ++i)
    got.insert({t.positions[static_cast<std::size_t>(i)].x,
                t.positions[static_cast<std::size_t>(i)].y});
  const std::set<std::pair<double, double>> expect{
      {25.0, 25.0}, {75.0, 25.0}, {25.0, 75.0}, {75.0, 75.0}};
  CHECK(got == expect);
}

TEST_CASE("grid deployment grows past a cell that lands on the root") {
  // n = 10: a 3x3 grid's middle cell coincides with the root, so a row is
  // added and the cell nearest the center stays vacant.
  const Topology t = generate_linear(10, 100.0);
  REQUIRE(t.node_count() == 10);
  CHECK(t.positions[0].x == doctest::Approx(50.0));
  CHECK(t.positions[0].y == doctest::Approx(50.0));
  for (int i = 1; i < 10; ++i) {
    const auto& p = t.positions[static_cast<std::size_t>(i)];
    CHECK(p.x >= 0.0);
    CHECK(p.x <= 100.0);
    CHECK(p.y >= 0.0);
    CHECK(p.y <= 100.0);
    // Nobody may sit exactly on the root.
    CHECK(distance_m(p, t.positions[0]) > 1.0);
    // 3 columns by 4 rows of cell centers.
    const double cx = std::fmod(p.x, 100.0 / 3.0);
    CHECK(std::abs(std::min(cx, 100.0 / 3.0 - cx) - 100.0 / 6.0) <= 1e-9);
    const double cy = std::fmod(p.y, 25.0);
    CHECK(std::abs((std::min(cy, 25.0 - cy)) - (12.5)) <= 1e-9);
  }
  // All positions distinct.
  std::set<std::pair<double, double>> uniq;
  for (const auto& p : t.positions) uniq.insert({p.x, p.y});
  CHECK(uniq.size() == t.positions.size());
}

TEST_CASE("grid deployment rejects degenerate inputs") {
  CHECK_THROWS_AS(generate_linear(1, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(generate_linear(10, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(generate_linear(10, -5.0), std::invalid_argument);
}

TEST_CASE("random deployment is connected, in-bounds and seed-determined") {
  const BandConfig band = default_band24();
  const double threshold = band.radio_sensitivity_dbm;

  RngStream rng1 = RngStream::derive(12345, "topology");
  const Topology t1 = generate_random(40, 100.0, rng1, band, threshold);
  REQUIRE(t1.node_count() == 40);
  CHECK(t1.positions[0].x == doctest::Approx(50.0));
  CHECK(t1.positions[0].y == doctest::Approx(50.0));
  for (const auto& p : t1.positions) {
    CHECK(p.x >= 0.0);
    CHECK(p.x <= 100.0);
    CHECK(p.y >= 0.0);
    CHECK(p.y <= 100.0);
  }
  // The construction guarantee: nobody is isolated at the build threshold.
  CHECK(isolated_nodes(t1, band, threshold).empty());

  // Same stream, same layout; different seed, different layout.
  RngStream rng2 = RngStream::derive(12345, "topology");
  const Topology t2 = generate_random(40, 100.0, rng2, band, threshold);
  REQUIRE(t2.node_count() == t1.node_count());
  for (int i = 0; i < t1.node_count(); ++i) {
    CHECK(t1.positions[static_cast<std::size_t>(i)].x ==
          t2.positions[static_cast<std::size_t>(i)].x);
    CHECK(t1.positions[static_cast<std::size_t>(i)].y ==
          t2.positions[static_cast<std::size_t>(i)].y);
  }
  RngStream rng3 = RngStream::derive(99999, "topology");
  const Topology t3 = generate_random(40, 100.0, rng3, band, threshold);
  bool any_differs = false;
  for (int i = 1; i < t1.node_count(); ++i)
    if (t1.positions[static_cast<std::size_t>(i)].x !=
        t3.positions[static_cast<std::size_t>(i)].x)
      any_differs = true;
  CHECK(any_differs);
}

TEST_CASE("random deployment throws when the budget cannot connect a node") {
  // A 100 km arena dwarfs the 2.4 GHz line-of-sight range (~700 m), so the
  // second node cannot find a reachable spot in any realistic budget.
  const BandConfig band = default_band24();
  RngStream rng = RngStream::derive(1, "topology");
  CHECK_THROWS_AS(generate_random(2, 100'000.0, rng, band,
                                  band.radio_sensitivity_dbm, 50),
                  std::runtime_error);
}

TEST_CASE("connectivity report gives per-node best-case reachability") {
  // Two nodes 10 m apart: best-case RSSI is tx - friis(10 m).
  Topology t;
  t.side_length = 100.0;
  t.positions = {{50.0, 50.0}, {60.0, 50.0}};
  const BandConfig band = default_band24();
  const auto report = connectivity_report(t, band);
  REQUIRE(report.size() == 2);
  const double expect =
      band.tx_power_dbm - friis_path_loss_db(10.0, band.center_frequency_hz);
  CHECK(report[0] == doctest::Approx(expect));
  CHECK(report[1] == doctest::Approx(expect));
  // ~ -60 dBm: comfortably reachable at the -97 dBm threshold...
  CHECK(isolated_nodes(t, band, band.radio_sensitivity_dbm).empty());
  // ...and isolated at an impossible one.
  CHECK(isolated_nodes(t, band, -10.0).size() == 2);
}

TEST_CASE("topology text form round-trips exactly") {
  RngStream rng = RngStream::derive(kDefaultSeed, "topology");
  const BandConfig band = default_band24();
  const Topology t =
      generate_random(20, 100.0, rng, band, band.radio_sensitivity_dbm);
  std::istringstream in(t.serialize());
  const Topology back = Topology::parse(in);
  REQUIRE(back.node_count() == t.node_count());
  CHECK(back.side_length == t.side_length);
  for (int i = 0; i < t.node_count(); ++i) {
    CHECK(back.positions[static_cast<std::size_t>(i)].x ==
          t.positions[static_cast<std::size_t>(i)].x);
    CHECK(back.positions[static_cast<std::size_t>(i)].y ==
          t.positions[static_cast<std::size_t>(i)].y);
  }
}

TEST_CASE("distance helper") {
  CHECK(distance_m({0.0, 0.0}, {3.0, 4.0}) == doctest::Approx(5.0));
  CHECK(distance_m({1.0, 1.0}, {1.0, 1.0}) == doctest::Approx(0.0));
}
