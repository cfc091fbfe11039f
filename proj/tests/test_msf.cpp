#include <doctest.h>

#include <set>

#include "sixsim/msf.hpp"
#include "sixsim/rng.hpp"

using namespace sixsim;

namespace {

CellUsageWindow window_with(int used, int length) {
  CellUsageWindow w;
  for (int i = 0; i < length; ++i) w.record(i < used);
  return w;
}

}  // namespace

TEST_CASE("usage window counts instances and saturates at the decision size") {
  CellUsageWindow w;
  CHECK(!w.full());
  for (int i = 0; i < kMsfMaxNumCells - 1; ++i) w.record(i % 2 == 0);
  CHECK(!w.full());
  w.record(true);
  CHECK(w.full());
  CHECK(w.window_length == kMsfMaxNumCells);
  CHECK(w.used == kMsfMaxNumCells / 2 + 1);
  w.reset();
  CHECK(w.window_length == 0);
  CHECK(w.used == 0);
}

TEST_CASE("no adaptation before the window fills") {
  CHECK(adapt_cells(window_with(40, 40), 1) == AdaptDecision::None);
  CHECK(adapt_cells(window_with(0, 63), 3) == AdaptDecision::None);
}

TEST_CASE("heavy usage requests one more cell") {
  // 49/64 = 0.7656 > 0.75.
  CHECK(adapt_cells(window_with(49, 64), 1) == AdaptDecision::Add);
  CHECK(adapt_cells(window_with(64, 64), 3) == AdaptDecision::Add);
  // Exactly at the threshold is not "above".
  CHECK(adapt_cells(window_with(48, 64), 1) == AdaptDecision::None);
}

TEST_CASE("light usage releases a cell but never the last one") {
  // 15/64 = 0.2344 < 0.25.
  CHECK(adapt_cells(window_with(15, 64), 2) == AdaptDecision::Delete);
  CHECK(adapt_cells(window_with(0, 64), 5) == AdaptDecision::Delete);
  // Exactly at the threshold is not "below".
  CHECK(adapt_cells(window_with(16, 64), 2) == AdaptDecision::None);
  // The last dedicated cell stays regardless of usage.
  CHECK(adapt_cells(window_with(0, 64), 1) == AdaptDecision::None);
}

TEST_CASE("cell negotiation installs a matched pair in a mutually free slot") {
  RngStream rng(808);
  for (int round = 0; round < 50; ++round) {
    Schedule tx = Schedule::with_minimal();
    Schedule rx = Schedule::with_minimal();
    // Pre-occupy some slots on both sides to constrain the choice.
    tx.add({5, 1, CellKind::TxDedicated, 7});
    rx.add({9, 2, CellKind::RxDedicated, 8});

    const auto cell = negotiate_cell(tx, 1, rx, 2, 16, rng);
    REQUIRE(cell.has_value());
    CHECK(cell->slot_offset > 0);
    CHECK(cell->slot_offset < kSlotframeLength);
    CHECK(cell->slot_offset != 5);
    CHECK(cell->slot_offset != 9);
    CHECK(cell->channel_offset >= 0);
    CHECK(cell->channel_offset < 16);

    const Cell* tcell = tx.cell_at(cell->slot_offset);
    REQUIRE(tcell != nullptr);
    CHECK(tcell->kind == CellKind::TxDedicated);
    CHECK(tcell->peer == 2);
    CHECK(tcell->channel_offset == cell->channel_offset);

    const Cell* rcell = rx.cell_at(cell->slot_offset);
    REQUIRE(rcell != nullptr);
    CHECK(rcell->kind == CellKind::RxDedicated);
    CHECK(rcell->peer == 1);
    CHECK(rcell->channel_offset == cell->channel_offset);
  }
}

TEST_CASE("cell negotiation spreads over slots and channels") {
  RngStream rng(1912);
  std::set<int> slots, channels;
  for (int i = 0; i < 300; ++i) {
    Schedule tx = Schedule::with_minimal();
    Schedule rx = Schedule::with_minimal();
    const auto cell = negotiate_cell(tx, 1, rx, 2, 16, rng);
    REQUIRE(cell.has_value());
    slots.insert(cell->slot_offset);
    channels.insert(cell->channel_offset);
  }
  // 300 uniform draws over 100 free slots / 16 offsets hit most of both.
  CHECK(slots.size() > 80);
  CHECK(channels.size() == 16);
}

TEST_CASE("cell negotiation reports saturation instead of double-booking") {
  RngStream rng(3);
  Schedule tx = Schedule::with_minimal();
  Schedule rx = Schedule::with_minimal();
  // Fill every non-shared slot on the transmit side.
  for (int slot = 1; slot < kSlotframeLength; ++slot)
    REQUIRE(tx.add({slot, 0, CellKind::TxDedicated, 9}));
  CHECK(!negotiate_cell(tx, 1, rx, 2, 16, rng).has_value());

  // A single mutual gap is always found.
  Schedule tx2 = Schedule::with_minimal();
  Schedule rx2 = Schedule::with_minimal();
  for (int slot = 1; slot < kSlotframeLength; ++slot) {
    if (slot == 42) continue;
    REQUIRE(tx2.add({slot, 0, CellKind::TxDedicated, 9}));
  }
  const auto cell = negotiate_cell(tx2, 1, rx2, 2, 16, rng);
  REQUIRE(cell.has_value());
  CHECK(cell->slot_offset == 42);
}
