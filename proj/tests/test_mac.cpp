#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "sixsim/mac.hpp"
#include "sixsim/rng.hpp"

using namespace sixsim;

TEST_CASE("hop sequence is a permutation of the physical channels") {
  for (int channels : {16, 34}) {
    RngStream rng = RngStream::derive(kDefaultSeed, "hopseq");
    const std::vector<int> seq = make_hop_sequence(channels, rng);
    REQUIRE(static_cast<int>(seq.size()) == channels);
    std::vector<int> sorted = seq;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> iota(static_cast<std::size_t>(channels));
    std::iota(iota.begin(), iota.end(), 0);
    CHECK(sorted == iota);
  }
  // Deterministic in the stream.
  RngStream a = RngStream::derive(7, "hopseq");
  RngStream b = RngStream::derive(7, "hopseq");
  CHECK(make_hop_sequence(16, a) == make_hop_sequence(16, b));
}

TEST_CASE("channel hopping walks the sequence and covers all channels") {
  RngStream rng = RngStream::derive(3, "hopseq");
  const std::vector<int> seq = make_hop_sequence(16, rng);

  // Definition: sequence index (asn + offset) mod channel count.
  for (std::uint64_t asn : {0ull, 5ull, 100ull, 161803ull}) {
    for (int off : {0, 3, 15}) {
      CHECK(hop_channel(Asn{asn}, off, seq) ==
            seq[static_cast<std::size_t>((asn + static_cast<std::uint64_t>(off)) % 16)]);
    }
  }
  // A fixed cell visits every channel across 16 consecutive slotframes when
  // the slotframe length is coprime with the channel count.
  std::set<int> seen;
  for (int sf = 0; sf < 16; ++sf)
    seen.insert(hop_channel(Asn{static_cast<std::uint64_t>(sf) * 101 + 40}, 2, seq));
  CHECK(seen.size() == 16);
}

TEST_CASE("schedule bookkeeping") {
  Schedule s = Schedule::with_minimal();
  CHECK(s.slotframe_length == kSlotframeLength);
  const Cell* shared = s.cell_at(0);
  REQUIRE(shared != nullptr);
  CHECK(shared->kind == CellKind::SharedMinimal);
  CHECK(shared->channel_offset == 0);

  CHECK(s.add({5, 3, CellKind::TxDedicated, 2}));
  CHECK(!s.add({5, 1, CellKind::RxDedicated, 4}));  // slot taken
  CHECK(s.add({9, 0, CellKind::TxDedicated, 2}));
  CHECK(s.add({11, 2, CellKind::RxDedicated, 7}));

  CHECK(s.dedicated_tx_count_to(2) == 2);
  CHECK(s.dedicated_tx_count_to(7) == 0);
  CHECK(s.has_dedicated_tx_to(2));
  CHECK(!s.has_dedicated_tx_to(4));
  CHECK(s.tx_slots_to(2) == std::vector<int>{5, 9});

  CHECK(s.remove_at(9));
  CHECK(!s.remove_at(9));
  CHECK(s.dedicated_tx_count_to(2) == 1);
  CHECK(s.slot_free(9));

  CHECK(s.validate(16).empty());
  Schedule bad = Schedule::with_minimal();
  bad.add({3, 16, CellKind::TxDedicated, 1});  // channel offset out of range
  CHECK(!bad.validate(16).empty());
}

TEST_CASE("transmit queue is FIFO with drop-on-full") {
  TxQueue q;
  q.capacity = 3;
  CHECK(q.enqueue({FrameKind::Data, {1, 0}, 9, 0, SimTime{1}}));
  CHECK(q.enqueue({FrameKind::Dao, {}, 9, 0, SimTime{2}}));
  CHECK(q.enqueue({FrameKind::Data, {1, 1}, 5, 0, SimTime{3}}));
  // Full: the new frame is the one dropped.
  CHECK(!q.enqueue({FrameKind::Data, {1, 2}, 9, 0, SimTime{4}}));
  REQUIRE(q.entries.size() == 3);
  CHECK(q.entries.front().enqueued == SimTime{1});

  CHECK(q.first_index_for(9) == 0);
  CHECK(q.first_index_for(5) == 2);
  CHECK(q.first_index_for(77) == -1);
  CHECK(q.has_frame_kind_to(FrameKind::Dao, 9));
  CHECK(!q.has_frame_kind_to(FrameKind::Dao, 5));

  // A parent switch points queued upward data at the new parent; control
  // frames to the old parent are not rewritten (the join logic re-issues
  // them instead).
  q.retarget(9, 4);
  CHECK(q.entries[0].dest == 4);
  CHECK(q.entries[1].dest == 9);
  CHECK(q.entries[1].kind == FrameKind::Dao);
  CHECK(q.entries[2].dest == 5);  // other destinations untouched
  CHECK(q.first_index_for(4) == 0);
}

TEST_CASE("shared-cell backoff draws inside the binary-exponential window") {
  RngStream rng(31337);
  for (int trial = 0; trial < 200; ++trial) {
    SharedBackoff b;
    int expected_exponent = SharedBackoff::kMinBe;
    for (int failure = 0; failure < 10; ++failure) {
      const int exponent_before = b.exponent;
      CHECK(exponent_before == expected_exponent);
      b.on_failure(rng);
      CHECK(b.counter >= 1);
      CHECK(b.counter <= (1 << exponent_before));
      expected_exponent = std::min(expected_exponent + 1, SharedBackoff::kMaxBe);
    }
    CHECK(b.exponent == SharedBackoff::kMaxBe);
    b.reset();
    CHECK(b.exponent == SharedBackoff::kMinBe);
    CHECK(b.counter == 0);
  }
  // The draw actually spans the whole window at the smallest exponent.
  std::set<int> seen;
  for (int i = 0; i < 200; ++i) {
    SharedBackoff b;
    b.on_failure(rng);
    seen.insert(b.counter);
  }
  CHECK(seen == std::set<int>{1, 2});
}

TEST_CASE("tx result labels") {
  CHECK(std::string(tx_result_label(TxResult::Delivered)) == "delivered");
  CHECK(std::string(tx_result_label(TxResult::Collision)) == "collision");
}
