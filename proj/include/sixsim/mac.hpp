#pragma once
// Slotted MAC plane: slotframe schedule of cells, channel hopping, transmit
// queue with bounded retries, and the shared-cell CSMA backoff.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sixsim/core.hpp"
#include "sixsim/rng.hpp"

namespace sixsim {

inline constexpr int kSlotframeLength = 101;  // coprime with 16 and 34
inline constexpr int kQueueCapacity = 10;

enum class CellKind { SharedMinimal, TxDedicated, RxDedicated };

struct Cell {
  int slot_offset = 0;
  int channel_offset = 0;
  CellKind kind = CellKind::SharedMinimal;
  NodeId peer = kNoNode;  // kNoNode for the shared cell
};

// Per-node schedule: at most one cell per slot offset; every node carries
// the shared minimal cell at (slot 0, channel offset 0).
struct Schedule {
  int slotframe_length = kSlotframeLength;
  std::vector<Cell> cells;  // kept sorted by slot_offset

  static Schedule with_minimal(int slotframe_length = kSlotframeLength);

  const Cell* cell_at(int slot_offset) const;
  bool slot_free(int slot_offset) const { return cell_at(slot_offset) == nullptr; }
  bool add(const Cell& cell);        // false if the slot is taken
  bool remove_at(int slot_offset);   // false if no such cell
  int dedicated_tx_count_to(NodeId peer) const;
  std::vector<int> tx_slots_to(NodeId peer) const;
  bool has_dedicated_tx_to(NodeId peer) const {
    return dedicated_tx_count_to(peer) > 0;
  }

  std::vector<std::string> validate(int channel_count) const;
};

// Network-wide per-band hop sequence: a seed-derived pseudo-random
// permutation of the physical channel indices.
std::vector<int> make_hop_sequence(int channel_count, RngStream& rng);

// Physical channel of a cell at a given slot:
// hop_sequence[(asn + channel_offset) mod channel_count].
int hop_channel(Asn asn, int channel_offset,
                std::span<const int> hop_sequence);

enum class FrameKind { Data, Dao, DaoAck };

struct TxEntry {
  FrameKind kind = FrameKind::Data;
  PacketId packet;       // meaningful for Data frames only
  NodeId dest = kNoNode;
  int retries = 0;       // failed attempts so far
  SimTime enqueued{0};
};

// FIFO transmit queue with a hard capacity; enqueue on a full queue drops
// the new frame.
struct TxQueue {
  int capacity = kQueueCapacity;
  std::deque<TxEntry> entries;

  bool enqueue(TxEntry entry);                 // false = dropped (full)
  int first_index_for(NodeId dest) const;      // -1 if none
  bool has_frame_kind_to(FrameKind kind, NodeId dest) const;
  void retarget(NodeId old_dest, NodeId new_dest);  // upward traffic follows
                                                    // a parent switch
};

enum class TxResult {
  Delivered,  // frame decoded and ack decoded
  AckMissed,  // frame decoded, ack lost
  NoAck,      // frame lost with no concurrent transmitter
  Collision,  // frame lost with concurrent same-channel transmitters
};

const char* tx_result_label(TxResult r);

struct TxAttemptOutcome {
  TxResult result = TxResult::NoAck;
  int channel = 0;
  Asn asn;
};

// Shared-cell CSMA: after a failed shared-cell attempt the node skips a
// uniform [1, 2^BE] number of shared-cell opportunities, BE in [1, 7]
// (802.15.4e defaults), doubling per failure and reset on success.
struct SharedBackoff {
  static constexpr int kMinBe = 1;
  static constexpr int kMaxBe = 7;

  int exponent = kMinBe;
  int counter = 0;  // shared-cell opportunities left to skip

  void on_failure(RngStream& rng);
  void reset() { exponent = kMinBe; counter = 0; }
};

}  // namespace sixsim
