#pragma once
// Traffic-adaptive scheduling of dedicated cells: a sliding usage window over
// the node's dedicated Tx cells toward its parent decides when to negotiate
// an extra cell or release a surplus one.

#include <optional>

#include "sixsim/mac.hpp"
#include "sixsim/rng.hpp"

namespace sixsim {

inline constexpr int kMsfMaxNumCells = 64;    // window length, cell instances
inline constexpr double kMsfHighUsage = 0.75;
inline constexpr double kMsfLowUsage = 0.25;

struct CellUsageWindow {
  int window_length = 0;  // elapsed dedicated-cell instances
  int used = 0;           // instances that carried traffic

  void record(bool carried_traffic) {
    ++window_length;
    if (carried_traffic) ++used;
  }
  void reset() { window_length = used = 0; }
  bool full() const { return window_length >= kMsfMaxNumCells; }
};

enum class AdaptDecision { None, Add, Delete };

// Evaluated once the window is full: usage above 75% requests one more cell,
// usage below 25% releases one provided more than one dedicated Tx cell
// remains. The caller resets the window afterwards.
AdaptDecision adapt_cells(const CellUsageWindow& window,
                          int dedicated_tx_cells);

struct NegotiatedCell {
  int slot_offset = 0;
  int channel_offset = 0;
};

// Picks a uniformly random (slot, channel offset) pair whose slot is free in
// both schedules and installs the paired TxDedicated / RxDedicated cells
// atomically. Returns nothing when no common free slot exists (saturated).
std::optional<NegotiatedCell> negotiate_cell(Schedule& tx_side, NodeId tx_node,
                                             Schedule& rx_side, NodeId rx_node,
                                             int channel_count, RngStream& rng);

}  // namespace sixsim
