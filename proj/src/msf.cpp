#include "sixsim/msf.hpp"

namespace sixsim {

AdaptDecision adapt_cells(const CellUsageWindow& window,
                          int dedicated_tx_cells) {
  if (window.window_length < kMsfMaxNumCells) return AdaptDecision::None;
  const double usage =
      static_cast<double>(window.used) / static_cast<double>(window.window_length);
  if (usage > kMsfHighUsage) return AdaptDecision::Add;
  if (usage < kMsfLowUsage && dedicated_tx_cells > 1) return AdaptDecision::Delete;
  return AdaptDecision::None;
}

std::optional<NegotiatedCell> negotiate_cell(Schedule& tx_side, NodeId tx_node,
                                             Schedule& rx_side, NodeId rx_node,
                                             int channel_count,
                                             RngStream& rng) {
  std::vector<int> free_slots;
  for (int slot = 0; slot < tx_side.slotframe_length; ++slot)
    if (tx_side.slot_free(slot) && rx_side.slot_free(slot))
      free_slots.push_back(slot);
  if (free_slots.empty()) return std::nullopt;

  NegotiatedCell cell;
  cell.slot_offset = free_slots[static_cast<std::size_t>(
      rng.uniform_int(free_slots.size()))];
  cell.channel_offset =
      static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(channel_count)));
  tx_side.add({cell.slot_offset, cell.channel_offset, CellKind::TxDedicated,
               rx_node});
  rx_side.add({cell.slot_offset, cell.channel_offset, CellKind::RxDedicated,
               tx_node});
  return cell;
}

}  // namespace sixsim
