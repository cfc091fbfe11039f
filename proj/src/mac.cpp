#include "sixsim/mac.hpp"

#include <algorithm>
#include <numeric>

namespace sixsim {

Schedule Schedule::with_minimal(int slotframe_length) {
  Schedule s;
  s.slotframe_length = slotframe_length;
  s.cells.push_back({0, 0, CellKind::SharedMinimal, kNoNode});
  return s;
}

const Cell* Schedule::cell_at(int slot_offset) const {
  for (const auto& c : cells)
    if (c.slot_offset == slot_offset) return &c;
  return nullptr;
}

bool Schedule::add(const Cell& cell) {
  if (cell.slot_offset < 0 || cell.slot_offset >= slotframe_length) return false;
  if (!slot_free(cell.slot_offset)) return false;
  const auto at = std::upper_bound(
      cells.begin(), cells.end(), cell,
      [](const Cell& a, const Cell& b) { return a.slot_offset < b.slot_offset; });
  cells.insert(at, cell);
  return true;
}

bool Schedule::remove_at(int slot_offset) {
  for (auto it = cells.begin(); it != cells.end(); ++it) {
    if (it->slot_offset == slot_offset) {
      cells.erase(it);
      return true;
    }
  }
  return false;
}

int Schedule::dedicated_tx_count_to(NodeId peer) const {
  int n = 0;
  for (const auto& c : cells)
    if (c.kind == CellKind::TxDedicated && c.peer == peer) ++n;
  return n;
}

std::vector<int> Schedule::tx_slots_to(NodeId peer) const {
  std::vector<int> slots;
  for (const auto& c : cells)
    if (c.kind == CellKind::TxDedicated && c.peer == peer)
      slots.push_back(c.slot_offset);
  return slots;
}

std::vector<std::string> Schedule::validate(int channel_count) const {
  std::vector<std::string> v;
  if (slotframe_length < 1) v.push_back("slotframe_length must be positive");
  bool minimal = false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (c.slot_offset < 0 || c.slot_offset >= slotframe_length)
      v.push_back("cell slot_offset out of range");
    if (c.channel_offset < 0 || c.channel_offset >= channel_count)
      v.push_back("cell channel_offset out of range");
    if (i > 0 && cells[i - 1].slot_offset >= c.slot_offset)
      v.push_back("at most one cell per slot, sorted by slot_offset");
    if (c.kind == CellKind::SharedMinimal) {
      if (c.slot_offset != 0 || c.channel_offset != 0)
        v.push_back("minimal cell must sit at (slot 0, channel offset 0)");
      minimal = true;
    } else if (c.peer == kNoNode) {
      v.push_back("dedicated cell needs a peer");
    }
  }
  if (!minimal) v.push_back("schedule must contain the shared minimal cell");
  return v;
}

std::vector<int> make_hop_sequence(int channel_count, RngStream& rng) {
  std::vector<int> seq(static_cast<std::size_t>(channel_count));
  std::iota(seq.begin(), seq.end(), 0);
  for (int i = channel_count - 1; i > 0; --i) {
    const auto j = static_cast<int>(
        rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(seq[static_cast<std::size_t>(i)], seq[static_cast<std::size_t>(j)]);
  }
  return seq;
}

int hop_channel(Asn asn, int channel_offset, std::span<const int> hop_sequence) {
  const auto n = static_cast<std::uint64_t>(hop_sequence.size());
  return hop_sequence[static_cast<std::size_t>(
      (asn.value + static_cast<std::uint64_t>(channel_offset)) % n)];
}

const char* tx_result_label(TxResult r) {
  switch (r) {
    case TxResult::Delivered: return "delivered";
    case TxResult::AckMissed: return "ack_missed";
    case TxResult::NoAck: return "no_ack";
    case TxResult::Collision: return "collision";
  }
  return "?";
}

bool TxQueue::enqueue(TxEntry entry) {
  if (static_cast<int>(entries.size()) >= capacity) return false;
  entries.push_back(std::move(entry));
  return true;
}

int TxQueue::first_index_for(NodeId dest) const {
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].dest == dest) return static_cast<int>(i);
  return -1;
}

bool TxQueue::has_frame_kind_to(FrameKind kind, NodeId dest) const {
  for (const auto& e : entries)
    if (e.kind == kind && e.dest == dest) return true;
  return false;
}

void TxQueue::retarget(NodeId old_dest, NodeId new_dest) {
  for (auto& e : entries)
    if (e.kind == FrameKind::Data && e.dest == old_dest) e.dest = new_dest;
}

void SharedBackoff::on_failure(RngStream& rng) {
  const auto window = static_cast<std::uint64_t>(1) << exponent;  // 2^BE
  counter = static_cast<int>(1 + rng.uniform_int(window));        // [1, 2^BE]
  exponent = std::min(exponent + 1, kMaxBe);
}

}  // namespace sixsim
