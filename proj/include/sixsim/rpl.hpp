#pragma once
// Routing plane: rank-based DAG formation with an ETX objective, hysteresis
// on parent switches, DIO dissemination on a doubling (trickle-style) timer,
// and a DAO / DAO-ACK join handshake carried as MAC frames.

#include <cstdint>
#include <limits>

#include "sixsim/core.hpp"
#include "sixsim/rng.hpp"

namespace sixsim {

inline constexpr int kRankInfinite = std::numeric_limits<int>::max() / 2;
inline constexpr int kRootRank = 256;
inline constexpr int kRankUnitsPerEtx = 256;
inline constexpr int kRankHysteresis = 192;
inline constexpr double kEtxAlpha = 0.1;  // EWMA weight of the newest attempt
inline constexpr double kMaxEtx = 16.0;   // floor on the success estimate
// Links whose current estimate is worse than this are not usable as parent
// candidates (the conventional max-link-metric of the hysteresis objective).
inline constexpr double kMaxUsableEtx = 4.0;

struct DagState {
  int rank = kRankInfinite;
  NodeId preferred_parent = kNoNode;
  bool joined = false;
  SimTime join_time{-1};
};

DagState root_dag_state();

struct DioMessage {
  NodeId origin = kNoNode;
  int rank = kRankInfinite;
  BandId band = BandId::Band24GHz;
};

// Per-neighbor link quality: EWMA of per-attempt success, seeded from the
// first DIO's RSSI through the waterfall table.
struct LinkEstimate {
  double success_ewma = 0.0;
  bool initialized = false;

  void init_from_pdr(double pdr);
  void update(bool success);
  double etx() const;  // 1 / success estimate, capped at kMaxEtx
};

// Rank step for one hop: round(256 * ETX).
int rank_increment(double etx);

struct ParentDecision {
  bool adopt = false;
  int candidate_rank = kRankInfinite;
};

// Parent selection rule applied to one decoded DIO: adopt when unattached,
// switch when the candidate rank beats the current rank by more than the
// hysteresis, and break exact rank ties toward the lower node id.
ParentDecision evaluate_dio(const DagState& dag, const DioMessage& dio,
                            double candidate_etx);

void complete_join(DagState& dag, NodeId parent, SimTime now);

// Join handshake progress; the root starts (and stays) Joined.
enum class JoinPhase { Searching, WaitDaoTx, WaitDaoAck, Joined };

// DIO pacing: interval doubles from 1 to 64 slotframes, one DIO fired at a
// uniformly random slot in the second half of each interval; reset to the
// minimum interval on any parent change.
struct TrickleTimer {
  static constexpr int kMinIntervalSlotframes = 1;
  static constexpr int kMaxIntervalSlotframes = 64;

  bool active = false;
  int interval_slotframes = kMinIntervalSlotframes;
  std::uint64_t interval_start_asn = 0;
  std::uint64_t fire_asn = 0;

  void start(std::uint64_t now_asn, int slotframe_length, RngStream& rng);
  void reset(std::uint64_t now_asn, int slotframe_length, RngStream& rng) {
    start(now_asn, slotframe_length, rng);
  }
  // Advances interval bookkeeping; returns true when the DIO fires at `asn`.
  bool poll(std::uint64_t asn, int slotframe_length, RngStream& rng);
};

}  // namespace sixsim
