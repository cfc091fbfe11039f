#include "sixsim/rpl.hpp"

#include <algorithm>
#include <cmath>

namespace sixsim {

DagState root_dag_state() {
  DagState d;
  d.rank = kRootRank;
  d.preferred_parent = kNoNode;
  d.joined = true;
  d.join_time = SimTime{0};
  return d;
}

void LinkEstimate::init_from_pdr(double pdr) {
  success_ewma = std::clamp(pdr, 1.0 / kMaxEtx, 1.0);
  initialized = true;
}

void LinkEstimate::update(bool success) {
  success_ewma = (1.0 - kEtxAlpha) * success_ewma + kEtxAlpha * (success ? 1.0 : 0.0);
  success_ewma = std::clamp(success_ewma, 1.0 / kMaxEtx, 1.0);
}

double LinkEstimate::etx() const {
  return 1.0 / std::clamp(success_ewma, 1.0 / kMaxEtx, 1.0);
}

int rank_increment(double etx) {
  return static_cast<int>(std::lround(kRankUnitsPerEtx * etx));
}

ParentDecision evaluate_dio(const DagState& dag, const DioMessage& dio,
                            double candidate_etx) {
  ParentDecision d;
  if (dio.rank >= kRankInfinite) return d;
  const long long candidate =
      static_cast<long long>(dio.rank) + rank_increment(candidate_etx);
  if (candidate >= kRankInfinite) return d;
  d.candidate_rank = static_cast<int>(candidate);
  if (dag.preferred_parent == kNoNode) {
    d.adopt = true;
    return d;
  }
  if (dio.origin == dag.preferred_parent) {
    // Route refresh through the current parent: track it, no switch logic.
    d.adopt = false;
    return d;
  }
  if (d.candidate_rank < dag.rank - kRankHysteresis) {
    d.adopt = true;
  } else if (d.candidate_rank == dag.rank && dio.origin < dag.preferred_parent) {
    // Deterministic tie-break between equally ranked candidates.
    d.adopt = true;
  }
  return d;
}

void complete_join(DagState& dag, NodeId parent, SimTime now) {
  dag.preferred_parent = parent;
  dag.joined = true;
  dag.join_time = now;
}

void TrickleTimer::start(std::uint64_t now_asn, int slotframe_length,
                         RngStream& rng) {
  active = true;
  interval_slotframes = kMinIntervalSlotframes;
  interval_start_asn = now_asn;
  const auto interval_slots = static_cast<std::uint64_t>(interval_slotframes) *
                              static_cast<std::uint64_t>(slotframe_length);
  fire_asn = interval_start_asn + interval_slots / 2 +
             rng.uniform_int(interval_slots - interval_slots / 2);
}

bool TrickleTimer::poll(std::uint64_t asn, int slotframe_length,
                        RngStream& rng) {
  if (!active) return false;
  const auto interval_slots = static_cast<std::uint64_t>(interval_slotframes) *
                              static_cast<std::uint64_t>(slotframe_length);
  if (asn >= interval_start_asn + interval_slots) {
    interval_start_asn = asn;
    interval_slotframes = std::min(interval_slotframes * 2, kMaxIntervalSlotframes);
    const auto next_slots = static_cast<std::uint64_t>(interval_slotframes) *
                            static_cast<std::uint64_t>(slotframe_length);
    fire_asn = interval_start_asn + next_slots / 2 +
               rng.uniform_int(next_slots - next_slots / 2);
  }
  return asn == fire_asn;
}

}  // namespace sixsim
