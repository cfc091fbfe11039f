#pragma once
// Single-band run engine: drives the slotted MAC, DAG formation and
// traffic-adaptive scheduling over a shared topology and produces a
// per-packet / per-node trace. One logical network is simulated by running
// this engine once per band with the same topology, seed and application
// schedule; the planes never interact on air.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sixsim/core.hpp"
#include "sixsim/mac.hpp"
#include "sixsim/msf.hpp"
#include "sixsim/propagation.hpp"
#include "sixsim/rng.hpp"
#include "sixsim/rpl.hpp"
#include "sixsim/topology.hpp"

namespace sixsim {

enum class PacketStatus {
  InFlight,        // still queued somewhere at run end
  Delivered,       // reached the root
  DroppedQueue,    // lost to a full transmit queue
  DroppedRetries,  // lost after exhausting 1 + R attempts on one hop
  DroppedUnjoined, // generated while the source had not joined the DAG
};

const char* packet_status_label(PacketStatus s);

struct HopRecord {
  NodeId from = kNoNode;
  NodeId to = kNoNode;
  int attempts = 0;       // transmissions made on this hop (1 + retries)
  bool completed = false; // the next hop decoded the frame
};

struct PacketRecord {
  PacketId id;
  SimTime t_gen{0};
  PacketStatus status = PacketStatus::InFlight;
  SimTime t_arrival{-1};     // slot start of the delivering reception
  int completed_hops = 0;
  std::vector<HopRecord> hops;
  NodeId holder = kNoNode;   // node currently carrying the packet

  bool delivered() const { return status == PacketStatus::Delivered; }
  std::int64_t retries() const;  // sum of (attempts - 1) over hops
};

struct NodeCounters {
  std::int64_t queue_drops = 0;
  std::int64_t retry_drops = 0;
  std::int64_t unjoined_drops = 0;
  std::int64_t total_retries = 0;  // non-first attempts of data frames
  SimTime joined_at{-1};
};

// One application generation instant. The schedule is computed once per
// (seed, topology) and handed verbatim to both bands so the per-band traces
// share an identical generated-packet set.
struct AppEvent {
  SimTime t_gen{0};
  NodeId node = kNoNode;
  std::uint32_t sequence = 0;
};

// Every non-root node generates floor(duration / T_a) packets, the k-th at
// W + k*T_a + v with v ~ U[-V/2, V/2] (exactly W + k*T_a when V = 0),
// clamped into [W, W + duration). Jitter draws come from `jitter_rng` in
// (node, k) order; pass nullptr when V = 0.
std::vector<AppEvent> generate_app_schedule(const AppConfig& app,
                                            int node_count,
                                            RngStream* jitter_rng = nullptr);

struct RunConfig {
  Topology topology;
  BandConfig band;
  AppConfig app;
  WaterfallTable waterfall;
  std::vector<int> hop_sequence;     // empty -> derived from the seed
  std::vector<AppEvent> app_schedule;  // empty -> derived from app config
  int slotframe_length = kSlotframeLength;
  int queue_capacity = kQueueCapacity;
  // Join-request pacing: the first request after adopting a parent starts at
  // a random offset within the jitter window (broadcast-triggered adoptions
  // would otherwise collide), and each unanswered round doubles the ack wait
  // from the base timeout up to the cap.
  int dao_ack_timeout_slotframes = 16;
  int dao_ack_timeout_cap_slotframes = 256;
  int dao_start_jitter_slotframes = 8;

  std::vector<std::string> validate(bool strict_mode = false) const;
};

struct RunTrace {
  BandId band = BandId::Band24GHz;
  std::uint64_t seed = 0;
  int node_count = 0;
  int slotframe_length = kSlotframeLength;
  SimTime slot_duration{0};
  Topology topology;
  std::vector<PacketRecord> records;        // sorted by (source, sequence)
  std::vector<NodeCounters> node_counters;  // index = node id
  std::vector<NodeId> unjoined_at_setup_end;

  std::int64_t generated() const {
    return static_cast<std::int64_t>(records.size());
  }
  std::int64_t count(PacketStatus s) const;
  const PacketRecord* find(PacketId id) const;

  // Text format (header "tracefmt=1 ..."), one line per topology node,
  // packet record and node counter row. Byte-stable across reruns.
  std::string serialize_text(std::string_view config_hash = "") const;
  nlohmann::json to_json(std::string_view config_hash = "") const;
};

// MAC hops traversed by a delivered packet (source to root).
int hop_count(const RunTrace& trace, PacketId id);

struct RetryStats {
  std::int64_t total = 0;
  double mean_per_node = 0.0;  // total / (node_count - 1)
};

RetryStats retry_statistics(const RunTrace& trace);

// Exact packet conservation: generated = delivered + queue drops + retry
// drops + unjoined drops + in flight, cross-checked between per-packet
// records and per-node counters. Returns violation descriptions.
std::vector<std::string> check_conservation(const RunTrace& trace);

// Per-node live state. Fields are public: tests drive hand-built scenarios
// by editing schedules and queues directly.
struct Node {
  NodeId id = kNoNode;
  Position pos;
  Schedule schedule;
  TxQueue queue;
  DagState dag;
  JoinPhase phase = JoinPhase::Searching;
  std::map<NodeId, LinkEstimate> links;
  std::map<NodeId, int> neighbor_rank;  // rank from each neighbor's last DIO
  TrickleTimer trickle;
  bool dio_pending = false;
  std::map<NodeId, SharedBackoff> backoff;  // per-neighbor CSMA defer state
  CellUsageWindow msf_window;
  std::vector<int> cells_to_parent;   // slot offsets, install order
  NodeId cells_parent = kNoNode;      // neighbor the dedicated cells point at
  NodeCounters counters;
  std::map<NodeId, PacketId> last_data_from;  // per-link duplicate filter
  SimTime dao_ack_deadline{-1};
  SimTime dao_send_at{-1};       // pending join-request enqueue time
  int dao_wait_slotframes = 0;   // current ack wait; doubles per silent round
  NodeId dao_last_parent = kNoNode;  // window resets when the parent changes
};

class BandSimulation {
 public:
  explicit BandSimulation(RunConfig config);

  void step_slot();
  bool done() const;
  void run();
  RunTrace take_trace();

  Asn asn() const { return asn_; }
  SimTime now() const;
  const RunConfig& config() const { return cfg_; }
  std::vector<Node>& nodes() { return nodes_; }
  const std::vector<int>& hop_sequence() const { return hop_sequence_; }

  // Call after editing node schedules from a test.
  void rebuild_slot_index();

  // Unicast outcomes of the most recent slot, for tests and debugging.
  struct SlotOutcome {
    NodeId node = kNoNode;
    FrameKind kind = FrameKind::Data;
    TxAttemptOutcome outcome;
  };
  const std::vector<SlotOutcome>& last_outcomes() const {
    return last_outcomes_;
  }

 private:
  struct TxIntent;
  void process_generations();
  void poll_trickle_and_timeouts();
  void collect_intents(int slot_offset, std::vector<TxIntent>& intents,
                       std::vector<std::pair<NodeId, int>>& listeners);
  void resolve_channel(std::vector<TxIntent*>& txs,
                       const std::vector<NodeId>& rxs);
  void handle_decode(TxIntent& tx);
  void handle_dio(Node& receiver, const DioMessage& dio, double rssi);
  void complete_tx(TxIntent& tx, TxResult result);
  void start_join(Node& node, NodeId parent, int rank);
  void apply_parent_switch(Node& node, NodeId new_parent, int new_rank);
  bool would_form_loop(NodeId node, NodeId candidate_parent) const;
  void set_parent_cells(Node& node, NodeId new_parent);
  void apply_msf_boundary_actions();
  PacketRecord* record_of(PacketId id);
  Node& node(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }

  RunConfig cfg_;
  SimTime end_time_{0};
  std::vector<Node> nodes_;
  std::vector<int> hop_sequence_;
  std::vector<AppEvent> schedule_;
  std::size_t next_event_ = 0;
  Asn asn_;
  std::map<PacketId, std::size_t> record_index_;
  std::vector<PacketRecord> records_;
  // (packet, transmitter) -> index into the record's hop list; tracks the
  // hop entry opened by a decode until the transmitter finishes the frame
  std::map<std::pair<PacketId, NodeId>, std::size_t> active_hop_;
  // slot offset -> ids of nodes owning a dedicated cell there (ascending)
  std::vector<std::vector<NodeId>> nodes_at_slot_;
  struct PendingMsf {
    NodeId node = kNoNode;
    AdaptDecision decision = AdaptDecision::None;
  };
  std::vector<PendingMsf> pending_msf_;
  std::vector<SlotOutcome> last_outcomes_;
  RngStream prop_rng_;
  RngStream mac_rng_;
};

RunTrace run_band(const RunConfig& config);

}  // namespace sixsim
