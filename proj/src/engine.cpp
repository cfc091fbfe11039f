#include "sixsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

namespace sixsim {

namespace {

std::string join_violations(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += "; ";
    out += s;
  }
  return out;
}

}  // namespace

const char* packet_status_label(PacketStatus s) {
  switch (s) {
    case PacketStatus::InFlight: return "in_flight";
    case PacketStatus::Delivered: return "delivered";
    case PacketStatus::DroppedQueue: return "dropped_queue";
    case PacketStatus::DroppedRetries: return "dropped_retries";
    case PacketStatus::DroppedUnjoined: return "dropped_unjoined";
  }
  return "?";
}

std::int64_t PacketRecord::retries() const {
  std::int64_t sum = 0;
  for (const HopRecord& h : hops)
    if (h.attempts > 1) sum += h.attempts - 1;
  return sum;
}

std::vector<AppEvent> generate_app_schedule(const AppConfig& app,
                                            int node_count,
                                            RngStream* jitter_rng) {
  if (node_count < 1) throw std::invalid_argument("node_count < 1");
  if (app.message_interval.us <= 0)
    throw std::invalid_argument("message_interval must be positive");
  const std::int64_t count = app.duration.us / app.message_interval.us;
  const std::int64_t lo = app.setup_time.us;
  const std::int64_t hi = app.setup_time.us + app.duration.us - 1;
  std::vector<AppEvent> events;
  events.reserve(static_cast<std::size_t>(count) *
                 static_cast<std::size_t>(node_count > 0 ? node_count - 1 : 0));
  for (NodeId id = 1; id < node_count; ++id) {
    for (std::int64_t k = 0; k < count; ++k) {
      std::int64_t t = app.setup_time.us + k * app.message_interval.us;
      if (app.interval_variance.us > 0) {
        if (jitter_rng == nullptr)
          throw std::invalid_argument("jitter rng required when variance > 0");
        const double v = (jitter_rng->uniform() - 0.5) *
                         static_cast<double>(app.interval_variance.us);
        t += std::llround(v);
      }
      t = std::clamp(t, lo, hi);
      events.push_back({SimTime{t}, id, static_cast<std::uint32_t>(k)});
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const AppEvent& a, const AppEvent& b) {
                     if (a.t_gen != b.t_gen) return a.t_gen < b.t_gen;
                     return a.node < b.node;
                   });
  return events;
}

std::vector<std::string> RunConfig::validate(bool strict_mode) const {
  std::vector<std::string> v;
  if (topology.positions.empty()) v.push_back("topology has no nodes");
  for (const auto& s : validate_band_config(band, strict_mode)) v.push_back(s);
  for (const auto& s : validate_app_config(app)) v.push_back(s);
  for (const auto& s : waterfall.validate()) v.push_back(s);
  if (slotframe_length < 2) v.push_back("slotframe_length must be >= 2");
  if (queue_capacity < 1) v.push_back("queue_capacity must be >= 1");
  if (dao_ack_timeout_slotframes < 1)
    v.push_back("dao_ack_timeout_slotframes must be >= 1");
  if (dao_ack_timeout_cap_slotframes < dao_ack_timeout_slotframes)
    v.push_back("dao_ack_timeout_cap_slotframes must be >= the base timeout");
  if (dao_start_jitter_slotframes < 1)
    v.push_back("dao_start_jitter_slotframes must be >= 1");
  if (!hop_sequence.empty()) {
    std::vector<int> sorted = hop_sequence;
    std::sort(sorted.begin(), sorted.end());
    bool perm = static_cast<int>(sorted.size()) == band.channel_count;
    for (int i = 0; perm && i < static_cast<int>(sorted.size()); ++i)
      perm = sorted[static_cast<std::size_t>(i)] == i;
    if (!perm)
      v.push_back("hop_sequence must be a permutation of 0..channel_count-1");
  }
  if (!app_schedule.empty()) {
    const SimTime lo = app.setup_time;
    const SimTime hi = app.setup_time + app.duration;
    std::set<std::pair<NodeId, std::uint32_t>> ids;
    SimTime prev{std::numeric_limits<std::int64_t>::min()};
    for (const AppEvent& ev : app_schedule) {
      if (ev.t_gen < prev) v.push_back("app_schedule not time-sorted");
      prev = ev.t_gen;
      if (ev.node <= kRootId ||
          ev.node >= static_cast<NodeId>(topology.positions.size()))
        v.push_back("app_schedule node out of range");
      if (ev.t_gen < lo || ev.t_gen >= hi)
        v.push_back("app_schedule event outside the traffic window");
      if (!ids.insert({ev.node, ev.sequence}).second)
        v.push_back("app_schedule has duplicate (node, sequence)");
    }
  }
  return v;
}

std::int64_t RunTrace::count(PacketStatus s) const {
  std::int64_t n = 0;
  for (const PacketRecord& r : records)
    if (r.status == s) ++n;
  return n;
}

const PacketRecord* RunTrace::find(PacketId id) const {
  auto it = std::lower_bound(records.begin(), records.end(), id,
                             [](const PacketRecord& r, const PacketId& key) {
                               return r.id < key;
                             });
  if (it == records.end() || it->id != id) return nullptr;
  return &*it;
}

std::string RunTrace::serialize_text(std::string_view config_hash) const {
  std::ostringstream out;
  out.precision(17);
  out << "tracefmt=1 band=" << band_label(band) << " seed=" << std::hex << seed
      << std::dec << " nodes=" << node_count
      << " slotframe=" << slotframe_length << " slot_us=" << slot_duration.us
      << " cfg=" << (config_hash.empty() ? std::string_view{"-"} : config_hash)
      << '\n';
  out << topology.serialize();
  for (const PacketRecord& r : records) {
    out << "pkt " << r.id.source << ' ' << r.id.sequence << ' ' << r.t_gen.us
        << ' ' << packet_status_label(r.status) << ' ';
    if (r.t_arrival.us >= 0)
      out << r.t_arrival.us;
    else
      out << '-';
    out << ' ' << r.holder << ' ' << r.completed_hops << ' ' << r.hops.size();
    for (const HopRecord& h : r.hops)
      out << ' ' << h.from << ':' << h.to << ':' << h.attempts << ':'
          << (h.completed ? 1 : 0);
    out << '\n';
  }
  for (std::size_t i = 0; i < node_counters.size(); ++i) {
    const NodeCounters& c = node_counters[i];
    out << "node " << i << ' ' << c.queue_drops << ' ' << c.retry_drops << ' '
        << c.unjoined_drops << ' ' << c.total_retries << ' ';
    if (c.joined_at.us >= 0)
      out << c.joined_at.us;
    else
      out << '-';
    out << '\n';
  }
  if (!unjoined_at_setup_end.empty()) {
    out << "unjoined";
    for (NodeId id : unjoined_at_setup_end) out << ' ' << id;
    out << '\n';
  }
  return out.str();
}

nlohmann::json RunTrace::to_json(std::string_view config_hash) const {
  nlohmann::json j;
  j["format"] = 1;
  j["band"] = band_label(band);
  {
    std::ostringstream s;
    s << std::hex << seed;
    j["seed_hex"] = s.str();
  }
  j["node_count"] = node_count;
  j["slotframe_length"] = slotframe_length;
  j["slot_us"] = slot_duration.us;
  if (!config_hash.empty()) j["config_hash"] = std::string(config_hash);
  nlohmann::json topo;
  topo["side_length_m"] = topology.side_length;
  nlohmann::json pos = nlohmann::json::array();
  for (const Position& p : topology.positions)
    pos.push_back({{"x", p.x}, {"y", p.y}});
  topo["positions"] = std::move(pos);
  j["topology"] = std::move(topo);
  nlohmann::json pkts = nlohmann::json::array();
  for (const PacketRecord& r : records) {
    nlohmann::json p;
    p["source"] = r.id.source;
    p["sequence"] = r.id.sequence;
    p["t_gen_us"] = r.t_gen.us;
    p["status"] = packet_status_label(r.status);
    if (r.t_arrival.us >= 0) p["t_arrival_us"] = r.t_arrival.us;
    p["completed_hops"] = r.completed_hops;
    p["retries"] = r.retries();
    nlohmann::json hops = nlohmann::json::array();
    for (const HopRecord& h : r.hops)
      hops.push_back({{"from", h.from},
                      {"to", h.to},
                      {"attempts", h.attempts},
                      {"completed", h.completed}});
    p["hops"] = std::move(hops);
    pkts.push_back(std::move(p));
  }
  j["packets"] = std::move(pkts);
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < node_counters.size(); ++i) {
    const NodeCounters& c = node_counters[i];
    nlohmann::json n;
    n["id"] = i;
    n["queue_drops"] = c.queue_drops;
    n["retry_drops"] = c.retry_drops;
    n["unjoined_drops"] = c.unjoined_drops;
    n["total_retries"] = c.total_retries;
    if (c.joined_at.us >= 0) n["joined_at_us"] = c.joined_at.us;
    nodes.push_back(std::move(n));
  }
  j["nodes"] = std::move(nodes);
  j["unjoined_at_setup_end"] = unjoined_at_setup_end;
  return j;
}

int hop_count(const RunTrace& trace, PacketId id) {
  const PacketRecord* rec = trace.find(id);
  if (rec == nullptr) throw std::invalid_argument("packet not in trace");
  if (!rec->delivered())
    throw std::invalid_argument("hop_count requires a delivered packet");
  return rec->completed_hops;
}

RetryStats retry_statistics(const RunTrace& trace) {
  RetryStats st;
  for (const NodeCounters& c : trace.node_counters) st.total += c.total_retries;
  if (trace.node_count > 1)
    st.mean_per_node =
        static_cast<double>(st.total) / static_cast<double>(trace.node_count - 1);
  return st;
}

std::vector<std::string> check_conservation(const RunTrace& trace) {
  std::vector<std::string> violations;
  auto fail = [&](const std::string& s) { violations.push_back(s); };

  const std::int64_t delivered = trace.count(PacketStatus::Delivered);
  const std::int64_t queue_drops = trace.count(PacketStatus::DroppedQueue);
  const std::int64_t retry_drops = trace.count(PacketStatus::DroppedRetries);
  const std::int64_t unjoined_drops = trace.count(PacketStatus::DroppedUnjoined);
  const std::int64_t in_flight = trace.count(PacketStatus::InFlight);
  if (trace.generated() !=
      delivered + queue_drops + retry_drops + unjoined_drops + in_flight)
    fail("packet statuses do not partition the generated set");

  std::int64_t c_queue = 0, c_retry = 0, c_unjoined = 0, c_retries = 0;
  for (const NodeCounters& c : trace.node_counters) {
    c_queue += c.queue_drops;
    c_retry += c.retry_drops;
    c_unjoined += c.unjoined_drops;
    c_retries += c.total_retries;
  }
  if (c_queue != queue_drops)
    fail("queue-drop counters disagree with packet records");
  if (c_retry != retry_drops)
    fail("retry-drop counters disagree with packet records");
  if (c_unjoined != unjoined_drops)
    fail("unjoined-drop counters disagree with packet records");

  std::int64_t r_retries = 0;
  for (const PacketRecord& r : trace.records) {
    r_retries += r.retries();
    if (r.delivered() && r.t_arrival.us < 0)
      fail("delivered packet without arrival time");
    if (r.delivered() && r.t_arrival < r.t_gen)
      fail("packet arrived before it was generated");
    if (r.delivered() && r.completed_hops < 1)
      fail("delivered packet with no completed hop");
    if (!r.delivered() && r.t_arrival.us >= 0)
      fail("undelivered packet carries an arrival time");
  }
  if (r_retries != c_retries)
    fail("retry counters disagree with per-hop attempts");
  return violations;
}

// ---------------------------------------------------------------------------
// BandSimulation

struct BandSimulation::TxIntent {
  NodeId tx = kNoNode;
  int channel = 0;
  bool shared = false;
  bool broadcast = false;
  DioMessage dio;
  std::size_t queue_index = 0;
  NodeId dest = kNoNode;
  bool decoded = false;  // unicast: the destination decoded this frame
  std::vector<std::pair<NodeId, double>> dio_receivers;  // broadcast decodes
};

BandSimulation::BandSimulation(RunConfig config) : cfg_(std::move(config)) {
  const auto violations = cfg_.validate();
  if (!violations.empty())
    throw std::invalid_argument("invalid run config: " +
                                join_violations(violations));
  end_time_ = cfg_.app.setup_time + cfg_.app.duration;

  if (cfg_.hop_sequence.empty()) {
    RngStream hop_rng = RngStream::derive(
        cfg_.app.seed, std::string("hopseq.") + band_label(cfg_.band.band_id));
    hop_sequence_ = make_hop_sequence(cfg_.band.channel_count, hop_rng);
  } else {
    hop_sequence_ = cfg_.hop_sequence;
  }

  const int n = static_cast<int>(cfg_.topology.positions.size());
  if (cfg_.app_schedule.empty()) {
    RngStream jitter_rng = RngStream::derive(cfg_.app.seed, "app");
    schedule_ = generate_app_schedule(cfg_.app, n, &jitter_rng);
  } else {
    schedule_ = cfg_.app_schedule;
  }

  prop_rng_ = RngStream::derive(
      cfg_.app.seed, std::string("prop.") + band_label(cfg_.band.band_id));
  mac_rng_ = RngStream::derive(
      cfg_.app.seed, std::string("mac.") + band_label(cfg_.band.band_id));

  nodes_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Node& nd = nodes_[static_cast<std::size_t>(i)];
    nd.id = i;
    nd.pos = cfg_.topology.positions[static_cast<std::size_t>(i)];
    nd.schedule = Schedule::with_minimal(cfg_.slotframe_length);
    nd.queue.capacity = cfg_.queue_capacity;
  }
  Node& root = nodes_[0];
  root.dag = root_dag_state();
  root.phase = JoinPhase::Joined;
  root.counters.joined_at = SimTime{0};
  root.trickle.start(0, cfg_.slotframe_length, mac_rng_);

  records_.reserve(schedule_.size());
  rebuild_slot_index();
}

SimTime BandSimulation::now() const { return asn_to_time(asn_, cfg_.band); }

bool BandSimulation::done() const { return now() >= end_time_; }

void BandSimulation::run() {
  while (!done()) step_slot();
}

void BandSimulation::rebuild_slot_index() {
  nodes_at_slot_.assign(static_cast<std::size_t>(cfg_.slotframe_length), {});
  for (const Node& nd : nodes_)
    for (const Cell& c : nd.schedule.cells)
      if (c.kind != CellKind::SharedMinimal)
        nodes_at_slot_[static_cast<std::size_t>(c.slot_offset)].push_back(nd.id);
}

PacketRecord* BandSimulation::record_of(PacketId id) {
  auto it = record_index_.find(id);
  if (it == record_index_.end()) return nullptr;
  return &records_[it->second];
}

void BandSimulation::step_slot() {
  if (done()) return;
  last_outcomes_.clear();
  process_generations();
  poll_trickle_and_timeouts();

  const int L = cfg_.slotframe_length;
  const int slot_offset =
      static_cast<int>(asn_.value % static_cast<std::uint64_t>(L));
  std::vector<TxIntent> intents;
  std::vector<std::pair<NodeId, int>> listeners;
  collect_intents(slot_offset, intents, listeners);

  std::vector<int> channels;
  channels.reserve(intents.size());
  for (const TxIntent& ti : intents) channels.push_back(ti.channel);
  std::sort(channels.begin(), channels.end());
  channels.erase(std::unique(channels.begin(), channels.end()), channels.end());
  for (int ch : channels) {
    std::vector<TxIntent*> txs;
    for (TxIntent& ti : intents)
      if (ti.channel == ch) txs.push_back(&ti);
    std::vector<NodeId> rxs;
    for (const auto& [id, lch] : listeners)
      if (lch == ch) rxs.push_back(id);
    resolve_channel(txs, rxs);
  }

  if (slot_offset == L - 1) apply_msf_boundary_actions();
  ++asn_.value;
}

void BandSimulation::process_generations() {
  const SimTime t = now();
  while (next_event_ < schedule_.size() && schedule_[next_event_].t_gen <= t) {
    const AppEvent& ev = schedule_[next_event_++];
    const PacketId pid{ev.node, ev.sequence};
    record_index_[pid] = records_.size();
    PacketRecord rec;
    rec.id = pid;
    rec.t_gen = ev.t_gen;
    Node& src = node(ev.node);
    if (!src.dag.joined) {
      rec.status = PacketStatus::DroppedUnjoined;
      src.counters.unjoined_drops += 1;
    } else {
      const TxEntry entry{FrameKind::Data, pid, src.dag.preferred_parent, 0,
                          ev.t_gen};
      if (src.queue.enqueue(entry)) {
        rec.holder = ev.node;
      } else {
        rec.status = PacketStatus::DroppedQueue;
        src.counters.queue_drops += 1;
      }
    }
    records_.push_back(std::move(rec));
  }
}

void BandSimulation::poll_trickle_and_timeouts() {
  const SimTime t = now();
  for (Node& nd : nodes_) {
    if (nd.trickle.poll(asn_.value, cfg_.slotframe_length, mac_rng_))
      nd.dio_pending = true;
    if (nd.phase == JoinPhase::WaitDaoAck && nd.dao_ack_deadline.us >= 0 &&
        t >= nd.dao_ack_deadline) {
      // The join request got through but the ack is still pending on the
      // parent's side; schedule a fresh request instead of abandoning the
      // parent (a late ack still completes the join), backing off so the
      // stuck joiners do not drown the acks they are waiting for.
      nd.phase = JoinPhase::WaitDaoTx;
      nd.dao_ack_deadline = SimTime{-1};
      const std::int64_t jitter_slots =
          static_cast<std::int64_t>(mac_rng_.uniform_int(
              static_cast<std::uint64_t>(cfg_.dao_start_jitter_slotframes) *
              static_cast<std::uint64_t>(cfg_.slotframe_length)));
      nd.dao_send_at = t + SimTime{jitter_slots * cfg_.band.slot_duration.us};
      nd.dao_wait_slotframes =
          std::min(nd.dao_wait_slotframes * 2,
                   cfg_.dao_ack_timeout_cap_slotframes);
    }
    if (nd.phase == JoinPhase::WaitDaoTx && nd.dao_send_at.us >= 0 &&
        t >= nd.dao_send_at) {
      const NodeId parent = nd.dag.preferred_parent;
      if (nd.queue.has_frame_kind_to(FrameKind::Dao, parent) ||
          nd.queue.enqueue({FrameKind::Dao, PacketId{nd.id, 0}, parent, 0, t}))
        nd.dao_send_at = SimTime{-1};
      else  // queue full of data to forward: try again next slotframe
        nd.dao_send_at =
            t + SimTime{static_cast<std::int64_t>(cfg_.slotframe_length) *
                        cfg_.band.slot_duration.us};
    }
  }
}

void BandSimulation::collect_intents(
    int slot_offset, std::vector<TxIntent>& intents,
    std::vector<std::pair<NodeId, int>>& listeners) {
  if (slot_offset == 0) {
    // Shared minimal cell: whole network, broadcasts beat unicasts.
    const int ch = hop_channel(asn_, 0, hop_sequence_);
    for (Node& nd : nodes_) {
      if (nd.dio_pending) {
        nd.dio_pending = false;
        TxIntent ti;
        ti.tx = nd.id;
        ti.channel = ch;
        ti.shared = true;
        ti.broadcast = true;
        ti.dio = DioMessage{nd.id, nd.dag.rank, cfg_.band.band_id};
        intents.push_back(std::move(ti));
        continue;
      }
      // Per-neighbor CSMA: transmit the first queued frame whose link is not
      // deferring; every other contending link's defer elapses this slot.
      int idx = -1;
      std::vector<NodeId> deferring;
      std::vector<NodeId> seen;
      for (std::size_t i = 0; i < nd.queue.entries.size(); ++i) {
        const NodeId dest = nd.queue.entries[i].dest;
        if (nd.schedule.has_dedicated_tx_to(dest)) continue;
        if (std::find(seen.begin(), seen.end(), dest) != seen.end()) continue;
        seen.push_back(dest);
        if (nd.backoff[dest].counter > 0)
          deferring.push_back(dest);
        else if (idx < 0)
          idx = static_cast<int>(i);
      }
      for (NodeId dest : deferring) --nd.backoff[dest].counter;
      if (idx < 0) {
        listeners.push_back({nd.id, ch});
        continue;
      }
      TxIntent ti;
      ti.tx = nd.id;
      ti.channel = ch;
      ti.shared = true;
      ti.queue_index = static_cast<std::size_t>(idx);
      ti.dest = nd.queue.entries[static_cast<std::size_t>(idx)].dest;
      intents.push_back(std::move(ti));
    }
    return;
  }

  for (NodeId id : nodes_at_slot_[static_cast<std::size_t>(slot_offset)]) {
    Node& nd = node(id);
    const Cell* cell = nd.schedule.cell_at(slot_offset);
    if (cell == nullptr || cell->kind == CellKind::SharedMinimal) continue;
    const int ch = hop_channel(asn_, cell->channel_offset, hop_sequence_);
    if (cell->kind == CellKind::RxDedicated) {
      listeners.push_back({id, ch});
      continue;
    }
    const int idx = nd.queue.first_index_for(cell->peer);
    if (nd.dag.joined && cell->peer == nd.dag.preferred_parent) {
      nd.msf_window.record(idx >= 0);
      if (nd.msf_window.full()) {
        const AdaptDecision d = adapt_cells(
            nd.msf_window, nd.schedule.dedicated_tx_count_to(cell->peer));
        if (d != AdaptDecision::None) pending_msf_.push_back({id, d});
        nd.msf_window.reset();
      }
    }
    if (idx >= 0) {
      TxIntent ti;
      ti.tx = id;
      ti.channel = ch;
      ti.queue_index = static_cast<std::size_t>(idx);
      ti.dest = cell->peer;
      intents.push_back(std::move(ti));
    }
  }
}

void BandSimulation::resolve_channel(std::vector<TxIntent*>& txs,
                                     const std::vector<NodeId>& rxs) {
  const std::size_t nt = txs.size();
  const std::size_t nr = rxs.size();
  if (nt == 0) return;

  // Signal draws, transmitter-major, both sides in ascending node id.
  std::vector<double> rssi(nt * nr, 0.0);
  for (std::size_t t = 0; t < nt; ++t) {
    const Position tp = node(txs[t]->tx).pos;
    for (std::size_t r = 0; r < nr; ++r) {
      const double d = distance_m(tp, node(rxs[r]).pos);
      rssi[t * nr + r] = sample_rssi_dbm(d, cfg_.band, prop_rng_);
    }
  }

  // Each listener locks onto the strongest frame addressed to it; the rest of
  // the slot's energy on the channel enters that frame's SINR.
  std::vector<std::size_t> cand;
  std::vector<double> interf;
  for (std::size_t r = 0; r < nr; ++r) {
    cand.clear();
    for (std::size_t t = 0; t < nt; ++t)
      if (txs[t]->broadcast || txs[t]->dest == rxs[r]) cand.push_back(t);
    if (cand.empty()) continue;
    std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
      const double ra = rssi[a * nr + r];
      const double rb = rssi[b * nr + r];
      if (ra != rb) return ra > rb;
      return txs[a]->tx < txs[b]->tx;
    });
    for (std::size_t t : cand) {
      interf.clear();
      for (std::size_t o = 0; o < nt; ++o)
        if (o != t) interf.push_back(rssi[o * nr + r]);
      const double p = sinr_reception_pdr(rssi[t * nr + r], interf,
                                          cfg_.band.noise_floor_dbm,
                                          cfg_.waterfall);
      if (!prop_rng_.bernoulli(p)) continue;
      if (txs[t]->broadcast)
        txs[t]->dio_receivers.push_back({rxs[r], rssi[t * nr + r]});
      else
        txs[t]->decoded = true;
      break;  // one decode per listener per slot
    }
  }

  // Apply outcomes in transmitter id order.
  for (TxIntent* ti : txs) {
    if (ti->broadcast) {
      for (const auto& [rx, rx_rssi] : ti->dio_receivers)
        handle_dio(node(rx), ti->dio, rx_rssi);
      continue;
    }
    TxResult result;
    if (ti->decoded) {
      handle_decode(*ti);
      const double d = distance_m(node(ti->dest).pos, node(ti->tx).pos);
      const double ack_rssi = sample_rssi_dbm(d, cfg_.band, prop_rng_);
      result = prop_rng_.bernoulli(rssi_to_pdr(ack_rssi, cfg_.waterfall))
                   ? TxResult::Delivered
                   : TxResult::AckMissed;
    } else {
      result = nt > 1 ? TxResult::Collision : TxResult::NoAck;
    }
    complete_tx(*ti, result);
  }
}

void BandSimulation::handle_decode(TxIntent& ti) {
  Node& tx = node(ti.tx);
  TxEntry& entry = tx.queue.entries[ti.queue_index];
  Node& rx = node(entry.dest);
  const SimTime t = now();
  switch (entry.kind) {
    case FrameKind::Data: {
      auto seen = rx.last_data_from.find(ti.tx);
      if (seen != rx.last_data_from.end() && seen->second == entry.packet)
        return;  // retransmission of an already-accepted frame: ack only
      rx.last_data_from[ti.tx] = entry.packet;
      PacketRecord* rec = record_of(entry.packet);
      rec->hops.push_back({ti.tx, entry.dest, entry.retries + 1, true});
      active_hop_[{entry.packet, ti.tx}] = rec->hops.size() - 1;
      if (rx.id == kRootId) {
        rec->status = PacketStatus::Delivered;
        rec->t_arrival = t;  // slot start of the delivering reception
        rec->holder = kRootId;
      } else {
        const TxEntry fwd{FrameKind::Data, entry.packet,
                          rx.dag.preferred_parent, 0, t};
        if (rx.queue.enqueue(fwd)) {
          rec->holder = rx.id;
        } else {
          rec->status = PacketStatus::DroppedQueue;
          rec->holder = kNoNode;
          rx.counters.queue_drops += 1;
        }
      }
      break;
    }
    case FrameKind::Dao: {
      if (!rx.queue.has_frame_kind_to(FrameKind::DaoAck, ti.tx)) {
        const TxEntry ack{FrameKind::DaoAck, PacketId{rx.id, 0}, ti.tx, 0, t};
        rx.queue.enqueue(ack);  // full queue: the child times out and retries
      }
      break;
    }
    case FrameKind::DaoAck: {
      // The ack may arrive while a follow-up join request is still queued
      // (the parent serves acks slowly under contention), so accept it in
      // either wait phase and discard the now-redundant request.
      if ((rx.phase == JoinPhase::WaitDaoAck ||
           rx.phase == JoinPhase::WaitDaoTx) &&
          ti.tx == rx.dag.preferred_parent) {
        auto& q = rx.queue.entries;
        for (std::size_t i = q.size(); i-- > 0;) {
          if (q[i].kind == FrameKind::Dao)
            q.erase(q.begin() + static_cast<std::ptrdiff_t>(i));
        }
        complete_join(rx.dag, ti.tx, t);
        rx.phase = JoinPhase::Joined;
        rx.counters.joined_at = t;
        rx.dao_ack_deadline = SimTime{-1};
        rx.dao_send_at = SimTime{-1};
        rx.dao_wait_slotframes = 0;
        rx.trickle.start(asn_.value, cfg_.slotframe_length, mac_rng_);
      }
      break;
    }
  }
}

void BandSimulation::complete_tx(TxIntent& ti, TxResult result) {
  Node& tx = node(ti.tx);
  auto& entries = tx.queue.entries;
  TxEntry& entry = entries[ti.queue_index];
  last_outcomes_.push_back({ti.tx, entry.kind, {result, ti.channel, asn_}});

  // Per-attempt link estimate update; the node's own rank resamples it only
  // at DIO epochs, keeping the hysteresis comparison off the estimator noise.
  LinkEstimate& le = tx.links[entry.dest];
  const bool success = result == TxResult::Delivered;
  if (le.initialized)
    le.update(success);
  else
    le.init_from_pdr(success ? 1.0 : 1.0 / kMaxEtx);

  if (success) {
    if (ti.shared) tx.backoff[entry.dest].reset();
    if (entry.kind == FrameKind::Data) {
      PacketRecord* rec = record_of(entry.packet);
      const auto key = std::pair{entry.packet, ti.tx};
      auto it = active_hop_.find(key);
      if (it != active_hop_.end()) {
        HopRecord& hop = rec->hops[it->second];
        hop.attempts = std::max(hop.attempts, entry.retries + 1);
        active_hop_.erase(it);
      }
      tx.counters.total_retries += entry.retries;
    } else if (entry.kind == FrameKind::Dao &&
               tx.phase == JoinPhase::WaitDaoTx &&
               entry.dest == tx.dag.preferred_parent) {
      tx.phase = JoinPhase::WaitDaoAck;
      const int wait = tx.dao_wait_slotframes > 0
                           ? tx.dao_wait_slotframes
                           : cfg_.dao_ack_timeout_slotframes;
      tx.dao_ack_deadline =
          now() + SimTime{static_cast<std::int64_t>(wait) *
                          cfg_.slotframe_length * cfg_.band.slot_duration.us};
    }
    entries.erase(entries.begin() +
                  static_cast<std::ptrdiff_t>(ti.queue_index));
    return;
  }

  if (ti.shared) tx.backoff[entry.dest].on_failure(mac_rng_);
  entry.retries += 1;
  if (entry.retries <= cfg_.app.max_retransmissions) return;

  // 1 + R attempts spent on this hop: the frame is dropped.
  if (entry.kind == FrameKind::Data) {
    PacketRecord* rec = record_of(entry.packet);
    const auto key = std::pair{entry.packet, ti.tx};
    auto it = active_hop_.find(key);
    if (it != active_hop_.end()) {
      HopRecord& hop = rec->hops[it->second];
      hop.attempts = std::max(hop.attempts, entry.retries);
      active_hop_.erase(it);
    } else {
      rec->hops.push_back({ti.tx, entry.dest, entry.retries, false});
    }
    tx.counters.total_retries += entry.retries - 1;
    if (rec->holder == ti.tx) {
      rec->status = PacketStatus::DroppedRetries;
      rec->holder = kNoNode;
      tx.counters.retry_drops += 1;
    }
  } else if (entry.kind == FrameKind::Dao &&
             tx.phase == JoinPhase::WaitDaoTx) {
    // Join-request exhaustion leaves the node unjoined but keeps its parent
    // selection: the choice of parent may only ever change through the
    // hysteresis comparison, never as a side effect of a failed handshake.
    // The next decoded DIO re-arms the request.
    tx.phase = JoinPhase::Searching;
    tx.dao_send_at = SimTime{-1};
    // Widen this node's retry pacing: the next request round starts with
    // proportionally more jitter, thinning repeat-failure storms.
    tx.dao_wait_slotframes =
        std::min(std::max(tx.dao_wait_slotframes,
                          cfg_.dao_ack_timeout_slotframes) *
                     2,
                 cfg_.dao_ack_timeout_cap_slotframes);
  }
  entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(ti.queue_index));
}

void BandSimulation::handle_dio(Node& v, const DioMessage& dio, double rssi) {
  if (v.id == dio.origin) return;
  LinkEstimate& le = v.links[dio.origin];
  if (!le.initialized) le.init_from_pdr(rssi_to_pdr(rssi, cfg_.waterfall));
  v.neighbor_rank[dio.origin] = dio.rank;
  if (v.id == kRootId) return;

  // A node's own rank is recomputed at adoption only. Re-sampling it from the
  // live link estimate would swing it by hundreds of rank units per estimator
  // sample (the per-attempt fading span is far wider than the hysteresis), so
  // every switch decision is made against the rank fixed when the current
  // parent was chosen: switches strictly lower the rank, the tree can only
  // contract toward the root, and churn stops once it has.
  if (v.dag.preferred_parent == dio.origin) {
    // A DIO from the already-selected parent never changes the selection, but
    // for a node whose join request previously ran out of retries it is the
    // re-arm trigger: the handshake restarts, the selection stands.
    if (v.phase == JoinPhase::Searching) start_join(v, dio.origin, v.dag.rank);
    return;
  }
  const bool rearm_pending =
      v.phase == JoinPhase::Searching && v.dag.preferred_parent != kNoNode;
  // Links estimated worse than the usable bound are not parent material, no
  // matter how good the advertised rank looks.
  if (le.etx() <= kMaxUsableEtx) {
    const ParentDecision d = evaluate_dio(v.dag, dio, le.etx());
    if (d.adopt && !would_form_loop(v.id, dio.origin)) {
      if (v.phase == JoinPhase::Joined)
        apply_parent_switch(v, dio.origin, d.candidate_rank);
      else
        start_join(v, dio.origin, d.candidate_rank);
      return;
    }
  }
  // A node with an exhausted request and a standing selection re-arms off any
  // decoded DIO, not only its parent's.
  if (rearm_pending) start_join(v, v.dag.preferred_parent, v.dag.rank);
}

bool BandSimulation::would_form_loop(NodeId id, NodeId candidate_parent) const {
  NodeId cur = candidate_parent;
  for (std::size_t guard = 0; guard <= nodes_.size(); ++guard) {
    if (cur == kNoNode) return false;
    if (cur == id) return true;
    cur = nodes_[static_cast<std::size_t>(cur)].dag.preferred_parent;
  }
  return true;  // parent chain longer than the node count: already cyclic
}

void BandSimulation::start_join(Node& nd, NodeId parent, int rank) {
  std::erase_if(nd.queue.entries,
                [](const TxEntry& e) { return e.kind == FrameKind::Dao; });
  nd.dag.preferred_parent = parent;
  nd.dag.rank = rank;
  nd.dao_ack_deadline = SimTime{-1};
  if (parent != nd.dao_last_parent) {
    nd.dao_last_parent = parent;
    nd.dao_wait_slotframes = cfg_.dao_ack_timeout_slotframes;
  }
  // Jitter the first request: every node that decoded the same broadcast
  // adopts in the same slot and would otherwise transmit in lockstep. Nodes
  // re-adopting a parent that already failed them spread over a widened
  // window, capped so stragglers are not parked for minutes.
  const int span_sf =
      std::max(cfg_.dao_start_jitter_slotframes,
               std::min(nd.dao_wait_slotframes,
                        4 * cfg_.dao_start_jitter_slotframes));
  const std::int64_t jitter_slots = static_cast<std::int64_t>(mac_rng_.uniform_int(
      static_cast<std::uint64_t>(span_sf) *
      static_cast<std::uint64_t>(cfg_.slotframe_length)));
  nd.phase = JoinPhase::WaitDaoTx;
  nd.dao_send_at = now() + SimTime{jitter_slots * cfg_.band.slot_duration.us};
  // Adopting a parent counts as a parent change: the dedicated cell moves
  // with it, so the join request itself rides a contention-free cell.
  set_parent_cells(nd, parent);
}

void BandSimulation::apply_parent_switch(Node& nd, NodeId new_parent,
                                         int new_rank) {
  const NodeId old = nd.dag.preferred_parent;
  if (old != kNoNode && old != new_parent)
    nd.queue.retarget(old, new_parent);
  nd.dag.preferred_parent = new_parent;
  nd.dag.rank = new_rank;
  set_parent_cells(nd, new_parent);
  nd.trickle.reset(asn_.value, cfg_.slotframe_length, mac_rng_);
}

// Moves the node's dedicated cells to `new_parent`: all cells to the previous
// holder are removed and exactly one fresh cell is negotiated, unless the
// cells already point there (a re-adoption after an expired handshake).
void BandSimulation::set_parent_cells(Node& nd, NodeId new_parent) {
  if (nd.cells_parent != kNoNode && nd.cells_parent != new_parent) {
    Node& old_parent = node(nd.cells_parent);
    for (int slot : nd.schedule.tx_slots_to(nd.cells_parent)) {
      nd.schedule.remove_at(slot);
      old_parent.schedule.remove_at(slot);
    }
    nd.cells_to_parent.clear();
    nd.msf_window.reset();
  }
  nd.cells_parent = new_parent;
  if (nd.schedule.dedicated_tx_count_to(new_parent) == 0) {
    Node& parent = node(new_parent);
    if (auto cell = negotiate_cell(nd.schedule, nd.id, parent.schedule,
                                   parent.id, cfg_.band.channel_count,
                                   mac_rng_))
      nd.cells_to_parent.push_back(cell->slot_offset);
  }
  rebuild_slot_index();
}

void BandSimulation::apply_msf_boundary_actions() {
  for (const PendingMsf& p : pending_msf_) {
    Node& nd = node(p.node);
    if (!nd.dag.joined || nd.dag.preferred_parent == kNoNode) continue;
    Node& parent = node(nd.dag.preferred_parent);
    if (p.decision == AdaptDecision::Add) {
      if (auto cell = negotiate_cell(nd.schedule, nd.id, parent.schedule,
                                     parent.id, cfg_.band.channel_count,
                                     mac_rng_))
        nd.cells_to_parent.push_back(cell->slot_offset);
    } else if (p.decision == AdaptDecision::Delete &&
               nd.cells_to_parent.size() > 1) {
      const int slot = nd.cells_to_parent.back();
      nd.cells_to_parent.pop_back();
      nd.schedule.remove_at(slot);
      parent.schedule.remove_at(slot);
    }
  }
  pending_msf_.clear();

  // A joined node must always keep at least one dedicated cell to its parent
  // (repairs failed negotiations after joins and parent switches).
  for (Node& nd : nodes_) {
    if (nd.id == kRootId || !nd.dag.joined ||
        nd.dag.preferred_parent == kNoNode)
      continue;
    if (nd.schedule.dedicated_tx_count_to(nd.dag.preferred_parent) > 0)
      continue;
    Node& parent = node(nd.dag.preferred_parent);
    nd.cells_parent = parent.id;
    if (auto cell = negotiate_cell(nd.schedule, nd.id, parent.schedule,
                                   parent.id, cfg_.band.channel_count,
                                   mac_rng_))
      nd.cells_to_parent.push_back(cell->slot_offset);
  }
  rebuild_slot_index();
}

RunTrace BandSimulation::take_trace() {
  // Close the books on frames still queued at run end.
  for (Node& nd : nodes_) {
    for (const TxEntry& e : nd.queue.entries) {
      if (e.kind != FrameKind::Data || e.retries == 0) continue;
      PacketRecord* rec = record_of(e.packet);
      if (rec == nullptr) continue;
      const auto key = std::pair{e.packet, nd.id};
      auto it = active_hop_.find(key);
      if (it != active_hop_.end()) {
        HopRecord& hop = rec->hops[it->second];
        hop.attempts = std::max(hop.attempts, e.retries);
      } else {
        rec->hops.push_back({nd.id, e.dest, e.retries, false});
      }
      nd.counters.total_retries += e.retries - 1;
    }
  }

  RunTrace tr;
  tr.band = cfg_.band.band_id;
  tr.seed = cfg_.app.seed;
  tr.node_count = static_cast<int>(nodes_.size());
  tr.slotframe_length = cfg_.slotframe_length;
  tr.slot_duration = cfg_.band.slot_duration;
  tr.topology = cfg_.topology;
  tr.records = std::move(records_);
  std::sort(tr.records.begin(), tr.records.end(),
            [](const PacketRecord& a, const PacketRecord& b) {
              return a.id < b.id;
            });
  for (PacketRecord& r : tr.records) {
    r.completed_hops = 0;
    for (const HopRecord& h : r.hops)
      if (h.completed) ++r.completed_hops;
  }
  tr.node_counters.reserve(nodes_.size());
  for (Node& nd : nodes_) {
    nd.counters.joined_at = nd.dag.joined ? nd.dag.join_time : SimTime{-1};
    tr.node_counters.push_back(nd.counters);
    if (nd.id != kRootId &&
        (!nd.dag.joined || nd.dag.join_time > cfg_.app.setup_time))
      tr.unjoined_at_setup_end.push_back(nd.id);
  }
  records_.clear();
  record_index_.clear();
  active_hop_.clear();
  return tr;
}

RunTrace run_band(const RunConfig& config) {
  BandSimulation sim(config);
  sim.run();
  return sim.take_trace();
}

}  // namespace sixsim
