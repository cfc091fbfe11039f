#pragma once
// Per-band metrics (PDR, latency distribution, retries) and the dual-band
// combiner: a logical packet counts as delivered when either band copy
// reaches the root, with the earlier arrival winning.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sixsim/engine.hpp"

namespace sixsim {

// delivered / generated. Throws std::invalid_argument on zero generated.
double band_pdr(const RunTrace& trace);

struct LatencySummary {
  double mean_s = 0.0;
  std::size_t received = 0;
  // Exact empirical CDF over delivered packets: (latency seconds, P).
  std::vector<std::pair<double, double>> cdf;
};

// Empty when the trace delivered nothing.
std::optional<LatencySummary> band_latency(const RunTrace& trace);

struct BandOutcome {
  bool delivered = false;
  SimTime t_arrival{-1};
  int hops = 0;
  std::int64_t retries = 0;
};

struct CombinedPacketOutcome {
  PacketId packet;
  SimTime t_gen{0};
  bool delivered_any = false;
  std::optional<SimTime> t_first_arrival;   // min over delivering bands
  std::optional<BandId> winning_band;       // tie -> Band24GHz
  BandOutcome band24, band868;
};

// Per-source-node classification by per-band mean latency over the packets
// each band delivered from that node; a node with deliveries on one band
// only is classified to that band, with none it stays unclassified.
struct NodeBandRow {
  NodeId node = kNoNode;
  std::optional<double> mean_latency24_s;
  std::optional<double> mean_latency868_s;
  std::optional<BandId> winner;
};

std::vector<NodeBandRow> winning_band_per_node(
    const std::vector<CombinedPacketOutcome>& outcomes);

struct MetricsReport {
  std::string label;  // "24ghz", "868mhz" or "combined"
  std::int64_t generated = 0;
  std::int64_t delivered = 0;
  double pdr = 0.0;
  std::optional<double> mean_latency_s;
  std::vector<std::pair<double, double>> latency_cdf;
  std::int64_t total_retries = 0;
  double mean_retries_per_node = 0.0;
  double mean_hops = 0.0;  // over delivered packets
  // Combined reports only: node classification counts and table.
  int nodes_favoring_24 = 0;
  int nodes_favoring_868 = 0;
  int nodes_unclassified = 0;
  std::vector<NodeBandRow> per_node;

  nlohmann::json to_json() const;
  // Flat CSV: one "metric,value" row per scalar, one row per CDF point.
  std::string to_csv() const;
};

MetricsReport band_report(const RunTrace& trace);

struct CombineResult {
  std::vector<CombinedPacketOutcome> outcomes;
  MetricsReport report;
};

// Requires both traces to cover the identical generated packet set (the
// engine guarantees this when fed the same app schedule); throws
// std::invalid_argument otherwise. Combined retries count, per packet, the
// retries spent on its winning band (undelivered: the cheaper band).
CombineResult combine(const RunTrace& trace24, const RunTrace& trace868);

}  // namespace sixsim
