#include "sixsim/metrics.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sixsim {

namespace {

// Exact empirical CDF: one point per distinct latency, cumulative
// probability at that value.
std::vector<std::pair<double, double>> empirical_cdf(
    std::vector<double> latencies) {
  std::sort(latencies.begin(), latencies.end());
  std::vector<std::pair<double, double>> cdf;
  const double n = static_cast<double>(latencies.size());
  for (std::size_t i = 0; i < latencies.size(); ++i) {
    const double p = static_cast<double>(i + 1) / n;
    if (!cdf.empty() && cdf.back().first == latencies[i])
      cdf.back().second = p;
    else
      cdf.push_back({latencies[i], p});
  }
  return cdf;
}

double mean_latency_seconds(const std::vector<std::int64_t>& latencies_us) {
  std::int64_t sum = 0;
  for (std::int64_t v : latencies_us) sum += v;
  return static_cast<double>(sum) / static_cast<double>(latencies_us.size()) /
         1e6;
}

}  // namespace

double band_pdr(const RunTrace& trace) {
  if (trace.generated() == 0)
    throw std::invalid_argument("PDR undefined: no packets generated");
  return static_cast<double>(trace.count(PacketStatus::Delivered)) /
         static_cast<double>(trace.generated());
}

std::optional<LatencySummary> band_latency(const RunTrace& trace) {
  std::vector<std::int64_t> lat_us;
  for (const PacketRecord& r : trace.records)
    if (r.delivered()) lat_us.push_back((r.t_arrival - r.t_gen).us);
  if (lat_us.empty()) return std::nullopt;
  LatencySummary s;
  s.received = lat_us.size();
  s.mean_s = mean_latency_seconds(lat_us);
  std::vector<double> lat_s;
  lat_s.reserve(lat_us.size());
  for (std::int64_t v : lat_us) lat_s.push_back(static_cast<double>(v) / 1e6);
  s.cdf = empirical_cdf(std::move(lat_s));
  return s;
}

MetricsReport band_report(const RunTrace& trace) {
  MetricsReport rep;
  rep.label = band_label(trace.band);
  rep.generated = trace.generated();
  rep.delivered = trace.count(PacketStatus::Delivered);
  rep.pdr = rep.generated > 0 ? static_cast<double>(rep.delivered) /
                                    static_cast<double>(rep.generated)
                              : 0.0;
  if (auto lat = band_latency(trace)) {
    rep.mean_latency_s = lat->mean_s;
    rep.latency_cdf = std::move(lat->cdf);
  }
  const RetryStats rs = retry_statistics(trace);
  rep.total_retries = rs.total;
  rep.mean_retries_per_node = rs.mean_per_node;
  if (rep.delivered > 0) {
    std::int64_t hops = 0;
    for (const PacketRecord& r : trace.records)
      if (r.delivered()) hops += r.completed_hops;
    rep.mean_hops =
        static_cast<double>(hops) / static_cast<double>(rep.delivered);
  }
  return rep;
}

std::vector<NodeBandRow> winning_band_per_node(
    const std::vector<CombinedPacketOutcome>& outcomes) {
  struct Acc {
    std::int64_t sum24_us = 0, n24 = 0;
    std::int64_t sum868_us = 0, n868 = 0;
  };
  std::map<NodeId, Acc> acc;
  for (const CombinedPacketOutcome& o : outcomes) {
    Acc& a = acc[o.packet.source];
    if (o.band24.delivered) {
      a.sum24_us += (o.band24.t_arrival - o.t_gen).us;
      a.n24 += 1;
    }
    if (o.band868.delivered) {
      a.sum868_us += (o.band868.t_arrival - o.t_gen).us;
      a.n868 += 1;
    }
  }
  std::vector<NodeBandRow> rows;
  rows.reserve(acc.size());
  for (const auto& [id, a] : acc) {
    NodeBandRow row;
    row.node = id;
    if (a.n24 > 0)
      row.mean_latency24_s = static_cast<double>(a.sum24_us) /
                             static_cast<double>(a.n24) / 1e6;
    if (a.n868 > 0)
      row.mean_latency868_s = static_cast<double>(a.sum868_us) /
                              static_cast<double>(a.n868) / 1e6;
    if (row.mean_latency24_s && row.mean_latency868_s)
      row.winner = *row.mean_latency24_s <= *row.mean_latency868_s
                       ? BandId::Band24GHz
                       : BandId::Band868MHz;
    else if (row.mean_latency24_s)
      row.winner = BandId::Band24GHz;
    else if (row.mean_latency868_s)
      row.winner = BandId::Band868MHz;
    rows.push_back(std::move(row));
  }
  return rows;
}

CombineResult combine(const RunTrace& trace24, const RunTrace& trace868) {
  if (trace24.records.size() != trace868.records.size())
    throw std::invalid_argument("traces cover different packet sets");
  if (trace24.node_count != trace868.node_count)
    throw std::invalid_argument("traces cover different node sets");

  CombineResult res;
  res.outcomes.reserve(trace24.records.size());
  for (std::size_t i = 0; i < trace24.records.size(); ++i) {
    const PacketRecord& r24 = trace24.records[i];
    const PacketRecord& r868 = trace868.records[i];
    if (r24.id != r868.id)
      throw std::invalid_argument("traces cover different packet sets");
    if (r24.t_gen != r868.t_gen)
      throw std::invalid_argument("traces disagree on generation times");
    CombinedPacketOutcome o;
    o.packet = r24.id;
    o.t_gen = r24.t_gen;
    o.band24 = {r24.delivered(), r24.t_arrival, r24.completed_hops,
                r24.retries()};
    o.band868 = {r868.delivered(), r868.t_arrival, r868.completed_hops,
                 r868.retries()};
    o.delivered_any = o.band24.delivered || o.band868.delivered;
    if (o.band24.delivered && o.band868.delivered) {
      o.winning_band = o.band24.t_arrival <= o.band868.t_arrival
                           ? BandId::Band24GHz
                           : BandId::Band868MHz;
      o.t_first_arrival = std::min(o.band24.t_arrival, o.band868.t_arrival);
    } else if (o.band24.delivered) {
      o.winning_band = BandId::Band24GHz;
      o.t_first_arrival = o.band24.t_arrival;
    } else if (o.band868.delivered) {
      o.winning_band = BandId::Band868MHz;
      o.t_first_arrival = o.band868.t_arrival;
    }
    res.outcomes.push_back(std::move(o));
  }

  MetricsReport& rep = res.report;
  rep.label = "combined";
  rep.generated = static_cast<std::int64_t>(res.outcomes.size());
  std::vector<std::int64_t> lat_us;
  std::int64_t hops = 0;
  for (const CombinedPacketOutcome& o : res.outcomes) {
    if (o.delivered_any) {
      rep.delivered += 1;
      lat_us.push_back((*o.t_first_arrival - o.t_gen).us);
      hops += o.winning_band == BandId::Band24GHz ? o.band24.hops
                                                  : o.band868.hops;
      rep.total_retries += o.winning_band == BandId::Band24GHz
                               ? o.band24.retries
                               : o.band868.retries;
    } else {
      rep.total_retries += std::min(o.band24.retries, o.band868.retries);
    }
  }
  rep.pdr = rep.generated > 0 ? static_cast<double>(rep.delivered) /
                                    static_cast<double>(rep.generated)
                              : 0.0;
  if (!lat_us.empty()) {
    rep.mean_latency_s = mean_latency_seconds(lat_us);
    std::vector<double> lat_s;
    lat_s.reserve(lat_us.size());
    for (std::int64_t v : lat_us)
      lat_s.push_back(static_cast<double>(v) / 1e6);
    rep.latency_cdf = empirical_cdf(std::move(lat_s));
    rep.mean_hops =
        static_cast<double>(hops) / static_cast<double>(rep.delivered);
  }
  if (trace24.node_count > 1)
    rep.mean_retries_per_node = static_cast<double>(rep.total_retries) /
                                static_cast<double>(trace24.node_count - 1);
  rep.per_node = winning_band_per_node(res.outcomes);
  for (const NodeBandRow& row : rep.per_node) {
    if (!row.winner)
      rep.nodes_unclassified += 1;
    else if (*row.winner == BandId::Band24GHz)
      rep.nodes_favoring_24 += 1;
    else
      rep.nodes_favoring_868 += 1;
  }
  return res;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["label"] = label;
  j["generated"] = generated;
  j["delivered"] = delivered;
  j["pdr"] = pdr;
  if (mean_latency_s) j["mean_latency_s"] = *mean_latency_s;
  nlohmann::json cdf = nlohmann::json::array();
  for (const auto& [lat, p] : latency_cdf)
    cdf.push_back({{"latency_s", lat}, {"p", p}});
  j["latency_cdf"] = std::move(cdf);
  j["total_retries"] = total_retries;
  j["mean_retries_per_node"] = mean_retries_per_node;
  j["mean_hops"] = mean_hops;
  if (label == "combined") {
    j["nodes_favoring_24"] = nodes_favoring_24;
    j["nodes_favoring_868"] = nodes_favoring_868;
    j["nodes_unclassified"] = nodes_unclassified;
    nlohmann::json rows = nlohmann::json::array();
    for (const NodeBandRow& row : per_node) {
      nlohmann::json r;
      r["node"] = row.node;
      if (row.mean_latency24_s) r["mean_latency24_s"] = *row.mean_latency24_s;
      if (row.mean_latency868_s)
        r["mean_latency868_s"] = *row.mean_latency868_s;
      if (row.winner) r["winner"] = band_label(*row.winner);
      rows.push_back(std::move(r));
    }
    j["per_node"] = std::move(rows);
  }
  return j;
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "metric,value\n";
  out << "label," << label << '\n';
  out << "generated," << generated << '\n';
  out << "delivered," << delivered << '\n';
  out << "pdr," << pdr << '\n';
  out << "mean_latency_s,";
  if (mean_latency_s) out << *mean_latency_s;
  out << '\n';
  out << "total_retries," << total_retries << '\n';
  out << "mean_retries_per_node," << mean_retries_per_node << '\n';
  out << "mean_hops," << mean_hops << '\n';
  if (label == "combined") {
    out << "nodes_favoring_24," << nodes_favoring_24 << '\n';
    out << "nodes_favoring_868," << nodes_favoring_868 << '\n';
    out << "nodes_unclassified," << nodes_unclassified << '\n';
  }
  for (const auto& [lat, p] : latency_cdf)
    out << "latency_cdf," << lat << ';' << p << '\n';
  return out.str();
}

}  // namespace sixsim
