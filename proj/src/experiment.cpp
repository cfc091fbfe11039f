#include "sixsim/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <thread>

#include <nlohmann/json.hpp>

#include "sixsim/propagation.hpp"
#include "sixsim/topology.hpp"

namespace sixsim {

namespace {

constexpr int kOutputFormatVersion = 1;

std::string header_line(const std::string& hash) {
  return "# format=" + std::to_string(kOutputFormatVersion) +
         " config=" + hash + "\n";
}

nlohmann::json band_to_json(const BandConfig& b) {
  nlohmann::json j;
  j["band"] = band_label(b.band_id);
  j["center_frequency_hz"] = b.center_frequency_hz;
  j["channel_count"] = b.channel_count;
  j["channel_spacing_hz"] = b.channel_spacing_hz;
  j["bitrate_bps"] = b.bitrate_bps;
  j["slot_us"] = b.slot_duration.us;
  j["radio_sensitivity_dbm"] = b.radio_sensitivity_dbm;
  j["tx_power_dbm"] = b.tx_power_dbm;
  j["noise_floor_dbm"] = b.noise_floor_dbm;
  return j;
}

BandConfig band_from_json(const nlohmann::json& j, BandConfig base) {
  if (j.contains("band")) {
    const std::string lbl = j["band"].get<std::string>();
    if (lbl == band_label(BandId::Band24GHz))
      base.band_id = BandId::Band24GHz;
    else if (lbl == band_label(BandId::Band868MHz))
      base.band_id = BandId::Band868MHz;
    else
      throw std::invalid_argument("unknown band label: " + lbl);
  }
  base.center_frequency_hz =
      j.value("center_frequency_hz", base.center_frequency_hz);
  base.channel_count = j.value("channel_count", base.channel_count);
  base.channel_spacing_hz =
      j.value("channel_spacing_hz", base.channel_spacing_hz);
  base.bitrate_bps = j.value("bitrate_bps", base.bitrate_bps);
  base.slot_duration = SimTime{j.value("slot_us", base.slot_duration.us)};
  base.radio_sensitivity_dbm =
      j.value("radio_sensitivity_dbm", base.radio_sensitivity_dbm);
  base.tx_power_dbm = j.value("tx_power_dbm", base.tx_power_dbm);
  base.noise_floor_dbm = j.value("noise_floor_dbm", base.noise_floor_dbm);
  return base;
}

nlohmann::json app_to_json(const AppConfig& a) {
  nlohmann::json j;
  j["message_interval_us"] = a.message_interval.us;
  j["interval_variance_us"] = a.interval_variance.us;
  j["max_retransmissions"] = a.max_retransmissions;
  j["setup_time_us"] = a.setup_time.us;
  j["duration_us"] = a.duration.us;
  j["payload_bytes"] = a.payload_bytes;
  j["seed"] = a.seed;
  return j;
}

AppConfig app_from_json(const nlohmann::json& j, AppConfig base) {
  base.message_interval =
      SimTime{j.value("message_interval_us", base.message_interval.us)};
  base.interval_variance =
      SimTime{j.value("interval_variance_us", base.interval_variance.us)};
  base.max_retransmissions =
      j.value("max_retransmissions", base.max_retransmissions);
  base.setup_time = SimTime{j.value("setup_time_us", base.setup_time.us)};
  base.duration = SimTime{j.value("duration_us", base.duration.us)};
  base.payload_bytes = j.value("payload_bytes", base.payload_bytes);
  base.seed = j.value("seed", base.seed);
  return base;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

const char* deployment_label(Deployment d) {
  return d == Deployment::Linear ? "linear" : "random";
}

ExperimentSpec::ExperimentSpec()
    : band24(default_band24()),
      band868(default_band868()),
      waterfall24(WaterfallTable::default_24ghz()) {}

ExperimentSpec ExperimentSpec::full_default() { return ExperimentSpec{}; }

ExperimentSpec ExperimentSpec::quick() {
  ExperimentSpec spec;
  spec.node_counts = {10, 20, 40};
  spec.app.setup_time = SimTime::from_seconds(600.0);
  spec.app.duration = SimTime::from_seconds(900.0);
  spec.seeds = {1, 2, 3, 4, 5};
  return spec;
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& j) {
  ExperimentSpec spec;
  if (j.contains("deployments")) {
    spec.deployments.clear();
    for (const auto& d : j["deployments"]) {
      const std::string lbl = d.get<std::string>();
      if (lbl == "linear")
        spec.deployments.push_back(Deployment::Linear);
      else if (lbl == "random")
        spec.deployments.push_back(Deployment::Random);
      else
        throw std::invalid_argument("unknown deployment: " + lbl);
    }
  }
  if (j.contains("node_counts"))
    spec.node_counts = j["node_counts"].get<std::vector<int>>();
  spec.side_length_m = j.value("side_length_m", spec.side_length_m);
  if (j.contains("band24")) spec.band24 = band_from_json(j["band24"], spec.band24);
  if (j.contains("band868"))
    spec.band868 = band_from_json(j["band868"], spec.band868);
  if (j.contains("app")) spec.app = app_from_json(j["app"], spec.app);
  if (j.contains("waterfall24")) {
    std::istringstream in(j["waterfall24"].get<std::string>());
    spec.waterfall24 = WaterfallTable::parse(in);
  }
  spec.sub_ghz_offset_db = j.value("sub_ghz_offset_db", spec.sub_ghz_offset_db);
  if (j.contains("seeds"))
    spec.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  spec.out_dir = j.value("out_dir", spec.out_dir);
  spec.workers = j.value("workers", spec.workers);
  spec.strict_mode = j.value("strict_mode", spec.strict_mode);
  spec.slotframe_length = j.value("slotframe_length", spec.slotframe_length);
  spec.queue_capacity = j.value("queue_capacity", spec.queue_capacity);
  spec.resample_budget = j.value("resample_budget", spec.resample_budget);
  return spec;
}

nlohmann::json ExperimentSpec::to_json() const {
  nlohmann::json j;
  nlohmann::json deps = nlohmann::json::array();
  for (Deployment d : deployments) deps.push_back(deployment_label(d));
  j["deployments"] = std::move(deps);
  j["node_counts"] = node_counts;
  j["side_length_m"] = side_length_m;
  j["band24"] = band_to_json(band24);
  j["band868"] = band_to_json(band868);
  j["app"] = app_to_json(app);
  j["waterfall24"] = waterfall24.serialize();
  j["sub_ghz_offset_db"] = sub_ghz_offset_db;
  j["seeds"] = seeds;
  j["out_dir"] = out_dir;
  j["workers"] = workers;
  j["strict_mode"] = strict_mode;
  j["slotframe_length"] = slotframe_length;
  j["queue_capacity"] = queue_capacity;
  j["resample_budget"] = resample_budget;
  return j;
}

std::vector<std::string> ExperimentSpec::validate() const {
  std::vector<std::string> v;
  if (deployments.empty()) v.push_back("no deployments selected");
  if (node_counts.empty()) v.push_back("no network sizes selected");
  for (int n : node_counts)
    if (n < 2) v.push_back("node_counts entries must be >= 2");
  if (side_length_m <= 0.0) v.push_back("side_length_m must be positive");
  if (band24.band_id != BandId::Band24GHz)
    v.push_back("band24 must carry the 24ghz band id");
  if (band868.band_id != BandId::Band868MHz)
    v.push_back("band868 must carry the 868mhz band id");
  for (const auto& s : validate_band_config(band24, strict_mode))
    v.push_back("band24: " + s);
  for (const auto& s : validate_band_config(band868, strict_mode))
    v.push_back("band868: " + s);
  for (const auto& s : validate_app_config(app)) v.push_back("app: " + s);
  for (const auto& s : waterfall24.validate()) v.push_back("waterfall24: " + s);
  if (seeds.empty()) v.push_back("no seeds selected");
  if (workers < 0) v.push_back("workers must be >= 0");
  if (slotframe_length < 2) v.push_back("slotframe_length must be >= 2");
  if (queue_capacity < 1) v.push_back("queue_capacity must be >= 1");
  if (resample_budget < 1) v.push_back("resample_budget must be >= 1");
  return v;
}

std::string ExperimentSpec::config_hash() const {
  const std::string canonical = to_json().dump();
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << fnv1a64(canonical);
  return s.str();
}

std::string CaseRun::case_id() const {
  std::ostringstream s;
  s << deployment_label(deployment) << "_n" << node_count;
  return s.str();
}

QuartileSummary quartiles(std::vector<double> values) {
  QuartileSummary q;
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  const auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  return q;
}

namespace {

void run_one_case(const ExperimentSpec& spec, CaseRun& run) {
  try {
    Topology topo;
    if (run.deployment == Deployment::Linear) {
      topo = generate_linear(run.node_count, spec.side_length_m);
    } else {
      RngStream topo_rng = RngStream::derive(run.seed, "topology");
      // Random placements must stay reachable on the less forgiving
      // 2.4 GHz plane; the sub-GHz plane then sees the same topology.
      topo = generate_random(run.node_count, spec.side_length_m, topo_rng,
                             spec.band24, spec.band24.radio_sensitivity_dbm,
                             spec.resample_budget);
    }

    AppConfig app = spec.app;
    app.seed = run.seed;
    RngStream jitter_rng = RngStream::derive(run.seed, "app");
    const std::vector<AppEvent> schedule =
        generate_app_schedule(app, run.node_count, &jitter_rng);

    RunConfig cfg24;
    cfg24.topology = topo;
    cfg24.band = spec.band24;
    cfg24.app = app;
    cfg24.waterfall = spec.waterfall24;
    cfg24.app_schedule = schedule;
    cfg24.slotframe_length = spec.slotframe_length;
    cfg24.queue_capacity = spec.queue_capacity;

    RunConfig cfg868 = cfg24;
    cfg868.band = spec.band868;
    cfg868.waterfall = offset_table(spec.waterfall24, spec.sub_ghz_offset_db);

    run.trace24 = run_band(cfg24);
    run.trace868 = run_band(cfg868);
    run.report24 = band_report(run.trace24);
    run.report868 = band_report(run.trace868);
    run.combined = combine(run.trace24, run.trace868);
    run.ok = true;
  } catch (const std::exception& e) {
    run.ok = false;
    run.error = e.what();
  }
}

void append_aggregate_row(std::ostream& out, const CaseRun& run,
                          const MetricsReport& rep) {
  out << deployment_label(run.deployment) << ',' << run.node_count << ','
      << run.seed << ',' << rep.label << ',' << rep.generated << ','
      << rep.delivered << ',' << rep.pdr << ',';
  if (rep.mean_latency_s) out << *rep.mean_latency_s;
  out << ',' << rep.total_retries << ',' << rep.mean_retries_per_node << ','
      << rep.mean_hops << ',';
  if (rep.label == "combined")
    out << rep.nodes_favoring_24 << ',' << rep.nodes_favoring_868 << ','
        << rep.nodes_unclassified;
  else
    out << ",,";
  out << '\n';
}

struct SeriesKey {
  Deployment deployment;
  int node_count;
  std::string band;
  auto operator<=>(const SeriesKey&) const = default;
};

void write_outputs(const ExperimentSpec& spec,
                   const std::vector<CaseRun>& runs) {
  namespace fs = std::filesystem;
  const fs::path out_dir(spec.out_dir);
  fs::create_directories(out_dir / "plots");
  const std::string hash = spec.config_hash();

  for (const CaseRun& run : runs) {
    if (!run.ok) continue;
    const std::string tail =
        run.case_id() + "_" + std::to_string(run.seed);
    write_text_file(out_dir / ("trace_24ghz_" + tail + ".txt"),
                    run.trace24.serialize_text(hash));
    write_text_file(out_dir / ("trace_868mhz_" + tail + ".txt"),
                    run.trace868.serialize_text(hash));
    nlohmann::json m;
    m["format"] = kOutputFormatVersion;
    m["config_hash"] = hash;
    m["case"] = run.case_id();
    m["seed"] = run.seed;
    m["band24"] = run.report24.to_json();
    m["band868"] = run.report868.to_json();
    m["combined"] = run.combined.report.to_json();
    m["conservation_violations_24ghz"] = check_conservation(run.trace24);
    m["conservation_violations_868mhz"] = check_conservation(run.trace868);
    write_text_file(out_dir / ("metrics_" + tail + ".json"), m.dump(2) + "\n");

    // Per-node winning-band table: position and the band that delivered the
    // lower mean latency for that source.
    std::ostringstream wb;
    wb.precision(17);
    wb << header_line(hash) << "node,x_m,y_m,band\n";
    for (const NodeBandRow& row : winning_band_per_node(run.combined.outcomes)) {
      const Position& p =
          run.trace24.topology.positions[static_cast<std::size_t>(row.node)];
      wb << row.node << ',' << p.x << ',' << p.y << ',';
      if (!row.winner)
        wb << "unclassified";
      else
        wb << band_label(*row.winner);
      wb << '\n';
    }
    write_text_file(out_dir / "plots" / ("winning_band_" + tail + ".csv"),
                    wb.str());
  }

  // Long-format per-seed aggregate.
  {
    std::ostringstream agg;
    agg.precision(17);
    agg << header_line(hash)
        << "deployment,node_count,seed,band,generated,delivered,pdr,"
           "mean_latency_s,total_retries,mean_retries_per_node,mean_hops,"
           "nodes_favoring_24,nodes_favoring_868,nodes_unclassified\n";
    for (const CaseRun& run : runs) {
      if (!run.ok) continue;
      append_aggregate_row(agg, run, run.report24);
      append_aggregate_row(agg, run, run.report868);
      append_aggregate_row(agg, run, run.combined.report);
    }
    write_text_file(out_dir / "aggregate.csv", agg.str());
  }

  // Plot series: per (deployment, size, band) quartiles across seeds.
  std::map<SeriesKey, std::vector<double>> pdr_series;
  std::map<SeriesKey, std::vector<double>> latency_series;
  std::map<SeriesKey, std::vector<double>> retries_series;
  std::map<SeriesKey, std::vector<double>> pooled_latencies;
  for (const CaseRun& run : runs) {
    if (!run.ok) continue;
    const std::array<const MetricsReport*, 3> reps{
        &run.report24, &run.report868, &run.combined.report};
    for (const MetricsReport* rep : reps) {
      const SeriesKey key{run.deployment, run.node_count, rep->label};
      pdr_series[key].push_back(rep->pdr);
      if (rep->mean_latency_s)
        latency_series[key].push_back(*rep->mean_latency_s);
      retries_series[key].push_back(rep->mean_retries_per_node);
    }
    const auto pool = [&](const RunTrace& tr, const char* label) {
      const SeriesKey key{run.deployment, run.node_count, label};
      for (const PacketRecord& r : tr.records)
        if (r.delivered())
          pooled_latencies[key].push_back((r.t_arrival - r.t_gen).seconds());
    };
    pool(run.trace24, "24ghz");
    pool(run.trace868, "868mhz");
    const SeriesKey ckey{run.deployment, run.node_count, "combined"};
    for (const CombinedPacketOutcome& o : run.combined.outcomes)
      if (o.delivered_any)
        pooled_latencies[ckey].push_back(
            (*o.t_first_arrival - o.t_gen).seconds());
  }

  const auto write_series = [&](const char* name,
                                std::map<SeriesKey, std::vector<double>>& s) {
    std::ostringstream out;
    out.precision(17);
    out << header_line(hash) << "deployment,node_count,band,median,q1,q3,samples\n";
    for (auto& [key, values] : s) {
      const QuartileSummary q = quartiles(values);
      out << deployment_label(key.deployment) << ',' << key.node_count << ','
          << key.band << ',' << q.median << ',' << q.q1 << ',' << q.q3 << ','
          << values.size() << '\n';
    }
    write_text_file(out_dir / "plots" / name, out.str());
  };
  write_series("pdr_vs_size.csv", pdr_series);
  write_series("latency_vs_size.csv", latency_series);
  write_series("retries_vs_size.csv", retries_series);

  // Latency CDFs: three series per case on one 10 ms time axis, pooled
  // across seeds.
  std::map<std::pair<Deployment, int>, std::array<std::vector<double>, 3>>
      cdf_pool;
  for (auto& [key, values] : pooled_latencies) {
    const std::size_t band_idx = key.band == "24ghz"    ? 0
                                 : key.band == "868mhz" ? 1
                                                        : 2;
    auto& pool = cdf_pool[{key.deployment, key.node_count}][band_idx];
    pool.insert(pool.end(), values.begin(), values.end());
  }
  for (auto& [key, series] : cdf_pool) {
    double max_latency = 0.0;
    for (auto& values : series) {
      std::sort(values.begin(), values.end());
      if (!values.empty()) max_latency = std::max(max_latency, values.back());
    }
    const double step = 0.01;  // 10 ms plotting resolution
    const std::size_t bins =
        static_cast<std::size_t>(std::ceil(max_latency / step)) + 1;
    std::ostringstream out;
    out.precision(17);
    out << header_line(hash)
        << "latency_s,cdf_24ghz,cdf_868mhz,cdf_combined\n";
    for (std::size_t b = 0; b < bins; ++b) {
      const double t = static_cast<double>(b) * step;
      out << t;
      for (auto& values : series) {
        out << ',';
        if (values.empty()) continue;
        const auto upper =
            std::upper_bound(values.begin(), values.end(), t);
        out << static_cast<double>(upper - values.begin()) /
                   static_cast<double>(values.size());
      }
      out << '\n';
    }
    std::ostringstream name;
    name << "latency_cdf_" << deployment_label(key.first) << "_n"
         << key.second << ".csv";
    write_text_file(out_dir / "plots" / name.str(), out.str());
  }

  // Manifest: configuration, hash and per-case status.
  nlohmann::json manifest;
  manifest["format"] = kOutputFormatVersion;
  manifest["config_hash"] = hash;
  manifest["spec"] = spec.to_json();
  nlohmann::json cases = nlohmann::json::array();
  for (const CaseRun& run : runs) {
    nlohmann::json c;
    c["case"] = run.case_id();
    c["seed"] = run.seed;
    c["ok"] = run.ok;
    if (!run.ok) c["error"] = run.error;
    cases.push_back(std::move(c));
  }
  manifest["cases"] = std::move(cases);
  write_text_file(out_dir / "experiment.json", manifest.dump(2) + "\n");
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, bool write_files) {
  ExperimentResult result;
  if (!spec.validate().empty()) {
    result.exit_code = 1;
    return result;
  }

  for (Deployment d : spec.deployments)
    for (int n : spec.node_counts)
      for (std::uint64_t seed : spec.seeds) {
        CaseRun run;
        run.deployment = d;
        run.node_count = n;
        run.seed = seed;
        result.runs.push_back(std::move(run));
      }

  unsigned workers = spec.workers > 0
                         ? static_cast<unsigned>(spec.workers)
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers,
                               static_cast<unsigned>(result.runs.size()));
  if (workers <= 1) {
    for (CaseRun& run : result.runs) run_one_case(spec, run);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= result.runs.size()) return;
          run_one_case(spec, result.runs[i]);
        }
      });
    for (std::thread& t : pool) t.join();
  }

  if (write_files) write_outputs(spec, result.runs);

  result.exit_code = 0;
  for (const CaseRun& run : result.runs)
    if (!run.ok) result.exit_code = 2;
  return result;
}

}  // namespace sixsim
