#pragma once
// Experiment driver: sweeps deployments x network sizes x seeds, runs both
// bands per case on one shared topology and application schedule, combines
// them at the sink, and writes traces, metric reports, seed aggregates and
// plot-ready CSV series.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sixsim/core.hpp"
#include "sixsim/engine.hpp"
#include "sixsim/metrics.hpp"

namespace sixsim {

enum class Deployment { Linear, Random };

const char* deployment_label(Deployment d);  // "linear" / "random"

struct ExperimentSpec {
  std::vector<Deployment> deployments{Deployment::Linear, Deployment::Random};
  std::vector<int> node_counts{40, 80, 160};
  double side_length_m = 100.0;
  BandConfig band24;
  BandConfig band868;
  AppConfig app;
  WaterfallTable waterfall24;     // 868 MHz table = offset by sub_ghz_offset_db
  double sub_ghz_offset_db = 13.0;
  std::vector<std::uint64_t> seeds{kDefaultSeed};
  std::string out_dir = "results";
  int workers = 0;                // 0 = hardware concurrency
  bool strict_mode = false;
  int slotframe_length = kSlotframeLength;
  int queue_capacity = kQueueCapacity;
  int resample_budget = 1000;

  ExperimentSpec();

  // Full-scale defaults (40/80/160 nodes, W = 5400 s, 7200 s of traffic).
  static ExperimentSpec full_default();
  // Reduced profile: W = 600 s, 900 s of traffic, sizes {10, 20, 40},
  // seeds {1..5}; the whole sweep finishes in minutes.
  static ExperimentSpec quick();

  static ExperimentSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  std::vector<std::string> validate() const;
  // FNV-1a over the canonical JSON form; stamped into every output file so
  // artifacts can be matched to the configuration that produced them.
  std::string config_hash() const;
};

struct CaseRun {
  Deployment deployment = Deployment::Linear;
  int node_count = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  RunTrace trace24;
  RunTrace trace868;
  MetricsReport report24;
  MetricsReport report868;
  CombineResult combined;

  std::string case_id() const;  // e.g. "linear_n40"
};

struct ExperimentResult {
  // 0 = all cases ran, 1 = invalid configuration, 2 = partial failures.
  int exit_code = 1;
  std::vector<CaseRun> runs;
};

// Runs the sweep (up to spec.workers cases concurrently; outputs do not
// depend on scheduling). When write_files is set, emits per-case traces and
// metric reports plus aggregate.csv and plots/*.csv under spec.out_dir.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                bool write_files = true);

// Median and interquartile range via linear order-statistic interpolation.
struct QuartileSummary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};
QuartileSummary quartiles(std::vector<double> values);

}  // namespace sixsim
