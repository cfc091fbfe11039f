// Command-line front end: configure a sweep, run it, report one line per
// case and exit 0 (all ran), 1 (bad configuration) or 2 (partial failures).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sixsim/experiment.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    seeds.push_back(std::stoull(tok, nullptr, 0));  // decimal or 0x hex
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "sixsim: dual-band low-power mesh simulator (independent 2.4 GHz and "
      "868 MHz planes over one topology, first arrival wins at the sink)"};

  std::string config_path;
  std::string seeds_text;
  std::string out_dir;
  int workers = -1;
  bool quick = false;
  bool strict = false;
  bool dump_config = false;

  auto* config_opt =
      app.add_option("--config", config_path,
                     "JSON experiment spec; missing keys keep defaults")
          ->check(CLI::ExistingFile);
  app.add_flag("--quick", quick,
               "reduced profile: 600 s setup, 900 s traffic, sizes 10/20/40, "
               "seeds 1..5")
      ->excludes(config_opt);
  app.add_option("--seeds", seeds_text,
                 "comma-separated seed list (decimal or 0x hex)");
  app.add_option("--out", out_dir, "output directory (default: results)");
  app.add_option("--workers", workers,
                 "concurrent cases (default: hardware threads)");
  app.add_flag("--strict-mode", strict,
               "pin the shipped per-band channel plans and slot timings");
  app.add_flag("--dump-config", dump_config,
               "print the effective spec as JSON and exit");

  CLI11_PARSE(app, argc, argv);

  sixsim::ExperimentSpec spec = quick ? sixsim::ExperimentSpec::quick()
                                      : sixsim::ExperimentSpec::full_default();
  if (!config_path.empty()) {
    try {
      std::ifstream in(config_path);
      nlohmann::json j;
      in >> j;
      spec = sixsim::ExperimentSpec::from_json(j);
    } catch (const std::exception& e) {
      std::cerr << "error: cannot load " << config_path << ": " << e.what()
                << '\n';
      return 1;
    }
  }
  if (!seeds_text.empty()) {
    try {
      spec.seeds = parse_seed_list(seeds_text);
    } catch (const std::exception&) {
      std::cerr << "error: bad --seeds list: " << seeds_text << '\n';
      return 1;
    }
  }
  if (!out_dir.empty()) spec.out_dir = out_dir;
  if (workers >= 0) spec.workers = workers;
  if (strict) spec.strict_mode = true;

  if (dump_config) {
    std::cout << spec.to_json().dump(2) << '\n';
    return 0;
  }

  const auto violations = spec.validate();
  if (!violations.empty()) {
    std::cerr << "error: invalid configuration:\n";
    for (const auto& v : violations) std::cerr << "  - " << v << '\n';
    return 1;
  }

  const sixsim::ExperimentResult result = sixsim::run_experiment(spec, true);
  for (const auto& run : result.runs) {
    if (!run.ok) {
      std::printf("FAIL %-12s seed=%llx  %s\n", run.case_id().c_str(),
                  static_cast<unsigned long long>(run.seed),
                  run.error.c_str());
      continue;
    }
    std::printf(
        "ok   %-12s seed=%llx  pdr24=%.4f pdr868=%.4f combined=%.4f "
        "lat24=%s lat868=%s\n",
        run.case_id().c_str(), static_cast<unsigned long long>(run.seed),
        run.report24.pdr, run.report868.pdr, run.combined.report.pdr,
        run.report24.mean_latency_s
            ? (std::to_string(*run.report24.mean_latency_s) + "s").c_str()
            : "-",
        run.report868.mean_latency_s
            ? (std::to_string(*run.report868.mean_latency_s) + "s").c_str()
            : "-");
  }
  if (result.exit_code == 0)
    std::printf("all %zu cases completed; outputs in %s/\n",
                result.runs.size(), spec.out_dir.c_str());
  else
    std::fprintf(stderr, "some cases failed (exit 2)\n");
  return result.exit_code;
}
