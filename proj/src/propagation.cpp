#include "sixsim/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace sixsim {

WaterfallTable WaterfallTable::default_24ghz() {
  // PDR 0 at -97 dBm rising to 1 at -83 dBm in 14 linear 1 dB steps.
  WaterfallTable t;
  for (int k = 0; k <= 14; ++k) {
    t.anchors.push_back({-97.0 + k, k / 14.0});
  }
  return t;
}

WaterfallTable WaterfallTable::parse(std::istream& in) {
  WaterfallTable t;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    double rssi = 0.0, pdr = 0.0;
    if (row >> rssi >> pdr) t.anchors.push_back({rssi, pdr});
  }
  const auto violations = t.validate();
  if (!violations.empty())
    throw std::invalid_argument("waterfall table: " + violations.front());
  return t;
}

std::string WaterfallTable::serialize() const {
  std::ostringstream out;
  out.precision(17);
  for (const auto& a : anchors) out << a.rssi_dbm << ' ' << a.pdr << '\n';
  return out.str();
}

std::vector<std::string> WaterfallTable::validate() const {
  std::vector<std::string> v;
  if (anchors.size() < 2) {
    v.push_back("needs at least two anchors");
    return v;
  }
  for (std::size_t i = 1; i < anchors.size(); ++i) {
    if (anchors[i].rssi_dbm <= anchors[i - 1].rssi_dbm)
      v.push_back("anchor rssi values must be strictly increasing");
    if (anchors[i].pdr < anchors[i - 1].pdr)
      v.push_back("anchor pdr values must be non-decreasing");
  }
  if (anchors.front().pdr != 0.0) v.push_back("first anchor pdr must be 0");
  if (anchors.back().pdr != 1.0) v.push_back("last anchor pdr must be 1");
  return v;
}

double friis_path_loss_db(double distance_m, double frequency_hz) {
  if (distance_m <= 0.0)
    throw std::invalid_argument("friis_path_loss: distance must be positive");
  if (frequency_hz <= 0.0)
    throw std::invalid_argument("friis_path_loss: frequency must be positive");
  const double lambda = kSpeedOfLightMps / frequency_hz;
  return 20.0 * std::log10(4.0 * std::numbers::pi * distance_m / lambda);
}

double sample_rssi_dbm(double distance_m, const BandConfig& band,
                       RngStream& rng) {
  const double friis = friis_path_loss_db(distance_m, band.center_frequency_hz);
  const double excess = rng.uniform(0.0, kExcessLossSpreadDb);
  return band.tx_power_dbm - (friis + excess);
}

double rssi_to_pdr(double rssi_dbm, const WaterfallTable& table) {
  const auto& a = table.anchors;
  if (rssi_dbm <= a.front().rssi_dbm) return a.front().pdr;
  if (rssi_dbm >= a.back().rssi_dbm) return a.back().pdr;
  // First anchor strictly above rssi; its predecessor starts the segment.
  const auto hi = std::upper_bound(
      a.begin(), a.end(), rssi_dbm,
      [](double r, const WaterfallAnchor& an) { return r < an.rssi_dbm; });
  const auto lo = hi - 1;
  const double t = (rssi_dbm - lo->rssi_dbm) / (hi->rssi_dbm - lo->rssi_dbm);
  return lo->pdr + t * (hi->pdr - lo->pdr);
}

WaterfallTable offset_table(const WaterfallTable& table, double offset_db) {
  WaterfallTable shifted = table;
  for (auto& a : shifted.anchors) a.rssi_dbm -= offset_db;
  return shifted;
}

double sinr_db(double signal_rssi_dbm, std::span<const double> interferers_dbm,
               double noise_floor_dbm) {
  double denom_mw = std::pow(10.0, noise_floor_dbm / 10.0);
  for (double i : interferers_dbm) denom_mw += std::pow(10.0, i / 10.0);
  return signal_rssi_dbm - 10.0 * std::log10(denom_mw);
}

double sinr_reception_pdr(double signal_rssi_dbm,
                          std::span<const double> interferers_dbm,
                          double noise_floor_dbm,
                          const WaterfallTable& table) {
  if (interferers_dbm.empty()) return rssi_to_pdr(signal_rssi_dbm, table);
  const double sinr = sinr_db(signal_rssi_dbm, interferers_dbm, noise_floor_dbm);
  // The table's dBm axis is read relative to the noise floor, so a clean
  // reception (SINR = signal - noise) lands exactly at the plain RSSI lookup.
  return rssi_to_pdr(noise_floor_dbm + sinr, table);
}

bool sinr_reception(double signal_rssi_dbm,
                    std::span<const double> interferers_dbm,
                    double noise_floor_dbm, const WaterfallTable& table,
                    RngStream& rng) {
  return rng.bernoulli(sinr_reception_pdr(signal_rssi_dbm, interferers_dbm,
                                          noise_floor_dbm, table));
}

}  // namespace sixsim
