#pragma once
// Physical layer: free-space path loss with a uniform excess-loss spread
// (path loss drawn per attempt in [Friis, Friis + 40 dB]), an RSSI-to-PDR
// waterfall table, and SINR-based reception under same-channel interference.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sixsim/core.hpp"
#include "sixsim/rng.hpp"

namespace sixsim {

inline constexpr double kSpeedOfLightMps = 299792458.0;
inline constexpr double kExcessLossSpreadDb = 40.0;
// Sensitivity gap between the 2.4 GHz radio (CC2538 class) and the sub-GHz
// radio (CC1352R class); applied as a table shift for the 868 MHz band.
inline constexpr double kSubGhzOffsetDb = 13.0;

struct WaterfallAnchor {
  double rssi_dbm = 0.0;
  double pdr = 0.0;
};

// Piecewise-linear RSSI -> packet delivery ratio map. Anchors are strictly
// increasing in RSSI, non-decreasing in PDR, and span 0.0 .. 1.0.
struct WaterfallTable {
  std::vector<WaterfallAnchor> anchors;

  // Shipped 2.4 GHz table: PDR 0 at -97 dBm rising linearly in 1 dB steps
  // to 1 at -83 dBm.
  static WaterfallTable default_24ghz();

  // One "<rssi_dbm> <pdr>" pair per line; '#' starts a comment.
  static WaterfallTable parse(std::istream& in);
  std::string serialize() const;

  std::vector<std::string> validate() const;
};

// Free-space path loss 20*log10(4*pi*d/lambda) in dB. distance_m > 0.
double friis_path_loss_db(double distance_m, double frequency_hz);

// One received-signal-strength draw: tx_power - (friis + U[0, 40] dB).
double sample_rssi_dbm(double distance_m, const BandConfig& band,
                       RngStream& rng);

// Clamped piecewise-linear interpolation over the table anchors.
double rssi_to_pdr(double rssi_dbm, const WaterfallTable& table);

// Same table shifted down in sensitivity: every anchor RSSI minus offset_db.
WaterfallTable offset_table(const WaterfallTable& table, double offset_db);

// signal - 10*log10(sum of interferer powers + noise power), all in dBm.
double sinr_db(double signal_rssi_dbm, std::span<const double> interferers_dbm,
               double noise_floor_dbm);

// Success probability of a reception: the SINR is looked up in the table
// with its dBm axis read relative to the noise floor (lookup at
// noise_floor + SINR), then one Bernoulli draw decides. With no interferers
// this reduces exactly to rssi_to_pdr(signal).
double sinr_reception_pdr(double signal_rssi_dbm,
                          std::span<const double> interferers_dbm,
                          double noise_floor_dbm, const WaterfallTable& table);

bool sinr_reception(double signal_rssi_dbm,
                    std::span<const double> interferers_dbm,
                    double noise_floor_dbm, const WaterfallTable& table,
                    RngStream& rng);

}  // namespace sixsim
