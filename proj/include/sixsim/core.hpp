#pragma once
// Core simulator types: operating bands, exact simulation time, packet
// identity and application traffic configuration.

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace sixsim {

using NodeId = int;
inline constexpr NodeId kRootId = 0;
inline constexpr NodeId kNoNode = -1;

enum class BandId { Band24GHz, Band868MHz };

const char* band_label(BandId band);  // "24ghz" / "868mhz"

// Simulation time as integer microseconds. Both slot durations in use
// (10 ms and 29.38 ms) are whole microsecond counts, so slot arithmetic
// stays exact over multi-hour runs and reruns are bit-identical.
struct SimTime {
  std::int64_t us = 0;

  static SimTime from_seconds(double s);
  double seconds() const { return static_cast<double>(us) / 1e6; }

  auto operator<=>(const SimTime&) const = default;
  SimTime operator+(SimTime o) const { return SimTime{us + o.us}; }
  SimTime operator-(SimTime o) const { return SimTime{us - o.us}; }
};

// Absolute slot number since the start of the run.
struct Asn {
  std::uint64_t value = 0;
  auto operator<=>(const Asn&) const = default;
};

struct BandConfig {
  BandId band_id = BandId::Band24GHz;
  double center_frequency_hz = 2.4e9;
  int channel_count = 16;
  double channel_spacing_hz = 5e6;
  double bitrate_bps = 250000.0;
  SimTime slot_duration{10000};        // us
  double radio_sensitivity_dbm = -97.0;
  double tx_power_dbm = 0.0;
  double noise_floor_dbm = -105.0;
};

// Shipped configurations: 2.4 GHz (16 channels, 5 MHz spacing, 250 kbps,
// 10 ms slots, CC2538-class sensitivity) and 868 MHz (34 channels, 200 kHz
// spacing, 50 kbps, 29.38 ms slots, CC1352R-class sensitivity, 13 dB lower).
BandConfig default_band24();
BandConfig default_band868();

// Start time of slot `asn`: asn * slot_duration, exact integer microseconds.
SimTime asn_to_time(Asn asn, const BandConfig& band);

// Returns the list of violated constraints (empty means valid). Strict mode
// additionally pins the fixed per-band channel plan above.
std::vector<std::string> validate_band_config(const BandConfig& band,
                                              bool strict_mode = false);

// Identity of an application packet. The same (source, sequence) pair names
// the two per-band copies of one logical packet, which is what lets the sink
// combine first arrivals across bands.
struct PacketId {
  NodeId source = 0;
  std::uint32_t sequence = 0;
  auto operator<=>(const PacketId&) const = default;
};

inline constexpr std::uint64_t kDefaultSeed = 0x74C2A74018BDBull;

struct AppConfig {
  SimTime message_interval{10'000'000};    // T_a
  SimTime interval_variance{0};            // V, uniform jitter width
  int max_retransmissions = 3;             // R
  SimTime setup_time{5'400'000'000};       // W: network formation window
  SimTime duration{7'200'000'000};         // traffic generation window
  int payload_bytes = 90;
  std::uint64_t seed = kDefaultSeed;
};

std::vector<std::string> validate_app_config(const AppConfig& app);

}  // namespace sixsim
