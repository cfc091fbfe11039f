#include "sixsim/core.hpp"

#include <cmath>

namespace sixsim {

const char* band_label(BandId band) {
  return band == BandId::Band24GHz ? "24ghz" : "868mhz";
}

SimTime SimTime::from_seconds(double s) {
  return SimTime{static_cast<std::int64_t>(std::llround(s * 1e6))};
}

BandConfig default_band24() {
  BandConfig b;
  b.band_id = BandId::Band24GHz;
  b.center_frequency_hz = 2.4e9;
  b.channel_count = 16;
  b.channel_spacing_hz = 5e6;
  b.bitrate_bps = 250000.0;
  b.slot_duration = SimTime{10000};
  b.radio_sensitivity_dbm = -97.0;
  return b;
}

BandConfig default_band868() {
  BandConfig b;
  b.band_id = BandId::Band868MHz;
  b.center_frequency_hz = 868e6;
  b.channel_count = 34;
  b.channel_spacing_hz = 200e3;
  b.bitrate_bps = 50000.0;
  b.slot_duration = SimTime{29380};
  b.radio_sensitivity_dbm = -110.0;
  return b;
}

SimTime asn_to_time(Asn asn, const BandConfig& band) {
  return SimTime{static_cast<std::int64_t>(asn.value) * band.slot_duration.us};
}

std::vector<std::string> validate_band_config(const BandConfig& band,
                                              bool strict_mode) {
  std::vector<std::string> v;
  if (band.center_frequency_hz <= 0.0)
    v.push_back("center_frequency must be positive");
  if (band.channel_count < 1) v.push_back("channel_count must be at least 1");
  if (band.channel_spacing_hz <= 0.0)
    v.push_back("channel_spacing must be positive");
  if (band.bitrate_bps <= 0.0) v.push_back("bitrate must be positive");
  if (band.slot_duration.us <= 0) v.push_back("slot_duration must be positive");
  if (band.tx_power_dbm <= band.radio_sensitivity_dbm)
    v.push_back("tx_power must exceed radio_sensitivity");
  if (strict_mode) {
    const bool is24 = band.band_id == BandId::Band24GHz;
    const int channels = is24 ? 16 : 34;
    const std::int64_t slot_us = is24 ? 10000 : 29380;
    const double bitrate = is24 ? 250000.0 : 50000.0;
    if (band.channel_count != channels)
      v.push_back("strict: channel_count must be " + std::to_string(channels));
    if (band.slot_duration.us != slot_us)
      v.push_back("strict: slot_duration must be " + std::to_string(slot_us) +
                  "us");
    if (band.bitrate_bps != bitrate)
      v.push_back("strict: bitrate must be " +
                  std::to_string(static_cast<long long>(bitrate)) + "bps");
  }
  return v;
}

std::vector<std::string> validate_app_config(const AppConfig& app) {
  std::vector<std::string> v;
  if (app.message_interval.us <= 0)
    v.push_back("message_interval must be positive");
  if (app.interval_variance.us < 0)
    v.push_back("interval_variance must be non-negative");
  if (app.max_retransmissions < 0)
    v.push_back("max_retransmissions must be non-negative");
  if (app.setup_time.us < 0) v.push_back("setup_time must be non-negative");
  if (app.duration.us < 0) v.push_back("duration must be non-negative");
  if (app.payload_bytes <= 0) v.push_back("payload_bytes must be positive");
  return v;
}

}  // namespace sixsim
