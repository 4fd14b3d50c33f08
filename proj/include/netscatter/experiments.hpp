#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "netscatter/channel.hpp"
#include "netscatter/chirp.hpp"

namespace netscatter {

// One result row: the config snapshot is enough to re-run the row exactly,
// and identical config+seed regenerates identical metrics.
struct ExperimentRecord {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, double>> metrics;
};

// Locale-independent shortest round-trip formatting ('.' decimal point).
std::string format_number(double v);

// Header row names every config field and metric; final row newline-terminated.
// All records must share the same experiment name and key layout.
void write_csv(std::ostream& os, const std::vector<ExperimentRecord>& records);

// ---- Near-far ------------------------------------------------------------

struct NearFarParams {
  ChirpConfig cfg;
  std::size_t bin_a = 2;    // weak device
  std::size_t bin_b = 258;  // strong device
  std::vector<double> power_diff_db = {0.0, 10.0, 20.0, 30.0, 40.0};
  double freq_sigma_hz = 300.0;  // per-symbol Gaussian frequency mismatch
  int n_symbols = 10000;
  double weak_snr_db = 10.0;  // the weak device stays at this SNR
};

// OOK BER of both devices at each power difference.
std::vector<ExperimentRecord> run_near_far(const NearFarParams& params, std::uint64_t seed);

// ---- Two-device packet pipeline (shared by dynrange and tests) -----------

struct TwoDevicePacketParams {
  ChirpConfig cfg;
  std::size_t shift_a = 2;  // weak device
  std::size_t shift_b = 4;  // strong device
  double deficit_db = 5.0;  // how far device A sits below device B
  double snr_db = 10.0;     // SNR of the weak device
  double freq_sigma_hz = 0.0;
  JitterSpec jitter = JitterSpec::none();
  int n_packets = 100;
};

struct TwoDeviceResult {
  double per_weak = 0.0;
  double per_strong = 0.0;
  double ber_weak = 0.0;
  double ber_strong = 0.0;
};

// Full pipeline (build, superpose, detect, decode) over n_packets.
TwoDeviceResult two_device_packet_run(const TwoDevicePacketParams& params,
                                      std::uint64_t seed);

// ---- Dynamic range sweep -------------------------------------------------

struct DynamicRangeParams {
  ChirpConfig cfg;
  std::size_t fixed_bin = 2;
  std::vector<std::size_t> separations = {2, 8, 64, 256, 448, 504, 510};
  double snr_db = 10.0;
  double step_db = 2.5;
  double max_deficit_db = 45.0;
  int n_packets = 100;
};

// Per separation: the largest power deficit at which the weak device's packet
// error rate stays below 1%.
std::vector<ExperimentRecord> run_dynamic_range_sweep(const DynamicRangeParams& params,
                                                      std::uint64_t seed);

// ---- FFT bin variation ---------------------------------------------------

struct FftVariationParams {
  std::vector<double> bw_list = {500e3, 250e3, 125e3};
  int sf = 9;
  int pad_factor = 10;
  JitterSpec jitter = JitterSpec::uniform(0.0, 2e-6);
  int n_packets = 1000;
  double snr_db = 20.0;
};

// Measured fractional-bin displacement of the preamble peak per bandwidth;
// displacement scales as jitter * bw.
std::vector<ExperimentRecord> run_fft_variation(const FftVariationParams& params,
                                                std::uint64_t seed);

// ---- Network throughput / latency ---------------------------------------

enum class Scheme { NetscatterCfg1, NetscatterCfg2, LoraFixed, LoraIdealRate };

std::string scheme_name(Scheme scheme);
std::optional<Scheme> scheme_from_name(const std::string& name);

// One row of the SNR -> LoRa bitrate table for the ideal-rate baseline.
struct RateEntry {
  double min_snr_db;
  double bitrate_bps;
  double symbol_duration_s;
};

std::vector<RateEntry> default_rate_table();

struct NetworkParams {
  ChirpConfig cfg;
  std::vector<int> n_devices_list = {256};
  Scheme scheme = Scheme::NetscatterCfg1;
  int n_rounds = 3;
  int payload_bits = 40;
  int data_bits = 32;
  int preamble_symbols = 8;
  double downlink_bps = 160e3;
  std::size_t query_bits_cfg1 = 32;
  std::size_t query_bits_cfg2 = 1760;
  std::size_t lora_query_bits = 28;
  double lora_fixed_bps = 8789.0625;
  std::vector<RateEntry> rate_table = default_rate_table();
  double snr_lo_db = 0.0;   // deployment SNR draw, uniform
  double snr_hi_db = 30.0;
  std::optional<double> uniform_snr_db;  // give every device this SNR instead
  double noise_ref_snr_db = 10.0;        // AWGN level of a 0 dB gain device
  JitterSpec jitter = JitterSpec::uniform(0.0, 2e-6);
  int skip = 2;
  int n_assoc = 0;  // data-collection phase: no association slots reserved
};

// Simulated concurrent rounds for the netscatter schemes; closed-form
// serialization for the LoRa baselines. One record per device count with
// phy_rate_bps, link_rate_bps, latency_s, ber, per, useful_bits.
std::vector<ExperimentRecord> run_network(const NetworkParams& params, std::uint64_t seed);

// ---- BER vs SNR ----------------------------------------------------------

struct BerSnrParams {
  ChirpConfig cfg;
  std::vector<double> snr_list = {-10.0, -5.0, 0.0, 5.0, 10.0, 20.0};
  int n_devices = 1;
  int n_symbols = 10000;
  int symbols_per_packet = 40;  // jitter redrawn per packet
  JitterSpec jitter = JitterSpec::none();
  int skip = 2;
};

std::vector<ExperimentRecord> run_ber_snr(const BerSnrParams& params, std::uint64_t seed);

}  // namespace netscatter
