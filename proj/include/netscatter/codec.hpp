#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "netscatter/chirp.hpp"
#include "netscatter/mac.hpp"

namespace netscatter {

constexpr int kPreambleUpchirps = 6;
constexpr int kPreambleDownchirps = 2;
constexpr int kPayloadBits = 40;  // 32 data bits + 8-bit CRC
constexpr int kDataBits = 32;

// One device's packet: preamble upchirps, preamble downchirps and payload all
// use the same assigned cyclic shift; payload is ON-OFF keyed (bit 0 = silence).
struct PacketFrame {
  int n_preamble_up = kPreambleUpchirps;
  int n_preamble_down = kPreambleDownchirps;
  std::vector<std::uint8_t> payload_bits;
  std::size_t cyclic_shift = 0;

  std::size_t total_symbols() const {
    return std::size_t(n_preamble_up + n_preamble_down) + payload_bits.size();
  }
};

std::uint8_t crc8(std::uint32_t data);
std::vector<std::uint8_t> make_payload_bits(std::uint32_t data);
std::optional<std::uint32_t> check_payload_bits(const std::vector<std::uint8_t>& bits);

IqBuffer build_packet(const PacketFrame& frame, const ChirpConfig& cfg);

// Estimated first sample of the packet (preamble boundary midpoint method),
// or nullopt when no preamble rises above the detection floor.
std::optional<std::size_t> detect_packet_start(const IqBuffer& rx, const ChirpConfig& cfg);

struct DeviceDetection {
  double threshold = 0.0;  // average preamble peak power
  double position = 0.0;   // measured fractional peak position [native bins]
};

struct DetectionResult {
  std::size_t packet_start = 0;
  std::map<std::size_t, DeviceDetection> devices;  // keyed by cyclic shift

  std::set<std::size_t> active_shifts() const;
  std::map<std::size_t, double> thresholds() const;
};

// Demodulates the six preamble upchirps; a shift counts as active when its
// peak repeats in-window across all six symbols, clears the noise floor, and
// is not explained by side lobes of stronger detected devices.
DetectionResult detect_active_devices(const IqBuffer& rx, std::size_t start,
                                      const AssignmentTable& assignment,
                                      const ChirpConfig& cfg);

// Threshold decoding: bit = 1 iff the peak power near the device's measured
// preamble position exceeds half its preamble average.
std::map<std::size_t, std::vector<std::uint8_t>> decode_payloads(
    const IqBuffer& rx, const DetectionResult& det, const ChirpConfig& cfg,
    std::size_t n_payload_symbols = kPayloadBits);

// One dechirp and one FFT for the whole symbol; returns the max padded-bin
// power within each native bin's window. Cost independent of device count.
std::vector<double> demod_symbol_multi(const IqBuffer& rx_symbol, const ChirpConfig& cfg);

// Dirichlet kernel power at a distance of delta native bins from a tone peak,
// normalized to the peak (side-lobe level of the zero-padded spectrum).
double chirp_sidelobe_power(double delta_bins, std::size_t n_native);

}  // namespace netscatter
