#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "netscatter/chirp.hpp"

namespace netscatter {

// Per-packet timing jitter model.
struct JitterSpec {
  enum class Kind { None, Uniform, Gaussian };
  Kind kind = Kind::None;
  double lo_s = 0.0;     // uniform lower bound [s]
  double hi_s = 0.0;     // uniform upper bound [s]
  double sigma_s = 0.0;  // gaussian std dev [s]

  static JitterSpec none() { return {}; }
  static JitterSpec uniform(double lo, double hi) {
    return {Kind::Uniform, lo, hi, 0.0};
  }
  static JitterSpec gaussian(double sigma) { return {Kind::Gaussian, 0.0, 0.0, sigma}; }
};

struct DeviceImpairments {
  double power_gain_db = 0.0;  // <= 0 relative to unit-power reference
  JitterSpec timing_jitter;
  double freq_offset_hz = 0.0;
  double distance_m = 0.0;
  double velocity_mps = 0.0;
};

struct ChannelConfig {
  double snr_db = 10.0;  // per-device SNR of a 0 dB gain device
  std::uint64_t seed = 0;
  double carrier_hz = 900e6;  // used only for Doppler arithmetic
};

// Deterministic RNG: splitmix64 stream plus Box-Muller normals so output is
// identical across platforms for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);
  double gaussian();                      // standard normal
 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Advances a chirp-modulated signal by dt, so the measured demod peak moves
// by +dt*bw bins. Whole samples rotate cyclically; the sub-sample residue is
// applied as the equivalent chirp frequency offset (a chirp delayed by tau
// equals the same chirp offset by slope*tau, exactly at the sample points —
// bandlimited interpolation would misrepresent the aliased sweep edge).
// |dt| must be under the buffer duration.
IqBuffer apply_timing_offset(const IqBuffer& sig, double dt_s, const ChirpConfig& cfg);

// Multiplies by exp(j*2*pi*df*n/fs). |df| must be under fs/2.
IqBuffer apply_freq_offset(const IqBuffer& sig, double df_hz);

// Scales amplitude by 10^(gain_db/20).
IqBuffer apply_power_gain(const IqBuffer& sig, double gain_db);

// Round-trip propagation delay 2*d/c.
double tof_delay(double distance_m);

// One-way Doppler shift carrier_hz * v / c.
double doppler_shift(double velocity_mps, double carrier_hz);

// Sample-wise sum of parts at their declared start offsets.
IqBuffer superpose(const std::vector<std::pair<IqBuffer, std::size_t>>& parts);

// Adds circularly-symmetric complex Gaussian noise with power
// 10^(-snr_db/10) per sample (unit-power 0 dB reference device).
IqBuffer add_awgn(const IqBuffer& sig, double snr_db, std::uint64_t seed);

// Draws one per-packet jitter value from the spec.
double sample_jitter(const JitterSpec& spec, Rng& rng);

}  // namespace netscatter
