#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "netscatter/chirp.hpp"

namespace netscatter {

using DeviceId = std::uint32_t;

// Power-aware cyclic shift map. Shifts are multiples of skip, ordered by the
// recorded device signal strength so adjacent shifts have small SNR gaps.
struct AssignmentTable {
  int skip = 2;
  std::map<DeviceId, std::size_t> shift_of_device;
  std::set<std::size_t> assoc_shifts;  // reserved, disjoint from data shifts

  std::set<std::size_t> data_shifts() const;
  bool valid(int sf) const;
};

// Devices sorted by SNR get shifts skip, 2*skip, ... (descending strength);
// with n_assoc > 0 the slot before the strongest and the slot after the
// weakest are reserved for association.
AssignmentTable assign_cyclic_shift(const std::map<DeviceId, double>& snr_db,
                                    int skip, int sf, int n_assoc);

enum class PowerLevel { Full, Mid, Low };  // 0 dB, -4 dB, -10 dB
double power_level_db(PowerLevel level);

struct DevicePowerState {
  PowerLevel level = PowerLevel::Mid;
  double baseline_rssi_db = 0.0;  // recorded at association
  int consecutive_failures = 0;
  bool skip_transmission = false;  // set when out of adjustment range this round
  bool reassociate = false;        // set after the third consecutive failure
};

constexpr double kDefaultAssocRssiThresholdDb = -60.0;
constexpr double kPowerHysteresisDb = 2.5;

DevicePowerState device_power_adapt(DevicePowerState state, double query_rssi_db,
                                    bool at_association,
                                    double assoc_threshold_db = kDefaultAssocRssiThresholdDb,
                                    double hysteresis_db = kPowerHysteresisDb);

// Backscatter transmit power gain 10*log10(|g0 - g1|^2 / 4).
double backscatter_power_gain_db(std::complex<double> gamma0, std::complex<double> gamma1);

// AP downlink query. Wire layout, MSB first:
//   [8b group_id][1b has_assoc][if set: 8b network_id, 8b cyclic_shift]
//   [1b has_reassign][if set: 1750b Lehmer-packed permutation][pad to byte]
// The minimal form is padded to 32 bits; the reassignment-only form is
// exactly 1760 bits.
struct QueryMessage {
  std::uint8_t group_id = 0;
  struct Assoc {
    std::uint8_t network_id;
    std::uint8_t cyclic_shift;
    bool operator==(const Assoc&) const = default;
  };
  std::optional<Assoc> assoc;
  std::optional<std::array<std::uint8_t, 256>> reassignment;

  bool operator==(const QueryMessage&) const = default;
};

constexpr std::size_t kMinimalQueryBits = 32;
constexpr std::size_t kReassignQueryBits = 1760;
constexpr double kDownlinkBps = 160e3;

std::vector<std::uint8_t> encode_query(const QueryMessage& msg);  // one bit per element
QueryMessage decode_query(const std::vector<std::uint8_t>& bits);
double downlink_airtime_s(std::size_t bits, double bitrate_bps = kDownlinkBps);

// ---- Association state machines ----------------------------------------

enum class TagPhase { Unassociated, RequestSent, Associated };

struct TagState {
  DeviceId id = 0;
  TagPhase phase = TagPhase::Unassociated;
  DevicePowerState power;
  std::optional<std::size_t> shift;
  double uplink_snr_db = 0.0;  // signal strength the AP measures for this tag
  std::uint8_t network_id = 0;
};

struct ApState {
  int sf = 9;
  int skip = 2;
  int n_assoc = 2;
  AssignmentTable table;
  std::map<DeviceId, double> strengths;
  struct Pending {
    DeviceId device;
    std::uint8_t network_id;
    std::size_t shift;
  };
  std::optional<Pending> pending;
  std::uint8_t next_network_id = 0;
};

struct RoundEvents {
  bool query_lost = false;   // no tag hears this round's query
  bool uplink_lost = false;  // AP misses all uplink transmissions this round
  double query_rssi_db = -50.0;  // downlink strength seen by the tags
};

struct RoundResult {
  QueryMessage query;
  std::vector<DeviceId> data_transmitters;
  std::vector<DeviceId> assoc_requests;  // sent on reserved shifts
  std::vector<DeviceId> assoc_acks;
  std::vector<DeviceId> newly_associated;
};

// Runs one query round: broadcast (with any pending assignment piggybacked),
// tag responses, and AP bookkeeping. States are advanced in place.
RoundResult association_step(ApState& ap, std::vector<TagState>& tags,
                             const RoundEvents& events);

// ---- Closed-form utilities ----------------------------------------------

struct CollisionProbability {
  double exact;   // 1 - prod_{i=1..n} (1 - (i-1)/2^sf)
  double approx;  // n(n-1) / 2^(sf+1)
};
CollisionProbability collision_probability(int n, int sf);

// 10! / ((10-n)! * 10^n) for n <= 10, else 0.
double choir_fraction_probability(int n);

struct RateModel {
  double lora_bitrate_bps;    // sf * bw / 2^sf
  double device_bitrate_bps;  // bw / 2^sf
  double aggregate_rate_bps;  // bw
  double gain;                // 2^sf / sf
};
RateModel rate_model(const ChirpConfig& cfg);

struct CapacityResult {
  double exact_bps;         // bw * log2(1 + n * snr)
  double low_snr_approx_bps;  // bw / ln2 * n * snr
};
CapacityResult multiuser_capacity(int n, double snr_linear, double bw_hz);

}  // namespace netscatter
