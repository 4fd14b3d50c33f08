#include "netscatter/mac.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace netscatter {

namespace {

using bigint = boost::multiprecision::cpp_int;

constexpr std::size_t kPermutationFieldBits = 1750;  // holds log2(256!) ~ 1684 bits

const bigint& factorial(int n) {
  static std::vector<bigint> table = [] {
    std::vector<bigint> t(257);
    t[0] = 1;
    for (int i = 1; i <= 256; ++i) t[i] = t[i - 1] * i;
    return t;
  }();
  return table[n];
}

struct BitWriter {
  std::vector<std::uint8_t> bits;
  void put(std::uint64_t value, int width) {
    for (int b = width - 1; b >= 0; --b) bits.push_back((value >> b) & 1u);
  }
  void pad_to(std::size_t n) {
    while (bits.size() < n) bits.push_back(0);
  }
};

struct BitReader {
  const std::vector<std::uint8_t>& bits;
  std::size_t pos = 0;
  std::uint64_t get(int width) {
    if (pos + std::size_t(width) > bits.size())
      throw std::invalid_argument("decode_query: truncated message");
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) {
      const std::uint8_t bit = bits[pos++];
      if (bit > 1) throw std::invalid_argument("decode_query: non-bit element");
      v = (v << 1) | bit;
    }
    return v;
  }
};

bigint lehmer_encode(const std::array<std::uint8_t, 256>& perm) {
  std::array<bool, 256> seen{};
  for (auto v : perm) {
    if (seen[v]) throw std::invalid_argument("encode_query: not a permutation");
    seen[v] = true;
  }
  std::vector<std::uint8_t> remaining(256);
  for (int i = 0; i < 256; ++i) remaining[i] = std::uint8_t(i);
  bigint value = 0;
  for (int i = 0; i < 256; ++i) {
    auto it = std::lower_bound(remaining.begin(), remaining.end(), perm[i]);
    const int rank = int(it - remaining.begin());
    value += bigint(rank) * factorial(255 - i);
    remaining.erase(it);
  }
  return value;
}

std::array<std::uint8_t, 256> lehmer_decode(bigint value) {
  if (value < 0 || value >= factorial(256))
    throw std::invalid_argument("decode_query: permutation index out of range");
  std::vector<std::uint8_t> remaining(256);
  for (int i = 0; i < 256; ++i) remaining[i] = std::uint8_t(i);
  std::array<std::uint8_t, 256> perm{};
  for (int i = 0; i < 256; ++i) {
    const bigint f = factorial(255 - i);
    const int rank = int(value / f);
    value %= f;
    perm[i] = remaining[std::size_t(rank)];
    remaining.erase(remaining.begin() + rank);
  }
  return perm;
}

}  // namespace

std::set<std::size_t> AssignmentTable::data_shifts() const {
  std::set<std::size_t> out;
  for (const auto& [id, shift] : shift_of_device) out.insert(shift);
  return out;
}

bool AssignmentTable::valid(int sf) const {
  const std::size_t n_bins = std::size_t{1} << sf;
  std::set<std::size_t> seen;
  for (const auto& [id, shift] : shift_of_device) {
    if (shift >= n_bins || shift % std::size_t(skip) != 0) return false;
    if (!seen.insert(shift).second) return false;
  }
  for (auto shift : assoc_shifts) {
    if (shift >= n_bins || shift % std::size_t(skip) != 0) return false;
    if (seen.count(shift)) return false;
  }
  return true;
}

AssignmentTable assign_cyclic_shift(const std::map<DeviceId, double>& snr_db, int skip,
                                    int sf, int n_assoc) {
  if (skip < 1) throw std::invalid_argument("assign_cyclic_shift: skip must be >= 1");
  if (sf < 4 || sf > 12) throw std::invalid_argument("assign_cyclic_shift: sf out of range");
  if (n_assoc < 0) throw std::invalid_argument("assign_cyclic_shift: negative n_assoc");
  const std::size_t n_bins = std::size_t{1} << sf;
  const std::size_t n_slots = n_bins / std::size_t(skip);
  const std::size_t needed = snr_db.size() + std::size_t(n_assoc);
  if (needed > n_slots)
    throw std::runtime_error("assign_cyclic_shift: capacity exceeded");

  // Strongest first; ties broken by id so the result is deterministic.
  std::vector<std::pair<double, DeviceId>> order;
  order.reserve(snr_db.size());
  for (const auto& [id, snr] : snr_db) order.emplace_back(snr, id);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  AssignmentTable table;
  table.skip = skip;
  const std::size_t assoc_before = std::size_t(n_assoc + 1) / 2;
  std::size_t slot = 0;
  for (std::size_t i = 0; i < assoc_before; ++i) table.assoc_shifts.insert(slot++ * skip);
  for (const auto& [snr, id] : order) table.shift_of_device[id] = slot++ * skip;
  for (std::size_t i = assoc_before; i < std::size_t(n_assoc); ++i)
    table.assoc_shifts.insert(slot++ * skip);
  return table;
}

double power_level_db(PowerLevel level) {
  switch (level) {
    case PowerLevel::Full: return 0.0;
    case PowerLevel::Mid: return -4.0;
    case PowerLevel::Low: return -10.0;
  }
  return 0.0;
}

DevicePowerState device_power_adapt(DevicePowerState state, double query_rssi_db,
                                    bool at_association, double assoc_threshold_db,
                                    double hysteresis_db) {
  state.skip_transmission = false;
  if (at_association) {
    state.level = query_rssi_db < assoc_threshold_db ? PowerLevel::Full : PowerLevel::Mid;
    state.baseline_rssi_db = query_rssi_db;
    state.consecutive_failures = 0;
    state.reassociate = false;
    return state;
  }
  if (query_rssi_db > state.baseline_rssi_db + hysteresis_db) {
    // Link got stronger: back the gain off one level.
    if (state.level == PowerLevel::Full) {
      state.level = PowerLevel::Mid;
      state.consecutive_failures = 0;
    } else if (state.level == PowerLevel::Mid) {
      state.level = PowerLevel::Low;
      state.consecutive_failures = 0;
    } else {
      state.skip_transmission = true;
      state.consecutive_failures += 1;
    }
  } else if (query_rssi_db < state.baseline_rssi_db - hysteresis_db) {
    if (state.level == PowerLevel::Low) {
      state.level = PowerLevel::Mid;
      state.consecutive_failures = 0;
    } else if (state.level == PowerLevel::Mid) {
      state.level = PowerLevel::Full;
      state.consecutive_failures = 0;
    } else {
      state.skip_transmission = true;
      state.consecutive_failures += 1;
    }
  } else {
    state.consecutive_failures = 0;
  }
  // "More than twice" rule: the third consecutive out-of-range round triggers
  // re-association.
  if (state.consecutive_failures >= 3) state.reassociate = true;
  return state;
}

double backscatter_power_gain_db(std::complex<double> gamma0, std::complex<double> gamma1) {
  if (std::abs(gamma0) > 1.0 + 1e-12 || std::abs(gamma1) > 1.0 + 1e-12)
    throw std::invalid_argument("backscatter_power_gain_db: |gamma| must be <= 1");
  const double gain = std::norm(gamma0 - gamma1) / 4.0;
  return 10.0 * std::log10(gain);
}

std::vector<std::uint8_t> encode_query(const QueryMessage& msg) {
  BitWriter w;
  w.put(msg.group_id, 8);
  w.put(msg.assoc.has_value() ? 1 : 0, 1);
  if (msg.assoc) {
    w.put(msg.assoc->network_id, 8);
    w.put(msg.assoc->cyclic_shift, 8);
  }
  w.put(msg.reassignment.has_value() ? 1 : 0, 1);
  if (msg.reassignment) {
    const bigint value = lehmer_encode(*msg.reassignment);
    for (int b = int(kPermutationFieldBits) - 1; b >= 0; --b)
      w.bits.push_back(boost::multiprecision::bit_test(value, unsigned(b)) ? 1 : 0);
  }
  std::size_t target = (w.bits.size() + 7) / 8 * 8;
  target = std::max(target, kMinimalQueryBits);
  w.pad_to(target);
  return w.bits;
}

QueryMessage decode_query(const std::vector<std::uint8_t>& bits) {
  BitReader r{bits};
  QueryMessage msg;
  msg.group_id = std::uint8_t(r.get(8));
  if (r.get(1)) {
    QueryMessage::Assoc a;
    a.network_id = std::uint8_t(r.get(8));
    a.cyclic_shift = std::uint8_t(r.get(8));
    msg.assoc = a;
  }
  if (r.get(1)) {
    bigint value = 0;
    for (std::size_t i = 0; i < kPermutationFieldBits; ++i) {
      value <<= 1;
      if (r.get(1)) value |= 1;
    }
    msg.reassignment = lehmer_decode(value);
  }
  std::size_t expected = (r.pos + 7) / 8 * 8;
  expected = std::max(expected, kMinimalQueryBits);
  if (bits.size() != expected)
    throw std::invalid_argument("decode_query: malformed bit length");
  while (r.pos < bits.size())
    if (r.get(1)) throw std::invalid_argument("decode_query: nonzero padding");
  return msg;
}

double downlink_airtime_s(std::size_t bits, double bitrate_bps) {
  return double(bits) / bitrate_bps;
}

RoundResult association_step(ApState& ap, std::vector<TagState>& tags,
                             const RoundEvents& events) {
  const std::size_t n_bins = std::size_t{1} << ap.sf;
  if (ap.table.assoc_shifts.empty() && ap.n_assoc > 0 && ap.table.shift_of_device.empty())
    ap.table = assign_cyclic_shift({}, ap.skip, ap.sf, ap.n_assoc);

  RoundResult rr;
  rr.query.group_id = 0;
  if (ap.pending)
    rr.query.assoc = QueryMessage::Assoc{ap.pending->network_id,
                                         std::uint8_t(ap.pending->shift)};

  if (!events.query_lost) {
    for (auto& tag : tags) {
      switch (tag.phase) {
        case TagPhase::Associated: {
          // A repeated assignment means the AP missed our ACK: acknowledge again.
          if (rr.query.assoc && tag.shift && rr.query.assoc->cyclic_shift == *tag.shift &&
              rr.query.assoc->network_id == tag.network_id) {
            rr.assoc_acks.push_back(tag.id);
          }
          tag.power = device_power_adapt(tag.power, events.query_rssi_db, false);
          if (tag.power.reassociate) {
            tag.phase = TagPhase::Unassociated;
            tag.shift.reset();
            break;
          }
          if (!tag.power.skip_transmission) rr.data_transmitters.push_back(tag.id);
          break;
        }
        case TagPhase::Unassociated: {
          // Region choice (high vs low SNR reserved shift) is by query RSSI.
          rr.assoc_requests.push_back(tag.id);
          tag.phase = TagPhase::RequestSent;
          break;
        }
        case TagPhase::RequestSent: {
          if (rr.query.assoc && ap.pending && ap.pending->device == tag.id) {
            tag.shift = rr.query.assoc->cyclic_shift;
            tag.network_id = rr.query.assoc->network_id;
            tag.power = device_power_adapt(tag.power, events.query_rssi_db, true);
            rr.assoc_acks.push_back(tag.id);
            tag.phase = TagPhase::Associated;
          } else {
            rr.assoc_requests.push_back(tag.id);  // retry until assigned
          }
          break;
        }
      }
    }
  }

  if (!events.uplink_lost) {
    if (ap.pending) {
      for (auto id : rr.assoc_acks) {
        if (id == ap.pending->device) {
          for (auto& tag : tags) {
            if (tag.id == id) ap.strengths[id] = tag.uplink_snr_db;
          }
          ap.table.shift_of_device[id] = ap.pending->shift;
          rr.newly_associated.push_back(id);
          ap.pending.reset();
          break;
        }
      }
    }
    if (!ap.pending && !rr.assoc_requests.empty()) {
      const DeviceId dev = *std::min_element(rr.assoc_requests.begin(),
                                             rr.assoc_requests.end());
      const auto used = ap.table.data_shifts();
      std::optional<std::size_t> free_shift;
      for (std::size_t shift = 0; shift < n_bins; shift += std::size_t(ap.skip)) {
        if (ap.table.assoc_shifts.count(shift) || used.count(shift)) continue;
        free_shift = shift;
        break;
      }
      if (!free_shift)
        throw std::runtime_error("association_step: capacity exceeded");
      ap.pending = ApState::Pending{dev, ap.next_network_id++, *free_shift};
    }
  }
  return rr;
}

CollisionProbability collision_probability(int n, int sf) {
  if (sf < 4 || sf > 12) throw std::invalid_argument("collision_probability: sf out of range");
  const double n_bins = double(std::size_t{1} << sf);
  if (n < 1 || double(n) > n_bins)
    throw std::invalid_argument("collision_probability: n out of range");
  double prod = 1.0;
  for (int i = 1; i <= n; ++i) prod *= 1.0 - double(i - 1) / n_bins;
  CollisionProbability out;
  out.exact = 1.0 - prod;
  out.approx = double(n) * double(n - 1) / (2.0 * n_bins);
  return out;
}

double choir_fraction_probability(int n) {
  if (n < 1) throw std::invalid_argument("choir_fraction_probability: n must be >= 1");
  if (n > 10) return 0.0;
  double p = 1.0;
  for (int i = 0; i < n; ++i) p *= double(10 - i) / 10.0;
  return p;
}

RateModel rate_model(const ChirpConfig& cfg) {
  cfg.validate();
  const double n = double(cfg.chirp_len());
  RateModel out;
  out.lora_bitrate_bps = double(cfg.sf) * cfg.bw / n;
  out.device_bitrate_bps = cfg.bw / n;
  out.aggregate_rate_bps = cfg.bw;
  out.gain = n / double(cfg.sf);
  return out;
}

CapacityResult multiuser_capacity(int n, double snr_linear, double bw_hz) {
  if (n < 1) throw std::invalid_argument("multiuser_capacity: n must be >= 1");
  if (!(snr_linear > 0.0)) throw std::invalid_argument("multiuser_capacity: snr must be > 0");
  CapacityResult out;
  out.exact_bps = bw_hz * std::log2(1.0 + double(n) * snr_linear);
  out.low_snr_approx_bps = bw_hz / std::log(2.0) * double(n) * snr_linear;
  return out;
}

}  // namespace netscatter
