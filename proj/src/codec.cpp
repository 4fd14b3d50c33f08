#include "netscatter/codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace netscatter {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

struct WindowPeak {
  double power = 0.0;
  double position = 0.0;  // native bin units, may exceed native range before wrap
};

// Max |X|^2 over padded bins within [center + lo, center + hi] (cyclic).
WindowPeak window_peak_range(const SymbolSpectrum& spec, long center_padded, long lo_padded,
                             long hi_padded) {
  const long n = long(spec.bins.size());
  WindowPeak best;
  bool first = true;
  for (long d = lo_padded; d <= hi_padded; ++d) {
    const long idx = ((center_padded + d) % n + n) % n;
    const double p = std::norm(spec.bins[std::size_t(idx)]);
    if (first || p > best.power) {
      first = false;
      best.power = p;
      best.position = double(center_padded + d) / double(spec.pad_factor);
    }
  }
  return best;
}

IqBuffer slice(const IqBuffer& rx, std::size_t start, std::size_t len) {
  IqBuffer out;
  out.sample_rate = rx.sample_rate;
  out.samples.assign(rx.samples.begin() + long(start), rx.samples.begin() + long(start + len));
  return out;
}

double wrap_half(double x, double n) {
  while (x >= n / 2.0) x -= n;
  while (x < -n / 2.0) x += n;
  return x;
}

// Peak power of one despread window, used by the packet-start search.
double despread_peak(const IqBuffer& rx, std::size_t offset, const IqBuffer& ref_conj,
                     std::vector<cplx>& scratch) {
  const std::size_t n = ref_conj.size();
  scratch.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    scratch[i] = rx.samples[offset + i] * ref_conj.samples[i];
  detail::fft_forward(scratch);
  double best = 0.0;
  for (const auto& b : scratch) best = std::max(best, std::norm(b));
  return best;
}

}  // namespace

double chirp_sidelobe_power(double delta_bins, std::size_t n_native) {
  const double n = double(n_native);
  const double d = std::abs(delta_bins);
  const double s = std::sin(kPi * d / n);
  if (std::abs(s) < 1e-12) {
    // On a grid multiple of n the kernel is back at a main lobe.
    return 1.0;
  }
  const double num = std::sin(kPi * d);
  const double amp = num / (n * s);
  return amp * amp;
}

std::uint8_t crc8(std::uint32_t data) {
  std::uint8_t crc = 0;
  for (int byte = 3; byte >= 0; --byte) {
    crc ^= std::uint8_t((data >> (8 * byte)) & 0xffu);
    for (int bit = 0; bit < 8; ++bit)
      crc = (crc & 0x80u) ? std::uint8_t((crc << 1) ^ 0x07u) : std::uint8_t(crc << 1);
  }
  return crc;
}

std::vector<std::uint8_t> make_payload_bits(std::uint32_t data) {
  std::vector<std::uint8_t> bits;
  bits.reserve(kPayloadBits);
  for (int b = kDataBits - 1; b >= 0; --b) bits.push_back((data >> b) & 1u);
  const std::uint8_t crc = crc8(data);
  for (int b = 7; b >= 0; --b) bits.push_back((crc >> b) & 1u);
  return bits;
}

std::optional<std::uint32_t> check_payload_bits(const std::vector<std::uint8_t>& bits) {
  if (bits.size() != std::size_t(kPayloadBits)) return std::nullopt;
  std::uint32_t data = 0;
  for (int i = 0; i < kDataBits; ++i) data = (data << 1) | bits[std::size_t(i)];
  std::uint8_t crc = 0;
  for (int i = 0; i < 8; ++i) crc = std::uint8_t((crc << 1) | bits[std::size_t(kDataBits + i)]);
  if (crc8(data) != crc) return std::nullopt;
  return data;
}

IqBuffer build_packet(const PacketFrame& frame, const ChirpConfig& cfg) {
  cfg.validate();
  if (frame.cyclic_shift >= cfg.native_bins())
    throw std::invalid_argument("build_packet: cyclic shift out of range");
  const IqBuffer up = make_aggregate_upchirp(cfg, frame.cyclic_shift);
  IqBuffer down = up;
  for (auto& s : down.samples) s = std::conj(s);

  const std::size_t sym_len = cfg.samples_per_symbol();
  IqBuffer out;
  out.sample_rate = cfg.sample_rate();
  out.samples.reserve(frame.total_symbols() * sym_len);
  for (int i = 0; i < frame.n_preamble_up; ++i)
    out.samples.insert(out.samples.end(), up.samples.begin(), up.samples.end());
  for (int i = 0; i < frame.n_preamble_down; ++i)
    out.samples.insert(out.samples.end(), down.samples.begin(), down.samples.end());
  for (auto bit : frame.payload_bits) {
    if (bit)
      out.samples.insert(out.samples.end(), up.samples.begin(), up.samples.end());
    else
      out.samples.insert(out.samples.end(), sym_len, cplx{0.0, 0.0});
  }
  return out;
}

std::optional<std::size_t> detect_packet_start(const IqBuffer& rx, const ChirpConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.samples_per_symbol();
  const std::size_t up_span = std::size_t(kPreambleUpchirps) * n;
  const std::size_t down_span = std::size_t(kPreambleDownchirps) * n;
  if (rx.size() < up_span + down_span)
    throw std::invalid_argument("detect_packet_start: buffer shorter than a preamble");

  const IqBuffer base_up = make_aggregate_upchirp(cfg, 0);
  IqBuffer down_ref = base_up;  // multiply by conj(up) to despread upchirps
  for (auto& s : down_ref.samples) s = std::conj(s);
  const IqBuffer& up_ref = base_up;  // multiply by up to despread downchirps

  std::vector<cplx> scratch;
  // Score of a candidate up/down boundary m: despread peak power of the six
  // upchirp windows left of m and the two downchirp windows right of m, minus
  // the window just before the packet (penalizes late estimates).
  auto score = [&](std::size_t m) {
    double s = 0.0;
    for (int i = 1; i <= kPreambleUpchirps; ++i)
      s += despread_peak(rx, m - std::size_t(i) * n, down_ref, scratch);
    for (int j = 0; j < kPreambleDownchirps; ++j)
      s += despread_peak(rx, m + std::size_t(j) * n, up_ref, scratch);
    if (m >= up_span + n)
      s -= despread_peak(rx, m - up_span - n, down_ref, scratch);
    return s;
  };

  const std::size_t m_lo = up_span;
  const std::size_t m_hi = rx.size() - down_span;
  std::vector<double> coarse_scores;
  std::size_t best_m = m_lo;
  double best_s = -1e300;
  for (std::size_t m = m_lo; m <= m_hi; m += 64) {
    const double s = score(m);
    coarse_scores.push_back(s);
    if (s > best_s) {
      best_s = s;
      best_m = m;
    }
  }
  for (std::size_t step : {std::size_t(8), std::size_t(1)}) {
    const std::size_t radius = step * 8;
    const std::size_t lo = best_m > m_lo + radius ? best_m - radius : m_lo;
    const std::size_t hi = std::min(best_m + radius, m_hi);
    for (std::size_t m = lo; m <= hi; m += step) {
      const double s = score(m);
      if (s > best_s || (s == best_s && m < best_m)) {
        best_s = s;
        best_m = m;
      }
    }
  }

  // Detection floor: the best score must clearly exceed the typical coarse
  // score, otherwise the buffer holds no preamble.
  std::vector<double> sorted = coarse_scores;
  std::sort(sorted.begin(), sorted.end());
  const double floor = sorted[sorted.size() / 10];
  if (!(best_s > 5.0 * std::max(floor, 0.0) + 1e-30)) return std::nullopt;
  return best_m - up_span;
}

std::set<std::size_t> DetectionResult::active_shifts() const {
  std::set<std::size_t> out;
  for (const auto& [shift, det] : devices) out.insert(shift);
  return out;
}

std::map<std::size_t, double> DetectionResult::thresholds() const {
  std::map<std::size_t, double> out;
  for (const auto& [shift, det] : devices) out.insert({shift, det.threshold});
  return out;
}

DetectionResult detect_active_devices(const IqBuffer& rx, std::size_t start,
                                      const AssignmentTable& assignment,
                                      const ChirpConfig& cfg) {
  cfg.validate();
  std::set<std::size_t> candidates = assignment.data_shifts();
  candidates.insert(assignment.assoc_shifts.begin(), assignment.assoc_shifts.end());
  if (candidates.empty())
    throw std::invalid_argument("detect_active_devices: empty assignment");

  const std::size_t n = cfg.samples_per_symbol();
  if (start + std::size_t(kPreambleUpchirps) * n > rx.size())
    throw std::invalid_argument("detect_active_devices: preamble out of range");

  // Per-bin noise power reference, from the pre-packet region when available.
  double bin_noise = 0.0;
  std::vector<SymbolSpectrum> spectra;
  spectra.reserve(kPreambleUpchirps);
  for (int s = 0; s < kPreambleUpchirps; ++s)
    spectra.push_back(zero_pad_fft(dechirp(slice(rx, start + std::size_t(s) * n, n), cfg), cfg));
  if (start >= n) {
    double acc = 0.0;
    for (std::size_t i = start - n; i < start; ++i) acc += std::norm(rx.samples[i]);
    bin_noise = acc;  // (mean power) * n
  } else {
    std::vector<double> powers;
    powers.reserve(spectra[0].bins.size());
    for (const auto& b : spectra[0].bins) powers.push_back(std::norm(b));
    std::nth_element(powers.begin(), powers.begin() + long(powers.size() / 2), powers.end());
    bin_noise = powers[powers.size() / 2];
  }

  const long alpha = cfg.pad_factor;
  const double n_native = double(cfg.native_bins());
  // Shifts are SKIP apart and transmitters only start late, so displacement is
  // one-sided: each shift owns [k - 1/2, k + skip - 1/2), a clean partition of
  // the spectrum that keeps neighbors from stealing each other's peaks.
  const long win_lo = -(alpha / 2);
  const long win_hi = std::max(0l, long(assignment.skip) * alpha - alpha / 2 - 1);

  struct Candidate {
    std::size_t shift;
    double mean_power;
    double position;
  };
  std::vector<Candidate> passed;
  for (auto shift : candidates) {
    std::vector<WindowPeak> peaks;
    std::vector<double> offsets;
    for (const auto& spec : spectra) {
      const WindowPeak pk = window_peak_range(spec, long(shift) * alpha, win_lo, win_hi);
      peaks.push_back(pk);
      offsets.push_back(wrap_half(pk.position - double(shift), n_native));
    }
    std::vector<double> sorted_off = offsets;
    std::sort(sorted_off.begin(), sorted_off.end());
    const double median = sorted_off[sorted_off.size() / 2];
    // The peak must repeat across the preamble at a stable position, clear of
    // the noise floor. Coherent side-lobe interference between concurrent
    // devices can dent individual symbols, so a couple of outliers are allowed.
    double power_acc = 0.0, off_acc = 0.0;
    int inliers = 0;
    for (std::size_t i = 0; i < peaks.size(); ++i) {
      if (std::abs(offsets[i] - median) <= 0.5 && peaks[i].power > 10.0 * bin_noise) {
        power_acc += peaks[i].power;
        off_acc += offsets[i];
        ++inliers;
      }
    }
    if (inliers < int(peaks.size()) - 2) continue;
    passed.push_back({shift, power_acc / double(inliers),
                      double(shift) + off_acc / double(inliers)});
  }

  // Strongest-first pruning: drop candidates explained by side lobes of
  // already accepted devices.
  std::sort(passed.begin(), passed.end(), [](const Candidate& a, const Candidate& b) {
    if (a.mean_power != b.mean_power) return a.mean_power > b.mean_power;
    return a.shift < b.shift;
  });
  DetectionResult result;
  result.packet_start = start;
  std::vector<Candidate> accepted;
  for (const auto& cand : passed) {
    double leak = 0.0;
    for (const auto& acc : accepted) {
      const double dist = wrap_half(cand.position - acc.position, n_native);
      leak += acc.mean_power * chirp_sidelobe_power(dist, cfg.native_bins());
    }
    if (cand.mean_power > 3.0 * leak) {
      accepted.push_back(cand);
      result.devices[cand.shift] = DeviceDetection{cand.mean_power, cand.position};
    }
  }
  return result;
}

std::map<std::size_t, std::vector<std::uint8_t>> decode_payloads(
    const IqBuffer& rx, const DetectionResult& det, const ChirpConfig& cfg,
    std::size_t n_payload_symbols) {
  cfg.validate();
  const std::size_t n = cfg.samples_per_symbol();
  const std::size_t payload_start =
      det.packet_start + std::size_t(kPreambleUpchirps + kPreambleDownchirps) * n;
  if (payload_start + n_payload_symbols * n > rx.size())
    throw std::runtime_error("decode_payloads: buffer truncates the payload region");

  // The preamble pins each device's position, so a tight window suffices and
  // keeps stronger neighbors' side-lobe skirts out of the OOK decision.
  const long alpha = cfg.pad_factor;
  const long half = std::max(1l, alpha / 5);
  std::map<std::size_t, std::vector<std::uint8_t>> out;
  for (const auto& [shift, dd] : det.devices) out[shift] = {};

  for (std::size_t s = 0; s < n_payload_symbols; ++s) {
    const SymbolSpectrum spec =
        zero_pad_fft(dechirp(slice(rx, payload_start + s * n, n), cfg), cfg);
    for (const auto& [shift, dd] : det.devices) {
      const long center = long(std::lround(dd.position * double(alpha)));
      const WindowPeak pk = window_peak_range(spec, center, -half, half);
      out[shift].push_back(pk.power > dd.threshold / 2.0 ? 1 : 0);
    }
  }
  return out;
}

std::vector<double> demod_symbol_multi(const IqBuffer& rx_symbol, const ChirpConfig& cfg) {
  cfg.validate();
  if (rx_symbol.size() != cfg.samples_per_symbol())
    throw std::invalid_argument("demod_symbol_multi: wrong symbol length");
  const SymbolSpectrum spec = zero_pad_fft(dechirp(rx_symbol, cfg), cfg);
  const long alpha = cfg.pad_factor;
  const long lo = -(alpha / 2);
  const long hi = lo + alpha - 1;
  std::vector<double> out(cfg.native_bins(), 0.0);
  const long n_pad = long(spec.bins.size());
  for (std::size_t b = 0; b < out.size(); ++b) {
    double best = 0.0;
    for (long d = lo; d <= hi; ++d) {
      const long idx = ((long(b) * alpha + d) % n_pad + n_pad) % n_pad;
      best = std::max(best, std::norm(spec.bins[std::size_t(idx)]));
    }
    out[b] = best;
  }
  return out;
}

}  // namespace netscatter
