#include "netscatter/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <stdexcept>

#include "netscatter/codec.hpp"
#include "netscatter/mac.hpp"

namespace netscatter {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double window_peak_power(const SymbolSpectrum& spec, long center_padded, long half,
                         double* position_native = nullptr) {
  const long n = long(spec.bins.size());
  double best = -1.0;
  long best_off = 0;
  for (long d = -half; d <= half; ++d) {
    const long idx = ((center_padded + d) % n + n) % n;
    const double p = std::norm(spec.bins[std::size_t(idx)]);
    if (p > best) {
      best = p;
      best_off = center_padded + d;
    }
  }
  if (position_native) *position_native = double(best_off) / double(spec.pad_factor);
  return best;
}

double wrap_half(double x, double n) {
  while (x >= n / 2.0) x -= n;
  while (x < -n / 2.0) x += n;
  return x;
}

void add_noise(IqBuffer& sig, double snr_db, Rng& rng) {
  const double sigma = std::sqrt(std::pow(10.0, -snr_db / 10.0) / 2.0);
  for (auto& s : sig.samples)
    s += cplx(rng.gaussian() * sigma, rng.gaussian() * sigma);
}

std::string jitter_desc(const JitterSpec& spec) {
  switch (spec.kind) {
    case JitterSpec::Kind::None:
      return "none";
    case JitterSpec::Kind::Uniform:
      return "uniform:" + format_number(spec.lo_s) + ":" + format_number(spec.hi_s);
    case JitterSpec::Kind::Gaussian:
      return "gaussian:" + format_number(spec.sigma_s);
  }
  return "none";
}

void push_common(std::vector<std::pair<std::string, std::string>>& config,
                 const ChirpConfig& cfg, std::uint64_t seed) {
  config.emplace_back("sf", std::to_string(cfg.sf));
  config.emplace_back("bw", format_number(cfg.bw));
  config.emplace_back("pad_factor", std::to_string(cfg.pad_factor));
  config.emplace_back("seed", std::to_string(seed));
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  if (records.empty()) return;
  const auto& first = records.front();
  os << "experiment";
  for (const auto& [key, value] : first.config) os << ',' << key;
  for (const auto& [key, value] : first.metrics) os << ',' << key;
  os << '\n';
  for (const auto& rec : records) {
    if (rec.config.size() != first.config.size() ||
        rec.metrics.size() != first.metrics.size())
      throw std::runtime_error("write_csv: records have mismatched key layouts");
    os << rec.experiment;
    for (const auto& [key, value] : rec.config) os << ',' << value;
    for (const auto& [key, value] : rec.metrics) os << ',' << format_number(value);
    os << '\n';
  }
}

// ---- Near-far ------------------------------------------------------------

std::vector<ExperimentRecord> run_near_far(const NearFarParams& params,
                                           std::uint64_t seed) {
  const ChirpConfig& cfg = params.cfg;
  cfg.validate();
  if (params.bin_a == params.bin_b || params.bin_a >= cfg.native_bins() ||
      params.bin_b >= cfg.native_bins())
    throw std::invalid_argument("run_near_far: bins must be distinct and in range");
  const std::size_t n = cfg.samples_per_symbol();
  const double n2 = double(n) * double(n);
  const long alpha = cfg.pad_factor;
  const long half = std::max(1l, alpha / 2);
  const IqBuffer chirp_a = make_aggregate_upchirp(cfg, params.bin_a);
  const IqBuffer chirp_b = make_aggregate_upchirp(cfg, params.bin_b);

  std::vector<ExperimentRecord> records;
  for (std::size_t di = 0; di < params.power_diff_db.size(); ++di) {
    const double diff = params.power_diff_db[di];
    const double gain_b = std::pow(10.0, diff / 20.0);
    Rng rng(derive_seed(seed, di));
    long err_a = 0, err_b = 0;
    IqBuffer sig;
    sig.sample_rate = cfg.sample_rate();
    sig.samples.resize(n);
    for (int s = 0; s < params.n_symbols; ++s) {
      const bool bit_a = rng.next_u64() & 1;
      const bool bit_b = rng.next_u64() & 1;
      const double df_a = rng.gaussian() * params.freq_sigma_hz;
      const double df_b = rng.gaussian() * params.freq_sigma_hz;
      std::fill(sig.samples.begin(), sig.samples.end(), cplx{0.0, 0.0});
      for (std::size_t i = 0; i < n; ++i) {
        if (bit_a)
          sig.samples[i] +=
              chirp_a.samples[i] * std::polar(1.0, kTwoPi * df_a * double(i) / sig.sample_rate);
        if (bit_b)
          sig.samples[i] += gain_b * chirp_b.samples[i] *
                            std::polar(1.0, kTwoPi * df_b * double(i) / sig.sample_rate);
      }
      add_noise(sig, params.weak_snr_db, rng);
      const SymbolSpectrum spec = zero_pad_fft(dechirp(sig, cfg), cfg);
      // Window centers use the per-symbol frequency mismatch, standing in for
      // the per-packet position the preamble would have measured.
      const double pos_a = double(params.bin_a) + bin_from_freq_offset(df_a, cfg);
      const double pos_b = double(params.bin_b) + bin_from_freq_offset(df_b, cfg);
      const bool rx_a =
          window_peak_power(spec, std::lround(pos_a * double(alpha)), half) > n2 / 2.0;
      const bool rx_b = window_peak_power(spec, std::lround(pos_b * double(alpha)), half) >
                        gain_b * gain_b * n2 / 2.0;
      err_a += rx_a != bit_a;
      err_b += rx_b != bit_b;
    }
    ExperimentRecord rec;
    rec.experiment = "nearfar";
    rec.config.emplace_back("bin_a", std::to_string(params.bin_a));
    rec.config.emplace_back("bin_b", std::to_string(params.bin_b));
    rec.config.emplace_back("power_diff_db", format_number(diff));
    rec.config.emplace_back("freq_sigma_hz", format_number(params.freq_sigma_hz));
    rec.config.emplace_back("n_symbols", std::to_string(params.n_symbols));
    rec.config.emplace_back("weak_snr_db", format_number(params.weak_snr_db));
    push_common(rec.config, cfg, seed);
    rec.metrics.emplace_back("ber_weak", double(err_a) / double(params.n_symbols));
    rec.metrics.emplace_back("ber_strong", double(err_b) / double(params.n_symbols));
    records.push_back(std::move(rec));
  }
  return records;
}

// ---- Two-device packet pipeline ------------------------------------------

TwoDeviceResult two_device_packet_run(const TwoDevicePacketParams& params,
                                      std::uint64_t seed) {
  const ChirpConfig& cfg = params.cfg;
  cfg.validate();
  if (params.shift_a == params.shift_b)
    throw std::invalid_argument("two_device_packet_run: shifts must differ");
  const std::size_t n = cfg.samples_per_symbol();
  const std::size_t margin = n;

  AssignmentTable table;
  table.skip = 2;
  table.shift_of_device = {{1, params.shift_a}, {2, params.shift_b}};

  long bit_err_a = 0, bit_err_b = 0, pkt_err_a = 0, pkt_err_b = 0;
  for (int p = 0; p < params.n_packets; ++p) {
    Rng rng(derive_seed(seed, std::uint64_t(p)));
    const std::uint32_t data_a = std::uint32_t(rng.next_u64());
    const std::uint32_t data_b = std::uint32_t(rng.next_u64());
    const auto bits_a = make_payload_bits(data_a);
    const auto bits_b = make_payload_bits(data_b);

    auto make = [&](std::uint32_t, const std::vector<std::uint8_t>& bits,
                    std::size_t shift, double gain_db) {
      PacketFrame frame;
      frame.payload_bits = bits;
      frame.cyclic_shift = shift;
      IqBuffer pkt = build_packet(frame, cfg);
      if (params.freq_sigma_hz > 0.0)
        pkt = apply_freq_offset(pkt, rng.gaussian() * params.freq_sigma_hz);
      const double dt = sample_jitter(params.jitter, rng);
      if (dt != 0.0) pkt = apply_timing_offset(pkt, dt, cfg);
      if (gain_db != 0.0) pkt = apply_power_gain(pkt, gain_db);
      return pkt;
    };
    const IqBuffer pkt_a = make(data_a, bits_a, params.shift_a, 0.0);
    const IqBuffer pkt_b = make(data_b, bits_b, params.shift_b, params.deficit_db);
    IqBuffer rx = superpose({{pkt_a, margin}, {pkt_b, margin}});
    rx = add_awgn(rx, params.snr_db, rng.next_u64());

    const DetectionResult det = detect_active_devices(rx, margin, table, cfg);
    const auto decoded = decode_payloads(rx, det, cfg, bits_a.size());
    auto tally = [&](std::size_t shift, const std::vector<std::uint8_t>& sent,
                     std::uint32_t data, long& bit_err, long& pkt_err) {
      auto it = decoded.find(shift);
      if (it == decoded.end()) {
        bit_err += long(sent.size());
        pkt_err += 1;
        return;
      }
      for (std::size_t i = 0; i < sent.size(); ++i) bit_err += it->second[i] != sent[i];
      const auto rxd = check_payload_bits(it->second);
      pkt_err += !(rxd && *rxd == data);
    };
    tally(params.shift_a, bits_a, data_a, bit_err_a, pkt_err_a);
    tally(params.shift_b, bits_b, data_b, bit_err_b, pkt_err_b);
  }

  const double nb = double(params.n_packets) * double(kPayloadBits);
  TwoDeviceResult result;
  result.ber_weak = double(bit_err_a) / nb;
  result.ber_strong = double(bit_err_b) / nb;
  result.per_weak = double(pkt_err_a) / double(params.n_packets);
  result.per_strong = double(pkt_err_b) / double(params.n_packets);
  return result;
}

// ---- Dynamic range sweep -------------------------------------------------

std::vector<ExperimentRecord> run_dynamic_range_sweep(const DynamicRangeParams& params,
                                                      std::uint64_t seed) {
  params.cfg.validate();
  const std::size_t n_native = params.cfg.native_bins();
  std::vector<ExperimentRecord> records;
  for (std::size_t si = 0; si < params.separations.size(); ++si) {
    const std::size_t sep = params.separations[si];
    const std::size_t other = (params.fixed_bin + sep) % n_native;
    if (sep == 0 || other == params.fixed_bin)
      throw std::invalid_argument("run_dynamic_range_sweep: zero separation");
    double tolerated = -1.0;
    int step = 0;
    for (double d = 0.0; d <= params.max_deficit_db; d += params.step_db, ++step) {
      TwoDevicePacketParams two;
      two.cfg = params.cfg;
      two.shift_a = params.fixed_bin;
      two.shift_b = other;
      two.deficit_db = d;
      two.snr_db = params.snr_db;
      two.n_packets = params.n_packets;
      const TwoDeviceResult r =
          two_device_packet_run(two, derive_seed(seed, si * 1024 + std::uint64_t(step)));
      if (r.per_weak < 0.01)
        tolerated = d;
      else
        break;
    }
    ExperimentRecord rec;
    rec.experiment = "dynrange";
    rec.config.emplace_back("fixed_bin", std::to_string(params.fixed_bin));
    rec.config.emplace_back("separation", std::to_string(sep));
    rec.config.emplace_back("snr_db", format_number(params.snr_db));
    rec.config.emplace_back("n_packets", std::to_string(params.n_packets));
    rec.config.emplace_back("step_db", format_number(params.step_db));
    push_common(rec.config, params.cfg, seed);
    rec.metrics.emplace_back("max_power_diff_db", tolerated);
    records.push_back(std::move(rec));
  }
  return records;
}

// ---- FFT bin variation ---------------------------------------------------

std::vector<ExperimentRecord> run_fft_variation(const FftVariationParams& params,
                                                std::uint64_t seed) {
  std::vector<ExperimentRecord> records;
  for (std::size_t bi = 0; bi < params.bw_list.size(); ++bi) {
    ChirpConfig cfg;
    cfg.sf = params.sf;
    cfg.bw = params.bw_list[bi];
    cfg.pad_factor = params.pad_factor;
    cfg.validate();
    const std::size_t shift = cfg.native_bins() / 4;
    const IqBuffer chirp = make_aggregate_upchirp(cfg, shift);
    const long alpha = cfg.pad_factor;

    Rng rng(derive_seed(seed, bi));
    double sum_disp = 0.0, max_disp = 0.0, sum_expect = 0.0;
    for (int p = 0; p < params.n_packets; ++p) {
      const double dt = sample_jitter(params.jitter, rng);
      IqBuffer sym = dt != 0.0 ? apply_timing_offset(chirp, dt, cfg) : chirp;
      double disp = 0.0;
      // Upchirps repeat with the symbol period, so the preamble's interior
      // symbols are exactly the cyclically advanced chirp.
      for (int s = 0; s < kPreambleUpchirps; ++s) {
        IqBuffer noisy = sym;
        add_noise(noisy, params.snr_db, rng);
        const SymbolSpectrum spec = zero_pad_fft(dechirp(noisy, cfg), cfg);
        double pos = 0.0;
        window_peak_power(spec, long(shift) * alpha, 2 * alpha, &pos);
        disp += wrap_half(pos - double(shift), double(cfg.native_bins()));
      }
      disp /= double(kPreambleUpchirps);
      sum_disp += disp;
      max_disp = std::max(max_disp, std::abs(disp));
      sum_expect += bin_from_timing_offset(dt, cfg);
    }
    ExperimentRecord rec;
    rec.experiment = "fftvar";
    rec.config.emplace_back("jitter", jitter_desc(params.jitter));
    rec.config.emplace_back("n_packets", std::to_string(params.n_packets));
    rec.config.emplace_back("snr_db", format_number(params.snr_db));
    push_common(rec.config, cfg, seed);
    rec.metrics.emplace_back("mean_displacement_bins", sum_disp / double(params.n_packets));
    rec.metrics.emplace_back("max_displacement_bins", max_disp);
    rec.metrics.emplace_back("mean_expected_bins", sum_expect / double(params.n_packets));
    records.push_back(std::move(rec));
  }
  return records;
}

// ---- Network throughput / latency ---------------------------------------

std::string scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::NetscatterCfg1:
      return "netscatter_cfg1";
    case Scheme::NetscatterCfg2:
      return "netscatter_cfg2";
    case Scheme::LoraFixed:
      return "lora_fixed";
    case Scheme::LoraIdealRate:
      return "lora_ideal_rate";
  }
  return "netscatter_cfg1";
}

std::optional<Scheme> scheme_from_name(const std::string& name) {
  if (name == "netscatter_cfg1") return Scheme::NetscatterCfg1;
  if (name == "netscatter_cfg2") return Scheme::NetscatterCfg2;
  if (name == "lora_fixed") return Scheme::LoraFixed;
  if (name == "lora_ideal_rate") return Scheme::LoraIdealRate;
  return std::nullopt;
}

std::vector<RateEntry> default_rate_table() {
  // 32 kbps cap, halving per -3 dB of missing SNR down to the slowest rate.
  std::vector<RateEntry> table;
  double rate = 32000.0;
  double snr = 0.0;
  while (rate >= 976.0) {
    table.push_back({snr, rate, 6.0 / rate});
    rate /= 2.0;
    snr -= 3.0;
  }
  return table;
}

namespace {

double ideal_rate_bps(const std::vector<RateEntry>& table, double snr_db,
                      double* symbol_duration_s) {
  for (const auto& entry : table) {
    if (snr_db >= entry.min_snr_db) {
      *symbol_duration_s = entry.symbol_duration_s;
      return entry.bitrate_bps;
    }
  }
  const auto& last = table.back();
  *symbol_duration_s = last.symbol_duration_s;
  return last.bitrate_bps;
}

struct NetSimTotals {
  long bit_errors = 0;
  long bits_total = 0;
  long correct_packets = 0;
  long packets_total = 0;
};

NetSimTotals simulate_netscatter_rounds(const NetworkParams& params,
                                        const std::map<DeviceId, double>& snr_map,
                                        const AssignmentTable& table, std::uint64_t seed,
                                        std::uint64_t n_index) {
  const ChirpConfig& cfg = params.cfg;
  const std::size_t n_samp = cfg.samples_per_symbol();
  const std::size_t margin = n_samp;
  NetSimTotals totals;
  for (int r = 0; r < params.n_rounds; ++r) {
    Rng rng(derive_seed(seed, n_index * 4096 + std::uint64_t(r) + 1));
    std::map<DeviceId, std::uint32_t> sent_data;
    std::map<DeviceId, std::vector<std::uint8_t>> sent_bits;
    std::vector<std::pair<IqBuffer, std::size_t>> parts;
    for (const auto& [id, snr] : snr_map) {
      const std::uint32_t data = std::uint32_t(rng.next_u64());
      sent_data[id] = data;
      sent_bits[id] = make_payload_bits(data);
      PacketFrame frame;
      frame.payload_bits = sent_bits[id];
      frame.cyclic_shift = table.shift_of_device.at(id);
      IqBuffer pkt = build_packet(frame, cfg);
      const double dt = sample_jitter(params.jitter, rng);
      if (dt != 0.0) pkt = apply_timing_offset(pkt, dt, cfg);
      const double gain_db = snr - params.noise_ref_snr_db;
      if (gain_db != 0.0) pkt = apply_power_gain(pkt, gain_db);
      parts.emplace_back(std::move(pkt), margin);
    }
    IqBuffer rx = superpose(parts);
    rx = add_awgn(rx, params.noise_ref_snr_db, rng.next_u64());

    const DetectionResult det = detect_active_devices(rx, margin, table, cfg);
    const auto decoded = decode_payloads(rx, det, cfg, std::size_t(params.payload_bits));
    for (const auto& [id, snr] : snr_map) {
      const std::size_t shift = table.shift_of_device.at(id);
      const auto& sent = sent_bits[id];
      totals.bits_total += long(sent.size());
      totals.packets_total += 1;
      auto it = decoded.find(shift);
      if (it == decoded.end()) {
        totals.bit_errors += long(sent.size());
        continue;
      }
      for (std::size_t i = 0; i < sent.size(); ++i)
        totals.bit_errors += it->second[i] != sent[i];
      const auto rxd = check_payload_bits(it->second);
      if (rxd && *rxd == sent_data[id]) totals.correct_packets += 1;
    }
  }
  return totals;
}

}  // namespace

std::vector<ExperimentRecord> run_network(const NetworkParams& params,
                                          std::uint64_t seed) {
  const ChirpConfig& cfg = params.cfg;
  cfg.validate();
  const double sym_dur = cfg.symbol_duration();
  const double payload_airtime = double(params.payload_bits) * sym_dur;
  const double packet_airtime =
      double(params.preamble_symbols + params.payload_bits) * sym_dur;

  std::vector<ExperimentRecord> records;
  for (std::size_t ni = 0; ni < params.n_devices_list.size(); ++ni) {
    const int n = params.n_devices_list[ni];
    if (n <= 0) throw std::invalid_argument("run_network: device count must be positive");
    Rng rng(derive_seed(seed, ni));
    std::map<DeviceId, double> snr_map;
    for (int i = 0; i < n; ++i) {
      double snr = params.uniform_snr_db ? *params.uniform_snr_db
                                         : rng.uniform(params.snr_lo_db, params.snr_hi_db);
      // Device-side power adaptation: back off to the deepest of the three
      // levels that still clears the reference level.
      for (double backoff : {-power_level_db(PowerLevel::Low), -power_level_db(PowerLevel::Mid)}) {
        if (snr - backoff >= params.noise_ref_snr_db) {
          snr -= backoff;
          break;
        }
      }
      snr_map[DeviceId(i + 1)] = snr;
    }

    double round_time = 0.0, link_rate = 0.0, phy_rate = 0.0, latency = 0.0;
    double ber = 0.0, per = 0.0, useful_bits = 0.0;
    const bool is_netscatter =
        params.scheme == Scheme::NetscatterCfg1 || params.scheme == Scheme::NetscatterCfg2;
    if (is_netscatter) {
      const std::size_t query_bits = params.scheme == Scheme::NetscatterCfg1
                                         ? params.query_bits_cfg1
                                         : params.query_bits_cfg2;
      round_time = double(query_bits) / params.downlink_bps + packet_airtime;
      const AssignmentTable table =
          assign_cyclic_shift(snr_map, params.skip, cfg.sf, params.n_assoc);
      const NetSimTotals totals =
          simulate_netscatter_rounds(params, snr_map, table, seed, ni);
      ber = double(totals.bit_errors) / double(totals.bits_total);
      per = 1.0 - double(totals.correct_packets) / double(totals.packets_total);
      useful_bits = double(totals.correct_packets) * double(params.data_bits);
      const double total_time = double(params.n_rounds) * round_time;
      link_rate = useful_bits / total_time;
      phy_rate = double(totals.bits_total - totals.bit_errors) /
                 (double(params.n_rounds) * payload_airtime);
      latency = link_rate > 0.0 ? useful_bits / link_rate : 0.0;
    } else if (params.scheme == Scheme::LoraFixed) {
      const double per_device = double(params.lora_query_bits) / params.downlink_bps +
                                double(params.preamble_symbols) * sym_dur +
                                double(params.payload_bits) / params.lora_fixed_bps;
      round_time = double(n) * per_device;
      useful_bits = double(params.n_rounds) * double(n) * double(params.data_bits);
      link_rate = useful_bits / (double(params.n_rounds) * round_time);
      phy_rate = params.lora_fixed_bps;
      latency = useful_bits / link_rate;
    } else {  // LoraIdealRate
      if (params.rate_table.empty())
        throw std::invalid_argument("run_network: empty rate table");
      double payload_time = 0.0;
      for (const auto& [id, snr] : snr_map) {
        double dur = 0.0;
        const double rate = ideal_rate_bps(params.rate_table, snr, &dur);
        round_time += double(params.lora_query_bits) / params.downlink_bps +
                      double(params.preamble_symbols) * dur +
                      double(params.payload_bits) / rate;
        payload_time += double(params.payload_bits) / rate;
      }
      useful_bits = double(params.n_rounds) * double(n) * double(params.data_bits);
      link_rate = useful_bits / (double(params.n_rounds) * round_time);
      phy_rate = double(n) * double(params.payload_bits) / payload_time;
      latency = useful_bits / link_rate;
    }

    ExperimentRecord rec;
    rec.experiment = "network";
    rec.config.emplace_back("scheme", scheme_name(params.scheme));
    rec.config.emplace_back("n_devices", std::to_string(n));
    rec.config.emplace_back("n_rounds", std::to_string(params.n_rounds));
    rec.config.emplace_back("skip", std::to_string(params.skip));
    rec.config.emplace_back("snr_lo_db", format_number(params.snr_lo_db));
    rec.config.emplace_back("snr_hi_db", format_number(params.snr_hi_db));
    rec.config.emplace_back(
        "uniform_snr_db",
        params.uniform_snr_db ? format_number(*params.uniform_snr_db) : "none");
    rec.config.emplace_back("jitter", jitter_desc(params.jitter));
    push_common(rec.config, cfg, seed);
    rec.metrics.emplace_back("phy_rate_bps", phy_rate);
    rec.metrics.emplace_back("link_rate_bps", link_rate);
    rec.metrics.emplace_back("latency_s", latency);
    rec.metrics.emplace_back("round_time_s", round_time);
    rec.metrics.emplace_back("useful_bits", useful_bits);
    rec.metrics.emplace_back("ber", ber);
    rec.metrics.emplace_back("per", per);
    records.push_back(std::move(rec));
  }
  return records;
}

// ---- BER vs SNR ----------------------------------------------------------

std::vector<ExperimentRecord> run_ber_snr(const BerSnrParams& params, std::uint64_t seed) {
  const ChirpConfig& cfg = params.cfg;
  cfg.validate();
  if (params.n_devices <= 0 || params.n_symbols <= 0 || params.symbols_per_packet <= 0)
    throw std::invalid_argument("run_ber_snr: counts must be positive");
  const std::size_t n_samp = cfg.samples_per_symbol();
  const double n2 = double(n_samp) * double(n_samp);
  const long alpha = cfg.pad_factor;
  const long half = std::max(1l, alpha / 2);

  std::map<DeviceId, double> strengths;
  for (int i = 0; i < params.n_devices; ++i) strengths[DeviceId(i + 1)] = 0.0;
  const AssignmentTable table = assign_cyclic_shift(strengths, params.skip, cfg.sf, 0);
  std::vector<std::size_t> shifts;
  std::vector<IqBuffer> base_chirps;
  for (const auto& [id, shift] : table.shift_of_device) {
    shifts.push_back(shift);
    base_chirps.push_back(make_aggregate_upchirp(cfg, shift));
  }
  const std::size_t nd = shifts.size();

  std::vector<ExperimentRecord> records;
  for (std::size_t si = 0; si < params.snr_list.size(); ++si) {
    const double snr = params.snr_list[si];
    Rng rng(derive_seed(seed, si));
    long errors = 0;
    long symbols_done = 0;
    std::vector<IqBuffer> chirps(nd);
    std::vector<long> centers(nd);
    IqBuffer sig;
    sig.sample_rate = cfg.sample_rate();
    sig.samples.resize(n_samp);
    std::vector<std::uint8_t> bits(nd);
    while (symbols_done < params.n_symbols) {
      // New packet: redraw each device's start jitter.
      for (std::size_t d = 0; d < nd; ++d) {
        const double dt = sample_jitter(params.jitter, rng);
        chirps[d] = dt != 0.0 ? apply_timing_offset(base_chirps[d], dt, cfg) : base_chirps[d];
        centers[d] = std::lround((double(shifts[d]) + bin_from_timing_offset(dt, cfg)) *
                                 double(alpha));
      }
      const long in_packet =
          std::min(long(params.symbols_per_packet), long(params.n_symbols) - symbols_done);
      for (long s = 0; s < in_packet; ++s) {
        std::fill(sig.samples.begin(), sig.samples.end(), cplx{0.0, 0.0});
        for (std::size_t d = 0; d < nd; ++d) {
          bits[d] = rng.next_u64() & 1;
          if (bits[d])
            for (std::size_t i = 0; i < n_samp; ++i)
              sig.samples[i] += chirps[d].samples[i];
        }
        add_noise(sig, snr, rng);
        const SymbolSpectrum spec = zero_pad_fft(dechirp(sig, cfg), cfg);
        for (std::size_t d = 0; d < nd; ++d) {
          const bool rx_bit = window_peak_power(spec, centers[d], half) > n2 / 2.0;
          errors += rx_bit != bits[d];
        }
      }
      symbols_done += in_packet;
    }
    ExperimentRecord rec;
    rec.experiment = "bersnr";
    rec.config.emplace_back("snr_db", format_number(snr));
    rec.config.emplace_back("n_devices", std::to_string(params.n_devices));
    rec.config.emplace_back("n_symbols", std::to_string(params.n_symbols));
    rec.config.emplace_back("skip", std::to_string(params.skip));
    rec.config.emplace_back("jitter", jitter_desc(params.jitter));
    push_common(rec.config, cfg, seed);
    rec.metrics.emplace_back("ber",
                             double(errors) / (double(symbols_done) * double(nd)));
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace netscatter
