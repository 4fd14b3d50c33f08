// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line with
// the measured numbers; the process exits nonzero if any criterion fails.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "netscatter/channel.hpp"
#include "netscatter/chirp.hpp"
#include "netscatter/codec.hpp"
#include "netscatter/experiments.hpp"
#include "netscatter/mac.hpp"

using namespace netscatter;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

ChirpConfig cfg_sf9(int pad = 10) {
  ChirpConfig cfg;
  cfg.sf = 9;
  cfg.bw = 500e3;
  cfg.pad_factor = pad;
  return cfg;
}

double metric(const ExperimentRecord& rec, const std::string& name) {
  for (const auto& [key, value] : rec.metrics)
    if (key == name) return value;
  throw std::runtime_error("metric not found: " + name);
}

// 1. Every cyclic shift decodes exactly with zero impairments.
void criterion_1() {
  std::size_t checked = 0, wrong = 0;
  for (int sf = 6; sf <= 12; ++sf) {
    ChirpConfig cfg;
    cfg.sf = sf;
    cfg.bw = 500e3;
    cfg.pad_factor = 1;
    const IqBuffer up = make_upchirp(cfg);
    const std::size_t n = cfg.chirp_len();
    std::vector<std::size_t> shifts;
    if (sf <= 9) {
      for (std::size_t k = 0; k < n; ++k) shifts.push_back(k);
    } else {
      Rng rng(100 + std::uint64_t(sf));
      for (int i = 0; i < 256; ++i) shifts.push_back(rng.next_u64() % n);
    }
    for (std::size_t k : shifts) {
      const auto pk = peak_search(zero_pad_fft(dechirp(cyclic_shift(up, k), cfg), cfg));
      ++checked;
      if (pk.bin_index != k) ++wrong;
    }
  }
  std::ostringstream msg;
  msg << "CSS round-trip sf 6..12, " << checked << " shifts, " << wrong << " wrong";
  report(1, wrong == 0, msg.str());
}

// 2. Measured fractional-bin displacement matches dt*BW and 2^sf*df/BW.
void criterion_2() {
  const ChirpConfig cfg = cfg_sf9(20);  // 0.05-bin grid
  const std::size_t base = 100;
  const IqBuffer sym = make_aggregate_upchirp(cfg, base);
  double worst = 0.0;
  for (double dt : {0.5e-6, 1e-6, 2e-6, 3.5e-6}) {
    const auto pk =
        peak_search(zero_pad_fft(dechirp(apply_timing_offset(sym, dt, cfg), cfg), cfg));
    const double err =
        std::abs(pk.fractional_bin - (double(base) + bin_from_timing_offset(dt, cfg)));
    worst = std::max(worst, err);
  }
  for (double df : {150.0, 976.0}) {
    const auto pk =
        peak_search(zero_pad_fft(dechirp(apply_freq_offset(sym, df), cfg), cfg));
    const double err =
        std::abs(pk.fractional_bin - (double(base) + bin_from_freq_offset(df, cfg)));
    worst = std::max(worst, err);
  }
  std::ostringstream msg;
  msg << "offset displacement worst error " << worst << " bins (limit 0.05)";
  report(2, worst <= 0.05, msg.str());
}

// 3. Zero padding resolves a half-bin shift that the plain FFT splits.
void criterion_3() {
  ChirpConfig cfg;
  cfg.sf = 4;
  cfg.bw = 500e3;
  cfg.pad_factor = 1;
  const double dt = 3.5 / cfg.bw;  // lands the peak at 3.5 native bins
  const IqBuffer shifted = apply_timing_offset(make_upchirp(cfg), dt, cfg);

  const SymbolSpectrum plain = zero_pad_fft(dechirp(shifted, cfg), cfg);
  const double p3 = std::norm(plain.bins[3]);
  const double p4 = std::norm(plain.bins[4]);
  double biggest = 0.0;
  for (const auto& b : plain.bins) biggest = std::max(biggest, std::norm(b));
  const double share = biggest / (p3 + p4);

  cfg.pad_factor = 10;
  const auto pk = peak_search(zero_pad_fft(dechirp(shifted, cfg), cfg));
  const double err = std::abs(pk.fractional_bin - 3.5);

  std::ostringstream msg;
  msg << "unpadded peak share " << share << " (limit 0.6), padded peak at "
      << pk.fractional_bin << " (3.5 +/- 0.05)";
  report(3, share <= 0.6 && err <= 0.05, msg.str());
}

// 4. Processing gain decodes a single device 10 dB below the noise floor.
void criterion_4() {
  ChirpConfig cfg = cfg_sf9(1);
  const IqBuffer up = make_upchirp(cfg);
  const std::size_t n = cfg.chirp_len();
  const int n_symbols = 10000;
  Rng rng(40);
  const double sigma = std::sqrt(std::pow(10.0, 10.0 / 10.0) / 2.0);
  int errors = 0;
  for (int i = 0; i < n_symbols; ++i) {
    const std::size_t k = rng.next_u64() % n;
    IqBuffer sym = cyclic_shift(up, k);
    for (auto& s : sym.samples)
      s += cplx(rng.gaussian() * sigma, rng.gaussian() * sigma);
    if (peak_search(zero_pad_fft(dechirp(sym, cfg), cfg)).bin_index != k) ++errors;
  }
  const double ser = double(errors) / double(n_symbols);
  std::ostringstream msg;
  msg << "SER at -10 dB SNR = " << ser << " (limit 0.01)";
  report(4, ser < 0.01, msg.str());
}

// 5. A 40 dB stronger neighbor 256 bins away does not hurt the weak device,
//    and adjacent shifts (SKIP=2) tolerate a 5 dB deficit.
void criterion_5() {
  NearFarParams nf;
  nf.cfg = cfg_sf9();
  nf.power_diff_db = {0.0, 40.0};
  nf.n_symbols = 10000;
  const auto recs = run_near_far(nf, 50);
  const double ber0 = metric(recs[0], "ber_weak");
  const double ber40 = metric(recs[1], "ber_weak");
  const double delta = std::abs(ber40 - ber0);

  TwoDevicePacketParams tp;
  tp.cfg = cfg_sf9();
  tp.shift_a = 2;
  tp.shift_b = 4;
  tp.deficit_db = 5.0;
  tp.snr_db = 10.0;
  tp.n_packets = 100;
  const double per_adjacent = two_device_packet_run(tp, 51).per_weak;

  std::ostringstream msg;
  msg << "weak BER 0/40 dB deficit = " << ber0 << "/" << ber40
      << " (|delta| limit 0.005), adjacent-shift PER at 5 dB deficit = " << per_adjacent
      << " (limit 0.01)";
  report(5, delta <= 0.005 && per_adjacent < 0.01, msg.str());
}

// 6. Monte-Carlo collision frequency matches the closed form; Choir fraction.
void criterion_6() {
  const int n_devices = 10, sf = 9, trials = 100000;
  const std::size_t n_bins = 512;
  Rng rng(60);
  int collided = 0;
  std::vector<int> used(n_bins);
  for (int t = 0; t < trials; ++t) {
    std::fill(used.begin(), used.end(), 0);
    bool hit = false;
    for (int d = 0; d < n_devices; ++d) {
      const std::size_t bin = rng.next_u64() % n_bins;
      if (used[bin]++) hit = true;
    }
    if (hit) ++collided;
  }
  const double mc = double(collided) / double(trials);
  const auto closed = collision_probability(n_devices, sf);
  const double delta = std::abs(mc - closed.approx);
  const double choir = choir_fraction_probability(5);

  std::ostringstream msg;
  msg << "collision MC " << mc << " vs closed form " << closed.approx
      << " (|delta| limit 0.01), choir(5) = " << choir << " (expect 0.3024)";
  report(6, delta <= 0.01 && std::abs(choir - 0.3024) < 1e-4, msg.str());
}

// 7. 256 concurrent devices at 10 dB SNR with 2 us jitter.
void criterion_7() {
  NetworkParams p;
  p.cfg = cfg_sf9();
  p.scheme = Scheme::NetscatterCfg1;
  p.n_devices_list = {256};
  p.uniform_snr_db = 10.0;
  const auto recs = run_network(p, 70);
  const double ber = metric(recs[0], "ber");
  const double phy = metric(recs[0], "phy_rate_bps");
  std::ostringstream msg;
  msg << "256-device BER = " << ber << " (limit 0.01), PHY rate = " << phy / 1e3
      << " kbps (250 +/- 5%)";
  report(7, ber < 0.01 && phy >= 237.5e3 && phy <= 262.5e3, msg.str());
}

// 8. Link-rate gains and latency reductions against the LoRa baselines.
void criterion_8() {
  NetworkParams p;
  p.cfg = cfg_sf9();
  p.n_devices_list = {256};
  std::vector<ExperimentRecord> recs;
  for (Scheme s : {Scheme::NetscatterCfg1, Scheme::NetscatterCfg2, Scheme::LoraFixed,
                   Scheme::LoraIdealRate}) {
    p.scheme = s;
    recs.push_back(run_network(p, 80).at(0));
  }
  const double link_c1 = metric(recs[0], "link_rate_bps");
  const double link_c2 = metric(recs[1], "link_rate_bps");
  const double link_fx = metric(recs[2], "link_rate_bps");
  const double link_id = metric(recs[3], "link_rate_bps");
  const double lat_c1 = metric(recs[0], "latency_s");
  const double lat_c2 = metric(recs[1], "latency_s");
  const double lat_fx = metric(recs[2], "latency_s");
  const double lat_id = metric(recs[3], "latency_s");

  struct Ratio {
    const char* name;
    double value;
    double target;
  };
  const Ratio ratios[] = {
      {"link cfg1/fixed", link_c1 / link_fx, 61.9},
      {"link cfg2/fixed", link_c2 / link_fx, 50.9},
      {"link cfg1/ideal", link_c1 / link_id, 14.1},
      {"link cfg2/ideal", link_c2 / link_id, 11.6},
      {"latency fixed/cfg1", lat_fx / lat_c1, 67.0},
      {"latency fixed/cfg2", lat_fx / lat_c2, 55.1},
      {"latency ideal/cfg1", lat_id / lat_c1, 15.3},
      {"latency ideal/cfg2", lat_id / lat_c2, 12.6},
  };
  bool ok = true;
  std::ostringstream msg;
  msg << "overhead/gain ratios (target +/- 25%):";
  for (const auto& r : ratios) {
    const bool in_band = r.value >= 0.75 * r.target && r.value <= 1.25 * r.target;
    ok = ok && in_band;
    msg << " " << r.name << "=" << r.value << "/" << r.target
        << (in_band ? "" : " OUT");
  }
  report(8, ok, msg.str());
}

// 9. Re-running the CLI with identical config+seed gives byte-identical CSV.
void criterion_9() {
#ifdef NETSCATTER_CLI_PATH
  const char* cli = NETSCATTER_CLI_PATH;
#else
  const char* cli = std::getenv("NETSCATTER_CLI_PATH");
#endif
  if (!cli) {
    report(9, false, "CLI path not available");
    return;
  }
  const std::string out1 = "acceptance_run1.csv";
  const std::string out2 = "acceptance_run2.csv";
  const std::string base = std::string("\"") + cli +
                           "\" bersnr --snr=-5,5 --symbols 500 --seed 90 --out ";
  bool ok = std::system((base + out1).c_str()) == 0 &&
            std::system((base + out2).c_str()) == 0;
  std::string a, b;
  if (ok) {
    std::ifstream f1(out1, std::ios::binary), f2(out2, std::ios::binary);
    std::ostringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    a = s1.str();
    b = s2.str();
    ok = f1.good() && f2.good() && !a.empty() && a == b;
  }
  std::remove(out1.c_str());
  std::remove(out2.c_str());
  std::ostringstream msg;
  msg << "repeated CLI runs produced " << (ok ? "byte-identical" : "differing")
      << " CSV (" << a.size() << " bytes)";
  report(9, ok, msg.str());
}

}  // namespace

int main() {
  const std::function<void()> criteria[] = {criterion_1, criterion_2, criterion_3,
                                            criterion_4, criterion_5, criterion_6,
                                            criterion_7, criterion_8, criterion_9};
  for (std::size_t i = 0; i < std::size(criteria); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(int(i + 1), false, std::string("exception: ") + e.what());
    }
  }
  if (g_failures) std::printf("%d criteria FAILED\n", g_failures);
  else std::printf("all criteria passed\n");
  return g_failures ? 1 : 0;
}
