#include "netscatter/chirp.hpp"

#include <fftw3.h>

#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace netscatter {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::atomic<std::uint64_t> g_fft_calls{0};

struct PlanCache {
  std::mutex mu;
  // (size, sign) -> plan with its working buffer
  struct Entry {
    fftw_plan plan;
    fftw_complex* buf;
  };
  std::map<std::pair<std::size_t, int>, Entry> entries;

  Entry& get(std::size_t n, int sign) {
    auto key = std::make_pair(n, sign);
    auto it = entries.find(key);
    if (it == entries.end()) {
      Entry e;
      e.buf = fftw_alloc_complex(n);
      e.plan = fftw_plan_dft_1d(int(n), e.buf, e.buf, sign, FFTW_ESTIMATE);
      it = entries.emplace(key, e).first;
    }
    return it->second;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void run_fft(std::vector<cplx>& data, int sign) {
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("fft: empty input");
  auto& c = cache();
  std::lock_guard<std::mutex> lock(c.mu);
  auto& e = c.get(n, sign);
  for (std::size_t i = 0; i < n; ++i) {
    e.buf[i][0] = data[i].real();
    e.buf[i][1] = data[i].imag();
  }
  fftw_execute(e.plan);
  const double scale = sign == FFTW_BACKWARD ? 1.0 / double(n) : 1.0;
  for (std::size_t i = 0; i < n; ++i)
    data[i] = cplx(e.buf[i][0] * scale, e.buf[i][1] * scale);
  g_fft_calls.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

namespace detail {
void fft_forward(std::vector<cplx>& data) { run_fft(data, FFTW_FORWARD); }
void fft_inverse(std::vector<cplx>& data) { run_fft(data, FFTW_BACKWARD); }
}  // namespace detail

std::uint64_t fft_call_count() { return g_fft_calls.load(std::memory_order_relaxed); }

void ChirpConfig::validate() const {
  // sf 4 and 5 are below the usual operating range but are needed for the
  // low-order resolution checks, so the floor sits at 4.
  if (sf < 4 || sf > 12) throw std::invalid_argument("ChirpConfig: sf out of range [4,12]");
  if (!(bw > 0.0)) throw std::invalid_argument("ChirpConfig: bw must be positive");
  if (pad_factor < 1) throw std::invalid_argument("ChirpConfig: pad_factor must be >= 1");
  if (agg_factor < 1) throw std::invalid_argument("ChirpConfig: agg_factor must be >= 1");
}

double IqBuffer::power() const {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) acc += std::norm(s);
  return acc / double(samples.size());
}

bool IqBuffer::all_finite() const {
  for (const auto& s : samples)
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) return false;
  return true;
}

IqBuffer make_upchirp(const ChirpConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.chirp_len();
  IqBuffer out;
  out.sample_rate = cfg.bw;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = double(i);
    const double phase = kTwoPi * (t * t / (2.0 * double(n)) - t / 2.0);
    out.samples[i] = std::polar(1.0, phase);
  }
  return out;
}

IqBuffer make_downchirp(const ChirpConfig& cfg) {
  IqBuffer out = make_upchirp(cfg);
  for (auto& s : out.samples) s = std::conj(s);
  return out;
}

IqBuffer cyclic_shift(const IqBuffer& symbol, std::size_t k) {
  const std::size_t n = symbol.size();
  if (n == 0) throw std::invalid_argument("cyclic_shift: empty buffer");
  if (k >= n) throw std::invalid_argument("cyclic_shift: shift out of range");
  IqBuffer out;
  out.sample_rate = symbol.sample_rate;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = symbol.samples[(i + k) % n];
  return out;
}

IqBuffer make_aggregate_upchirp(const ChirpConfig& cfg, std::size_t k) {
  cfg.validate();
  const std::size_t n = cfg.chirp_len();
  const std::size_t m = std::size_t(cfg.agg_factor);
  const std::size_t len = m * n;
  if (k >= len) throw std::invalid_argument("make_aggregate_upchirp: shift out of range");
  // Base aggregate chirp s0 has the per-chirp slope bw^2/2^sf at sample rate
  // m*bw and period m^2*2^sf samples; shift k delays it by k*m samples so the
  // dechirped tone lands exactly on bin k of the m*2^sf-point FFT.
  const double period = double(m * m * n);
  IqBuffer out;
  out.sample_rate = cfg.sample_rate();
  out.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double t = double((i + k * m) % (m * m * n));
    const double phase = kTwoPi * (t * t / (2.0 * period) - t / (2.0 * double(m)));
    out.samples[i] = std::polar(1.0, phase);
  }
  return out;
}

IqBuffer dechirp(const IqBuffer& rx, const ChirpConfig& cfg) {
  cfg.validate();
  const std::size_t len = cfg.samples_per_symbol();
  if (rx.size() != len) throw std::invalid_argument("dechirp: rx length != m*2^sf");
  const IqBuffer down = cfg.agg_factor == 1 ? make_downchirp(cfg)
                                            : make_aggregate_upchirp(cfg, 0);
  IqBuffer out;
  out.sample_rate = rx.sample_rate;
  out.samples.resize(len);
  if (cfg.agg_factor == 1) {
    for (std::size_t i = 0; i < len; ++i) out.samples[i] = rx.samples[i] * down.samples[i];
  } else {
    for (std::size_t i = 0; i < len; ++i)
      out.samples[i] = rx.samples[i] * std::conj(down.samples[i]);
  }
  return out;
}

SymbolSpectrum zero_pad_fft(const IqBuffer& dechirped, const ChirpConfig& cfg) {
  cfg.validate();
  if (dechirped.size() == 0) throw std::invalid_argument("zero_pad_fft: empty input");
  std::vector<cplx> data = dechirped.samples;
  data.resize(dechirped.size() * std::size_t(cfg.pad_factor), cplx{0.0, 0.0});
  detail::fft_forward(data);
  SymbolSpectrum spec;
  spec.bins = std::move(data);
  spec.bin_resolution_hz = cfg.bin_resolution_hz();
  spec.pad_factor = cfg.pad_factor;
  spec.native_bins = dechirped.size();
  return spec;
}

PeakInfo peak_search(const SymbolSpectrum& spec) {
  if (spec.bins.empty()) throw std::invalid_argument("peak_search: empty spectrum");
  std::size_t best = 0;
  double best_pow = std::norm(spec.bins[0]);
  for (std::size_t i = 1; i < spec.bins.size(); ++i) {
    const double p = std::norm(spec.bins[i]);
    if (p > best_pow) {
      best_pow = p;
      best = i;
    }
  }
  PeakInfo out;
  out.bin_index = best;
  out.fractional_bin = double(best) / double(spec.pad_factor);
  out.power = best_pow;
  return out;
}

double bin_from_timing_offset(double dt_s, const ChirpConfig& cfg) { return dt_s * cfg.bw; }

double bin_from_freq_offset(double df_hz, const ChirpConfig& cfg) {
  return df_hz * double(cfg.chirp_len()) / cfg.bw;
}

}  // namespace netscatter
