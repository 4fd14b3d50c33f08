#include "netscatter/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace netscatter {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kSpeedOfLight = 299792458.0;

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
  // 53 random bits into [0, 1)
  return double(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  have_spare_ = true;
  return r * std::cos(kTwoPi * u2);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0x9e3779b97f4a7c15ull * (index + 1));
  return splitmix64(s);
}

double sample_jitter(const JitterSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case JitterSpec::Kind::None:
      return 0.0;
    case JitterSpec::Kind::Uniform:
      if (spec.hi_s < spec.lo_s)
        throw std::invalid_argument("JitterSpec: uniform bounds reversed");
      return rng.uniform(spec.lo_s, spec.hi_s);
    case JitterSpec::Kind::Gaussian:
      if (spec.sigma_s < 0.0) throw std::invalid_argument("JitterSpec: negative sigma");
      return rng.gaussian() * spec.sigma_s;
  }
  return 0.0;
}

IqBuffer apply_timing_offset(const IqBuffer& sig, double dt_s, const ChirpConfig& cfg) {
  if (sig.size() == 0) throw std::invalid_argument("apply_timing_offset: empty buffer");
  const double fs = sig.sample_rate;
  const double shift_samples = dt_s * fs;
  const long n = long(sig.size());
  if (std::abs(shift_samples) >= double(n))
    throw std::invalid_argument("apply_timing_offset: offset exceeds buffer duration");
  if (dt_s == 0.0) return sig;
  const long whole = long(std::floor(shift_samples));
  const double frac = shift_samples - double(whole);

  IqBuffer out;
  out.sample_rate = fs;
  out.samples.resize(sig.size());
  // s(t + tau) = s(t) * exp(j*2*pi*(slope*tau*t + slope*tau^2/2 - fs*tau/2))
  // for the periodic chirp with sweep slope fs^2 / samples_per_symbol.
  const double slope = fs * fs / double(cfg.samples_per_symbol());
  const double tau = frac / fs;
  const double phi0 = kTwoPi * (slope * tau * tau / 2.0 - fs * tau / 2.0);
  for (long i = 0; i < n; ++i) {
    const long src = ((i + whole) % n + n) % n;
    out.samples[std::size_t(i)] =
        sig.samples[std::size_t(src)] *
        std::polar(1.0, kTwoPi * slope * tau * double(i) / fs + phi0);
  }
  return out;
}

IqBuffer apply_freq_offset(const IqBuffer& sig, double df_hz) {
  if (sig.size() == 0) throw std::invalid_argument("apply_freq_offset: empty buffer");
  if (std::abs(df_hz) >= sig.sample_rate / 2.0)
    throw std::invalid_argument("apply_freq_offset: offset outside band");
  IqBuffer out;
  out.sample_rate = sig.sample_rate;
  out.samples.resize(sig.size());
  for (std::size_t i = 0; i < sig.size(); ++i) {
    out.samples[i] =
        sig.samples[i] * std::polar(1.0, kTwoPi * df_hz * double(i) / sig.sample_rate);
  }
  return out;
}

IqBuffer apply_power_gain(const IqBuffer& sig, double gain_db) {
  const double a = std::pow(10.0, gain_db / 20.0);
  IqBuffer out;
  out.sample_rate = sig.sample_rate;
  out.samples.resize(sig.size());
  for (std::size_t i = 0; i < sig.size(); ++i) out.samples[i] = sig.samples[i] * a;
  return out;
}

double tof_delay(double distance_m) {
  if (distance_m < 0.0) throw std::invalid_argument("tof_delay: negative distance");
  return 2.0 * distance_m / kSpeedOfLight;
}

double doppler_shift(double velocity_mps, double carrier_hz) {
  return carrier_hz * velocity_mps / kSpeedOfLight;
}

IqBuffer superpose(const std::vector<std::pair<IqBuffer, std::size_t>>& parts) {
  if (parts.empty()) throw std::invalid_argument("superpose: empty part list");
  std::size_t total = 0;
  for (const auto& [buf, start] : parts) {
    if (buf.sample_rate != parts.front().first.sample_rate)
      throw std::invalid_argument("superpose: mismatched sample rates");
    total = std::max(total, start + buf.size());
  }
  IqBuffer out;
  out.sample_rate = parts.front().first.sample_rate;
  out.samples.assign(total, cplx{0.0, 0.0});
  for (const auto& [buf, start] : parts)
    for (std::size_t i = 0; i < buf.size(); ++i) out.samples[start + i] += buf.samples[i];
  return out;
}

IqBuffer add_awgn(const IqBuffer& sig, double snr_db, std::uint64_t seed) {
  if (sig.size() == 0) throw std::invalid_argument("add_awgn: empty buffer");
  const double noise_power = std::pow(10.0, -snr_db / 10.0);
  const double comp_sigma = std::sqrt(noise_power / 2.0);
  Rng rng(seed);
  IqBuffer out;
  out.sample_rate = sig.sample_rate;
  out.samples.resize(sig.size());
  for (std::size_t i = 0; i < sig.size(); ++i) {
    out.samples[i] = sig.samples[i] +
                     cplx(rng.gaussian() * comp_sigma, rng.gaussian() * comp_sigma);
  }
  return out;
}

}  // namespace netscatter
