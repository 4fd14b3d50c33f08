#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace netscatter {

using cplx = std::complex<double>;

// Modulation parameters for one chirp symbol family.
// At critical sampling the per-chirp sample rate equals the chirp bandwidth;
// with bandwidth aggregation the receiver samples the whole m*bw band at once.
struct ChirpConfig {
  int sf = 9;            // spreading factor, log2 samples per chirp
  double bw = 500e3;     // chirp bandwidth [Hz], also per-chirp sample rate
  int pad_factor = 10;   // zero-padding multiple alpha >= 1
  int agg_factor = 1;    // bandwidth aggregation factor m >= 1

  std::size_t chirp_len() const { return std::size_t{1} << sf; }
  std::size_t native_bins() const { return chirp_len() * agg_factor; }
  std::size_t samples_per_symbol() const { return chirp_len() * agg_factor; }
  std::size_t fft_size() const { return samples_per_symbol() * pad_factor; }
  double sample_rate() const { return bw * agg_factor; }
  double symbol_duration() const { return double(chirp_len()) / bw; }
  double bin_spacing_hz() const { return bw / double(chirp_len()); }
  double bin_resolution_hz() const { return bw / double(chirp_len() * pad_factor); }

  // Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
};

// Complex baseband sample sequence at unit-power reference scale.
struct IqBuffer {
  std::vector<cplx> samples;
  double sample_rate = 0.0;

  std::size_t size() const { return samples.size(); }
  double power() const;           // mean |x|^2
  bool all_finite() const;
};

// FFT of one dechirped symbol on the zero-padded grid.
struct SymbolSpectrum {
  std::vector<cplx> bins;
  double bin_resolution_hz = 0.0;
  int pad_factor = 1;
  std::size_t native_bins = 0;
};

struct PeakInfo {
  std::size_t bin_index = 0;   // argmax on the padded grid, ties to lowest index
  double fractional_bin = 0.0; // bin_index / pad_factor, in native bin units
  double power = 0.0;
};

// Baseline upchirp: 2^sf samples, instantaneous frequency sweeping
// -bw/2..+bw/2, s[n] = exp(j*2*pi*(n^2/(2*2^sf) - n/2)).
IqBuffer make_upchirp(const ChirpConfig& cfg);

// Conjugate of the baseline upchirp.
IqBuffer make_downchirp(const ChirpConfig& cfg);

// Left-rotate the symbol by k samples; demodulates to native bin k.
IqBuffer cyclic_shift(const IqBuffer& symbol, std::size_t k);

// Elementwise product of one received symbol with the aggregate downchirp.
IqBuffer dechirp(const IqBuffer& rx, const ChirpConfig& cfg);

// Pad to fft_size and transform. Unnormalized forward FFT, so
// sum |bins|^2 / fft_size equals the time-domain input energy.
SymbolSpectrum zero_pad_fft(const IqBuffer& dechirped, const ChirpConfig& cfg);

PeakInfo peak_search(const SymbolSpectrum& spec);

// FFT-bin displacement caused by a timing offset: dt * bw.
double bin_from_timing_offset(double dt_s, const ChirpConfig& cfg);

// FFT-bin displacement caused by a frequency offset: df * 2^sf / bw.
double bin_from_freq_offset(double df_hz, const ChirpConfig& cfg);

// Shift-k chirp occupying the aggregate m*bw band with sawtooth aliasing;
// m*2^sf samples at rate m*bw, one FFT of m*2^sf points recovers k.
// Valid shifts are 0 <= k < m*2^sf.
IqBuffer make_aggregate_upchirp(const ChirpConfig& cfg, std::size_t k);

// Number of forward/inverse transforms executed so far (process-wide).
std::uint64_t fft_call_count();

namespace detail {
// In-place unnormalized forward / normalized inverse DFT, any length.
void fft_forward(std::vector<cplx>& data);
void fft_inverse(std::vector<cplx>& data);
}  // namespace detail

}  // namespace netscatter
