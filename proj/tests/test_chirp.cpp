#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "netscatter/channel.hpp"
#include "netscatter/chirp.hpp"
#include "oracle.hpp"

using namespace netscatter;

namespace {
ChirpConfig make_cfg(int sf, double bw = 500e3, int pad = 10, int agg = 1) {
  ChirpConfig cfg;
  cfg.sf = sf;
  cfg.bw = bw;
  cfg.pad_factor = pad;
  cfg.agg_factor = agg;
  return cfg;
}
}  // namespace

TEST_CASE("upchirp basics") {
  const ChirpConfig cfg = make_cfg(9);
  const IqBuffer up = make_upchirp(cfg);
  CHECK(up.size() == 512);
  CHECK(up.sample_rate == doctest::Approx(500e3));
  for (const auto& s : up.samples) CHECK(std::abs(s) == doctest::Approx(1.0));
  CHECK(up.samples[0].real() == doctest::Approx(1.0));
  CHECK(up.samples[0].imag() == doctest::Approx(0.0));

  const IqBuffer down = make_downchirp(cfg);
  for (std::size_t i = 0; i < up.size(); ++i)
    CHECK(down.samples[i] == std::conj(up.samples[i]));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(make_cfg(3).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_cfg(13).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_cfg(9, -1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_cfg(9, 500e3, 0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_cfg(9, 500e3, 10, 0).validate(), std::invalid_argument);
  CHECK_NOTHROW(make_cfg(4).validate());
  CHECK_NOTHROW(make_cfg(12).validate());
}

TEST_CASE("cyclic shift k lands on FFT bin k") {
  const ChirpConfig cfg = make_cfg(7, 500e3, 1);
  const IqBuffer up = make_upchirp(cfg);
  for (std::size_t k = 0; k < cfg.chirp_len(); ++k) {
    const auto pk = peak_search(zero_pad_fft(dechirp(cyclic_shift(up, k), cfg), cfg));
    CHECK(pk.bin_index == k);
  }
  CHECK_THROWS_AS(cyclic_shift(up, cfg.chirp_len()), std::invalid_argument);
}

TEST_CASE("zero_pad_fft matches direct DFT") {
  const ChirpConfig cfg = make_cfg(4, 500e3, 2);
  Rng rng(7);
  IqBuffer x;
  x.sample_rate = cfg.bw;
  for (std::size_t i = 0; i < cfg.chirp_len(); ++i)
    x.samples.emplace_back(rng.gaussian(), rng.gaussian());
  const SymbolSpectrum spec = zero_pad_fft(x, cfg);
  std::vector<oracle::cplx> padded = x.samples;
  padded.resize(cfg.fft_size(), {0.0, 0.0});
  const auto ref = oracle::dft(padded);
  REQUIRE(spec.bins.size() == ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i)
    CHECK(std::abs(spec.bins[i] - ref[i]) < 1e-9);
}

TEST_CASE("Parseval with zero padding") {
  const ChirpConfig cfg = make_cfg(6, 500e3, 4);
  Rng rng(11);
  IqBuffer x;
  x.sample_rate = cfg.bw;
  double energy = 0.0;
  for (std::size_t i = 0; i < cfg.chirp_len(); ++i) {
    x.samples.emplace_back(rng.gaussian(), rng.gaussian());
    energy += std::norm(x.samples.back());
  }
  const SymbolSpectrum spec = zero_pad_fft(x, cfg);
  double bin_energy = 0.0;
  for (const auto& b : spec.bins) bin_energy += std::norm(b);
  CHECK(bin_energy / double(cfg.fft_size()) == doctest::Approx(energy).epsilon(1e-9));
}

TEST_CASE("peak_search ties go to the lowest index") {
  SymbolSpectrum spec;
  spec.pad_factor = 2;
  spec.native_bins = 4;
  spec.bins = {{0, 0}, {3, 0}, {0, -3}, {1, 1}, {0, 0}, {0, 0}, {0, 0}, {0, 0}};
  const auto pk = peak_search(spec);
  CHECK(pk.bin_index == 1);
  CHECK(pk.fractional_bin == doctest::Approx(0.5));
  CHECK(pk.power == doctest::Approx(9.0));
}

TEST_CASE("offset displacement formulas") {
  const ChirpConfig cfg = make_cfg(9);
  CHECK(bin_from_timing_offset(2e-6, cfg) == doctest::Approx(1.0));
  CHECK(bin_from_timing_offset(4e-6, make_cfg(9, 250e3)) == doctest::Approx(1.0));
  CHECK(bin_from_freq_offset(976.5625, cfg) == doctest::Approx(1.0));
  CHECK(bin_from_freq_offset(150.0, cfg) == doctest::Approx(0.1536));
}

TEST_CASE("measured peak follows timing and frequency offsets") {
  const ChirpConfig cfg = make_cfg(9);
  const IqBuffer sym = make_aggregate_upchirp(cfg, 100);
  for (double dt : {0.5e-6, 2e-6, 3.3e-6}) {
    const auto pk = peak_search(zero_pad_fft(dechirp(apply_timing_offset(sym, dt, cfg), cfg), cfg));
    CHECK(pk.fractional_bin ==
          doctest::Approx(100.0 + bin_from_timing_offset(dt, cfg)).epsilon(0.0006));
  }
  for (double df : {488.28125, 1500.0}) {
    const auto pk = peak_search(zero_pad_fft(dechirp(apply_freq_offset(sym, df), cfg), cfg));
    CHECK(pk.fractional_bin ==
          doctest::Approx(100.0 + bin_from_freq_offset(df, cfg)).epsilon(0.0006));
  }
}

TEST_CASE("aggregate chirp reduces to the shifted upchirp at m=1") {
  const ChirpConfig cfg = make_cfg(8);
  const IqBuffer up = make_upchirp(cfg);
  for (std::size_t k : {std::size_t(0), std::size_t(1), std::size_t(200)}) {
    const IqBuffer agg = make_aggregate_upchirp(cfg, k);
    const IqBuffer ref = cyclic_shift(up, k);
    for (std::size_t i = 0; i < ref.size(); ++i)
      CHECK(std::abs(agg.samples[i] - ref.samples[i]) < 1e-9);
  }
}

TEST_CASE("bandwidth aggregation demodulates m*2^sf shift slots with one FFT") {
  const ChirpConfig cfg = make_cfg(7, 500e3, 1, 4);
  CHECK(cfg.native_bins() == 512);
  CHECK(cfg.sample_rate() == doctest::Approx(2e6));
  for (std::size_t k : {std::size_t(0), std::size_t(3), std::size_t(127), std::size_t(128),
                        std::size_t(511)}) {
    const IqBuffer sym = make_aggregate_upchirp(cfg, k);
    const std::uint64_t before = fft_call_count();
    const auto pk = peak_search(zero_pad_fft(dechirp(sym, cfg), cfg));
    CHECK(fft_call_count() == before + 1);
    CHECK(pk.bin_index == k);
    CHECK(pk.power == doctest::Approx(double(sym.size()) * double(sym.size())));
  }
  CHECK_THROWS_AS(make_aggregate_upchirp(cfg, 512), std::invalid_argument);
}

TEST_CASE("dechirp length check") {
  const ChirpConfig cfg = make_cfg(9);
  IqBuffer bad;
  bad.sample_rate = cfg.bw;
  bad.samples.resize(100);
  CHECK_THROWS_AS(dechirp(bad, cfg), std::invalid_argument);
}
