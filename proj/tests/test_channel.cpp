#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "netscatter/channel.hpp"
#include "netscatter/chirp.hpp"

using namespace netscatter;

TEST_CASE("rng is deterministic and well distributed") {
  Rng a(1234), b(1234), c(99);
  for (int i = 0; i < 64; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(Rng(1234).next_u64() != c.next_u64());

  Rng r(5);
  double mean = 0.0, var = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double g = r.gaussian();
    mean += g;
    var += g * g;
  }
  CHECK(std::abs(mean / n) < 0.02);
  CHECK(var / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("derive_seed spreads indices") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("timing offset semantics") {
  ChirpConfig cfg;
  const IqBuffer sym = make_upchirp(cfg);
  CHECK_THROWS_AS(apply_timing_offset(IqBuffer{}, 1e-6, cfg), std::invalid_argument);
  CHECK_THROWS_AS(apply_timing_offset(sym, 2e-3, cfg), std::invalid_argument);

  // dt = 0 is the identity; whole-sample offsets are exact rotations.
  const IqBuffer same = apply_timing_offset(sym, 0.0, cfg);
  for (std::size_t i = 0; i < sym.size(); ++i) CHECK(same.samples[i] == sym.samples[i]);
  const IqBuffer rot = apply_timing_offset(sym, 3.0 / cfg.bw, cfg);
  const IqBuffer ref = cyclic_shift(sym, 3);
  for (std::size_t i = 0; i < sym.size(); ++i)
    CHECK(std::abs(rot.samples[i] - ref.samples[i]) < 1e-9);

  // Fractional offsets keep the signal at unit power (pure phase model).
  const IqBuffer frac = apply_timing_offset(sym, 0.7 / cfg.bw, cfg);
  CHECK(frac.power() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("frequency offset is a complex exponential multiply") {
  ChirpConfig cfg;
  IqBuffer ones;
  ones.sample_rate = cfg.bw;
  ones.samples.assign(cfg.chirp_len(), cplx{1.0, 0.0});
  const double df = 3.0 * cfg.bin_spacing_hz();
  const IqBuffer shifted = apply_freq_offset(ones, df);
  std::vector<cplx> data = shifted.samples;
  detail::fft_forward(data);
  std::size_t best = 0;
  for (std::size_t i = 1; i < data.size(); ++i)
    if (std::norm(data[i]) > std::norm(data[best])) best = i;
  CHECK(best == 3);
  CHECK_THROWS_AS(apply_freq_offset(ones, cfg.bw), std::invalid_argument);
}

TEST_CASE("power gain and propagation helpers") {
  IqBuffer x;
  x.sample_rate = 1.0;
  x.samples.assign(64, cplx{1.0, 0.0});
  CHECK(apply_power_gain(x, -20.0).power() == doctest::Approx(0.01));
  CHECK(tof_delay(149.896229) == doctest::Approx(1e-6));
  CHECK_THROWS_AS(tof_delay(-1.0), std::invalid_argument);
  CHECK(doppler_shift(29.9792458, 900e6) == doctest::Approx(90.0));
  CHECK(doppler_shift(-29.9792458, 900e6) == doctest::Approx(-90.0));
}

TEST_CASE("superpose aligns parts at their offsets") {
  IqBuffer a, b;
  a.sample_rate = b.sample_rate = 1.0;
  a.samples = {{1, 0}, {1, 0}};
  b.samples = {{0, 1}, {0, 1}};
  const IqBuffer sum = superpose({{a, 0}, {b, 1}});
  REQUIRE(sum.size() == 3);
  CHECK(sum.samples[0] == cplx{1, 0});
  CHECK(sum.samples[1] == cplx{1, 1});
  CHECK(sum.samples[2] == cplx{0, 1});
  CHECK_THROWS_AS(superpose({}), std::invalid_argument);
  IqBuffer other = b;
  other.sample_rate = 2.0;
  CHECK_THROWS_AS(superpose({{a, 0}, {other, 0}}), std::invalid_argument);
}

TEST_CASE("awgn power matches the SNR definition") {
  IqBuffer zeros;
  zeros.sample_rate = 1.0;
  zeros.samples.assign(100000, cplx{0.0, 0.0});
  for (double snr : {-10.0, 0.0, 10.0}) {
    const IqBuffer noisy = add_awgn(zeros, snr, 42);
    CHECK(noisy.power() == doctest::Approx(std::pow(10.0, -snr / 10.0)).epsilon(0.02));
  }
  const IqBuffer n1 = add_awgn(zeros, 0.0, 9);
  const IqBuffer n2 = add_awgn(zeros, 0.0, 9);
  for (std::size_t i = 0; i < 100; ++i) CHECK(n1.samples[i] == n2.samples[i]);
}

TEST_CASE("jitter specs") {
  Rng rng(3);
  CHECK(sample_jitter(JitterSpec::none(), rng) == 0.0);
  const JitterSpec uni = JitterSpec::uniform(1e-6, 2e-6);
  for (int i = 0; i < 100; ++i) {
    const double v = sample_jitter(uni, rng);
    CHECK(v >= 1e-6);
    CHECK(v < 2e-6);
  }
  double acc = 0.0;
  const JitterSpec gauss = JitterSpec::gaussian(1e-6);
  for (int i = 0; i < 10000; ++i) {
    const double v = sample_jitter(gauss, rng);
    acc += v * v;
  }
  CHECK(std::sqrt(acc / 10000) == doctest::Approx(1e-6).epsilon(0.05));
  CHECK_THROWS_AS(sample_jitter(JitterSpec::uniform(2e-6, 1e-6), rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_jitter(JitterSpec::gaussian(-1.0), rng), std::invalid_argument);
}
