#pragma once

// Slow reference implementations used to pin the fast paths in tests.

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

// O(n^2) direct DFT, unnormalized forward transform.
inline std::vector<cplx> dft(const std::vector<cplx>& x) {
  const std::size_t n = x.size();
  std::vector<cplx> out(n, cplx{0.0, 0.0});
  const double w = -2.0 * 3.1415926535897932384626433832795 / double(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      out[k] += x[i] * std::polar(1.0, w * double(k) * double(i));
  return out;
}

// CRC-8, polynomial 0x07, processed bit by bit over a 32-bit word (MSB first).
inline std::uint8_t crc8_bitwise(std::uint32_t data) {
  std::uint16_t reg = 0;
  for (int b = 31; b >= 0; --b) {
    const std::uint16_t in_bit = (data >> b) & 1u;
    const std::uint16_t top = (reg >> 7) & 1u;
    reg = std::uint16_t((reg << 1) & 0xffu);
    if (top ^ in_bit) reg ^= 0x07u;
  }
  return std::uint8_t(reg);
}

}  // namespace oracle
