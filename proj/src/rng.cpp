// SPDX-License-Identifier: Apache-2.0
#include "colscat/rng.hpp"

#include <cmath>
#include <numbers>

namespace colscat {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// Uniform on (0, 1], 53 bits.
inline double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

std::complex<double> complex_gaussian(const StreamId& stream, std::uint64_t index) {
  const PhiloxKey key{static_cast<std::uint32_t>(stream.seed), static_cast<std::uint32_t>(stream.seed >> 32)};
  const PhiloxCounter ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                          stream.trial, stream.block};
  const auto r = philox4x32_10(ctr, key);
  const double u1 = to_unit_open(r[0], r[1]);
  const double u2 = to_unit_open(r[2], r[3]);
  // Box-Muller with radius sqrt(-ln u1): real and imaginary parts each
  // have variance 1/2.
  const double radius = std::sqrt(-std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

void fill_complex_gaussian(const StreamId& stream, Eigen::MatrixXcd& out) {
  const auto cols = static_cast<std::uint64_t>(out.cols());
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      out(r, c) = complex_gaussian(stream, static_cast<std::uint64_t>(r) * cols + static_cast<std::uint64_t>(c));
    }
  }
}

}  // namespace colscat
