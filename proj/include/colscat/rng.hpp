// SPDX-License-Identifier: Apache-2.0
//
// Counter-based Philox4x32-10 generator. A draw is a pure function of
// (seed, trial, block, index), so trials can be generated in any order on
// any thread and still reproduce bit-identically.
#pragma once

#include <array>
#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace colscat {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Identifies one independent random stream.
struct StreamId {
  std::uint64_t seed = 0;
  std::uint32_t trial = 0;
  std::uint32_t block = 0;
};

/// Fills `out` with circular-symmetric complex Gaussians of unit variance;
/// entry (r, c) is draw r * cols + c of the stream.
void fill_complex_gaussian(const StreamId& stream, Eigen::MatrixXcd& out);

/// Single draw at `index` of the stream.
std::complex<double> complex_gaussian(const StreamId& stream, std::uint64_t index);

}  // namespace colscat
