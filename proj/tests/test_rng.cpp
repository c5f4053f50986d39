// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "colscat/rng.hpp"

using namespace colscat;

TEST_CASE("philox4x32-10 known-answer vectors") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) ==
        PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("draws are pure functions of the stream and index") {
  const StreamId a{42, 3, 1};
  CHECK(complex_gaussian(a, 17) == complex_gaussian(a, 17));
  CHECK(complex_gaussian(a, 17) != complex_gaussian(a, 18));
  CHECK(complex_gaussian(a, 17) != complex_gaussian({43, 3, 1}, 17));
  CHECK(complex_gaussian(a, 17) != complex_gaussian({42, 4, 1}, 17));
  CHECK(complex_gaussian(a, 17) != complex_gaussian({42, 3, 2}, 17));
  CHECK(complex_gaussian(a, 17) != complex_gaussian({42ull | (1ull << 40), 3, 1}, 17));

  Eigen::MatrixXcd m(3, 5);
  fill_complex_gaussian(a, m);
  CHECK(m(2, 4) == complex_gaussian(a, 14));
  CHECK(m(1, 0) == complex_gaussian(a, 5));
}

TEST_CASE("circular-symmetric unit-variance moments") {
  const int n = 200000;
  Eigen::MatrixXcd m(n, 1);
  fill_complex_gaussian({7, 0, 0}, m);
  const auto v = m.col(0);
  const std::complex<double> mean = v.mean();
  const double power = v.squaredNorm() / n;
  const std::complex<double> pseudo = (v.array() * v.array()).mean();
  const double re_var = v.real().squaredNorm() / n;
  double fourth = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) fourth += std::pow(std::norm(v[i]), 2);
  fourth /= n;
  const double se = 1.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean) < 5.0 * se);
  CHECK(std::abs(power - 1.0) < 5.0 * se);
  CHECK(std::abs(re_var - 0.5) < 5.0 * se);
  CHECK(std::abs(pseudo) < 5.0 * se);
  // E|z|^4 = 2 for a unit complex Gaussian.
  CHECK(std::abs(fourth - 2.0) < 5.0 * std::sqrt(20.0) * se);
}
