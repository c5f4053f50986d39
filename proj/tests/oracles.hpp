// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations used only by tests. None of these
// share code paths with the library routines they check.
#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace colscat::oracle {

inline const std::vector<std::pair<double, double>> kThreeClusters = {{-1.0, -0.7}, {-0.15, 0.15}, {0.7, 1.0}};

/// Quadruple-sum channel c_mn = eta sum_k sum_l conj(a_r(k,m)) h(k,l) a_t(l,n)
/// with phases evaluated directly from the floating-point formula.
inline Eigen::MatrixXcd quadruple_sum_channel(const Eigen::MatrixXcd& field, const std::vector<int>& rx_nodes,
                                              const std::vector<int>& tx_nodes, int grid_k, int half_count,
                                              double eta) {
  const int n = 2 * half_count + 1;
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n, n);
  auto steer = [&](int k, int m) {
    const double phase = -2.0 * std::numbers::pi * (static_cast<double>(k) / grid_k) * (m / 2.0);
    return std::complex<double>(std::cos(phase), std::sin(phase));
  };
  for (int m = -half_count; m <= half_count; ++m) {
    for (int nn = -half_count; nn <= half_count; ++nn) {
      std::complex<double> acc = 0.0;
      for (std::size_t k = 0; k < rx_nodes.size(); ++k) {
        for (std::size_t l = 0; l < tx_nodes.size(); ++l) {
          acc += std::conj(steer(rx_nodes[k], m)) * field(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) *
                 steer(tx_nodes[l], nn);
        }
      }
      c(m + half_count, nn + half_count) = eta * acc;
    }
  }
  return c;
}

struct EnumeratedWaterfill {
  std::vector<double> allocation;
  double capacity_bits = 0.0;
};

/// Exhaustive search over active sets: for each subset, equalize the water
/// level, keep it if every allocation is nonnegative, and take the best.
inline EnumeratedWaterfill enumerate_waterfill(const std::vector<double>& gains, double power) {
  const std::size_t n = gains.size();
  EnumeratedWaterfill best;
  best.allocation.assign(n, 0.0);
  best.capacity_bits = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    double inv = 0.0;
    int count = 0;
    bool usable = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        if (gains[i] <= 0.0) usable = false;
        inv += 1.0 / gains[i];
        ++count;
      }
    }
    if (!usable) continue;
    const double mu = (power + inv) / count;
    std::vector<double> p(n, 0.0);
    bool feasible = true;
    double cap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        p[i] = mu - 1.0 / gains[i];
        if (p[i] < 0.0) feasible = false;
        cap += std::log2(1.0 + gains[i] * p[i]);
      }
    }
    if (feasible && cap > best.capacity_bits) {
      best.capacity_bits = cap;
      best.allocation = p;
      any = true;
    }
  }
  if (!any) best.capacity_bits = 0.0;
  return best;
}

/// log2 det(I + rho/n H H^H) through an LU factorization.
inline double logdet_mutual_information(const Eigen::MatrixXcd& h, double rho) {
  const auto n = h.rows();
  const Eigen::MatrixXcd m =
      Eigen::MatrixXcd::Identity(n, n) + (rho / static_cast<double>(h.cols())) * h * h.adjoint();
  return std::log2(std::abs(Eigen::PartialPivLU<Eigen::MatrixXcd>(m).determinant()));
}

/// Closed-form root of |A|W + (M/pi^2) ln(eps/(1-eps)) ln(2 pi |A| W) = 0.
inline double epsilon_closed_form(double aw, double m) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return 1.0 / (1.0 + std::exp(aw * pi2 / (m * std::log(2.0 * std::numbers::pi * aw))));
}

}  // namespace colscat::oracle
