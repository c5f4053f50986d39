// SPDX-License-Identifier: Apache-2.0
//
// Capacity functionals. All capacities are in bits (log base 2).
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "colscat/channel.hpp"
#include "colscat/kernel.hpp"
#include "colscat/scatter.hpp"

namespace colscat {

struct SnrPoint {
  double power = 1.0;
  double noise_var = 1.0;

  static SnrPoint from_db(double snr_db, double noise_var = 1.0);
  double ratio() const { return power / noise_var; }
  double snr_db() const;
};

struct WaterfillResult {
  std::vector<double> allocation;  // same order as the input gains
  double water_level = 0.0;
  double capacity_bits = 0.0;
};

/// Maximizes sum log2(1 + g_i p_i) subject to sum p_i = P, p_i >= 0.
/// All-zero gains give zero capacity and an empty allocation.
WaterfillResult waterfill(std::span<const double> gains, double power);

/// Largest violation of the KKT conditions of `result` (power balance
/// relative to P, p_i = mu - 1/g_i on active channels, mu <= 1/g_i on
/// inactive ones, relative to mu).
double waterfill_kkt_residual(std::span<const double> gains, double power, const WaterfillResult& result);

/// Squared singular values of H, descending, from the eigenvalues of H H^H.
Eigen::VectorXd squared_singular_values(const Eigen::MatrixXcd& h);

/// log2 det(I + P/(sigma^2 (2L+1)) H H^H).
double mi_equal_power(const ChannelMatrix& channel, const SnrPoint& snr);
double mi_equal_power(const Eigen::VectorXd& squared_singular_values, std::size_t antennas, const SnrPoint& snr);

/// max over Tr(Q) <= P of log2 det(I + H Q H^H / sigma^2).
double capacity_full_csi(const ChannelMatrix& channel, const SnrPoint& snr);
double capacity_full_csi(const Eigen::VectorXd& squared_singular_values, const SnrPoint& snr);

/// |Omega| min{L, 1/gamma}.
double dof_limit(const AngularSupport& support, double gamma, double half_count);

/// sum_l log2(1 + (P/sigma^2) e_l) over eigenvalues above 1e-12.
double capacity_bound_eigen(const EigenSpectrum& spectrum, const SnrPoint& snr);

/// ln(rho) / (2 pi^2), clamped to zero for rho <= 1.
double dof_correction(double snr_ratio);

double capacity_bound_closed_form(const AngularSupport& support, double delta, const SnrPoint& snr,
                                  Bounce bounce);

/// Normalized DoF envelope |Omega| Delta + M ln(2 pi |Omega| Delta) f(rho).
double dof_envelope(const AngularSupport& support, double gamma, double half_count, const SnrPoint& snr);

double diversity_limits(const AngularSupport& tx_support, const AngularSupport& rx_support, double gamma_t,
                        double gamma_r, Bounce bounce);

struct CapacitySweepResult {
  double gamma = 0.0;
  int antennas = 0;
  double snr_db = 0.0;
  double mean_mi_equal_power = 0.0;
  double mean_capacity_wf = 0.0;
  double c0 = 0.0;
  double ci_mi = 0.0;
  double ci_cap = 0.0;
  double dof_limit = 0.0;
  int trials = 0;
  /// Realizations where the waterfilling capacity fell below the
  /// equal-power mutual information.
  int dominance_violations = 0;

  double mi_norm() const { return mean_mi_equal_power / c0; }
  double cap_norm() const { return mean_capacity_wf / c0; }
};

struct SweepSpec {
  AngularSupport tx_support;
  AngularSupport rx_support;
  std::vector<double> gammas;  // Gamma_t = Gamma_r
  std::vector<int> antennas;   // odd counts 2L+1
  std::vector<double> snr_db;
  int grid_k = 512;
  int trials = 500;
  std::uint64_t seed = 1;
  Bounce bounce = Bounce::kMulti;
  int workers = 1;
  int eta_reference_half_count = kEtaReferenceHalfCount;
};

/// Per-trial channel of the largest array, reused (as centered sub-arrays)
/// for every smaller array and every SNR. Results sorted by
/// (gamma, antennas, snr_db) and independent of the worker count.
std::vector<CapacitySweepResult> ergodic_sweep(const SweepSpec& spec);

/// Channel sampler for sweeps: eta (S_r A_r)^H G (S_t A_t) per field block,
/// drawing G from the same streams sample_field uses, so a sample equals
/// assemble_channel(sample_field(model, seed, trial), geometry, eta).
class FactoredChannel {
 public:
  FactoredChannel(const ScatterModel& model, int half_count, double eta);

  Eigen::MatrixXcd sample(std::uint64_t seed, std::uint32_t trial) const;
  int half_count() const { return half_count_; }

 private:
  struct Block {
    Eigen::MatrixXcd rx_adjoint;  // (S_r A_r)^H
    Eigen::MatrixXcd tx;          // S_t A_t
  };
  std::vector<Block> blocks_;
  int half_count_ = 0;
  double eta_ = 1.0;
};

}  // namespace colscat
