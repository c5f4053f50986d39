// SPDX-License-Identifier: Apache-2.0
//
// Colored scattering response: a zero-mean proper complex Gaussian field on
// the angular grid alpha = k / K with separable ACF
//
//   E{h(k1,l1) h*(k2,l2)} = R_r(k1,k2) R_t(l1,l2),
//   R(i,j) = (1/K) (1/gamma) sinc((alpha_i - alpha_j) / gamma),
//
// supported on Omega_r x Omega_t (multi-bounce) or on the per-cluster blocks
// Omega_{r,i} x Omega_{t,i} (single-bounce).
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "colscat/rng.hpp"
#include "colscat/support.hpp"

namespace colscat {

enum class Bounce { kMulti, kSingle };

const char* to_string(Bounce bounce);
Bounce parse_bounce(std::string_view text);

struct ScatterConfig {
  AngularSupport tx_support;
  AngularSupport rx_support;
  double gamma_t = 0.1;
  double gamma_r = 0.1;
  int grid_k = 512;
  Bounce bounce = Bounce::kMulti;

  void validate() const;
};

/// (1/gamma) sinc(delta / gamma).
double acf_value(double gamma, double delta_angle);

inline constexpr double kClipRelativeThreshold = 1e-10;
inline constexpr double kMaxClippedFraction = 1e-3;

/// Symmetric PSD square root S of the sampled ACF matrix, S S^T = R.
struct CovarianceFactor {
  std::vector<int> nodes;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd sqrt_factor;
  Eigen::VectorXd eigenvalues;   // descending, after clipping
  Eigen::MatrixXd eigenvectors;  // matching columns
  double clipped_mass = 0.0;

  /// Number of eigenvalues above `threshold`.
  std::size_t rank(double threshold) const;
};

CovarianceFactor covariance_factor(const AngularSupport& support, double gamma, int grid_k);
CovarianceFactor covariance_factor(std::span<const int> nodes, double gamma, int grid_k);

/// Field values on (rx node, tx node); entries outside `mask` are zero.
struct ScatterField {
  int grid_k = 0;
  std::vector<int> rx_nodes;
  std::vector<int> tx_nodes;
  Eigen::MatrixXcd values;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask;

  double rx_cosine(Eigen::Index r) const { return static_cast<double>(rx_nodes[r]) / grid_k; }
  double tx_cosine(Eigen::Index c) const { return static_cast<double>(tx_nodes[c]) / grid_k; }
};

/// One independently-drawn block of the field: rows [row, row + rows) and
/// cols [col, col + cols) of the global node lists.
struct FieldBlock {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  CovarianceFactor rx;
  CovarianceFactor tx;
};

/// Precomputed covariance factors for a configuration. Building it is the
/// expensive step; sampling from it is cheap and pure.
struct ScatterModel {
  ScatterConfig config;
  std::vector<int> rx_nodes;
  std::vector<int> tx_nodes;
  std::vector<FieldBlock> blocks;  // one for multi-bounce, M for single-bounce
};

ScatterModel make_scatter_model(const ScatterConfig& config);

/// Block b of trial t draws its i.i.d. matrix from stream {seed, t, b}.
ScatterField sample_field(const ScatterModel& model, std::uint64_t seed, std::uint32_t trial);
ScatterField sample_field(const ScatterConfig& config, std::uint64_t seed, std::uint32_t trial = 0);

/// Eigenbasis used to project fields onto KL coefficients, one pair of axes
/// per field block.
struct KlBasis {
  std::vector<CovarianceFactor> rx;
  std::vector<CovarianceFactor> tx;
};

/// Eigenbasis of the model's own covariances.
KlBasis kl_basis(const ScatterModel& model);

struct KlWhitenessReport {
  std::size_t coefficients = 0;  // total projected coefficients per trial
  int trials = 0;
  double threshold = 0.0;        // 5 / sqrt(trials)
  double max_abs_mean = 0.0;
  double max_abs_offdiagonal = 0.0;
  double max_diagonal_deviation = 0.0;
  double max_abs_pseudo_covariance = 0.0;
  bool passed = false;
};

/// Projects `trials` sampled fields onto the top modes (eigenvalue > 0.5) of
/// each axis and tests mean, covariance and properness at 5 sigma.
KlWhitenessReport kl_whiteness_check(const ScatterConfig& config, int trials, std::uint64_t seed);
/// Same test against an arbitrary basis (negative controls).
KlWhitenessReport kl_whiteness_check(const ScatterModel& model, const KlBasis& basis, int trials,
                                     std::uint64_t seed);

/// Little-endian dump:
///   "CSFD" | u32 version=1 | i32 K | u32 rows | u32 cols |
///   i32 rx_nodes[rows] | i32 tx_nodes[cols] | u8 mask[rows*cols] |
///   f32 (re, im)[rows*cols]
/// with the mask and values in row-major (rx, tx) order.
void write_field_dump(const std::filesystem::path& path, const ScatterField& field);
ScatterField read_field_dump(const std::filesystem::path& path);

}  // namespace colscat
