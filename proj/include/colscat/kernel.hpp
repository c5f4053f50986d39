// SPDX-License-Identifier: Apache-2.0
//
// Nystrom discretization of the sinc concentration operator
//
//   (T f)(t) = \int_A W sinc(W (t - s)) f(s) ds,   sinc(x) = sin(pi x) / (pi x),
//
// on a union of intervals A, plus the asymptotic eigenvalue-counting law and
// the expansion of one prolate basis in another of wider bandwidth.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "colscat/support.hpp"

namespace colscat {

/// sin(pi x) / (pi x) with sinc(0) = 1.
double sinc(double x);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

inline constexpr int kDefaultPointsPerLobe = 16;
inline constexpr int kMinPointsPerLobe = 8;
inline constexpr int kMinPointsPerInterval = 32;

struct KernelSpec {
  AngularSupport support;
  double bandwidth = 1.0;
  /// Quadrature nodes per unit length of angle.
  int grid_points_per_unit = 0;

  /// 16 nodes per 1/W, the default resolution.
  static KernelSpec with_default_resolution(AngularSupport support, double bandwidth);
  /// Spec for `bandwidth` on the grid of `resolution_bandwidth` (so two
  /// spectra share nodes).
  static KernelSpec on_grid_of(AngularSupport support, double bandwidth, double resolution_bandwidth);

  /// Throws "empty support" / "under-resolved kernel".
  void validate() const;
};

/// Per-interval Gauss-Legendre rule; `interval_offsets[i]` is the index of
/// the first node of interval i (size M + 1).
struct QuadratureGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<std::size_t> interval_offsets;

  std::size_t size() const { return nodes.size(); }
  bool operator==(const QuadratureGrid&) const = default;
};

QuadratureGrid quadrature_grid(const KernelSpec& spec);

struct KernelMatrix {
  Eigen::MatrixXd matrix;
  QuadratureGrid grid;
};

/// K_ij = sqrt(w_i w_j) W sinc(W (t_i - t_j)).
KernelMatrix build_kernel_matrix(const KernelSpec& spec);
Eigen::MatrixXd build_kernel_matrix(std::span<const double> nodes, std::span<const double> weights,
                                    double bandwidth);

/// Eigenpairs of the symmetric Nystrom matrix, descending. Columns of
/// `eigenvectors` are orthonormal in the Euclidean sense, which is the
/// quadrature inner product on eigenfunction samples v_i / sqrt(w_i).
struct EigenSpectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  QuadratureGrid grid;
  KernelSpec spec;

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  std::size_t count_above(double threshold) const;
  double trace() const { return eigenvalues.sum(); }
  /// Eigenfunction samples at the quadrature nodes, unit norm on A.
  Eigen::MatrixXd eigenfunction_samples() const;
};

inline constexpr double kEigenvalueTolerance = 1e-8;

EigenSpectrum eigendecompose(const KernelSpec& spec);

/// |A| W + (M / pi^2) ln((1 - x) / x) ln(2 pi |A| W).
double landau_widom_count(const AngularSupport& support, double bandwidth, double x);

/// Root in (0, 0.5) of |A| W + (M / pi^2) ln(eps / (1 - eps)) ln(2 pi |A| W).
double epsilon_transition(const AngularSupport& support, double bandwidth);

/// Smallest N with sum_{n<N} lambda_n >= fraction * sum lambda_n.
std::size_t spectral_mass_truncation(const EigenSpectrum& spectrum, double fraction = 0.9999);

/// c(m, n) expands the coarse basis function phi_m into the fine functions
/// psi_n: phi_m = sum_n c(m, n) psi_n on the real line.
struct CrossExpansion {
  Eigen::MatrixXd coefficients;
  Eigen::VectorXd fine_eigenvalues;    // lambda_n, n < N
  Eigen::VectorXd coarse_eigenvalues;  // gamma_m, m < N

  struct Residuals {
    double orthonormality = 0.0;  // max |sum_n c(m1,n) c(m2,n) - delta|
    double weighted = 0.0;        // max |sum_n lambda_n c(m1,n) c(m2,n) - gamma delta|
  };
  /// Residuals over rows m1, m2 < rows.
  Residuals residuals(std::size_t rows) const;
};

CrossExpansion cross_expansion_coefficients(const EigenSpectrum& fine, const EigenSpectrum& coarse,
                                            std::size_t truncation);

}  // namespace colscat
