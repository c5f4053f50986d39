// SPDX-License-Identifier: Apache-2.0
#include "colscat/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "colscat/error.hpp"

namespace colscat {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw Error("Gauss-Legendre rule needs at least one node");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

KernelSpec KernelSpec::with_default_resolution(AngularSupport support, double bandwidth) {
  return on_grid_of(std::move(support), bandwidth, bandwidth);
}

KernelSpec KernelSpec::on_grid_of(AngularSupport support, double bandwidth, double resolution_bandwidth) {
  KernelSpec spec;
  spec.support = std::move(support);
  spec.bandwidth = bandwidth;
  spec.grid_points_per_unit =
      static_cast<int>(std::ceil(kDefaultPointsPerLobe * std::max(bandwidth, resolution_bandwidth)));
  return spec;
}

void KernelSpec::validate() const {
  if (support.empty() || !(support.measure() > 0.0)) throw Error("empty support");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw Error("kernel bandwidth must be positive");
  if (grid_points_per_unit < kMinPointsPerLobe * bandwidth) {
    std::ostringstream msg;
    msg << "under-resolved kernel: " << grid_points_per_unit << " points per unit < "
        << kMinPointsPerLobe << " * W = " << kMinPointsPerLobe * bandwidth;
    throw Error(msg.str());
  }
}

QuadratureGrid quadrature_grid(const KernelSpec& spec) {
  spec.validate();
  QuadratureGrid grid;
  std::vector<double> x;
  std::vector<double> w;
  for (const auto& iv : spec.support.intervals()) {
    grid.interval_offsets.push_back(grid.nodes.size());
    const int n = std::max(kMinPointsPerInterval,
                           static_cast<int>(std::ceil(spec.grid_points_per_unit * iv.length() - 1e-9)));
    gauss_legendre(n, x, w);
    const double mid = 0.5 * (iv.lo + iv.hi);
    const double half = 0.5 * iv.length();
    for (int i = 0; i < n; ++i) {
      grid.nodes.push_back(mid + half * x[i]);
      grid.weights.push_back(half * w[i]);
    }
  }
  grid.interval_offsets.push_back(grid.nodes.size());
  return grid;
}

Eigen::MatrixXd build_kernel_matrix(std::span<const double> nodes, std::span<const double> weights,
                                    double bandwidth) {
  if (nodes.empty()) throw Error("empty support");
  if (nodes.size() != weights.size()) throw Error("node and weight counts differ");
  const auto n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double sj = std::sqrt(weights[j]);
    k(j, j) = weights[j] * bandwidth;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = std::sqrt(weights[i]) * sj * bandwidth * sinc(bandwidth * (nodes[i] - nodes[j]));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

KernelMatrix build_kernel_matrix(const KernelSpec& spec) {
  KernelMatrix out;
  out.grid = quadrature_grid(spec);
  out.matrix = build_kernel_matrix(out.grid.nodes, out.grid.weights, spec.bandwidth);
  return out;
}

std::size_t EigenSpectrum::count_above(double threshold) const {
  return static_cast<std::size_t>((eigenvalues.array() > threshold).count());
}

Eigen::MatrixXd EigenSpectrum::eigenfunction_samples() const {
  Eigen::VectorXd inv_sqrt_w(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) inv_sqrt_w[static_cast<Eigen::Index>(i)] = 1.0 / std::sqrt(grid.weights[i]);
  return inv_sqrt_w.asDiagonal() * eigenvectors;
}

EigenSpectrum eigendecompose(const KernelSpec& spec) {
  auto km = build_kernel_matrix(spec);
  const Eigen::Index n = km.matrix.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(km.matrix);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigensolver did not converge (n=" << n << ", frobenius=" << km.matrix.norm()
        << ", trace=" << km.matrix.trace() << ")";
    throw Error(msg.str());
  }
  // Eigen returns ascending order; flip to descending.
  EigenSpectrum out;
  out.spec = spec;
  out.grid = std::move(km.grid);
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index i = 0; i < n; ++i) {
    double& v = out.eigenvalues[i];
    if (v <= -kEigenvalueTolerance || v >= 1.0 + kEigenvalueTolerance) {
      std::ostringstream msg;
      msg << "eigenvalue " << v << " at index " << i << " outside [0, 1] beyond tolerance";
      throw Error(msg.str());
    }
    v = std::clamp(v, 0.0, 1.0);
    auto col = out.eigenvectors.col(i);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col[arg] < 0.0) col = -col;
  }
  return out;
}

double landau_widom_count(const AngularSupport& support, double bandwidth, double x) {
  if (!(x > 0.0 && x < 1.0)) throw std::domain_error("threshold x must lie in (0, 1)");
  const double aw = support.measure() * bandwidth;
  if (aw < 1.0) throw Error("landau_widom_count requires |A| W >= 1");
  const double m = static_cast<double>(support.cluster_count());
  return aw + m / (std::numbers::pi * std::numbers::pi) * std::log((1.0 - x) / x) *
                  std::log(2.0 * std::numbers::pi * aw);
}

double epsilon_transition(const AngularSupport& support, double bandwidth) {
  const double aw = support.measure() * bandwidth;
  const double m = static_cast<double>(support.cluster_count());
  const double slope = m / (std::numbers::pi * std::numbers::pi) * std::log(2.0 * std::numbers::pi * aw);
  // Evaluated in log(eps) to keep resolution down to 1e-300.
  auto f = [&](double log_eps) { return aw + slope * (log_eps - std::log1p(-std::exp(log_eps))); };
  double lo = std::log(1e-300);
  double hi = std::log(0.5);
  if (!(aw > 1.0) || !(f(lo) < 0.0) || !(f(hi) > 0.0)) {
    throw Error("transition undefined: no sign change on (1e-300, 0.5)");
  }
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
    if (std::exp(hi) - std::exp(lo) <= 1e-12 * std::exp(hi)) break;
  }
  return std::exp(0.5 * (lo + hi));
}

std::size_t spectral_mass_truncation(const EigenSpectrum& spectrum, double fraction) {
  const double target = fraction * spectrum.trace();
  double acc = 0.0;
  for (std::size_t n = 0; n < spectrum.size(); ++n) {
    acc += spectrum.eigenvalues[static_cast<Eigen::Index>(n)];
    if (acc >= target) return n + 1;
  }
  return spectrum.size();
}

CrossExpansion::Residuals CrossExpansion::residuals(std::size_t rows) const {
  const auto r = static_cast<Eigen::Index>(std::min<std::size_t>(rows, coefficients.rows()));
  const auto c = coefficients.topRows(r);
  const Eigen::MatrixXd gram = c * c.transpose();
  const Eigen::MatrixXd weighted = c * fine_eigenvalues.asDiagonal() * c.transpose();
  Residuals out;
  out.orthonormality = (gram - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff();
  out.weighted =
      (weighted - Eigen::MatrixXd(coarse_eigenvalues.head(r).asDiagonal())).cwiseAbs().maxCoeff();
  return out;
}

CrossExpansion cross_expansion_coefficients(const EigenSpectrum& fine, const EigenSpectrum& coarse,
                                            std::size_t truncation) {
  if (!(fine.spec.support == coarse.spec.support)) throw Error("mismatched supports");
  if (!(fine.grid == coarse.grid)) {
    throw Error("mismatched supports: spectra must be discretized on the same quadrature grid");
  }
  if (coarse.spec.bandwidth > fine.spec.bandwidth) {
    throw Error("coarse bandwidth must not exceed fine bandwidth");
  }
  if (truncation == 0 || truncation > fine.size() || truncation > coarse.size()) {
    throw Error("truncation exceeds spectrum size");
  }
  const auto n = static_cast<Eigen::Index>(truncation);
  CrossExpansion out;
  out.fine_eigenvalues = fine.eigenvalues.head(n);
  out.coarse_eigenvalues = coarse.eigenvalues.head(n);
  if ((out.fine_eigenvalues.array() <= 0.0).any()) {
    throw Error("truncation includes a null fine eigenvalue");
  }
  // Nystrom vectors are unit-norm on A; the prolate functions are unit-norm
  // on the real line, so psi_n|A = sqrt(lambda_n) v_n and phi_m|A = sqrt(gamma_m) u_m.
  const Eigen::MatrixXd overlap = coarse.eigenvectors.leftCols(n).transpose() * fine.eigenvectors.leftCols(n);
  const Eigen::VectorXd row_scale = out.coarse_eigenvalues.cwiseSqrt();
  const Eigen::VectorXd col_scale = out.fine_eigenvalues.cwiseSqrt().cwiseInverse();
  out.coefficients = row_scale.asDiagonal() * overlap * col_scale.asDiagonal();
  return out;
}

}  // namespace colscat
