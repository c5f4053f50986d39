// SPDX-License-Identifier: Apache-2.0
#include "colscat/channel.hpp"

#include <cmath>
#include <numbers>

#include "colscat/error.hpp"

namespace colscat {

void ArrayGeometry::validate() const {
  if (half_count < 0) throw Error("array half count must be nonnegative");
  if (grid_k < 1) throw Error("grid K must be positive");
  if (antennas() > 2 * grid_k + 1) {
    throw Error("array of " + std::to_string(antennas()) + " antennas exceeds grid size 2K+1 = " +
                std::to_string(2 * grid_k + 1));
  }
}

Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geometry, std::span<const int> nodes) {
  const auto rows = static_cast<Eigen::Index>(nodes.size());
  const int l = geometry.half_count;
  const long period = 2L * geometry.grid_k;
  Eigen::MatrixXcd a(rows, geometry.antennas());
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int m = -l; m <= l; ++m) {
      // Phase -pi k m / K reduced exactly over the integer period 2K.
      long turns = (static_cast<long>(nodes[r]) * m) % period;
      if (turns < 0) turns += period;
      const double phase = -std::numbers::pi * static_cast<double>(turns) / geometry.grid_k;
      a(r, m + l) = std::polar(1.0, phase);
    }
  }
  return a;
}

Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geometry, ArraySide side, const ScatterField& field) {
  return steering_matrix(geometry, side == ArraySide::kRx ? field.rx_nodes : field.tx_nodes);
}

Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geometry) {
  std::vector<int> nodes;
  for (int k = -geometry.grid_k; k <= geometry.grid_k; ++k) nodes.push_back(k);
  return steering_matrix(geometry, nodes);
}

ChannelMatrix assemble_channel(const ScatterField& field, const ArrayGeometry& geometry, double eta) {
  geometry.validate();
  if (field.grid_k != geometry.grid_k) throw Error("field grid K does not match array geometry");
  if (field.values.rows() != static_cast<Eigen::Index>(field.rx_nodes.size()) ||
      field.values.cols() != static_cast<Eigen::Index>(field.tx_nodes.size())) {
    throw Error("field values do not match its node lists");
  }
  const auto ar = steering_matrix(geometry, ArraySide::kRx, field);
  const auto at = steering_matrix(geometry, ArraySide::kTx, field);
  ChannelMatrix out;
  out.eta = eta;
  out.entries = eta * (ar.adjoint() * (field.values * at));
  return out;
}

namespace {

// Mean over antennas of a(m)^H R a(m) with R = S S^T, i.e. ||S a(m)||^2.
double mean_quadratic_form(const CovarianceFactor& factor, const ArrayGeometry& geometry) {
  const auto a = steering_matrix(geometry, factor.nodes);
  const Eigen::MatrixXcd sa = factor.sqrt_factor.cast<std::complex<double>>() * a;
  return sa.squaredNorm() / geometry.antennas();
}

}  // namespace

double calibrate_eta(const ScatterModel& model, int reference_half_count) {
  const ArrayGeometry ref{reference_half_count, model.config.grid_k};
  if (reference_half_count < 0) throw Error("reference half count must be nonnegative");
  double power = 0.0;
  for (const auto& blk : model.blocks) {
    power += mean_quadratic_form(blk.rx, ref) * mean_quadratic_form(blk.tx, ref);
  }
  if (!(power > 0.0) || !std::isfinite(power)) throw Error("zero expected channel power");
  return 1.0 / std::sqrt(power);
}

double calibrate_eta(const ScatterConfig& config, int reference_half_count) {
  return calibrate_eta(make_scatter_model(config), reference_half_count);
}

double estimate_eta_empirical(const ScatterModel& model, int reference_half_count, int trials,
                              std::uint64_t seed) {
  if (trials < 1) throw Error("empirical eta needs at least one trial");
  const ArrayGeometry ref{reference_half_count, model.config.grid_k};
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto field = sample_field(model, seed, static_cast<std::uint32_t>(t));
    acc += assemble_channel(field, ref, 1.0).entries.squaredNorm();
  }
  const double mean_power = acc / trials / (static_cast<double>(ref.antennas()) * ref.antennas());
  if (!(mean_power > 0.0)) throw Error("zero expected channel power");
  return 1.0 / std::sqrt(mean_power);
}

}  // namespace colscat
