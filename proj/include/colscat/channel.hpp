// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "colscat/scatter.hpp"

namespace colscat {

/// Linear array of 2L+1 half-wavelength-spaced antennas, indices -L..L.
struct ArrayGeometry {
  int half_count = 0;
  int grid_k = 512;

  int antennas() const { return 2 * half_count + 1; }
  void validate() const;
};

enum class ArraySide { kTx, kRx };

struct ChannelMatrix {
  Eigen::MatrixXcd entries;
  double eta = 1.0;
};

/// a(k, m) = exp(-j 2 pi (k/K) (m/2)) for the given grid nodes (rows) and
/// antennas m = -L..L (columns).
Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geometry, std::span<const int> nodes);
/// Rows restricted to the field's nodes on the chosen side.
Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geometry, ArraySide side, const ScatterField& field);
/// Rows over the full grid k = -K..K.
Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geometry);

/// eta * A_r^H H A_t.
ChannelMatrix assemble_channel(const ScatterField& field, const ArrayGeometry& geometry, double eta);

inline constexpr int kEtaReferenceHalfCount = 49;

/// eta such that the mean of E{|c_mn|^2} over m, n in -L'..L' is one,
/// evaluated in closed form from the covariance factors.
double calibrate_eta(const ScatterModel& model, int reference_half_count = kEtaReferenceHalfCount);
double calibrate_eta(const ScatterConfig& config, int reference_half_count = kEtaReferenceHalfCount);

/// Monte Carlo estimate of the same eta from `trials` sampled channels.
double estimate_eta_empirical(const ScatterModel& model, int reference_half_count, int trials,
                              std::uint64_t seed);

}  // namespace colscat
