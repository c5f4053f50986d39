// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner behind the command-line tool.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "colscat/capacity.hpp"
#include "colscat/support.hpp"

namespace colscat {

inline constexpr const char* kSeedEnvVar = "COLORED_SCATTER_SEED";
inline constexpr int kPaperGridK = 2048;
inline constexpr int kPaperTrials = 10000;

struct RunConfig {
  AngularSupport omega = AngularSupport({{-1.0, -0.7}, {-0.15, 0.15}, {0.7, 1.0}});
  std::vector<double> gammas{0.005, 0.02, 0.1};
  std::vector<double> snr_db{0.0, 15.0, 30.0, 45.0};
  std::vector<int> antennas = default_antennas();
  int grid_k = 512;
  int trials = 500;
  std::uint64_t seed = 1;
  Bounce bounce = Bounce::kMulti;
  std::filesystem::path output = "capacity.csv";
  int workers = 1;
  bool paper_scale = false;
  bool validate_only = false;
  int kernel_points_per_lobe = kDefaultPointsPerLobe;

  static std::vector<int> default_antennas();

  /// Throws Error when an invariant is violated.
  void check() const;

  /// Settings that determine results, as flat "key=value" lines in a fixed
  /// order (workers and output path excluded).
  std::string canonical_text() const;
  /// FNV-1a 64 of canonical_text(), hex.
  std::string hash() const;

  SweepSpec sweep_spec() const;
};

/// Parses command-line arguments (argv[0] excluded). `--config FILE` loads
/// flat key=value lines keyed by flag names; explicit flags win over the
/// file, which wins over COLORED_SCATTER_SEED for the seed.
RunConfig parse_config(const std::vector<std::string>& args);

/// Applies one key/value pair using flag-name keys (without dashes).
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

inline constexpr const char* kCsvHeader =
    "gamma,antennas,snr_db,mi_equal_power_bits,capacity_wf_bits,c0_bits,mi_norm,cap_norm,ci_mi,ci_cap,"
    "dof_limit,trials,seed";

std::string format_csv(const std::vector<CapacitySweepResult>& rows, std::uint64_t seed);

struct RunOutcome {
  std::vector<CapacitySweepResult> rows;
  std::filesystem::path csv_path;
  std::filesystem::path manifest_path;
  double wall_seconds = 0.0;
};

/// Runs the sweep, writes the CSV and `<output>.manifest`. The output is
/// opened before any computation so an unwritable path fails fast.
RunOutcome run(const RunConfig& config);

struct ValidationEntry {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;

  bool all_passed() const;
  const ValidationEntry* find(const std::string& name) const;
  std::string to_json() const;
};

/// Runs the kernel and scatter property suites on the configured support.
ValidationReport validate(const RunConfig& config);

}  // namespace colscat
