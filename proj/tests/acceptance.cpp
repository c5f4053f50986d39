// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "colscat/capacity.hpp"
#include "colscat/channel.hpp"
#include "colscat/error.hpp"
#include "colscat/kernel.hpp"
#include "colscat/run.hpp"
#include "colscat/scatter.hpp"
#include "oracles.hpp"

using namespace colscat;

namespace {

// Pinned tolerances.
constexpr double kPlateauBand = 2.0;
constexpr double kCrossExpansionTol = 1e-3;
constexpr int kWhitenessTrials = 4000;
constexpr int kWhitenessGridK = 256;
constexpr int kAssemblyFields = 100;
constexpr double kAssemblyTol = 1e-12;
constexpr int kWaterfillInstances = 1000;
constexpr double kKktTol = 1e-9;
constexpr double kEnumerationTol = 1e-12;
constexpr int kSaturationGridK = 512;
constexpr int kSaturationTrials = 500;
constexpr double kFlatGrowth = 0.10;
constexpr double kGrowingGrowth = 0.20;
constexpr double kSaturationBudgetSeconds = 900.0;
constexpr double kEnvelopeCiMultiple = 3.0;
constexpr double kBoundAgreement = 0.15;

const AngularSupport kOmega = AngularSupport::parse("-1:-0.7,-0.15:0.15,0.7:1");

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<EigenSpectrum>& spectra() {
  static std::vector<EigenSpectrum> s = [] {
    std::vector<EigenSpectrum> out;
    for (double w : {10.0, 20.0, 40.0}) out.push_back(eigendecompose(KernelSpec::with_default_resolution(kOmega, w)));
    return out;
  }();
  return s;
}

Outcome plateau_law() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::ostringstream counts;
  for (const auto& s : spectra()) {
    const double aw = kOmega.measure() * s.spec.bandwidth;
    const auto c = s.count_above(0.5);
    worst = std::max(worst, std::abs(static_cast<double>(c) - aw));
    counts << " W=" << s.spec.bandwidth << ":" << c;
  }
  const double t = seconds_since(t0);
  return {worst <= kPlateauBand && t < 30.0,
          "counts" + counts.str() + ", max deviation " + fmt("%.3g", worst) + " (<= 2), " + fmt("%.2f", t) +
              " s (< 30 s)"};
}

Outcome transition_shape() {
  const double m = static_cast<double>(kOmega.cluster_count());
  double worst_ratio = 0.0;
  std::ostringstream d;
  for (const auto& s : spectra()) {
    for (double x : {0.1, 0.9}) {
      const double band = std::max(2.0, 3.0 * m * std::abs(std::log((1.0 - x) / x)));
      const double dev =
          std::abs(static_cast<double>(s.count_above(x)) - landau_widom_count(kOmega, s.spec.bandwidth, x));
      worst_ratio = std::max(worst_ratio, dev / band);
      d << " |Omega|W=" << kOmega.measure() * s.spec.bandwidth << ",x=" << x << ":" << fmt("%.3g", dev);
    }
  }
  return {worst_ratio <= 1.0, "deviations" + d.str() + " (band " +
                                  fmt("%.4g", std::max(2.0, 3.0 * m * std::log(9.0))) + ")"};
}

Outcome cross_expansion() {
  const auto& fine = spectra()[1];
  const auto coarse = eigendecompose(KernelSpec::on_grid_of(kOmega, 10.0, 20.0));
  const auto n = spectral_mass_truncation(fine);
  const auto rows = coarse.count_above(0.5);
  const auto r = cross_expansion_coefficients(fine, coarse, n).residuals(rows);
  return {r.orthonormality < kCrossExpansionTol && r.weighted < kCrossExpansionTol,
          "W1=20, W2=10, N=" + std::to_string(n) + ", rows=" + std::to_string(rows) + ": orthonormality " +
              fmt("%.3g", r.orthonormality) + ", weighted " + fmt("%.3g", r.weighted) + " (< 1e-3)"};
}

Outcome kl_whiteness() {
  ScatterConfig c{kOmega, kOmega, 0.1, 0.1, kWhitenessGridK, Bounce::kMulti};
  const auto r = kl_whiteness_check(c, kWhitenessTrials, 2026);
  return {r.passed, std::to_string(r.coefficients) + " coefficients, " + std::to_string(r.trials) +
                        " trials, K=" + std::to_string(kWhitenessGridK) + ": mean " + fmt("%.3g", r.max_abs_mean) +
                        ", offdiag " + fmt("%.3g", r.max_abs_offdiagonal) + ", diag " +
                        fmt("%.3g", r.max_diagonal_deviation) + ", pseudo " + fmt("%.3g", r.max_abs_pseudo_covariance) +
                        " (< " + fmt("%.3g", r.threshold) + ")"};
}

Outcome assembly_oracle() {
  const std::vector<double> gammas{1.0 / 16.0, 0.1, 0.25};
  double worst = 0.0;
  for (int i = 0; i < kAssemblyFields; ++i) {
    ScatterConfig c{kOmega, kOmega, gammas[i % 3], gammas[(i / 3) % 3], 16, i % 2 ? Bounce::kSingle : Bounce::kMulti};
    const auto f = sample_field(c, 77, static_cast<std::uint32_t>(i));
    const auto ch = assemble_channel(f, ArrayGeometry{2, 16}, 1.0);
    const auto ref = oracle::quadruple_sum_channel(f.values, f.rx_nodes, f.tx_nodes, 16, 2, 1.0);
    worst = std::max(worst, (ch.entries - ref).norm() / ref.norm());
  }
  return {worst <= kAssemblyTol,
          std::to_string(kAssemblyFields) + " fields, K=16, L=2: max relative error " + fmt("%.3g", worst) + " (<= 1e-12)"};
}

std::vector<CapacitySweepResult>& saturation_sweep(double* wall = nullptr) {
  static double seconds = 0.0;
  static std::vector<CapacitySweepResult> rows = [] {
    SweepSpec s;
    s.tx_support = s.rx_support = kOmega;
    s.gammas = {0.005, 0.1};
    s.antennas = {61, 99};
    s.snr_db = {0.0, 15.0, 30.0, 45.0};
    s.grid_k = kSaturationGridK;
    s.trials = kSaturationTrials;
    s.seed = 1;
    const auto t0 = std::chrono::steady_clock::now();
    auto out = ergodic_sweep(s);
    seconds = seconds_since(t0);
    return out;
  }();
  if (wall) *wall = seconds;
  return rows;
}

Outcome waterfilling() {
  std::mt19937_64 gen(6);
  std::lognormal_distribution<double> gain(0.0, 2.5);
  std::uniform_real_distribution<double> pw(1e-3, 1e3);
  std::uniform_int_distribution<int> small(1, 12);
  std::uniform_int_distribution<int> large(13, 99);
  double worst_kkt = 0.0;
  double worst_enum = 0.0;
  int enumerated = 0;
  for (int i = 0; i < kWaterfillInstances; ++i) {
    std::vector<double> g(static_cast<std::size_t>(i % 2 ? small(gen) : large(gen)));
    for (auto& v : g) v = gain(gen);
    const double p = pw(gen);
    const auto r = waterfill(g, p);
    worst_kkt = std::max(worst_kkt, waterfill_kkt_residual(g, p, r));
    if (g.size() <= 12) {
      const auto ex = oracle::enumerate_waterfill(g, p);
      worst_enum = std::max(worst_enum, std::abs(r.capacity_bits - ex.capacity_bits) / std::max(1.0, ex.capacity_bits));
      ++enumerated;
    }
  }
  int violations = 0;
  long realizations = 0;
  for (const auto& r : saturation_sweep()) {
    violations += r.dominance_violations;
    realizations += r.trials;
  }
  return {worst_kkt < kKktTol && worst_enum <= kEnumerationTol && violations == 0,
          "KKT " + fmt("%.3g", worst_kkt) + " (< 1e-9) over " + std::to_string(kWaterfillInstances) +
              " instances, enumeration gap " + fmt("%.3g", worst_enum) + " over " + std::to_string(enumerated) +
              ", dominance violations " + std::to_string(violations) + "/" + std::to_string(realizations)};
}

const CapacitySweepResult& pick(double gamma, int antennas, double snr) {
  for (const auto& r : saturation_sweep()) {
    if (r.gamma == gamma && r.antennas == antennas && r.snr_db == snr) return r;
  }
  throw Error("missing sweep point");
}

Outcome saturation() {
  double wall = 0.0;
  saturation_sweep(&wall);
  const double flat = pick(0.1, 99, 30.0).cap_norm() / pick(0.1, 61, 30.0).cap_norm() - 1.0;
  const double grow = pick(0.005, 99, 30.0).cap_norm() / pick(0.005, 61, 30.0).cap_norm() - 1.0;
  return {std::abs(flat) < kFlatGrowth && grow > kGrowingGrowth && wall < kSaturationBudgetSeconds,
          "K=512, 500 trials, 30 dB, 61->99 antennas: Gamma=0.1 " + fmt("%+.2f%%", 100 * flat) + " (|.| < 10%), Gamma=0.005 " +
              fmt("%+.2f%%", 100 * grow) + " (> 20%), " + fmt("%.1f", wall) + " s"};
}

Outcome envelope() {
  int points = 0;
  int violations = 0;
  double worst = -1e300;
  std::string where;
  for (const auto& r : saturation_sweep()) {
    const double l = (r.antennas - 1) / 2.0;
    if (dof_limit(kOmega, r.gamma, l) <= 1.0) continue;
    ++points;
    const double bound = dof_envelope(kOmega, r.gamma, l, SnrPoint::from_db(r.snr_db)) +
                         kEnvelopeCiMultiple * r.ci_cap / r.c0;
    const double excess = r.cap_norm() - bound;
    if (excess > 0.0) ++violations;
    if (excess > worst) {
      worst = excess;
      where = "Gamma=" + fmt("%g", r.gamma) + ", " + std::to_string(r.antennas) + " antennas, " + fmt("%g", r.snr_db) +
              " dB: C/C0=" + fmt("%.3g", r.cap_norm()) + " vs " + fmt("%.3g", bound);
    }
  }
  return {violations == 0, std::to_string(violations) + "/" + std::to_string(points) +
                               " points above the envelope; worst " + where};
}

Outcome reproducibility() {
  const auto dir = std::filesystem::temp_directory_path() / "colscat_acceptance";
  std::filesystem::create_directories(dir);
  std::vector<std::string> base{"--grid-k", "256", "--trials", "20", "--seed", "11", "--antennas", "1:41"};
  auto with = [&](const char* workers, const std::filesystem::path& out) {
    auto a = base;
    a.insert(a.end(), {"--workers", workers, "--output", out.string()});
    return parse_config(a);
  };
  run(with("1", dir / "w1.csv"));
  run(with("8", dir / "w8.csv"));
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };
  const auto a = slurp(dir / "w1.csv");
  const auto b = slurp(dir / "w8.csv");
  std::filesystem::remove_all(dir);
  return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, workers 1 vs 8 " + (a == b ? "identical" : "differ")};
}

Outcome bound_agreement() {
  double worst = 0.0;
  for (const auto& s : spectra()) {
    for (double db : {15.0, 30.0, 45.0}) {
      const auto snr = SnrPoint::from_db(db);
      const double e = capacity_bound_eigen(s, snr);
      const double c = capacity_bound_closed_form(kOmega, s.spec.bandwidth, snr, Bounce::kMulti);
      worst = std::max(worst, std::abs(e - c) / c);
    }
  }
  return {worst < kBoundAgreement,
          "|Omega|Delta in {9, 18, 36}, 15/30/45 dB: max relative gap " + fmt("%.3g", worst) + " (< 0.15)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"eigenvalue plateau count", plateau_law},
      {"counting-law transition shape", transition_shape},
      {"cross-expansion identities", cross_expansion},
      {"KL coefficient whiteness", kl_whiteness},
      {"channel assembly oracle", assembly_oracle},
      {"waterfilling optimality", waterfilling},
      {"capacity saturation", saturation},
      {"DoF envelope", envelope},
      {"worker reproducibility", reproducibility},
      {"eigen-sum vs closed-form bound", bound_agreement},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.passed) ++failed;
    std::printf("%s %2zu %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed;
}
