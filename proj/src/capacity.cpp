// SPDX-License-Identifier: Apache-2.0
#include "colscat/capacity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <thread>

#include "colscat/error.hpp"

namespace colscat {

SnrPoint SnrPoint::from_db(double snr_db, double noise_var) {
  return {noise_var * std::pow(10.0, snr_db / 10.0), noise_var};
}

double SnrPoint::snr_db() const { return 10.0 * std::log10(ratio()); }

WaterfillResult waterfill(std::span<const double> gains, double power) {
  if (!(power > 0.0)) throw Error("waterfilling power must be positive");
  WaterfillResult out;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (gains[i] < 0.0 || !std::isfinite(gains[i])) throw Error("gains must be finite and nonnegative");
    if (gains[i] > 0.0) order.push_back(i);
  }
  if (order.empty()) return out;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });

  // Grow the active set while the next channel's floor 1/g lies below the
  // water level of the current set.
  double inv_sum = 0.0;
  double level = 0.0;
  std::size_t active = 0;
  for (std::size_t n = 0; n < order.size(); ++n) {
    const double floor = 1.0 / gains[order[n]];
    if (n > 0 && floor >= level) break;
    inv_sum += floor;
    active = n + 1;
    level = (power + inv_sum) / static_cast<double>(active);
  }
  out.water_level = level;
  out.allocation.assign(gains.size(), 0.0);
  for (std::size_t n = 0; n < active; ++n) {
    const std::size_t i = order[n];
    out.allocation[i] = std::max(0.0, level - 1.0 / gains[i]);
  }
  for (std::size_t i = 0; i < gains.size(); ++i) {
    out.capacity_bits += std::log1p(gains[i] * out.allocation[i]) / std::numbers::ln2;
  }
  return out;
}

double waterfill_kkt_residual(std::span<const double> gains, double power, const WaterfillResult& result) {
  if (result.allocation.size() != gains.size()) return std::numeric_limits<double>::infinity();
  const double mu = result.water_level;
  double total = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const double p = result.allocation[i];
    if (p < 0.0) worst = std::max(worst, -p / power);
    total += p;
    const double floor = gains[i] > 0.0 ? 1.0 / gains[i] : std::numeric_limits<double>::infinity();
    if (p > 0.0) {
      worst = std::max(worst, std::abs(p - (mu - floor)) / mu);
    } else if (std::isfinite(floor)) {
      worst = std::max(worst, std::max(0.0, mu - floor) / mu);
    }
  }
  return std::max(worst, std::abs(total - power) / power);
}

Eigen::VectorXd squared_singular_values(const Eigen::MatrixXcd& h) {
  if (!h.allFinite()) throw Error("channel has non-finite entries");
  const Eigen::MatrixXcd gram = h * h.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(gram, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("Hermitian eigensolver did not converge");
  return solver.eigenvalues().reverse().cwiseMax(0.0);
}

double mi_equal_power(const Eigen::VectorXd& s2, std::size_t antennas, const SnrPoint& snr) {
  const double per_antenna = snr.ratio() / static_cast<double>(antennas);
  double bits = 0.0;
  for (Eigen::Index i = 0; i < s2.size(); ++i) bits += std::log1p(per_antenna * s2[i]);
  return bits / std::numbers::ln2;
}

double mi_equal_power(const ChannelMatrix& channel, const SnrPoint& snr) {
  return mi_equal_power(squared_singular_values(channel.entries), static_cast<std::size_t>(channel.entries.cols()),
                        snr);
}

double capacity_full_csi(const Eigen::VectorXd& s2, const SnrPoint& snr) {
  std::vector<double> gains(s2.data(), s2.data() + s2.size());
  for (double& g : gains) g /= snr.noise_var;
  return waterfill(gains, snr.power).capacity_bits;
}

double capacity_full_csi(const ChannelMatrix& channel, const SnrPoint& snr) {
  return capacity_full_csi(squared_singular_values(channel.entries), snr);
}

double dof_limit(const AngularSupport& support, double gamma, double half_count) {
  if (!(gamma > 0.0) || half_count < 0.0) throw Error("dof_limit requires gamma > 0 and L >= 0");
  return support.measure() * std::min(half_count, 1.0 / gamma);
}

double capacity_bound_eigen(const EigenSpectrum& spectrum, const SnrPoint& snr) {
  double bits = 0.0;
  for (Eigen::Index i = 0; i < spectrum.eigenvalues.size(); ++i) {
    const double e = spectrum.eigenvalues[i];
    if (e > 1e-12) bits += std::log1p(snr.ratio() * e);
  }
  return bits / std::numbers::ln2;
}

double dof_correction(double snr_ratio) {
  return snr_ratio <= 1.0 ? 0.0 : std::log(snr_ratio) / (2.0 * std::numbers::pi * std::numbers::pi);
}

double capacity_bound_closed_form(const AngularSupport& support, double delta, const SnrPoint& snr,
                                  Bounce bounce) {
  const double aw = support.measure() * delta;
  if (!(aw > 1.0)) throw Error("closed-form bound requires |Omega| Delta > 1");
  const double two_pi = 2.0 * std::numbers::pi;
  if (bounce == Bounce::kMulti) {
    const double m = static_cast<double>(support.cluster_count());
    return (aw + m * std::log(two_pi * aw) * dof_correction(snr.ratio())) * std::log2(1.0 + snr.ratio());
  }
  const double per_cluster = snr.ratio() / static_cast<double>(support.cluster_count());
  double correction = 0.0;
  for (const auto& iv : support.intervals()) correction += std::log(two_pi * iv.length() * delta);
  return (aw + correction * dof_correction(per_cluster)) * std::log2(1.0 + per_cluster);
}

double dof_envelope(const AngularSupport& support, double gamma, double half_count, const SnrPoint& snr) {
  const double limit = dof_limit(support, gamma, half_count);
  const double m = static_cast<double>(support.cluster_count());
  return limit + m * std::log(2.0 * std::numbers::pi * limit) * dof_correction(snr.ratio());
}

double diversity_limits(const AngularSupport& tx_support, const AngularSupport& rx_support, double gamma_t,
                        double gamma_r, Bounce bounce) {
  if (!(gamma_t > 0.0 && gamma_r > 0.0)) throw Error("correlation widths must be positive");
  if (bounce == Bounce::kMulti) return tx_support.measure() * rx_support.measure() / (gamma_t * gamma_r);
  if (tx_support.cluster_count() != rx_support.cluster_count()) {
    throw Error("single-bounce scattering requires equal cluster counts at both ends");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < tx_support.cluster_count(); ++i) {
    acc += tx_support.intervals()[i].length() * rx_support.intervals()[i].length();
  }
  return acc / (gamma_t * gamma_r);
}

FactoredChannel::FactoredChannel(const ScatterModel& model, int half_count, double eta)
    : half_count_(half_count), eta_(eta) {
  const ArrayGeometry geometry{half_count, model.config.grid_k};
  geometry.validate();
  for (const auto& blk : model.blocks) {
    Block b;
    b.rx_adjoint = (blk.rx.sqrt_factor.cast<std::complex<double>>() * steering_matrix(geometry, blk.rx.nodes))
                       .adjoint();
    b.tx = blk.tx.sqrt_factor.cast<std::complex<double>>() * steering_matrix(geometry, blk.tx.nodes);
    blocks_.push_back(std::move(b));
  }
}

Eigen::MatrixXcd FactoredChannel::sample(std::uint64_t seed, std::uint32_t trial) const {
  const Eigen::Index n = 2 * half_count_ + 1;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd white;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    white.resize(blocks_[b].rx_adjoint.cols(), blocks_[b].tx.rows());
    fill_complex_gaussian({seed, trial, static_cast<std::uint32_t>(b)}, white);
    h.noalias() += blocks_[b].rx_adjoint * (white * blocks_[b].tx);
  }
  return eta_ * h;
}

namespace {

void validate_sweep(const SweepSpec& spec) {
  if (spec.gammas.empty() || spec.antennas.empty() || spec.snr_db.empty()) {
    throw Error("sweep lists must be nonempty");
  }
  if (spec.trials < 2) throw Error("ergodic sweep needs at least two trials");
  if (spec.workers < 1) throw Error("worker count must be positive");
  for (int a : spec.antennas) {
    if (a < 1 || a % 2 == 0) throw Error("antenna counts must be odd and positive");
    if (a > 2 * spec.grid_k + 1) throw Error("antenna count exceeds grid size 2K+1");
  }
}

}  // namespace

std::vector<CapacitySweepResult> ergodic_sweep(const SweepSpec& spec) {
  validate_sweep(spec);
  std::vector<double> gammas = spec.gammas;
  std::vector<int> antennas = spec.antennas;
  std::vector<double> snrs = spec.snr_db;
  std::sort(gammas.begin(), gammas.end());
  std::sort(antennas.begin(), antennas.end());
  std::sort(snrs.begin(), snrs.end());
  const int max_half = (antennas.back() - 1) / 2;

  std::vector<ScatterModel> models;
  std::vector<FactoredChannel> samplers;
  for (double g : gammas) {
    ScatterConfig cfg{spec.tx_support, spec.rx_support, g, g, spec.grid_k, spec.bounce};
    models.push_back(make_scatter_model(cfg));
    const double eta = calibrate_eta(models.back(), spec.eta_reference_half_count);
    samplers.emplace_back(models.back(), max_half, eta);
  }

  const std::size_t ng = gammas.size();
  const std::size_t na = antennas.size();
  const std::size_t ns = snrs.size();
  const std::size_t cells = ng * na * ns;
  const auto trials = static_cast<std::size_t>(spec.trials);
  // values[(t * cells + cell) * 2 + {0: mi, 1: wf}]
  std::vector<double> values(trials * cells * 2);
  auto cell_index = [&](std::size_t g, std::size_t a, std::size_t s) { return (g * na + a) * ns + s; };

  auto run_trial = [&](std::size_t t) {
    for (std::size_t g = 0; g < ng; ++g) {
      const Eigen::MatrixXcd h = samplers[g].sample(spec.seed, static_cast<std::uint32_t>(t));
      for (std::size_t a = 0; a < na; ++a) {
        const int half = (antennas[a] - 1) / 2;
        const Eigen::Index off = max_half - half;
        const Eigen::VectorXd s2 = squared_singular_values(h.block(off, off, antennas[a], antennas[a]));
        for (std::size_t s = 0; s < ns; ++s) {
          const auto snr = SnrPoint::from_db(snrs[s]);
          const std::size_t slot = (t * cells + cell_index(g, a, s)) * 2;
          values[slot] = mi_equal_power(s2, static_cast<std::size_t>(antennas[a]), snr);
          values[slot + 1] = capacity_full_csi(s2, snr);
        }
      }
    }
  };

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t t = next++; t < trials; t = next++) {
      try {
        run_trial(t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = trials;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const int threads = std::min<int>(spec.workers, spec.trials);
    for (int w = 1; w < threads; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  // Sequential reduction in trial order keeps results independent of
  // scheduling.
  std::vector<CapacitySweepResult> out;
  const double z = 1.96;
  const double n = static_cast<double>(trials);
  for (std::size_t g = 0; g < ng; ++g) {
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t s = 0; s < ns; ++s) {
        const std::size_t c = cell_index(g, a, s);
        double sum_mi = 0.0, sum_wf = 0.0;
        int violations = 0;
        for (std::size_t t = 0; t < trials; ++t) {
          const double mi = values[(t * cells + c) * 2];
          const double wf = values[(t * cells + c) * 2 + 1];
          sum_mi += mi;
          sum_wf += wf;
          if (wf < mi - 1e-9 * std::max(1.0, mi)) ++violations;
        }
        const double mean_mi = sum_mi / n;
        const double mean_wf = sum_wf / n;
        double ss_mi = 0.0, ss_wf = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
          ss_mi += std::pow(values[(t * cells + c) * 2] - mean_mi, 2);
          ss_wf += std::pow(values[(t * cells + c) * 2 + 1] - mean_wf, 2);
        }
        CapacitySweepResult r;
        r.gamma = gammas[g];
        r.antennas = antennas[a];
        r.snr_db = snrs[s];
        r.mean_mi_equal_power = mean_mi;
        r.mean_capacity_wf = mean_wf;
        r.c0 = std::log2(1.0 + SnrPoint::from_db(snrs[s]).ratio());
        r.ci_mi = z * std::sqrt(ss_mi / (n - 1.0)) / std::sqrt(n);
        r.ci_cap = z * std::sqrt(ss_wf / (n - 1.0)) / std::sqrt(n);
        r.dof_limit = dof_limit(spec.rx_support, gammas[g], (antennas[a] - 1) / 2.0);
        r.trials = spec.trials;
        r.dominance_violations = violations;
        out.push_back(r);
      }
    }
  }
  return out;
}

}  // namespace colscat
