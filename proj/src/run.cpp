// SPDX-License-Identifier: Apache-2.0
#include "colscat/run.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "colscat/channel.hpp"
#include "colscat/error.hpp"
#include "colscat/kernel.hpp"
#include "colscat/scatter.hpp"

#ifndef COLSCAT_VERSION
#define COLSCAT_VERSION "0.0.0"
#endif

namespace colscat {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw Error("invalid number '" + text + "' for " + key);
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw Error("invalid integer '" + text + "' for " + key);
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "on" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "off" || text == "no") return false;
  throw Error("invalid boolean '" + text + "' for " + key);
}

std::vector<int> parse_antennas(const std::string& value) {
  std::vector<int> out;
  for (const auto& item : split_list(value)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      out.push_back(static_cast<int>(to_integer("antennas", item)));
      continue;
    }
    // "first:last" expands to the odd counts first, first+2, ..., last.
    const auto first = static_cast<int>(to_integer("antennas", trim(item.substr(0, colon))));
    const auto last = static_cast<int>(to_integer("antennas", trim(item.substr(colon + 1))));
    if (first % 2 == 0 || last % 2 == 0 || last < first) {
      throw Error("antenna range '" + item + "' must run between odd counts in ascending order");
    }
    for (int a = first; a <= last; a += 2) out.push_back(a);
  }
  return out;
}

std::string normalize_key(std::string key) {
  key = trim(key);
  while (!key.empty() && key.front() == '-') key.erase(key.begin());
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt_g(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

}  // namespace

std::vector<int> RunConfig::default_antennas() {
  std::vector<int> out;
  for (int l = 0; l <= kEtaReferenceHalfCount; ++l) out.push_back(2 * l + 1);
  return out;
}

void RunConfig::check() const {
  if (omega.empty()) throw Error("omega must be nonempty");
  if (gammas.empty() || snr_db.empty() || antennas.empty()) throw Error("gamma, snr-db and antennas must be nonempty");
  if (grid_k < kEtaReferenceHalfCount) {
    throw Error("grid-k must be at least " + std::to_string(kEtaReferenceHalfCount) +
                " so the eta reference array fits the grid");
  }
  for (double g : gammas) {
    if (!(g > 0.0)) throw Error("gamma values must be positive");
    if (g * grid_k < 1.0 - 1e-12) throw Error("gamma " + fmt_g(g) + " is below the grid spacing 1/K");
  }
  for (int a : antennas) {
    if (a < 1 || a % 2 == 0) throw Error("antenna counts must be odd, got " + std::to_string(a));
    if (a > 2 * grid_k + 1) throw Error("antenna count " + std::to_string(a) + " exceeds 2K+1");
  }
  if (trials < 1) throw Error("trials must be at least 1");
  if (workers < 1) throw Error("workers must be at least 1");
  if (kernel_points_per_lobe < 1) throw Error("kernel-points-per-lobe must be positive");
}

std::string RunConfig::canonical_text() const {
  std::ostringstream os;
  os << "omega=" << omega.to_string() << '\n'
     << "gamma=" << join(gammas) << '\n'
     << "snr-db=" << join(snr_db) << '\n'
     << "antennas=" << join(antennas) << '\n'
     << "grid-k=" << grid_k << '\n'
     << "trials=" << trials << '\n'
     << "seed=" << seed << '\n'
     << "bounce=" << to_string(bounce) << '\n'
     << "kernel-points-per-lobe=" << kernel_points_per_lobe << '\n';
  return os.str();
}

std::string RunConfig::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical_text()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SweepSpec RunConfig::sweep_spec() const {
  SweepSpec s;
  s.tx_support = omega;
  s.rx_support = omega;
  s.gammas = gammas;
  s.antennas = antennas;
  s.snr_db = snr_db;
  s.grid_k = grid_k;
  s.trials = trials;
  s.seed = seed;
  s.bounce = bounce;
  s.workers = workers;
  return s;
}

void apply_setting(RunConfig& config, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = normalize_key(raw_key);
  const std::string value = trim(raw_value);
  if (key == "omega") {
    config.omega = AngularSupport::parse(value);
  } else if (key == "gamma") {
    config.gammas.clear();
    for (const auto& item : split_list(value)) config.gammas.push_back(to_double(key, item));
  } else if (key == "snr-db") {
    config.snr_db.clear();
    for (const auto& item : split_list(value)) config.snr_db.push_back(to_double(key, item));
  } else if (key == "antennas") {
    config.antennas = parse_antennas(value);
  } else if (key == "grid-k") {
    config.grid_k = static_cast<int>(to_integer(key, value));
  } else if (key == "trials") {
    config.trials = static_cast<int>(to_integer(key, value));
  } else if (key == "seed") {
    std::uint64_t s = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, s);
    if (ec != std::errc() || ptr != end || value.empty()) {
      throw Error("seed must be an unsigned 64-bit integer, got '" + value + "'");
    }
    config.seed = s;
  } else if (key == "bounce") {
    config.bounce = parse_bounce(value);
  } else if (key == "workers") {
    config.workers = static_cast<int>(to_integer(key, value));
  } else if (key == "output") {
    config.output = value;
  } else if (key == "paper-scale") {
    config.paper_scale = value.empty() || to_bool(key, value);
  } else if (key == "validate") {
    config.validate_only = value.empty() || to_bool(key, value);
  } else if (key == "kernel-points-per-lobe") {
    config.kernel_points_per_lobe = static_cast<int>(to_integer(key, value));
  } else {
    throw Error("unknown setting '" + raw_key + "'");
  }
}

RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Colored-scattering MIMO capacity sweeps"};
  std::map<std::string, std::string> given;
  const std::vector<std::string> valued = {"omega",   "gamma",  "snr-db", "antennas", "grid-k",
                                           "trials",  "seed",   "bounce", "workers",  "output",
                                           "kernel-points-per-lobe"};
  std::map<std::string, CLI::Option*> options;
  for (const auto& name : valued) options[name] = app.add_option("--" + name, given[name]);
  bool paper_scale = false;
  bool validate_only = false;
  std::string config_path;
  auto* paper_opt = app.add_flag("--paper-scale", paper_scale, "K=2048, trials=10000");
  auto* validate_opt = app.add_flag("--validate", validate_only, "run property suites instead of a sweep");
  app.add_option("--config", config_path, "flat key=value file keyed by flag names");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    throw Error(std::string("argument error: ") + e.what());
  }

  RunConfig cfg;
  std::set<std::string> explicit_keys;
  if (const char* env = std::getenv(kSeedEnvVar); env != nullptr && *env != '\0') {
    apply_setting(cfg, "seed", env);
  }
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw Error("cannot read config file: " + config_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      auto sep = line.find('=');
      if (sep == std::string::npos) sep = line.find_first_of(" \t");
      const std::string key = sep == std::string::npos ? line : line.substr(0, sep);
      const std::string value = sep == std::string::npos ? "" : line.substr(sep + 1);
      try {
        apply_setting(cfg, key, value);
      } catch (const Error& e) {
        throw Error(config_path + ":" + std::to_string(lineno) + ": " + e.what());
      }
      explicit_keys.insert(normalize_key(key));
    }
  }
  for (const auto& name : valued) {
    if (options[name]->count() > 0) {
      apply_setting(cfg, name, given[name]);
      explicit_keys.insert(name);
    }
  }
  if (paper_opt->count() > 0) cfg.paper_scale = paper_scale;
  if (validate_opt->count() > 0) cfg.validate_only = validate_only;
  if (cfg.paper_scale) {
    if (!explicit_keys.contains("grid-k")) cfg.grid_k = kPaperGridK;
    if (!explicit_keys.contains("trials")) cfg.trials = kPaperTrials;
  }
  cfg.check();
  return cfg;
}

std::string format_csv(const std::vector<CapacitySweepResult>& rows, std::uint64_t seed) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += fmt_g(r.gamma) + ',' + std::to_string(r.antennas) + ',' + fmt_g(r.snr_db) + ',' +
           fmt_g(r.mean_mi_equal_power) + ',' + fmt_g(r.mean_capacity_wf) + ',' + fmt_g(r.c0) + ',' +
           fmt_g(r.mi_norm()) + ',' + fmt_g(r.cap_norm()) + ',' + fmt_g(r.ci_mi) + ',' + fmt_g(r.ci_cap) + ',' +
           fmt_g(r.dof_limit) + ',' + std::to_string(r.trials) + ',' + std::to_string(seed) + '\n';
  }
  return out;
}

RunOutcome run(const RunConfig& config) {
  config.check();
  RunOutcome outcome;
  outcome.csv_path = config.output;
  outcome.manifest_path = config.output;
  outcome.manifest_path += ".manifest";
  std::ofstream csv(outcome.csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw Error("cannot write output: " + outcome.csv_path.string());
  std::ofstream manifest(outcome.manifest_path, std::ios::binary | std::ios::trunc);
  if (!manifest) throw Error("cannot write manifest: " + outcome.manifest_path.string());

  const auto start = std::chrono::steady_clock::now();
  outcome.rows = ergodic_sweep(config.sweep_spec());
  outcome.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  csv << format_csv(outcome.rows, config.seed);
  if (!csv.flush()) throw Error("failed writing output: " + outcome.csv_path.string());
  manifest << "version=" << COLSCAT_VERSION << '\n'
           << "config_hash=" << config.hash() << '\n'
           << config.canonical_text() << "workers=" << config.workers << '\n'
           << "output=" << config.output.string() << '\n'
           << "paper-scale=" << (config.paper_scale ? "true" : "false") << '\n'
           << "wall_time_s=" << fmt_g(outcome.wall_seconds) << '\n';
  if (!manifest.flush()) throw Error("failed writing manifest: " + outcome.manifest_path.string());
  return outcome;
}

bool ValidationReport::all_passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

const ValidationEntry* ValidationReport::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::string ValidationReport::to_json() const {
  nlohmann::json j;
  j["all_passed"] = all_passed();
  j["checks"] = nlohmann::json::array();
  for (const auto& e : entries) {
    j["checks"].push_back(
        {{"name", e.name}, {"passed", e.passed}, {"measured", e.measured}, {"threshold", e.threshold}, {"detail", e.detail}});
  }
  return j.dump(2);
}

namespace {

constexpr double kValidationBandwidths[] = {10.0, 20.0, 40.0};
constexpr int kValidationKlGridK = 128;
constexpr int kValidationKlTrials = 2000;
constexpr int kValidationEtaTrials = 400;

KernelSpec spec_for(const RunConfig& cfg, double bandwidth, double resolution_bandwidth) {
  KernelSpec spec;
  spec.support = cfg.omega;
  spec.bandwidth = bandwidth;
  spec.grid_points_per_unit =
      static_cast<int>(std::ceil(cfg.kernel_points_per_lobe * std::max(bandwidth, resolution_bandwidth)));
  return spec;
}

template <typename Fn>
void guarded(ValidationReport& report, const std::string& name, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report.entries.push_back({name, false, std::nan(""), 0.0, e.what()});
  }
}

}  // namespace

ValidationReport validate(const RunConfig& config) {
  ValidationReport report;
  const AngularSupport& omega = config.omega;
  const double m = static_cast<double>(omega.cluster_count());

  for (double w : kValidationBandwidths) {
    const std::string tag = "W" + fmt_g(w);
    guarded(report, "eigen_counts_" + tag, [&] {
      const auto spectrum = eigendecompose(spec_for(config, w, w));
      const double aw = omega.measure() * w;
      report.entries.push_back({"plateau_count_" + tag,
                                std::abs(static_cast<double>(spectrum.count_above(0.5)) - aw) <= 2.0,
                                std::abs(static_cast<double>(spectrum.count_above(0.5)) - aw), 2.0,
                                "|#{lambda > 0.5} - |Omega| W|"});
      for (double x : {0.1, 0.9}) {
        const double band = std::max(2.0, 3.0 * m * std::abs(std::log((1.0 - x) / x)));
        const double dev =
            std::abs(static_cast<double>(spectrum.count_above(x)) - landau_widom_count(omega, w, x));
        report.entries.push_back({"transition_count_" + tag + "_x" + fmt_g(x), dev <= band, dev, band,
                                  "|#{lambda > x} - G(x)|"});
      }
      const double bound = capacity_bound_eigen(spectrum, SnrPoint::from_db(30.0));
      const double closed = capacity_bound_closed_form(omega, w, SnrPoint::from_db(30.0), Bounce::kMulti);
      const double rel = std::abs(bound - closed) / closed;
      report.entries.push_back({"eigen_vs_closed_form_" + tag + "_30dB", rel <= 0.15, rel, 0.15,
                                "relative gap of eigenvalue-sum and closed-form bounds"});
    });
  }

  guarded(report, "refinement_stability_W10", [&] {
    const auto coarse = eigendecompose(spec_for(config, 10.0, 10.0));
    auto fine_spec = spec_for(config, 10.0, 10.0);
    fine_spec.grid_points_per_unit *= 2;
    const auto fine = eigendecompose(fine_spec);
    const auto top = static_cast<Eigen::Index>(std::ceil(omega.measure() * 10.0)) + 5;
    const double dev = (coarse.eigenvalues.head(top) - fine.eigenvalues.head(top)).cwiseAbs().maxCoeff();
    report.entries.push_back({"refinement_stability_W10", dev < 1e-6, dev, 1e-6,
                              "max change of top eigenvalues under grid doubling"});
  });

  guarded(report, "cross_expansion_identities", [&] {
    const double w1 = 20.0;
    const double w2 = 10.0;
    const auto fine = eigendecompose(spec_for(config, w1, w1));
    const auto coarse = eigendecompose(spec_for(config, w2, w1));
    const auto n = spectral_mass_truncation(fine);
    const auto rows = coarse.count_above(0.5);
    const auto res = cross_expansion_coefficients(fine, coarse, n).residuals(rows);
    const std::string detail = "W1=20, W2=10, N=" + std::to_string(n) + ", rows gamma_m > 0.5: " + std::to_string(rows);
    report.entries.push_back({"cross_expansion_orthonormality", res.orthonormality < 1e-3, res.orthonormality, 1e-3, detail});
    report.entries.push_back({"cross_expansion_weighted", res.weighted < 1e-3, res.weighted, 1e-3, detail});
  });

  const double gamma = *std::max_element(config.gammas.begin(), config.gammas.end());
  const int kl_k = std::min(config.grid_k, kValidationKlGridK);
  guarded(report, "kl_whiteness", [&] {
    ScatterConfig sc{omega, omega, gamma, gamma, kl_k, config.bounce};
    const auto rep = kl_whiteness_check(sc, kValidationKlTrials, config.seed);
    const double worst = std::max({rep.max_abs_mean, rep.max_abs_offdiagonal, rep.max_diagonal_deviation,
                                   rep.max_abs_pseudo_covariance});
    report.entries.push_back({"kl_whiteness", rep.passed, worst, rep.threshold,
                              "gamma=" + fmt_g(gamma) + ", K=" + std::to_string(kl_k) + ", " +
                                  std::to_string(rep.coefficients) + " coefficients, " +
                                  std::to_string(rep.trials) + " trials"});
  });

  guarded(report, "eta_analytic_vs_empirical", [&] {
    ScatterConfig sc{omega, omega, gamma, gamma, kl_k, config.bounce};
    const auto model = make_scatter_model(sc);
    const double analytic = calibrate_eta(model);
    const double empirical = estimate_eta_empirical(model, kEtaReferenceHalfCount, kValidationEtaTrials, config.seed);
    const double rel = std::abs(empirical - analytic) / analytic;
    report.entries.push_back({"eta_analytic_vs_empirical", rel < 0.02, rel, 0.02,
                              "gamma=" + fmt_g(gamma) + ", K=" + std::to_string(kl_k)});
  });
  return report;
}

}  // namespace colscat
