// SPDX-License-Identifier: Apache-2.0
#include "colscat/scatter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "colscat/error.hpp"
#include "colscat/kernel.hpp"

namespace colscat {

const char* to_string(Bounce bounce) { return bounce == Bounce::kMulti ? "multi" : "single"; }

Bounce parse_bounce(std::string_view text) {
  if (text == "multi") return Bounce::kMulti;
  if (text == "single") return Bounce::kSingle;
  throw Error("bounce must be 'multi' or 'single', got '" + std::string(text) + "'");
}

void ScatterConfig::validate() const {
  if (tx_support.empty() || rx_support.empty()) throw Error("empty support");
  if (grid_k < 1) throw Error("grid K must be positive");
  for (double g : {gamma_t, gamma_r}) {
    if (!(g > 0.0) || !std::isfinite(g)) throw Error("correlation width must be positive");
    // One grid cell is the white limit; anything narrower is not resolvable.
    if (g * grid_k < 1.0 - 1e-12) {
      std::ostringstream msg;
      msg << "correlation width " << g << " is below the grid spacing 1/" << grid_k;
      throw Error(msg.str());
    }
  }
  if (bounce == Bounce::kSingle && tx_support.cluster_count() != rx_support.cluster_count()) {
    throw Error("single-bounce scattering requires equal cluster counts at both ends");
  }
}

double acf_value(double gamma, double delta_angle) { return sinc(delta_angle / gamma) / gamma; }

std::size_t CovarianceFactor::rank(double threshold) const {
  return static_cast<std::size_t>((eigenvalues.array() > threshold).count());
}

CovarianceFactor covariance_factor(std::span<const int> nodes, double gamma, int grid_k) {
  if (nodes.empty()) throw Error("empty support");
  if (!(gamma > 0.0)) throw Error("correlation width must be positive");
  const auto n = static_cast<Eigen::Index>(nodes.size());
  const double cell = 1.0 / grid_k;
  CovarianceFactor out;
  out.nodes.assign(nodes.begin(), nodes.end());
  out.covariance.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      // Integer node difference keeps the white limit gamma = 1/K exact.
      const double delta = static_cast<double>(nodes[i] - nodes[j]) * cell;
      const double v = cell * acf_value(gamma, delta);
      out.covariance(i, j) = v;
      out.covariance(j, i) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(out.covariance);
  if (solver.info() != Eigen::Success) throw Error("covariance eigensolver did not converge");
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  const double cutoff = kClipRelativeThreshold * std::max(out.eigenvalues[0], 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    double& v = out.eigenvalues[i];
    if (v < cutoff) {
      out.clipped_mass += std::abs(v);
      v = 0.0;
    }
  }
  const double trace = out.covariance.trace();
  if (out.clipped_mass > kMaxClippedFraction * trace) {
    std::ostringstream msg;
    msg << "covariance ill-conditioned at this resolution (clipped mass " << out.clipped_mass
        << " of trace " << trace << ")";
    throw Error(msg.str());
  }
  out.sqrt_factor =
      out.eigenvectors * out.eigenvalues.cwiseSqrt().asDiagonal() * out.eigenvectors.transpose();
  return out;
}

CovarianceFactor covariance_factor(const AngularSupport& support, double gamma, int grid_k) {
  const auto nodes = support.grid_nodes(grid_k);
  return covariance_factor(nodes, gamma, grid_k);
}

ScatterModel make_scatter_model(const ScatterConfig& config) {
  config.validate();
  ScatterModel model;
  model.config = config;
  model.rx_nodes = config.rx_support.grid_nodes(config.grid_k);
  model.tx_nodes = config.tx_support.grid_nodes(config.grid_k);
  if (model.rx_nodes.empty() || model.tx_nodes.empty()) {
    throw Error("support contains no grid nodes at K=" + std::to_string(config.grid_k));
  }
  if (config.bounce == Bounce::kMulti) {
    model.blocks.push_back({0, 0, covariance_factor(model.rx_nodes, config.gamma_r, config.grid_k),
                            covariance_factor(model.tx_nodes, config.gamma_t, config.grid_k)});
    return model;
  }
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < config.rx_support.cluster_count(); ++i) {
    const auto rx = config.rx_support.cluster_grid_nodes(i, config.grid_k);
    const auto tx = config.tx_support.cluster_grid_nodes(i, config.grid_k);
    if (rx.empty() || tx.empty()) throw Error("cluster " + std::to_string(i) + " contains no grid nodes");
    model.blocks.push_back({row, col, covariance_factor(rx, config.gamma_r, config.grid_k),
                            covariance_factor(tx, config.gamma_t, config.grid_k)});
    row += static_cast<Eigen::Index>(rx.size());
    col += static_cast<Eigen::Index>(tx.size());
  }
  return model;
}

ScatterField sample_field(const ScatterModel& model, std::uint64_t seed, std::uint32_t trial) {
  ScatterField field;
  field.grid_k = model.config.grid_k;
  field.rx_nodes = model.rx_nodes;
  field.tx_nodes = model.tx_nodes;
  const auto rows = static_cast<Eigen::Index>(model.rx_nodes.size());
  const auto cols = static_cast<Eigen::Index>(model.tx_nodes.size());
  field.values = Eigen::MatrixXcd::Zero(rows, cols);
  field.mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rows, cols, false);
  Eigen::MatrixXcd white;
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    const auto& blk = model.blocks[b];
    const auto r = blk.rx.sqrt_factor.rows();
    const auto c = blk.tx.sqrt_factor.rows();
    white.resize(r, c);
    fill_complex_gaussian({seed, trial, static_cast<std::uint32_t>(b)}, white);
    // S_r G S_t^T with real factors, applied to the real and imaginary planes.
    const Eigen::MatrixXd re = blk.rx.sqrt_factor * white.real() * blk.tx.sqrt_factor.transpose();
    const Eigen::MatrixXd im = blk.rx.sqrt_factor * white.imag() * blk.tx.sqrt_factor.transpose();
    field.values.block(blk.row, blk.col, r, c).real() = re;
    field.values.block(blk.row, blk.col, r, c).imag() = im;
    field.mask.block(blk.row, blk.col, r, c).setConstant(true);
  }
  return field;
}

ScatterField sample_field(const ScatterConfig& config, std::uint64_t seed, std::uint32_t trial) {
  return sample_field(make_scatter_model(config), seed, trial);
}

KlBasis kl_basis(const ScatterModel& model) {
  KlBasis basis;
  for (const auto& blk : model.blocks) {
    basis.rx.push_back(blk.rx);
    basis.tx.push_back(blk.tx);
  }
  return basis;
}

namespace {

constexpr std::size_t kMaxKlCoefficients = 4096;

struct AxisModes {
  Eigen::MatrixXd projector;  // modes x nodes, rows v_m^T / sqrt(mu_m)
};

AxisModes top_modes(const CovarianceFactor& f) {
  const auto n = static_cast<Eigen::Index>(f.rank(0.5));
  AxisModes out;
  out.projector = (f.eigenvalues.head(n).cwiseSqrt().cwiseInverse().asDiagonal() *
                   f.eigenvectors.leftCols(n).transpose());
  return out;
}

}  // namespace

KlWhitenessReport kl_whiteness_check(const ScatterModel& model, const KlBasis& basis, int trials,
                                     std::uint64_t seed) {
  if (trials < 2) throw Error("KL whiteness check needs at least two trials");
  if (basis.rx.size() != model.blocks.size() || basis.tx.size() != model.blocks.size()) {
    throw Error("KL basis does not match the model's field blocks");
  }
  std::vector<AxisModes> rx_modes;
  std::vector<AxisModes> tx_modes;
  std::size_t p = 0;
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    if (basis.rx[b].nodes.size() != model.blocks[b].rx.nodes.size() ||
        basis.tx[b].nodes.size() != model.blocks[b].tx.nodes.size()) {
      throw Error("KL basis dimensions do not match field block " + std::to_string(b));
    }
    rx_modes.push_back(top_modes(basis.rx[b]));
    tx_modes.push_back(top_modes(basis.tx[b]));
    p += static_cast<std::size_t>(rx_modes.back().projector.rows() * tx_modes.back().projector.rows());
  }
  if (p == 0) throw Error("KL basis has no modes above 0.5");
  if (p > kMaxKlCoefficients) throw Error("too many KL coefficients for a dense covariance test");

  const auto np = static_cast<Eigen::Index>(p);
  Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(np);
  Eigen::MatrixXcd second = Eigen::MatrixXcd::Zero(np, np);
  Eigen::MatrixXcd pseudo = Eigen::MatrixXcd::Zero(np, np);
  Eigen::VectorXcd z(np);
  for (int t = 0; t < trials; ++t) {
    const auto field = sample_field(model, seed, static_cast<std::uint32_t>(t));
    Eigen::Index offset = 0;
    for (std::size_t b = 0; b < model.blocks.size(); ++b) {
      const auto& blk = model.blocks[b];
      const auto r = static_cast<Eigen::Index>(blk.rx.nodes.size());
      const auto c = static_cast<Eigen::Index>(blk.tx.nodes.size());
      const Eigen::MatrixXcd coeff = rx_modes[b].projector.cast<std::complex<double>>() *
                                     field.values.block(blk.row, blk.col, r, c) *
                                     tx_modes[b].projector.transpose().cast<std::complex<double>>();
      z.segment(offset, coeff.size()) = coeff.reshaped();
      offset += coeff.size();
    }
    sum += z;
    second.noalias() += z * z.adjoint();
    pseudo.noalias() += z * z.transpose();
  }
  const double inv_t = 1.0 / trials;
  const Eigen::VectorXcd mean = sum * inv_t;
  const Eigen::MatrixXcd cov = second * inv_t - mean * mean.adjoint();
  const Eigen::MatrixXcd pcov = pseudo * inv_t - mean * mean.transpose();

  KlWhitenessReport rep;
  rep.coefficients = p;
  rep.trials = trials;
  rep.threshold = 5.0 / std::sqrt(static_cast<double>(trials));
  rep.max_abs_mean = mean.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < np; ++j) {
    for (Eigen::Index i = 0; i < np; ++i) {
      if (i == j) {
        rep.max_diagonal_deviation = std::max(rep.max_diagonal_deviation, std::abs(cov(i, i) - 1.0));
      } else {
        rep.max_abs_offdiagonal = std::max(rep.max_abs_offdiagonal, std::abs(cov(i, j)));
      }
      rep.max_abs_pseudo_covariance = std::max(rep.max_abs_pseudo_covariance, std::abs(pcov(i, j)));
    }
  }
  rep.passed = rep.max_abs_mean < rep.threshold && rep.max_abs_offdiagonal < rep.threshold &&
               rep.max_diagonal_deviation < rep.threshold && rep.max_abs_pseudo_covariance < rep.threshold;
  return rep;
}

KlWhitenessReport kl_whiteness_check(const ScatterConfig& config, int trials, std::uint64_t seed) {
  const auto model = make_scatter_model(config);
  return kl_whiteness_check(model, kl_basis(model), trials, seed);
}

namespace {

constexpr char kDumpMagic[4] = {'C', 'S', 'F', 'D'};
constexpr std::uint32_t kDumpVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error("truncated field dump");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void put_f32(std::ostream& os, double v) { put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
float get_f32(std::istream& is) { return std::bit_cast<float>(get_u32(is)); }

}  // namespace

void write_field_dump(const std::filesystem::path& path, const ScatterField& field) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open field dump for writing: " + path.string());
  const auto rows = field.values.rows();
  const auto cols = field.values.cols();
  os.write(kDumpMagic, 4);
  put_u32(os, kDumpVersion);
  put_u32(os, static_cast<std::uint32_t>(field.grid_k));
  put_u32(os, static_cast<std::uint32_t>(rows));
  put_u32(os, static_cast<std::uint32_t>(cols));
  for (int k : field.rx_nodes) put_u32(os, static_cast<std::uint32_t>(k));
  for (int k : field.tx_nodes) put_u32(os, static_cast<std::uint32_t>(k));
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) os.put(field.mask(r, c) ? 1 : 0);
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      put_f32(os, field.values(r, c).real());
      put_f32(os, field.values(r, c).imag());
    }
  }
  if (!os) throw Error("failed writing field dump: " + path.string());
}

ScatterField read_field_dump(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open field dump: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kDumpMagic, 4) != 0) throw Error("not a field dump");
  if (get_u32(is) != kDumpVersion) throw Error("unsupported field dump version");
  ScatterField field;
  field.grid_k = static_cast<int>(get_u32(is));
  const auto rows = static_cast<Eigen::Index>(get_u32(is));
  const auto cols = static_cast<Eigen::Index>(get_u32(is));
  for (Eigen::Index r = 0; r < rows; ++r) field.rx_nodes.push_back(static_cast<int>(get_u32(is)));
  for (Eigen::Index c = 0; c < cols; ++c) field.tx_nodes.push_back(static_cast<int>(get_u32(is)));
  field.mask.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const int b = is.get();
      if (b == std::char_traits<char>::eof()) throw Error("truncated field dump");
      field.mask(r, c) = b != 0;
    }
  }
  field.values.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const float re = get_f32(is);
      const float im = get_f32(is);
      field.values(r, c) = {re, im};
    }
  }
  return field;
}

}  // namespace colscat
