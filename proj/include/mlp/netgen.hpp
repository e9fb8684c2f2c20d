#pragma once

// Synthetic multilayer networks from the latent Gaussian construction, plus
// the simulation presets.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlp/model.hpp"

namespace mlp::gen {

/// Deterministic 64-bit stream derivation (splitmix64 of seed and stream id).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Edge index of the unordered pair i < j in the row-major upper triangle.
inline std::int64_t edge_index(int i, int j, int N) {
  if (i > j) std::swap(i, j);
  return static_cast<std::int64_t>(i) * (2 * N - i - 1) / 2 + (j - i - 1);
}

/// Correlation matrix over edge indices: I + offdiag, offdiag sparse and
/// symmetric with zero diagonal.
struct EdgeCorrelation {
  int dim = 0;
  double tau = 0.0;
  std::pair<double, double> corr_range{0.0, 0.0};
  std::uint64_t seed = 0;
  double zeta = 1.0;          // cumulative shrink factor applied to the raw draws
  double lambda_min = 1.0;    // lower-bound estimate after repair
  int repair_rounds = 0;
  Eigen::SparseMatrix<double> offdiag;

  std::int64_t nnz_offdiag() const { return offdiag.nonZeros(); }
  Eigen::MatrixXd dense() const;
};

inline constexpr double kEdgeCorrFloor = 1e-4;

/// Each unordered pair of edges is nonzero independently with probability
/// tau; values are uniform on corr_range. If lambda_min < 1e-4 the
/// off-diagonals are scaled by zeta = (1 - 1e-4) / (1 - lambda_min), at most
/// five rounds. Throws NumericalError if the floor is still violated.
EdgeCorrelation build_edge_correlation(int n_edges, double tau, std::pair<double, double> corr_range,
                                       std::uint64_t seed);

/// Smallest eigenvalue estimate of a sparse symmetric matrix by Lanczos with
/// full reorthogonalization; returns a lower bound theta - |residual|.
double lanczos_min_eigenvalue(const Eigen::SparseMatrix<double>& A, int max_steps, std::uint64_t seed);

struct MuScheme {
  double diag_mean = -0.5;
  double offdiag_mean = -0.8;
  double variance = 0.01;
};

struct SigmaScheme {
  enum class Kind {
    kIdentity,
    kFirstOffDiagonalUniform,  // Sigma(b, b+1) ~ U(-scale, scale)
    kBandNormal,               // |b-d| <= band: N(scale - slope |b-d|, variance)
    kRandomPositions,          // `positions` random upper entries, +-U(lo, hi)
  };
  Kind kind = Kind::kIdentity;
  double scale = 0.0;
  int band = 1;
  double slope = 0.05;
  double variance = 0.01;
  int positions = 0;
  double lo = 0.2;
  double hi = 0.6;
  /// Blocks that come out indefinite are shrunk towards I to this floor.
  double pd_floor = 1e-2;
};

/// Multilayer Ising alternative used for the mis-specification preset. Each
/// node pair carries an independent vector x in {0,1}^M with
/// P(x) ~ exp(sum_b h_kl x_b + J sum_{b<d} x_b x_d), h_kl = field_scale u +
/// field_offset + assortative [k = l]. Sampled by Gibbs sweeps.
struct IsingScheme {
  double u = -5.0;
  double field_scale = 0.5;
  double field_offset = 1.0;
  double assortative = 0.5;
  double coupling = 0.2;
  int sweeps = 100;
};

struct GenConfig {
  int N = 100;
  int M = 20;
  int K = 5;
  std::vector<double> community_probs;
  MuScheme mu;
  SigmaScheme sigma;
  double tau = 0.2;
  std::pair<double, double> corr_range{-0.5, 0.5};
  std::uint64_t seed = 1;
  std::optional<IsingScheme> ising;
  std::string label;

  /// Throws ConfigError.
  void validate() const;
};

struct GroundTruth {
  Membership membership;
  BlockParams theta;  // Ising preset: mu holds Phi^{-1} of the exact marginals, sigma = I
  std::vector<SupportSet> supports;  // per unordered block, from theta's sigma
  EdgeCorrelation R;
  std::string model = "probit";
};

/// Draws memberships, Theta, R and the network. Deterministic given config.seed.
std::pair<MultilayerNetwork, GroundTruth> sample_network(const GenConfig& config);

/// Draws Theta only (used by sample_network and in tests).
BlockParams sample_theta(const GenConfig& config, std::uint64_t seed);

/// Thresholds mu + Sigma^{1/2} u for every node pair. u_layers holds one
/// N(0, R) draw per layer as columns (N(N-1)/2 x M).
MultilayerNetwork sample_given(const Membership& e, const BlockParams& theta,
                               const Eigen::MatrixXd& u_layers, int N);

/// One N(0, R) vector per layer, columns drawn from per-layer streams.
Eigen::MatrixXd sample_edge_noise(const EdgeCorrelation& R, int M, std::uint64_t seed);

// --- presets -----------------------------------------------------------------

/// Known example ids are 1..9. The knob is the example's varied quantity:
/// 1 sigma, 2 v, 3 a, 4 N, 5 M, 6 gamma, 7 tau, 8 u, 9 M. Throws ConfigError
/// for unknown ids or knob values outside the example's grid.
GenConfig preset(int example_id, double knob, std::uint64_t seed = 1);

/// Knob grid of an example.
std::vector<double> preset_grid(int example_id);
std::string preset_knob_name(int example_id);

}  // namespace mlp::gen
