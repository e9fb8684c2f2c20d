#pragma once

// Alternating estimation of block parameters and memberships: projected
// gradient ascent per block, then a greedy membership sweep, repeated until
// the pairwise log-likelihood stalls.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mlp/likelihood.hpp"
#include "mlp/model.hpp"

namespace mlp {

struct FitConfig {
  double delta1 = 1e-6;
  double delta2 = 1e-6;
  int t1_max = 100;
  int t2_max = 50;
  double step0 = 1.0;
  double backtrack = 0.5;
  double armijo = 1e-4;
  int max_backtracks = 30;
  int restarts = 3;
  std::uint64_t seed = 1;
  double pd_floor = 1e-6;  // overrides the space's eigenvalue floor in fit()
  int kmeans_init = 10;
  int kmeans_iterations = 100;
  /// Spread of the random mean perturbation used by restarts after the first.
  double warmup_mu_sd = 0.1;
  /// Magnitude bound of the random in-support correlations of warm-ups.
  double warmup_sigma = 0.3;

  /// Throws ConfigError.
  void validate() const;
};

struct FitResult {
  BlockParams theta_hat;
  Membership membership_hat;
  std::vector<double> loglik_trace;
  bool converged = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  int restart_index = 0;
  std::vector<double> restart_logliks;
  int line_search_failures = 0;
  int projection_flags = 0;  // non-converged or approximate P_S calls
  std::vector<SupportSet> supports;

  double loglik() const { return loglik_trace.empty() ? 0.0 : loglik_trace.back(); }
};

/// Seeded k-means on rows of the eigenvectors of the K - 1 largest
/// eigenvalues of the summed adjacency, centered by its mean off-diagonal
/// weight, each scaled by its eigenvalue. The k-means seeding is driven by a
/// node order that depends only on the embedding, so relabeling nodes
/// relabels the output.
Membership init_membership_spectral(const MultilayerNetwork& net, int K, std::uint64_t seed,
                                    int n_init = 10, int max_iterations = 100);

/// Edge counts per unordered block and layer, laid out [block][layer].
std::vector<std::int64_t> block_layer_edges(const MultilayerNetwork& net, const Membership& e);

/// Sigma = I; mu = Phi^{-1} of the clamped block-layer edge frequency,
/// projected onto the mean box. Empty blocks use the network density.
BlockParams init_theta(const MultilayerNetwork& net, const Membership& e, const ParameterSpace& space);

struct BlockUpdate {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  double loglik = 0.0;
  int iterations = 0;
  bool line_search_failed = false;
  int projection_flags = 0;
  double last_step = 1.0;
};

/// Projected gradient ascent on one block with Armijo backtracking on the
/// projected point. Step sizes are scaled by 1 / (n_kl (M - 1)) for means and
/// 1 / n_kl for correlations.
BlockUpdate update_theta_block(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                               std::span<const std::int64_t> counts, std::int64_t node_pairs,
                               const ParameterSpace& space, int block, const FitConfig& config);

struct SweepResult {
  Membership membership;
  int moved = 0;
  bool sequential_fallback = false;
  double loglik_before = 0.0;
  double loglik_after = 0.0;
};

/// Every node takes its best community against the sweep-start state (ties
/// to the smallest index) and all moves apply together. If that lowers the
/// likelihood, moves are instead applied one at a time, largest snapshot gain
/// first, each re-evaluated and taken only on strict improvement. The cache
/// is rebuilt for the returned membership.
SweepResult sweep_membership(const BlockParams& theta, const MultilayerNetwork& net, const Membership& e,
                             NodeCrossCounts& cross);

/// Runs the alternating algorithm from each warm-up and keeps the best final
/// likelihood (ties to the earliest). If init is given it seeds the first
/// run's memberships instead of the spectral initializer. If align_to is
/// given every starting membership is relabeled to best match it, so block
/// indices of space (e.g. per-block supports) refer to align_to's labels.
FitResult fit(const MultilayerNetwork& net, int K, const ParameterSpace& space, const FitConfig& config,
              const Membership* init = nullptr, const Membership* align_to = nullptr);

/// Relabels `other` by the permutation that best matches `reference`.
Membership align_labels(const Membership& reference, const Membership& other);

/// Single alternating run from explicit starting values.
FitResult fit_from(const MultilayerNetwork& net, const Membership& e0, const BlockParams& theta0,
                   const ParameterSpace& space, const FitConfig& config);

/// Parameter space with rho = empirical density and the given supports.
ParameterSpace default_space(const MultilayerNetwork& net, int K, std::vector<SupportSet> supports,
                             double c_l = 0.1, double c_u = 10.0, double D = 0.9);

}  // namespace mlp
