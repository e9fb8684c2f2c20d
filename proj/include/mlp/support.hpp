#pragma once

// Unknown-support estimation: two-layer fits for every layer pair, label
// alignment to a reference pair, hard thresholding of the pairwise
// correlation estimates, and a constrained refit on all layers.

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "mlp/fit.hpp"
#include "mlp/model.hpp"

namespace mlp {

enum class LambdaRule {
  kPerBlock,  // block (k, l) uses 2 sqrt(log M / n_kl)
  kMinBlock,  // every block uses 2 sqrt(log M / n_min)
};

struct SupportConfig {
  /// Fixed threshold for all blocks; <= 0 selects the rule below, with node
  /// pair counts n_kl taken under the reference membership.
  double lambda = 0.0;
  LambdaRule lambda_rule = LambdaRule::kPerBlock;
  /// Layer pairs to fit (b < d); empty means all pairs, or the band below.
  std::vector<std::pair<int, int>> pair_set;
  /// If >= 1 and pair_set is empty, only pairs with d - b <= band_budget.
  int band_budget = 0;
  /// Whether pair fits also update memberships (otherwise they keep the
  /// pilot membership and only fit the block parameters).
  bool pair_sweeps = false;
  FitConfig inner_fit;
  FitConfig final_fit;
};

struct PairEstimate {
  int b = 0;
  int d = 1;
  Eigen::MatrixXd sigma0;  // K x K, symmetric
  Membership membership;
  bool failed = false;
};

/// Two-layer fit with full 2 x 2 support. c_l, c_u and D come from the
/// template space; rho is the pair's empirical density.
PairEstimate fit_layer_pair(const MultilayerNetwork& net, int b, int d, int K, const FitConfig& config,
                            const ParameterSpace& space_template, const Membership* init = nullptr,
                            bool sweeps = true);

/// Permutation pi (pi[k] = label of `other` matched to reference community k)
/// minimizing (1/N) sum_k |C_k(reference) \ C_{pi_k}(other)|.
std::vector<int> align_memberships(const Membership& reference, const Membership& other);

/// Reindexes a pair estimate's block correlations to the reference labels.
Eigen::MatrixXd aligned_sigma(const PairEstimate& est, const std::vector<int>& perm);

/// Support of block (k, l): pairs whose aligned |sigma0(k, l)| > lambda.
/// Estimates must already be in reference labels.
std::vector<SupportSet> threshold_support(const std::vector<PairEstimate>& aligned, int K, int M, double lambda);

/// Same with one threshold per unordered block.
std::vector<SupportSet> threshold_support(const std::vector<PairEstimate>& aligned, int K, int M,
                                          const std::vector<double>& block_lambda);

/// 2 sqrt(log M / n); 1 when n is zero.
double default_lambda(int M, std::int64_t n);

/// Per-block thresholds for a membership under the given rule.
std::vector<double> block_lambdas(const Membership& e, int M, LambdaRule rule);

struct UnknownSupportResult {
  FitResult fit;
  std::vector<SupportSet> supports;
  double lambda = 0.0;  // smallest block threshold
  std::vector<double> block_lambda;
  Membership pilot;
  Membership reference;
  std::vector<PairEstimate> pairs;  // aligned to the reference labels
  std::vector<std::pair<int, int>> failed_pairs;
};

UnknownSupportResult fit_unknown_support(const MultilayerNetwork& net, int K, const ParameterSpace& space_template,
                                         const SupportConfig& config);

}  // namespace mlp
