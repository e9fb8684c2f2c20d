#include "mlp/support.hpp"

#include <algorithm>
#include <cmath>

#include "mlp/error.hpp"
#include "mlp/metrics.hpp"

namespace mlp {

PairEstimate fit_layer_pair(const MultilayerNetwork& net, int b, int d, int K, const FitConfig& config,
                            const ParameterSpace& space_template, const Membership* init, bool sweeps) {
  if (!(b < d)) throw DomainError("layer pair needs b < d");
  if (b < 0 || d >= net.n_layers()) throw DomainError("layer index out of range");
  const int layers[2] = {b, d};
  const MultilayerNetwork sub = net.select_layers(layers);
  const ParameterSpace space = default_space(sub, K, std::vector<SupportSet>(n_blocks(K), SupportSet::full(2)),
                                             space_template.c_l, space_template.c_u, space_template.D);
  PairEstimate est;
  est.b = b;
  est.d = d;
  FitResult res;
  if (sweeps || !init) {
    res = fit(sub, K, space, config, init);
  } else {
    ParameterSpace sp = space;
    sp.pd_floor = config.pd_floor;
    const BlockParams theta0 = init_theta(sub, *init, sp);
    // Parameters only: memberships stay at the pilot.
    BlockParams theta = theta0;
    const BlockCounts counts = compute_counts(sub, *init);
    for (int blk = 0; blk < n_blocks(K); ++blk) {
      if (counts.node_pairs(blk) == 0) continue;
      const BlockUpdate up = update_theta_block(theta.mu_block(blk), theta.sigma_block(blk), counts.block(blk),
                                                counts.node_pairs(blk), sp, blk, config);
      theta.mu_block(blk) = up.mu;
      theta.sigma_block(blk) = up.sigma;
    }
    res.theta_hat = std::move(theta);
    res.membership_hat = *init;
  }
  est.membership = res.membership_hat;
  est.sigma0 = Eigen::MatrixXd::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) est.sigma0(k, l) = res.theta_hat.sigma(k, l)(0, 1);
  }
  return est;
}

std::vector<int> align_memberships(const Membership& reference, const Membership& other) {
  if (reference.n_nodes() != other.n_nodes() || reference.K != other.K) {
    throw DomainError("memberships to align must share N and K");
  }
  return dist_min_permutation(reference, other).perm;
}

Eigen::MatrixXd aligned_sigma(const PairEstimate& est, const std::vector<int>& perm) {
  const int K = static_cast<int>(est.sigma0.rows());
  Eigen::MatrixXd out(K, K);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) out(k, l) = est.sigma0(perm[k], perm[l]);
  }
  return out;
}

std::vector<SupportSet> threshold_support(const std::vector<PairEstimate>& aligned, int K, int M, double lambda) {
  return threshold_support(aligned, K, M, std::vector<double>(n_blocks(K), lambda));
}

std::vector<SupportSet> threshold_support(const std::vector<PairEstimate>& aligned, int K, int M,
                                          const std::vector<double>& block_lambda) {
  if (static_cast<int>(block_lambda.size()) != n_blocks(K)) throw DomainError("need one threshold per block");
  std::vector<std::vector<std::pair<int, int>>> pairs(n_blocks(K));
  for (const auto& est : aligned) {
    if (est.b < 0 || est.d >= M || est.b >= est.d) throw DomainError("pair estimate has invalid layers");
    if (est.sigma0.rows() != K || est.sigma0.cols() != K) throw DomainError("pair estimate has wrong K");
    if (est.failed) continue;
    for (int k = 0; k < K; ++k) {
      for (int l = k; l < K; ++l) {
        const int blk = block_index(k, l, K);
        if (std::abs(est.sigma0(k, l)) > block_lambda[blk]) pairs[blk].emplace_back(est.b, est.d);
      }
    }
  }
  std::vector<SupportSet> out;
  out.reserve(pairs.size());
  for (auto& p : pairs) out.emplace_back(M, std::move(p));
  return out;
}

double default_lambda(int M, std::int64_t n) {
  if (n <= 0) return 1.0;
  return 2.0 * std::sqrt(std::log(static_cast<double>(std::max(M, 2))) / static_cast<double>(n));
}

std::vector<double> block_lambdas(const Membership& e, int M, LambdaRule rule) {
  const int K = e.K;
  const auto sizes = e.community_sizes();
  std::vector<std::int64_t> n(n_blocks(K));
  std::int64_t n_min = 0;
  for (int k = 0; k < K; ++k) {
    for (int l = k; l < K; ++l) {
      const std::int64_t v = k == l ? static_cast<std::int64_t>(sizes[k]) * (sizes[k] - 1) / 2
                                    : static_cast<std::int64_t>(sizes[k]) * sizes[l];
      n[block_index(k, l, K)] = v;
      if (v > 0 && (n_min == 0 || v < n_min)) n_min = v;
    }
  }
  std::vector<double> out(n.size());
  for (std::size_t blk = 0; blk < n.size(); ++blk) {
    out[blk] = default_lambda(M, rule == LambdaRule::kPerBlock ? n[blk] : n_min);
  }
  return out;
}

UnknownSupportResult fit_unknown_support(const MultilayerNetwork& net, int K, const ParameterSpace& space_template,
                                         const SupportConfig& config) {
  const int M = net.n_layers();
  if (M < 2) throw ConfigError("support estimation needs at least two layers");
  std::vector<std::pair<int, int>> pair_set = config.pair_set;
  if (pair_set.empty()) {
    for (int b = 0; b < M; ++b) {
      for (int d = b + 1; d < M; ++d) {
        if (config.band_budget < 1 || d - b <= config.band_budget) pair_set.emplace_back(b, d);
      }
    }
  }
  for (auto [b, d] : pair_set) {
    if (!(0 <= b && b < d && d < M)) throw ConfigError("pair_set entries must satisfy 0 <= b < d < M");
  }

  UnknownSupportResult out;
  // Pilot: all layers, no correlations.
  const ParameterSpace pilot_space = default_space(net, K, {}, space_template.c_l, space_template.c_u,
                                                   space_template.D);
  out.pilot = fit(net, K, pilot_space, config.inner_fit).membership_hat;

  // Stage 1: pair fits.
  std::vector<PairEstimate> raw;
  raw.reserve(pair_set.size());
  for (auto [b, d] : pair_set) {
    try {
      raw.push_back(fit_layer_pair(net, b, d, K, config.inner_fit, space_template, &out.pilot, config.pair_sweeps));
    } catch (const Error&) {
      PairEstimate est;
      est.b = b;
      est.d = d;
      est.sigma0 = Eigen::MatrixXd::Zero(K, K);
      est.membership = out.pilot;
      est.failed = true;
      raw.push_back(std::move(est));
      out.failed_pairs.emplace_back(b, d);
    }
  }

  // Stage 2: align to the first pair's labeling.
  out.reference = raw.front().membership;
  for (auto& est : raw) {
    const auto perm = align_memberships(out.reference, est.membership);
    est.sigma0 = aligned_sigma(est, perm);
    est.membership = align_labels(out.reference, est.membership);
  }

  // Stage 3: threshold.
  out.block_lambda = config.lambda > 0.0 ? std::vector<double>(n_blocks(K), config.lambda)
                                         : block_lambdas(out.reference, M, config.lambda_rule);
  out.lambda = *std::min_element(out.block_lambda.begin(), out.block_lambda.end());
  out.supports = threshold_support(raw, K, M, out.block_lambda);
  out.pairs = std::move(raw);

  // Stage 4: constrained refit in the reference labeling.
  const ParameterSpace final_space = default_space(net, K, out.supports, space_template.c_l, space_template.c_u,
                                                   space_template.D);
  ParameterSpace sp = final_space;
  sp.scenario = space_template.scenario;
  out.fit = fit(net, K, sp, config.final_fit, nullptr, &out.reference);
  out.fit.supports = out.supports;
  return out;
}

}  // namespace mlp
