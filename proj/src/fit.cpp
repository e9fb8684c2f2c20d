#include "mlp/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mlp/error.hpp"
#include "mlp/kernels.hpp"
#include "mlp/metrics.hpp"
#include "mlp/netgen.hpp"
#include "mlp/probkit.hpp"

namespace mlp {
namespace {

double rel_change(double now, double before) {
  return std::abs(now - before) / std::max(1.0, std::abs(before));
}

double clamped_quantile(double freq, const ParameterSpace& space) {
  const double lo = space.c_l * space.rho;
  const double hi = std::min(space.c_u * space.rho, 1.0 - 1e-9);
  return prob::std_normal_quantile(std::clamp(freq, lo, hi));
}

// Random feasible correlations on the block's support for a warm-up run.
Eigen::MatrixXd random_sigma(const ParameterSpace& space, int block, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(space.M, space.M);
  for (auto [b, d] : space.supports[block].pairs()) S(b, d) = S(d, b) = u(rng);
  return project_block_sigma(S, space, block).value;
}

struct ThetaPass {
  int iterations = 0;
  int failures = 0;
  int flags = 0;
};

ThetaPass update_all_blocks(BlockParams& theta, const BlockCounts& counts, const ParameterSpace& space,
                            const FitConfig& config) {
  ThetaPass pass;
  for (int blk = 0; blk < n_blocks(theta.K()); ++blk) {
    if (counts.node_pairs(blk) == 0) continue;  // frozen
    const BlockUpdate up = update_theta_block(theta.mu_block(blk), theta.sigma_block(blk), counts.block(blk),
                                              counts.node_pairs(blk), space, blk, config);
    theta.mu_block(blk) = up.mu;
    theta.sigma_block(blk) = up.sigma;
    pass.iterations += up.iterations;
    pass.failures += up.line_search_failed ? 1 : 0;
    pass.flags += up.projection_flags;
  }
  return pass;
}

}  // namespace

void FitConfig::validate() const {
  if (!(delta1 > 0.0 && delta2 > 0.0)) throw ConfigError("delta1 and delta2 must be positive");
  if (t1_max < 1 || t2_max < 1) throw ConfigError("t1_max and t2_max must be at least 1");
  if (!(step0 > 0.0)) throw ConfigError("step0 must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("backtrack factor must lie in (0, 1)");
  if (!(armijo > 0.0 && armijo < 1.0)) throw ConfigError("Armijo constant must lie in (0, 1)");
  if (max_backtracks < 1) throw ConfigError("max_backtracks must be at least 1");
  if (restarts < 1) throw ConfigError("restarts must be at least 1");
  if (!(pd_floor > 0.0)) throw ConfigError("pd_floor must be positive");
  if (kmeans_init < 1 || kmeans_iterations < 1) throw ConfigError("k-means settings must be positive");
}

std::vector<std::int64_t> block_layer_edges(const MultilayerNetwork& net, const Membership& e) {
  const int K = e.K;
  const int M = net.n_layers();
  const int N = net.n_nodes();
  const std::size_t words = net.words_per_row();
  std::vector<Word> masks(static_cast<std::size_t>(K) * words, 0);
  for (int i = 0; i < N; ++i) masks[static_cast<std::size_t>(e[i]) * words + i / 64] |= Word{1} << (i % 64);

  std::vector<std::int64_t> out(static_cast<std::size_t>(n_blocks(K)) * M, 0);
  for (int i = 0; i < N; ++i) {
    const int k = e[i];
    for (int l = k; l < K; ++l) {
      const std::span<const Word> mask(masks.data() + static_cast<std::size_t>(l) * words, words);
      const std::size_t base = static_cast<std::size_t>(block_index(k, l, K)) * M;
      for (int b = 0; b < M; ++b) out[base + b] += kernels::popcount_and(net.row(b, i), mask);
    }
  }
  for (int k = 0; k < K; ++k) {
    const std::size_t base = static_cast<std::size_t>(block_index(k, k, K)) * M;
    for (int b = 0; b < M; ++b) out[base + b] /= 2;
  }
  return out;
}

BlockParams init_theta(const MultilayerNetwork& net, const Membership& e, const ParameterSpace& space) {
  const int K = e.K;
  const int M = net.n_layers();
  BlockParams theta(K, M);
  const auto edges = block_layer_edges(net, e);
  const auto sizes = e.community_sizes();
  const double fallback = clamped_quantile(net.n_nodes() >= 2 ? empirical_density(net) : space.rho, space);
  for (int k = 0; k < K; ++k) {
    for (int l = k; l < K; ++l) {
      const int blk = block_index(k, l, K);
      const std::int64_t n_kl = k == l ? static_cast<std::int64_t>(sizes[k]) * (sizes[k] - 1) / 2
                                       : static_cast<std::int64_t>(sizes[k]) * sizes[l];
      Eigen::VectorXd mu(M);
      for (int b = 0; b < M; ++b) {
        mu(b) = n_kl == 0 ? fallback
                          : clamped_quantile(static_cast<double>(edges[static_cast<std::size_t>(blk) * M + b]) /
                                                 static_cast<double>(n_kl),
                                             space);
      }
      theta.mu_block(blk) = project_mu(mu, space);
    }
  }
  return theta;
}

BlockUpdate update_theta_block(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                               std::span<const std::int64_t> counts, std::int64_t node_pairs,
                               const ParameterSpace& space, int block, const FitConfig& config) {
  const int M = static_cast<int>(mu.size());
  const SupportSet& support = space.supports[block];
  BlockUpdate out;
  out.mu = project_mu(mu, space);
  {
    const SigmaProjection p = project_block_sigma(sigma, space, block);
    out.sigma = p.value;
    out.projection_flags += (!p.converged || p.approximate) ? 1 : 0;
  }
  BlockGradient grad;
  double L = block_loglik_and_grad(out.mu, out.sigma, counts, support, grad);
  out.loglik = L;
  if (node_pairs == 0 || M < 2) {
    // M = 1 has no layer pairs, so the pairwise objective is constant.
    return out;
  }
  const double scale_mu = 1.0 / (static_cast<double>(node_pairs) * (M - 1));
  const double scale_sigma = 1.0 / static_cast<double>(node_pairs);
  double step = config.step0;

  for (int t = 0; t < config.t1_max; ++t) {
    bool accepted = false;
    bool stationary = false;
    Eigen::VectorXd mu_new;
    Eigen::MatrixXd sigma_new;
    double L_new = L;
    BlockGradient grad_new;
    for (int bt = 0; bt < config.max_backtracks; ++bt) {
      mu_new = project_mu(out.mu + (step * scale_mu) * grad.mu, space);
      const SigmaProjection p = project_block_sigma(out.sigma + (step * scale_sigma) * grad.sigma, space, block);
      sigma_new = p.value;
      double ascent = grad.mu.dot(mu_new - out.mu);
      for (auto [b, d] : support.pairs()) ascent += grad.sigma(b, d) * (sigma_new(b, d) - out.sigma(b, d));
      if (ascent <= 0.0) {
        // The projected step does not move uphill: stationary on the constraint set.
        stationary = true;
        break;
      }
      L_new = block_loglik_and_grad(mu_new, sigma_new, counts, support, grad_new);
      if (L_new >= L + config.armijo * ascent) {
        accepted = true;
        out.projection_flags += (!p.converged || p.approximate) ? 1 : 0;
        break;
      }
      step *= config.backtrack;
    }
    if (!accepted) {
      out.line_search_failed = !stationary;
      break;
    }
    ++out.iterations;
    const double change = rel_change(L_new, L);
    out.mu = std::move(mu_new);
    out.sigma = std::move(sigma_new);
    grad = std::move(grad_new);
    L = L_new;
    out.last_step = step;
    step = std::min(config.step0, step / config.backtrack);
    if (change < config.delta1) break;
  }
  out.loglik = L;
  return out;
}

SweepResult sweep_membership(const BlockParams& theta, const MultilayerNetwork& net, const Membership& e,
                             NodeCrossCounts& cross) {
  const int N = net.n_nodes();
  const int K = e.K;
  SweepResult res;
  res.membership = e;
  res.loglik_before = total_loglik(theta, cross.block_counts(e));
  res.loglik_after = res.loglik_before;
  if (K == 1) return res;

  const LogCellTable cells(theta);
  std::vector<int> target(N);
  std::vector<double> gain(N, 0.0);
  for (int i = 0; i < N; ++i) {
    int best = e[i];
    double best_score = node_score(i, e[i], cells, cross);
    for (int k = 0; k < K; ++k) {
      if (k == e[i]) continue;
      const double s = node_score(i, k, cells, cross);
      if (s > best_score || (s == best_score && k < best)) {
        best_score = s;
        best = k;
      }
    }
    target[i] = best;
    gain[i] = best == e[i] ? 0.0 : node_move_delta(i, best, cells, e, cross);
  }

  Membership joint(target, K);
  int moved = 0;
  for (int i = 0; i < N; ++i) moved += target[i] != e[i] ? 1 : 0;
  if (moved == 0) return res;

  NodeCrossCounts joint_cross(net, joint);
  const double L_joint = total_loglik(theta, joint_cross.block_counts(joint));
  if (L_joint >= res.loglik_before) {
    res.membership = std::move(joint);
    res.moved = moved;
    res.loglik_after = L_joint;
    cross = std::move(joint_cross);
    return res;
  }

  // Sequential fallback: candidates by decreasing snapshot gain (node id on ties).
  res.sequential_fallback = true;
  std::vector<int> order;
  for (int i = 0; i < N; ++i) {
    if (target[i] != e[i]) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return gain[a] > gain[b]; });
  Membership cur = e;
  int seq_moved = 0;
  for (int i : order) {
    int best = cur[i];
    double best_delta = 0.0;
    for (int k = 0; k < K; ++k) {
      if (k == cur[i]) continue;
      const double d = node_move_delta(i, k, cells, cur, cross);
      if (d > best_delta) {
        best_delta = d;
        best = k;
      }
    }
    if (best != cur[i]) {
      cross.apply_move(net, i, cur[i], best);
      cur.assign[i] = best;
      ++seq_moved;
    }
  }
  res.moved = seq_moved;
  res.loglik_after = total_loglik(theta, cross.block_counts(cur));
  res.membership = std::move(cur);
  return res;
}

FitResult fit_from(const MultilayerNetwork& net, const Membership& e0, const BlockParams& theta0,
                   const ParameterSpace& space, const FitConfig& config) {
  FitResult res;
  res.supports = space.supports;
  Membership e = e0;
  BlockParams theta = theta0;
  NodeCrossCounts cross(net, e);
  BlockCounts counts = cross.block_counts(e);
  double L = total_loglik(theta, counts);
  res.loglik_trace.push_back(L);

  bool theta_current = false;
  for (int t = 0; t < config.t2_max; ++t) {
    const ThetaPass pass = update_all_blocks(theta, counts, space, config);
    res.inner_iterations += pass.iterations;
    res.line_search_failures += pass.failures;
    res.projection_flags += pass.flags;

    SweepResult sw = sweep_membership(theta, net, e, cross);
    ++res.outer_iterations;
    e = std::move(sw.membership);
    counts = cross.block_counts(e);
    const double L_new = sw.loglik_after;
    res.loglik_trace.push_back(L_new);
    const double change = rel_change(L_new, L);
    L = L_new;
    if (sw.moved == 0) {
      theta_current = true;
      if (change < config.delta2) {
        res.converged = true;
        break;
      }
    } else {
      theta_current = false;
    }
  }
  if (!theta_current) {
    const ThetaPass pass = update_all_blocks(theta, counts, space, config);
    res.inner_iterations += pass.iterations;
    res.line_search_failures += pass.failures;
    res.projection_flags += pass.flags;
    L = total_loglik(theta, counts);
    res.loglik_trace.push_back(L);
  }
  res.theta_hat = std::move(theta);
  res.membership_hat = std::move(e);
  return res;
}

Membership align_labels(const Membership& reference, const Membership& other) {
  const DistResult d = dist_min_permutation(reference, other);
  std::vector<int> inverse(other.K);
  for (int k = 0; k < other.K; ++k) inverse[d.perm[k]] = k;
  std::vector<int> a(other.n_nodes());
  for (int i = 0; i < other.n_nodes(); ++i) a[i] = inverse[other[i]];
  return Membership(std::move(a), other.K);
}

FitResult fit(const MultilayerNetwork& net, int K, const ParameterSpace& space_in, const FitConfig& config,
              const Membership* init, const Membership* align_to) {
  config.validate();
  ParameterSpace space = space_in;
  space.pd_floor = config.pd_floor;
  space.validate();
  if (space.K != K) throw ConfigError("parameter space K does not match the requested K");
  if (space.M != net.n_layers()) throw ConfigError("parameter space M does not match the network");
  if (K < 1 || K > net.n_nodes()) throw ConfigError("K must lie in [1, N]");
  if (align_to && (align_to->n_nodes() != net.n_nodes() || align_to->K != K)) {
    throw ConfigError("alignment reference does not match the network or K");
  }
  if (init && (init->n_nodes() != net.n_nodes() || init->K != K)) {
    throw ConfigError("initial membership does not match the network or K");
  }

  FitResult best;
  bool have = false;
  std::vector<double> finals;
  for (int r = 0; r < config.restarts; ++r) {
    const std::uint64_t seed = gen::derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(r));
    Membership e0 = (r == 0 && init) ? *init
                                     : init_membership_spectral(net, K, seed, config.kmeans_init,
                                                                config.kmeans_iterations);
    if (align_to) e0 = align_labels(*align_to, e0);
    BlockParams theta0 = init_theta(net, e0, space);
    if (r > 0) {
      std::mt19937_64 rng(gen::derive_seed(seed, 7));
      std::normal_distribution<double> z(0.0, config.warmup_mu_sd);
      for (int blk = 0; blk < n_blocks(K); ++blk) {
        Eigen::VectorXd& mu = theta0.mu_block(blk);
        for (Eigen::Index b = 0; b < mu.size(); ++b) mu(b) += z(rng);
        mu = project_mu(mu, space);
        theta0.sigma_block(blk) = random_sigma(space, blk, config.warmup_sigma, rng);
      }
    }
    FitResult run = fit_from(net, e0, theta0, space, config);
    run.restart_index = r;
    finals.push_back(run.loglik());
    if (!have || run.loglik() > best.loglik()) {
      best = std::move(run);
      have = true;
    }
  }
  best.restart_logliks = std::move(finals);
  return best;
}

ParameterSpace default_space(const MultilayerNetwork& net, int K, std::vector<SupportSet> supports, double c_l,
                             double c_u, double D) {
  const int M = net.n_layers();
  double rho = net.n_nodes() >= 2 ? empirical_density(net) : 0.5;
  rho = std::clamp(rho, 1e-6, 1.0 - 1e-6);
  ParameterSpace s = ParameterSpace::uniform(K, M, rho, SupportSet::empty(M), c_l, c_u, D);
  if (supports.empty()) supports.assign(n_blocks(K), SupportSet::empty(M));
  if (static_cast<int>(supports.size()) != n_blocks(K)) throw ConfigError("need one support set per unordered block");
  s.supports = std::move(supports);
  return s;
}

}  // namespace mlp
