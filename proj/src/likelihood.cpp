#include "mlp/likelihood.hpp"

#include <algorithm>
#include <cmath>

#include "mlp/error.hpp"
#include "mlp/kernels.hpp"
#include "mlp/probkit.hpp"

namespace mlp {
namespace {

inline double floored_log(double a) { return std::log(a > kCellFloor ? a : kCellFloor); }

std::vector<Word> community_masks(const Membership& e, std::size_t words) {
  std::vector<Word> masks(static_cast<std::size_t>(e.K) * words, 0);
  for (int i = 0; i < e.n_nodes(); ++i) {
    masks[static_cast<std::size_t>(e[i]) * words + i / 64] |= Word{1} << (i % 64);
  }
  return masks;
}

}  // namespace

std::array<double, 4> cell_probs(double mu_b, double mu_d, double sigma_bd) {
  const double a1 = prob::bivariate_normal_cdf(mu_b, mu_d, prob::clamp_corr(sigma_bd));
  const double pb = prob::std_normal_cdf(mu_b);
  const double pd = prob::std_normal_cdf(mu_d);
  return {a1, pb - a1, pd - a1, 1.0 - pb - pd + a1};
}

BlockCounts::BlockCounts(int K, int M) : K_(K), M_(M), P_(n_layer_pairs(M)) {
  data_.assign(static_cast<std::size_t>(n_blocks(K)) * P_ * 4, 0);
  node_pairs_.assign(n_blocks(K), 0);
}

BlockCounts compute_counts(const MultilayerNetwork& net, const Membership& e) {
  if (e.n_nodes() != net.n_nodes()) throw DomainError("membership length does not match network");
  return NodeCrossCounts(net, e).block_counts(e);
}

double block_loglik(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                    std::span<const std::int64_t> counts) {
  const int M = static_cast<int>(mu.size());
  double total = 0.0;
  int p = 0;
  for (int b = 0; b < M; ++b) {
    for (int d = b + 1; d < M; ++d, ++p) {
      const std::int64_t* n = counts.data() + 4 * p;
      if (n[0] + n[1] + n[2] + n[3] == 0) continue;
      const auto a = cell_probs(mu(b), mu(d), sigma(b, d));
      for (int c = 0; c < 4; ++c) {
        if (n[c] != 0) total += static_cast<double>(n[c]) * floored_log(a[c]);
      }
    }
  }
  return total;
}

double total_loglik(const BlockParams& theta, const BlockCounts& counts) {
  double total = 0.0;
  for (int blk = 0; blk < n_blocks(theta.K()); ++blk) {
    if (counts.node_pairs(blk) == 0) continue;
    total += block_loglik(theta.mu_block(blk), theta.sigma_block(blk), counts.block(blk));
  }
  return total;
}

double block_loglik_and_grad(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                             std::span<const std::int64_t> counts, const SupportSet& support,
                             BlockGradient& grad) {
  const int M = static_cast<int>(mu.size());
  grad.mu = Eigen::VectorXd::Zero(M);
  grad.sigma = Eigen::MatrixXd::Zero(M, M);
  Eigen::VectorXd pdf(M);
  for (int b = 0; b < M; ++b) pdf(b) = prob::std_normal_pdf(mu(b));

  double total = 0.0;
  int p = 0;
  for (int b = 0; b < M; ++b) {
    for (int d = b + 1; d < M; ++d, ++p) {
      const std::int64_t* n = counts.data() + 4 * p;
      if (n[0] + n[1] + n[2] + n[3] == 0) continue;
      const double s = prob::clamp_corr(sigma(b, d));
      const auto a = cell_probs(mu(b), mu(d), s);
      double w[4];
      for (int c = 0; c < 4; ++c) {
        if (n[c] == 0) {
          w[c] = 0.0;
          continue;
        }
        total += static_cast<double>(n[c]) * floored_log(a[c]);
        w[c] = a[c] > kCellFloor ? static_cast<double>(n[c]) / a[c] : 0.0;
      }
      const auto g = prob::grad_bivariate_cdf(mu(b), mu(d), s);
      const double mix = w[0] - w[1] - w[2] + w[3];
      grad.mu(b) += g.d_x * mix + pdf(b) * (w[1] - w[3]);
      grad.mu(d) += g.d_y * mix + pdf(d) * (w[2] - w[3]);
      if (support.contains(b, d)) {
        const double gs = g.d_rho * mix;
        grad.sigma(b, d) = gs;
        grad.sigma(d, b) = gs;
      }
    }
  }
  return total;
}

BlockGradient grad_block(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                         std::span<const std::int64_t> counts, const SupportSet& support) {
  BlockGradient g;
  block_loglik_and_grad(mu, sigma, counts, support, g);
  return g;
}

LogCellTable::LogCellTable(const BlockParams& theta)
    : K_(theta.K()), P_(n_layer_pairs(theta.M())) {
  data_.assign(static_cast<std::size_t>(n_blocks(K_)) * P_ * 4, 0.0);
  const int M = theta.M();
  for (int blk = 0; blk < n_blocks(K_); ++blk) {
    const auto& mu = theta.mu_block(blk);
    const auto& sg = theta.sigma_block(blk);
    double* out = data_.data() + static_cast<std::size_t>(blk) * P_ * 4;
    int p = 0;
    for (int b = 0; b < M; ++b) {
      for (int d = b + 1; d < M; ++d, ++p) {
        const auto a = cell_probs(mu(b), mu(d), sg(b, d));
        for (int c = 0; c < 4; ++c) out[4 * p + c] = floored_log(a[c]);
      }
    }
  }
}

NodeCrossCounts::NodeCrossCounts(const MultilayerNetwork& net, const Membership& e)
    : N_(net.n_nodes()), K_(e.K), M_(net.n_layers()), P_(n_layer_pairs(net.n_layers())) {
  if (e.n_nodes() != N_) throw DomainError("membership length does not match network");
  data_.assign(static_cast<std::size_t>(N_) * K_ * P_ * 4, 0);
  const std::size_t words = net.words_per_row();
  const auto masks = community_masks(e, words);
  const auto sizes = e.community_sizes();
  std::vector<std::int32_t> deg(M_);

  for (int i = 0; i < N_; ++i) {
    for (int l = 0; l < K_; ++l) {
      const std::span<const Word> mask(masks.data() + static_cast<std::size_t>(l) * words, words);
      const std::int32_t size = sizes[l] - (e[i] == l ? 1 : 0);
      for (int b = 0; b < M_; ++b) {
        deg[b] = static_cast<std::int32_t>(kernels::popcount_and(net.row(b, i), mask));
      }
      std::int32_t* out = mutable_node(i, l);
      int p = 0;
      for (int b = 0; b < M_; ++b) {
        const auto rb = net.row(b, i);
        for (int d = b + 1; d < M_; ++d, ++p) {
          const auto n11 =
              static_cast<std::int32_t>(kernels::popcount_and3(rb, net.row(d, i), mask));
          const std::int32_t n10 = deg[b] - n11;
          const std::int32_t n01 = deg[d] - n11;
          out[4 * p + 0] = n11;
          out[4 * p + 1] = n10;
          out[4 * p + 2] = n01;
          out[4 * p + 3] = size - n11 - n10 - n01;
        }
      }
    }
  }
}

void NodeCrossCounts::apply_move(const MultilayerNetwork& net, int i, int from, int to) {
  if (from == to) return;
  std::vector<char> bits(M_);
  for (int j = 0; j < N_; ++j) {
    if (j == i) continue;
    for (int b = 0; b < M_; ++b) bits[b] = net.edge(b, i, j);
    std::int32_t* src = mutable_node(j, from);
    std::int32_t* dst = mutable_node(j, to);
    int p = 0;
    for (int b = 0; b < M_; ++b) {
      for (int d = b + 1; d < M_; ++d, ++p) {
        const int slot = 4 * p + pattern_slot(bits[b], bits[d]);
        --src[slot];
        ++dst[slot];
      }
    }
  }
}

BlockCounts NodeCrossCounts::block_counts(const Membership& e) const {
  BlockCounts out(K_, M_);
  const auto sizes = e.community_sizes();
  for (int k = 0; k < K_; ++k) {
    for (int l = k; l < K_; ++l) {
      const std::int64_t sk = sizes[k];
      const std::int64_t sl = sizes[l];
      out.node_pairs(block_index(k, l, K_)) = k == l ? sk * (sk - 1) / 2 : sk * sl;
    }
  }
  if (P_ == 0) return out;
  for (int i = 0; i < N_; ++i) {
    const int k = e[i];
    for (int l = k; l < K_; ++l) {
      auto dst = out.block(block_index(k, l, K_));
      const auto src = node(i, l);
      for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += src[t];
    }
  }
  for (int k = 0; k < K_; ++k) {
    for (auto& v : out.block(block_index(k, k, K_))) v /= 2;
  }
  return out;
}

double node_score(int i, int k, const LogCellTable& log_cells, const NodeCrossCounts& cross) {
  double s = 0.0;
  for (int l = 0; l < cross.K(); ++l) {
    s += kernels::dot_counts(cross.node(i, l), log_cells.block(k, l));
  }
  return s;
}

double node_move_delta(int i, int k_to, const LogCellTable& log_cells, const Membership& e,
                       const NodeCrossCounts& cross) {
  const int k_from = e[i];
  if (k_to == k_from) return 0.0;
  double delta = 0.0;
  for (int l = 0; l < cross.K(); ++l) {
    const auto c = cross.node(i, l);
    const auto to = log_cells.block(k_to, l);
    const auto from = log_cells.block(k_from, l);
    delta += kernels::dot_counts(c, to) - kernels::dot_counts(c, from);
  }
  return delta;
}

}  // namespace mlp
