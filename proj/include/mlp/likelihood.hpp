#pragma once

// Pairwise log-likelihood of the multilayer probit block model.
//
// For block (k, l) and layer pair (b, d) the four joint edge patterns
// (1,1), (1,0), (0,1), (0,0) have probabilities alpha_1..alpha_4 given by the
// bivariate probit with means (mu_b, mu_d) and correlation sigma_bd. The
// log-likelihood is sum over blocks, layer pairs and patterns of
// count * log(alpha). Cells are floored at kCellFloor inside the logs.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mlp/model.hpp"

namespace mlp {

inline constexpr double kCellFloor = 1e-12;

/// Pattern slot for edge indicators (a_b, a_d): (1,1)->0, (1,0)->1, (0,1)->2, (0,0)->3.
inline constexpr int pattern_slot(bool a_b, bool a_d) { return (a_b ? 0 : 2) + (a_d ? 0 : 1); }

/// (alpha_1, alpha_2, alpha_3, alpha_4) before flooring. sigma is clamped to
/// |sigma| <= 1 - 1e-8.
std::array<double, 4> cell_probs(double mu_b, double mu_d, double sigma_bd);

/// Joint pattern counts per unordered block and layer pair. Diagonal blocks
/// count each unordered node pair once.
class BlockCounts {
 public:
  BlockCounts() = default;
  BlockCounts(int K, int M);

  int K() const { return K_; }
  int M() const { return M_; }
  int n_pairs() const { return P_; }

  /// 4 * n_layer_pairs counts of block blk, laid out [pair][slot].
  std::span<std::int64_t> block(int blk) {
    return {data_.data() + static_cast<std::size_t>(blk) * P_ * 4, static_cast<std::size_t>(P_) * 4};
  }
  std::span<const std::int64_t> block(int blk) const {
    return {data_.data() + static_cast<std::size_t>(blk) * P_ * 4, static_cast<std::size_t>(P_) * 4};
  }
  std::int64_t& at(int blk, int pair, int slot) {
    return data_[(static_cast<std::size_t>(blk) * P_ + pair) * 4 + slot];
  }
  std::int64_t at(int blk, int pair, int slot) const {
    return data_[(static_cast<std::size_t>(blk) * P_ + pair) * 4 + slot];
  }

  /// Number of node pairs n_kl in the block.
  std::int64_t& node_pairs(int blk) { return node_pairs_[blk]; }
  std::int64_t node_pairs(int blk) const { return node_pairs_[blk]; }

  friend bool operator==(const BlockCounts&, const BlockCounts&) = default;

 private:
  int K_ = 0;
  int M_ = 0;
  int P_ = 0;
  std::vector<std::int64_t> data_;
  std::vector<std::int64_t> node_pairs_;
};

/// Exact pattern counts over all i < j and b < d.
BlockCounts compute_counts(const MultilayerNetwork& net, const Membership& e);

double block_loglik(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                    std::span<const std::int64_t> counts);

double total_loglik(const BlockParams& theta, const BlockCounts& counts);

struct BlockGradient {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;  // symmetric, zero diagonal and off-support
};

/// Analytic gradient of block_loglik with respect to the block means and the
/// in-support correlations (one parameter per unordered pair).
BlockGradient grad_block(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                         std::span<const std::int64_t> counts, const SupportSet& support);

/// Value and gradient in a single pass.
double block_loglik_and_grad(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                             std::span<const std::int64_t> counts, const SupportSet& support,
                             BlockGradient& grad);

/// log(max(alpha_c, floor)) for every block, layer pair and slot.
class LogCellTable {
 public:
  LogCellTable() = default;
  explicit LogCellTable(const BlockParams& theta);

  std::span<const double> block(int k, int l) const {
    const int blk = block_index(k, l, K_);
    return {data_.data() + static_cast<std::size_t>(blk) * P_ * 4, static_cast<std::size_t>(P_) * 4};
  }
  int K() const { return K_; }

 private:
  int K_ = 0;
  int P_ = 0;
  std::vector<double> data_;
};

/// Per node i and community l, pattern counts over partners j != i with
/// e_j = l, laid out [i][l][pair][slot]. Summing node i over community k
/// gives counts of block (k, l) for k != l and twice the diagonal block
/// counts for k = l.
class NodeCrossCounts {
 public:
  NodeCrossCounts() = default;
  NodeCrossCounts(const MultilayerNetwork& net, const Membership& e);

  int n_nodes() const { return N_; }
  int K() const { return K_; }
  int n_pairs() const { return P_; }

  std::span<const std::int32_t> node(int i, int l) const {
    return {data_.data() + offset(i, l), static_cast<std::size_t>(P_) * 4};
  }

  /// Updates every other node's counts after node i moves from -> to.
  void apply_move(const MultilayerNetwork& net, int i, int from, int to);

  /// Aggregates into block counts; e must be the membership the cache reflects.
  BlockCounts block_counts(const Membership& e) const;

 private:
  std::size_t offset(int i, int l) const {
    return (static_cast<std::size_t>(i) * K_ + l) * P_ * 4;
  }
  std::int32_t* mutable_node(int i, int l) { return data_.data() + offset(i, l); }

  int N_ = 0;
  int K_ = 0;
  int M_ = 0;
  int P_ = 0;
  std::vector<std::int32_t> data_;
};

/// Sum of the likelihood terms that involve node i when it sits in community k.
double node_score(int i, int k, const LogCellTable& log_cells, const NodeCrossCounts& cross);

/// L(e with e_i := k_to) - L(e), using only the terms that involve node i.
double node_move_delta(int i, int k_to, const LogCellTable& log_cells, const Membership& e,
                       const NodeCrossCounts& cross);

}  // namespace mlp
