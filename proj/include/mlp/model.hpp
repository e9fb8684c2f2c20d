#pragma once

// Core data types: the multilayer network, memberships, block parameters and
// the constrained parameter space, plus the projections used by the
// estimator.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlp/kernels.hpp"

namespace mlp {

using kernels::Word;

/// Binary symmetric adjacency tensors on a shared node set. Each layer is a
/// bit-packed N x N matrix; rows are padded to whole 64-bit words.
class MultilayerNetwork {
 public:
  MultilayerNetwork() = default;
  MultilayerNetwork(int n_nodes, int n_layers);

  int n_nodes() const { return n_; }
  int n_layers() const { return m_; }
  std::size_t words_per_row() const { return words_; }

  bool edge(int layer, int i, int j) const;
  /// Sets A_ij = A_ji. Self loops are rejected.
  void set_edge(int layer, int i, int j, bool on = true);
  /// Writes a single directed entry; used when importing dense data that may
  /// violate the invariants (see validate_network).
  void set_entry(int layer, int i, int j, bool on);

  std::span<const Word> row(int layer, int i) const {
    return {bits_.data() + offset(layer, i), words_};
  }

  std::size_t edge_count(int layer) const;
  std::size_t total_edges() const;

  /// Restriction to the listed layers, in order.
  MultilayerNetwork select_layers(std::span<const int> layers) const;
  /// Relabels nodes: node i of the result is node order[i] of this network.
  MultilayerNetwork permute_nodes(std::span<const int> order) const;

  friend bool operator==(const MultilayerNetwork&, const MultilayerNetwork&) = default;

 private:
  std::size_t offset(int layer, int i) const {
    return (static_cast<std::size_t>(layer) * n_ + i) * words_;
  }

  int n_ = 0;
  int m_ = 0;
  std::size_t words_ = 0;
  std::vector<Word> bits_;
};

struct Violation {
  enum class Kind { kSymmetry, kDiagonal, kBinary, kShape };
  Kind kind;
  int layer;
  int i;
  int j;
  std::string message() const;
};

/// Checks symmetry and zero diagonal of every layer. Empty result means ok.
std::vector<Violation> validate_network(const MultilayerNetwork& net);

/// Checks raw dense layers (binary entries, square, equal size, symmetric,
/// zero diagonal) and reports every violation with its layer and index.
std::vector<Violation> validate_dense_layers(std::span<const Eigen::MatrixXi> layers);

/// Builds a network from dense layers; throws DataError on any violation.
MultilayerNetwork network_from_dense(std::span<const Eigen::MatrixXi> layers);

/// rho_hat = 2 / (N (N-1) M) * sum_b sum_{i<j} A_ij^(b).
double empirical_density(const MultilayerNetwork& net);

/// Community assignment, labels in [0, K).
struct Membership {
  std::vector<int> assign;
  int K = 0;

  Membership() = default;
  Membership(std::vector<int> a, int k);

  int n_nodes() const { return static_cast<int>(assign.size()); }
  int operator[](int i) const { return assign[i]; }
  std::vector<int> community_sizes() const;

  friend bool operator==(const Membership&, const Membership&) = default;
};

// Unordered block (k <= l) and layer-pair (b < d) indexing.
inline int n_blocks(int K) { return K * (K + 1) / 2; }
inline int block_index(int k, int l, int K) {
  if (k > l) std::swap(k, l);
  return k * K - k * (k - 1) / 2 + (l - k);
}
std::pair<int, int> block_of(int index, int K);

inline int n_layer_pairs(int M) { return M * (M - 1) / 2; }
inline int pair_index(int b, int d, int M) {
  if (b > d) std::swap(b, d);
  return b * (2 * M - b - 1) / 2 + (d - b - 1);
}
std::pair<int, int> pair_of(int index, int M);

/// Per-block mean vectors and inter-layer correlation matrices. Only k <= l
/// blocks are stored; (l, k) aliases (k, l).
class BlockParams {
 public:
  BlockParams() = default;
  /// Zero means, identity correlations.
  BlockParams(int K, int M);

  int K() const { return K_; }
  int M() const { return M_; }

  Eigen::VectorXd& mu(int k, int l) { return mu_[block_index(k, l, K_)]; }
  const Eigen::VectorXd& mu(int k, int l) const { return mu_[block_index(k, l, K_)]; }
  Eigen::MatrixXd& sigma(int k, int l) { return sigma_[block_index(k, l, K_)]; }
  const Eigen::MatrixXd& sigma(int k, int l) const { return sigma_[block_index(k, l, K_)]; }

  Eigen::VectorXd& mu_block(int blk) { return mu_[blk]; }
  const Eigen::VectorXd& mu_block(int blk) const { return mu_[blk]; }
  Eigen::MatrixXd& sigma_block(int blk) { return sigma_[blk]; }
  const Eigen::MatrixXd& sigma_block(int blk) const { return sigma_[blk]; }

  /// Relabels communities: block (k, l) of the result is block (perm[k], perm[l]).
  BlockParams relabel(std::span<const int> perm) const;

 private:
  int K_ = 0;
  int M_ = 0;
  std::vector<Eigen::VectorXd> mu_;
  std::vector<Eigen::MatrixXd> sigma_;
};

/// Off-diagonal support of a correlation block; pairs stored with b < d,
/// sorted. The diagonal is implicitly always in the support.
class SupportSet {
 public:
  SupportSet() = default;
  SupportSet(int M, std::vector<std::pair<int, int>> pairs);

  static SupportSet full(int M);
  static SupportSet empty(int M) { return SupportSet(M, {}); }
  static SupportSet band(int M, int width);
  /// Off-diagonal nonzeros of a matrix (|x| > tol).
  static SupportSet of_matrix(const Eigen::MatrixXd& X, double tol = 0.0);

  int M() const { return M_; }
  int size() const { return static_cast<int>(pairs_.size()); }
  bool contains(int b, int d) const;
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  /// Symmetric 0/1 mask with unit diagonal.
  Eigen::MatrixXd mask() const;

  friend bool operator==(const SupportSet&, const SupportSet&) = default;

 private:
  int M_ = 0;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<char> dense_;  // M*M membership table
};

enum class SupportScenario { kSparseCovariance, kSparsePrecision };

/// The feasible region: c_l rho <= Phi(mu) <= c_u rho for every mean entry,
/// correlation blocks with the prescribed support and |off-diagonal| <= D.
struct ParameterSpace {
  double c_l = 0.1;
  double c_u = 10.0;
  double rho = 0.1;
  double D = 0.9;
  double pd_floor = 1e-6;
  SupportScenario scenario = SupportScenario::kSparseCovariance;
  int K = 1;
  int M = 1;
  std::vector<SupportSet> supports;  // one per unordered block

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  const SupportSet& support(int k, int l) const { return supports[block_index(k, l, K)]; }

  /// Box for mu entries: [Phi^{-1}(c_l rho), Phi^{-1}(c_u rho)] (upper may be +inf).
  std::pair<double, double> mu_bounds() const;

  /// Convenience constructor with the same support for every block. If
  /// c_u * rho exceeds 1 the upper constant is capped at 1 / rho.
  static ParameterSpace uniform(int K, int M, double rho, const SupportSet& support,
                                double c_l = 0.1, double c_u = 10.0, double D = 0.9);
};

// --- projections -----------------------------------------------------------

/// Coordinate-wise clamp onto the mean box.
Eigen::VectorXd project_mu(const Eigen::VectorXd& mu, const ParameterSpace& space);

struct SigmaProjection {
  Eigen::MatrixXd value;
  bool converged = true;
  bool approximate = false;
  int iterations = 0;
};

struct ProjectionOptions {
  int max_iterations = 200;
  double tolerance = 1e-10;
};

/// Dykstra alternating projection onto {unit diagonal, zero off-support,
/// |off-diagonal| <= D} intersected with {lambda_min >= pd_floor}. The
/// returned matrix always satisfies the box constraints exactly; if the
/// iteration does not converge the off-diagonals are shrunk towards the
/// identity until the eigenvalue floor holds and converged is false.
SigmaProjection project_sigma(const Eigen::MatrixXd& S, const SupportSet& support, double D,
                              double pd_floor, const ProjectionOptions& opts = {});

/// Approximate projection for the sparse-precision scenario: the support is
/// imposed on the inverse. Always flagged approximate.
SigmaProjection project_sigma_precision(const Eigen::MatrixXd& S, const SupportSet& support,
                                        double D, double pd_floor);

/// Projection of block (k, l) according to the space's scenario.
SigmaProjection project_block_sigma(const Eigen::MatrixXd& S, const ParameterSpace& space,
                                    int block);

/// Scales the off-diagonal part of a unit-diagonal matrix by a common
/// factor so that lambda_min >= floor; returns C unchanged if it already holds.
Eigen::MatrixXd shrink_to_floor(const Eigen::MatrixXd& C, double floor);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& S);

}  // namespace mlp
