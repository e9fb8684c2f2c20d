#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mlp/error.hpp"
#include "mlp/fit.hpp"
#include "mlp/netgen.hpp"

namespace mlp {
namespace {

struct KMeansRun {
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

KMeansRun lloyd(const Eigen::MatrixXd& X, Eigen::MatrixXd centers, int max_iterations) {
  const Eigen::Index n = X.rows();
  const Eigen::Index K = centers.rows();
  KMeansRun run;
  run.labels.assign(n, 0);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < K; ++k) {
        const double d = (X.row(i) - centers.row(k)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(k);
        }
      }
      if (run.labels[i] != best) changed = true;
      run.labels[i] = best;
      inertia += best_d;
    }
    run.inertia = inertia;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, X.cols());
    std::vector<int> sizes(K, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(run.labels[i]) += X.row(i);
      ++sizes[run.labels[i]];
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      if (sizes[k] > 0) centers.row(k) = sums.row(k) / sizes[k];
    }
    if (!changed && it > 0) break;
  }
  return run;
}

// k-means++ seeding; random draws index points through `order`, which is a
// function of the embedding only.
Eigen::MatrixXd plus_plus(const Eigen::MatrixXd& X, int K, const std::vector<int>& order,
                          std::mt19937_64& rng) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd centers(K, X.cols());
  std::uniform_int_distribution<int> first(0, n - 1);
  centers.row(0) = X.row(order[first(rng)]);
  std::vector<double> d2(n);
  for (int k = 1; k < K; ++k) {
    double total = 0.0;
    for (int t = 0; t < n; ++t) {
      const int i = order[t];
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) best = std::min(best, (X.row(i) - centers.row(c)).squaredNorm());
      d2[t] = best;
      total += best;
    }
    int pick = order[first(rng)];
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (int t = 0; t < n; ++t) {
        r -= d2[t];
        if (r <= 0.0) {
          pick = order[t];
          break;
        }
      }
    }
    centers.row(k) = X.row(pick);
  }
  return centers;
}

// Farthest-point seeding from the point farthest from the centroid.
Eigen::MatrixXd farthest_point(const Eigen::MatrixXd& X, int K, const std::vector<int>& order) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd centers(K, X.cols());
  centers.row(0) = X.row(order[n - 1]);
  std::vector<double> mind(n, std::numeric_limits<double>::infinity());
  for (int k = 1; k < K; ++k) {
    int pick = order[0];
    double best = -1.0;
    for (int t = 0; t < n; ++t) {
      const int i = order[t];
      mind[i] = std::min(mind[i], (X.row(i) - centers.row(k - 1)).squaredNorm());
      if (mind[i] > best) {
        best = mind[i];
        pick = i;
      }
    }
    centers.row(k) = X.row(pick);
  }
  return centers;
}

}  // namespace

Membership init_membership_spectral(const MultilayerNetwork& net, int K, std::uint64_t seed, int n_init,
                                    int max_iterations) {
  const int N = net.n_nodes();
  if (K < 1 || K > N) throw ConfigError("K must lie in [1, N]");
  if (K == 1) return Membership(std::vector<int>(N, 0), 1);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  for (int b = 0; b < net.n_layers(); ++b) {
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        if (net.edge(b, i, j)) {
          A(i, j) += 1.0;
          A(j, i) += 1.0;
        }
      }
    }
  }
  // Centering by the mean off-diagonal weight removes the degree direction.
  const double mean_w = A.sum() / (static_cast<double>(N) * (N - 1));
  A.array() -= mean_w;
  A.diagonal().setZero();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of the aggregate adjacency failed");
  // Assortative signal sits in the K - 1 largest eigenvalues once the
  // degree direction is gone; columns are scaled by their eigenvalue.
  const Eigen::VectorXd& ev = es.eigenvalues();
  Eigen::MatrixXd X(N, K - 1);
  for (int k = 0; k < K - 1; ++k) X.col(k) = es.eigenvectors().col(N - 1 - k) * std::max(ev(N - 1 - k), 0.0);

  // Canonical order: squared distance from the embedding centroid, rounded so
  // that roundoff from a relabeled input does not reorder points.
  const Eigen::RowVectorXd centroid = X.colwise().mean();
  std::vector<double> key(N);
  for (int i = 0; i < N; ++i) key[i] = std::round((X.row(i) - centroid).squaredNorm() * 1e9);
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });

  KMeansRun best = lloyd(X, farthest_point(X, K, order), max_iterations);
  std::mt19937_64 rng(gen::derive_seed(seed, 0x5eed));
  for (int r = 1; r < n_init; ++r) {
    KMeansRun run = lloyd(X, plus_plus(X, K, order, rng), max_iterations);
    if (run.inertia < best.inertia - 1e-12 * std::max(1.0, best.inertia)) best = std::move(run);
  }

  // Relabel by first appearance in canonical order so labels do not depend on
  // the seeding path.
  std::vector<int> remap(K, -1);
  int next = 0;
  for (int t = 0; t < N; ++t) {
    int& r = remap[best.labels[order[t]]];
    if (r < 0) r = next++;
  }
  for (auto& r : remap) {
    if (r < 0) r = next++;
  }
  std::vector<int> labels(N);
  for (int i = 0; i < N; ++i) labels[i] = remap[best.labels[i]];
  return Membership(std::move(labels), K);
}

}  // namespace mlp
