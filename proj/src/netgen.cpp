#include "mlp/netgen.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "mlp/error.hpp"
#include "mlp/probkit.hpp"

namespace mlp::gen {
namespace {

constexpr int kDenseCholeskyEdges = 10000;
constexpr double kSparseFillLimit = 0.05;
constexpr int kMaxRepairRounds = 5;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Streams used by sample_network.
enum Stream : std::uint64_t {
  kMembershipStream = 1,
  kThetaStream = 2,
  kEdgeCorrStream = 3,
  kNoiseStream = 4,
  kIsingStream = 5,
};

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of a correlation block failed");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Membership sample_membership(const GenConfig& c, std::mt19937_64& rng) {
  std::discrete_distribution<int> pick(c.community_probs.begin(), c.community_probs.end());
  std::vector<int> a(c.N);
  for (auto& v : a) v = pick(rng);
  return Membership(std::move(a), c.K);
}

Eigen::MatrixXd sample_sigma(const SigmaScheme& s, int M, std::mt19937_64& rng) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(M, M);
  using Kind = SigmaScheme::Kind;
  switch (s.kind) {
    case Kind::kIdentity:
      break;
    case Kind::kFirstOffDiagonalUniform: {
      std::uniform_real_distribution<double> u(-s.scale, s.scale);
      for (int b = 0; b + 1 < M; ++b) S(b, b + 1) = S(b + 1, b) = s.scale > 0 ? u(rng) : 0.0;
      break;
    }
    case Kind::kBandNormal: {
      const double sd = std::sqrt(s.variance);
      std::normal_distribution<double> z(0.0, 1.0);
      for (int b = 0; b < M; ++b) {
        for (int d = b + 1; d < M && d - b <= s.band; ++d) {
          S(b, d) = S(d, b) = s.scale - s.slope * (d - b) + sd * z(rng);
        }
      }
      break;
    }
    case Kind::kRandomPositions: {
      std::vector<int> slots(n_layer_pairs(M));
      std::iota(slots.begin(), slots.end(), 0);
      const int take = std::min<int>(s.positions, static_cast<int>(slots.size()));
      for (int t = 0; t < take; ++t) {
        std::uniform_int_distribution<int> pick(t, static_cast<int>(slots.size()) - 1);
        std::swap(slots[t], slots[pick(rng)]);
      }
      std::uniform_real_distribution<double> mag(s.lo, s.hi);
      std::bernoulli_distribution sign(0.5);
      for (int t = 0; t < take; ++t) {
        const auto [b, d] = pair_of(slots[t], M);
        const double v = mag(rng);
        S(b, d) = S(d, b) = sign(rng) ? v : -v;
      }
      break;
    }
  }
  for (int b = 0; b < M; ++b) {
    for (int d = 0; d < M; ++d) {
      if (b != d) S(b, d) = std::clamp(S(b, d), -0.99, 0.99);
    }
  }
  if (M > 1 && min_eigenvalue(S) < s.pd_floor) S = shrink_to_floor(S, s.pd_floor);
  return S;
}

// Exact marginals of the per-pair Ising vector by enumeration.
Eigen::VectorXd ising_marginals(double h, double J, int M) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(M);
  if (M > 20) return Eigen::VectorXd::Constant(M, std::nan(""));
  double z = 0.0;
  for (std::uint32_t x = 0; x < (1u << M); ++x) {
    const int ones = std::popcount(x);
    const double w = std::exp(h * ones + J * ones * (ones - 1) / 2.0);
    z += w;
    for (int b = 0; b < M; ++b) {
      if (x >> b & 1u) m(b) += w;
    }
  }
  return m / z;
}

double ising_field(const IsingScheme& s, int k, int l) {
  return s.field_scale * s.u + s.field_offset + (k == l ? s.assortative : 0.0);
}

std::pair<MultilayerNetwork, GroundTruth> sample_ising(const GenConfig& c) {
  const IsingScheme& s = *c.ising;
  std::mt19937_64 mrng(derive_seed(c.seed, kMembershipStream));
  GroundTruth truth;
  truth.model = "ising";
  truth.membership = sample_membership(c, mrng);
  truth.theta = BlockParams(c.K, c.M);
  truth.supports.assign(n_blocks(c.K), SupportSet::empty(c.M));
  for (int k = 0; k < c.K; ++k) {
    for (int l = k; l < c.K; ++l) {
      const Eigen::VectorXd marg = ising_marginals(ising_field(s, k, l), s.coupling, c.M);
      Eigen::VectorXd mu(c.M);
      for (int b = 0; b < c.M; ++b) {
        const double p = std::clamp(marg(b), 1e-12, 1.0 - 1e-12);
        mu(b) = std::isnan(marg(b)) ? 0.0 : prob::std_normal_quantile(p);
      }
      truth.theta.mu(k, l) = mu;
    }
  }
  truth.R.dim = c.N * (c.N - 1) / 2;
  truth.R.offdiag.resize(truth.R.dim, truth.R.dim);

  MultilayerNetwork net(c.N, c.M);
  std::mt19937_64 rng(derive_seed(c.seed, kIsingStream));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<char> x(c.M);
  for (int i = 0; i < c.N; ++i) {
    for (int j = i + 1; j < c.N; ++j) {
      const double h = ising_field(s, truth.membership[i], truth.membership[j]);
      std::fill(x.begin(), x.end(), 0);
      int ones = 0;
      for (int sweep = 0; sweep < s.sweeps; ++sweep) {
        for (int b = 0; b < c.M; ++b) {
          ones -= x[b];
          const double eta = h + s.coupling * ones;
          x[b] = unif(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
          ones += x[b];
        }
      }
      for (int b = 0; b < c.M; ++b) {
        if (x[b]) net.set_edge(b, i, j);
      }
    }
  }
  return {std::move(net), std::move(truth)};
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

Eigen::MatrixXd EdgeCorrelation::dense() const {
  Eigen::MatrixXd R = Eigen::MatrixXd(offdiag);
  R.diagonal().setOnes();
  return R;
}

double lanczos_min_eigenvalue(const Eigen::SparseMatrix<double>& A, int max_steps,
                              std::uint64_t seed) {
  const Eigen::Index n = A.rows();
  if (n == 0) return std::numeric_limits<double>::infinity();
  const int steps = static_cast<int>(std::min<Eigen::Index>(n, max_steps));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);

  Eigen::MatrixXd Q(n, steps);
  Eigen::VectorXd q(n);
  for (Eigen::Index t = 0; t < n; ++t) q(t) = z(rng);
  q.normalize();
  std::vector<double> alpha;
  std::vector<double> beta;
  Eigen::VectorXd w(n);
  int m = 0;
  for (; m < steps; ++m) {
    Q.col(m) = q;
    w = A * q;
    const double a = q.dot(w);
    alpha.push_back(a);
    // Full reorthogonalization, applied twice for stability.
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd h = Q.leftCols(m + 1).transpose() * w;
      w -= Q.leftCols(m + 1) * h;
    }
    const double b = w.norm();
    beta.push_back(b);
    if (b < 1e-12 * std::max(1.0, std::abs(a))) {
      ++m;
      break;
    }
    q = w / b;
  }
  const int k = static_cast<int>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
  for (int t = 0; t < k; ++t) {
    T(t, t) = alpha[t];
    if (t + 1 < k) T(t, t + 1) = T(t + 1, t) = beta[t];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  if (es.info() != Eigen::Success) throw NumericalError("Lanczos tridiagonal eigensolve failed");
  const double theta = es.eigenvalues()(0);
  const double residual = std::abs(beta[k - 1] * es.eigenvectors()(k - 1, 0));
  return theta - residual;
}

EdgeCorrelation build_edge_correlation(int n_edges, double tau, std::pair<double, double> corr_range,
                                       std::uint64_t seed) {
  if (n_edges < 0) throw ConfigError("edge count must be nonnegative");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("edge-correlation density tau must lie in [0, 1]");
  const auto [lo, hi] = corr_range;
  if (!(lo > -1.0 && hi < 1.0 && lo <= hi)) throw ConfigError("corr_range must be an interval inside (-1, 1)");

  EdgeCorrelation R;
  R.dim = n_edges;
  R.tau = tau;
  R.corr_range = corr_range;
  R.seed = seed;
  R.offdiag.resize(n_edges, n_edges);
  if (tau == 0.0 || n_edges < 2) return R;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> value(lo, hi);
  std::vector<Eigen::Triplet<double>> trip;
  const double expected = tau * static_cast<double>(n_edges) * (n_edges - 1);
  trip.reserve(static_cast<std::size_t>(std::min(expected * 1.05 + 16, 4e8)));
  if (tau >= 1.0) {
    for (int e = 0; e < n_edges; ++e) {
      for (int f = e + 1; f < n_edges; ++f) {
        const double v = lo == hi ? lo : value(rng);
        trip.emplace_back(e, f, v);
        trip.emplace_back(f, e, v);
      }
    }
  } else {
    // Geometric skips over the row-major list of pairs e < f.
    std::geometric_distribution<std::int64_t> skip(tau);
    for (int e = 0; e < n_edges; ++e) {
      std::int64_t f = e + 1 + skip(rng);
      while (f < n_edges) {
        const double v = lo == hi ? lo : value(rng);
        trip.emplace_back(e, static_cast<int>(f), v);
        trip.emplace_back(static_cast<int>(f), e, v);
        f += 1 + skip(rng);
      }
    }
  }
  R.offdiag.setFromTriplets(trip.begin(), trip.end());
  trip.clear();
  trip.shrink_to_fit();

  auto estimate = [&]() {
    if (n_edges <= 400) return 1.0 + min_eigenvalue(Eigen::MatrixXd(R.offdiag));
    return 1.0 + lanczos_min_eigenvalue(R.offdiag, 200, derive_seed(seed, 1000));
  };
  // Scaling the off-diagonal by zeta maps lambda to 1 - zeta (1 - lambda)
  // exactly, so later rounds reuse the first estimate.
  double lam = estimate();
  while (lam < kEdgeCorrFloor) {
    if (R.repair_rounds == kMaxRepairRounds) {
      throw NumericalError("edge-correlation repair did not reach lambda_min >= 1e-4 after " +
                           std::to_string(kMaxRepairRounds) + " rounds (lambda_min estimate " +
                           std::to_string(lam) + ", zeta " + std::to_string(R.zeta) + ")");
    }
    const double zeta = (1.0 - kEdgeCorrFloor) / (1.0 - lam);
    R.offdiag *= zeta;
    R.zeta *= zeta;
    ++R.repair_rounds;
    lam = std::max(kEdgeCorrFloor, 1.0 - zeta * (1.0 - lam));
  }
  R.lambda_min = lam;
  return R;
}

Eigen::MatrixXd sample_edge_noise(const EdgeCorrelation& R, int M, std::uint64_t seed) {
  const int n = R.dim;
  Eigen::MatrixXd Z(n, M);
  for (int b = 0; b < M; ++b) {
    std::mt19937_64 rng(derive_seed(seed, 100 + static_cast<std::uint64_t>(b)));
    std::normal_distribution<double> z(0.0, 1.0);
    for (int t = 0; t < n; ++t) Z(t, b) = z(rng);
  }
  if (R.nnz_offdiag() == 0) return Z;

  const double fill = static_cast<double>(R.nnz_offdiag()) / (static_cast<double>(n) * n);
  if (n < kDenseCholeskyEdges || fill > kSparseFillLimit) {
    Eigen::MatrixXd A = R.dense();
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(A);
    if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization of the edge correlation failed");
    const Eigen::MatrixXd U = A.triangularView<Eigen::Lower>() * Z;
    return U;
  }
  Eigen::SparseMatrix<double> A = R.offdiag;
  for (int t = 0; t < n; ++t) A.coeffRef(t, t) = 1.0;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A);
  if (llt.info() != Eigen::Success) throw NumericalError("sparse Cholesky factorization of the edge correlation failed");
  const Eigen::MatrixXd LZ = llt.matrixL() * Z;
  return llt.permutationPinv() * LZ;
}

MultilayerNetwork sample_given(const Membership& e, const BlockParams& theta,
                               const Eigen::MatrixXd& u_layers, int N) {
  const int M = theta.M();
  const int K = theta.K();
  if (e.n_nodes() != N) throw DomainError("membership length does not match N");
  if (u_layers.rows() != static_cast<Eigen::Index>(N) * (N - 1) / 2 || u_layers.cols() != M) {
    throw DomainError("edge noise has the wrong shape");
  }
  std::vector<Eigen::MatrixXd> roots(n_blocks(K));
  for (int blk = 0; blk < n_blocks(K); ++blk) roots[blk] = symmetric_sqrt(theta.sigma_block(blk));

  MultilayerNetwork net(N, M);
  Eigen::VectorXd eps(M);
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      const int blk = block_index(e[i], e[j], K);
      eps.noalias() = roots[blk] * u_layers.row(edge_index(i, j, N)).transpose();
      const Eigen::VectorXd& mu = theta.mu_block(blk);
      for (int b = 0; b < M; ++b) {
        if (mu(b) + eps(b) > 0.0) net.set_edge(b, i, j);
      }
    }
  }
  return net;
}

void GenConfig::validate() const {
  if (N < 2) throw ConfigError("N must be at least 2");
  if (M < 1) throw ConfigError("M must be at least 1");
  if (K < 1 || K > N) throw ConfigError("K must lie in [1, N]");
  if (static_cast<int>(community_probs.size()) != K) throw ConfigError("community_probs must have K entries");
  double total = 0.0;
  for (double p : community_probs) {
    if (!(p >= 0.0)) throw ConfigError("community_probs entries must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("community_probs must sum to 1");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (!(corr_range.first > -1.0 && corr_range.second < 1.0 && corr_range.first <= corr_range.second)) {
    throw ConfigError("corr_range must be an interval inside (-1, 1)");
  }
  if (!(mu.variance >= 0.0)) throw ConfigError("mu variance must be nonnegative");
  if (!(sigma.pd_floor > 0.0 && sigma.pd_floor < 1.0)) throw ConfigError("sigma pd_floor must lie in (0, 1)");
  if (ising && ising->sweeps < 1) throw ConfigError("Ising sweeps must be positive");
}

BlockParams sample_theta(const GenConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const double sd = std::sqrt(c.mu.variance);
  BlockParams theta(c.K, c.M);
  for (int k = 0; k < c.K; ++k) {
    for (int l = k; l < c.K; ++l) {
      const double mean = k == l ? c.mu.diag_mean : c.mu.offdiag_mean;
      Eigen::VectorXd& mu = theta.mu(k, l);
      for (int b = 0; b < c.M; ++b) mu(b) = mean + sd * z(rng);
      theta.sigma(k, l) = sample_sigma(c.sigma, c.M, rng);
    }
  }
  return theta;
}

std::pair<MultilayerNetwork, GroundTruth> sample_network(const GenConfig& c) {
  c.validate();
  if (c.ising) return sample_ising(c);

  GroundTruth truth;
  std::mt19937_64 mrng(derive_seed(c.seed, kMembershipStream));
  truth.membership = sample_membership(c, mrng);
  truth.theta = sample_theta(c, derive_seed(c.seed, kThetaStream));
  truth.supports.reserve(n_blocks(c.K));
  for (int blk = 0; blk < n_blocks(c.K); ++blk) {
    truth.supports.push_back(SupportSet::of_matrix(truth.theta.sigma_block(blk)));
  }
  const int n_edges = c.N * (c.N - 1) / 2;
  truth.R = build_edge_correlation(n_edges, c.tau, c.corr_range, derive_seed(c.seed, kEdgeCorrStream));
  const Eigen::MatrixXd u = sample_edge_noise(truth.R, c.M, derive_seed(c.seed, kNoiseStream));
  MultilayerNetwork net = sample_given(truth.membership, truth.theta, u, c.N);
  return {std::move(net), std::move(truth)};
}

}  // namespace mlp::gen
