#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mlp/error.hpp"
#include "mlp/metrics.hpp"
#include "mlp/netgen.hpp"
#include "mlp/support.hpp"
#include "oracles.hpp"

using namespace mlp;

namespace {

// K = 1, two layers with correlation s, independent edges.
MultilayerNetwork correlated_pair(int N, double mu, double s, std::uint64_t seed) {
  const Membership e(std::vector<int>(N, 0), 1);
  BlockParams th(1, 2);
  th.mu(0, 0).setConstant(mu);
  th.sigma(0, 0)(0, 1) = th.sigma(0, 0)(1, 0) = s;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd u(N * (N - 1) / 2, 2);
  for (Eigen::Index r = 0; r < u.rows(); ++r) u(r, 0) = z(rng), u(r, 1) = z(rng);
  return gen::sample_given(e, th, u, N);
}

PairEstimate make_estimate(int b, int d, const Eigen::MatrixXd& s) {
  PairEstimate p;
  p.b = b;
  p.d = d;
  p.sigma0 = s;
  return p;
}

std::vector<PairEstimate> random_estimates(int K, int M, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  std::vector<PairEstimate> out;
  for (int b = 0; b < M; ++b)
    for (int d = b + 1; d < M; ++d) {
      Eigen::MatrixXd s(K, K);
      for (int k = 0; k < K; ++k)
        for (int l = k; l < K; ++l) s(k, l) = s(l, k) = u(rng);
      out.push_back(make_estimate(b, d, s));
    }
  return out;
}

bool subset(const SupportSet& a, const SupportSet& b) {
  for (auto [x, y] : a.pairs())
    if (!b.contains(x, y)) return false;
  return true;
}

}  // namespace

TEST(FitLayerPair, Preconditions) {
  std::mt19937_64 rng(1);
  const auto net = oracle::random_network(20, 3, 0.3, rng);
  const auto sp = default_space(net, 2, {});
  EXPECT_THROW(fit_layer_pair(net, 1, 1, 2, FitConfig{}, sp), DomainError);
  EXPECT_THROW(fit_layer_pair(net, 2, 1, 2, FitConfig{}, sp), DomainError);
  EXPECT_THROW(fit_layer_pair(net, 1, 3, 2, FitConfig{}, sp), DomainError);
}

TEST(FitLayerPair, RecoversCorrelation) {
  int null_ok = 0, alt_ok = 0;
  const int reps = 10;
  for (int r = 0; r < reps; ++r) {
    const auto n0 = correlated_pair(100, -0.5, 0.0, 10 + r);
    const auto n1 = correlated_pair(100, -0.5, 0.5, 50 + r);
    const auto p0 = fit_layer_pair(n0, 0, 1, 1, FitConfig{}, default_space(n0, 1, {}));
    const auto p1 = fit_layer_pair(n1, 0, 1, 1, FitConfig{}, default_space(n1, 1, {}));
    null_ok += std::abs(p0.sigma0(0, 0)) < 0.1;
    alt_ok += std::abs(p1.sigma0(0, 0) - 0.5) < 0.15;
    EXPECT_LT(std::abs(p1.sigma0(0, 0)), 1.0);
  }
  EXPECT_GE(null_ok, reps - 1);
  EXPECT_GE(alt_ok, reps - 1);
}

TEST(AlignMemberships, IdentitySwapAndBruteForce) {
  const Membership a({0, 0, 1, 1, 2, 2}, 3);
  EXPECT_EQ(align_memberships(a, a), (std::vector<int>{0, 1, 2}));
  const Membership swapped({1, 1, 0, 0, 2, 2}, 3);
  const auto p = align_memberships(a, swapped);
  EXPECT_EQ(p, (std::vector<int>{1, 0, 2}));
  EXPECT_EQ(align_labels(a, swapped), a);

  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const int K = 2 + t % 5, N = 30;
    const Membership r(oracle::random_labels(N, K, rng), K), o(oracle::random_labels(N, K, rng), K);
    const auto perm = align_memberships(r, o);
    int miss = 0;
    for (int i = 0; i < N; ++i) miss += o[i] != perm[r[i]];
    EXPECT_NEAR(static_cast<double>(miss) / N, oracle::dist_enumerate(r.assign, o.assign, K), 1e-15);
  }
  EXPECT_THROW(align_memberships(a, Membership({0, 1}, 3)), DomainError);
}

TEST(ThresholdSupport, Degenerate) {
  std::mt19937_64 rng(3);
  const int K = 2, M = 4;
  const auto est = random_estimates(K, M, rng);
  for (const auto& s : threshold_support(est, K, M, 0.7)) EXPECT_EQ(s.size(), 0);
  for (const auto& s : threshold_support(est, K, M, 1e-300)) EXPECT_EQ(s.size(), n_layer_pairs(M));
  auto bad = est;
  bad[0].d = 9;
  EXPECT_THROW(threshold_support(bad, K, M, 0.1), DomainError);
}

TEST(ThresholdSupport, MonotoneInLambda) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const int K = 1 + t % 3, M = 3 + t % 4;
    const auto est = random_estimates(K, M, rng);
    auto prev = threshold_support(est, K, M, 0.0);
    for (double lam = 0.05; lam < 0.7; lam += 0.05) {
      const auto cur = threshold_support(est, K, M, lam);
      for (int blk = 0; blk < n_blocks(K); ++blk) EXPECT_TRUE(subset(cur[blk], prev[blk]));
      prev = cur;
    }
  }
}

TEST(ThresholdSupport, RelabelingPermutesSupports) {
  std::mt19937_64 rng(5);
  const int K = 3, M = 5;
  const auto est = random_estimates(K, M, rng);
  const std::vector<int> perm{2, 0, 1};
  auto relabeled = est;
  for (auto& p : relabeled) p.sigma0 = aligned_sigma(p, perm);
  const auto a = threshold_support(est, K, M, 0.3);
  const auto b = threshold_support(relabeled, K, M, 0.3);
  for (int k = 0; k < K; ++k)
    for (int l = k; l < K; ++l) EXPECT_EQ(b[block_index(k, l, K)], a[block_index(perm[k], perm[l], K)]);
}

TEST(ThresholdSupport, FailedPairsAreIndependent) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(1, 1, 0.5);
  auto p = make_estimate(0, 1, s);
  p.failed = true;
  EXPECT_EQ(threshold_support({p}, 1, 2, 0.1)[0].size(), 0);
}

TEST(DefaultLambda, Rate) {
  EXPECT_NEAR(default_lambda(20, 100), 2.0 * std::sqrt(std::log(20.0) / 100.0), 1e-15);
  EXPECT_EQ(default_lambda(20, 0), 1.0);
}

TEST(UnknownSupport, TwoLayersMatchDirectFit) {
  auto c = gen::preset(2, 0.5, 3);
  c.N = 60;
  c.M = 2;
  c.K = 2;
  c.community_probs = {0.5, 0.5};
  const auto [net, truth] = gen::sample_network(c);
  SupportConfig sc;
  const auto tmpl = default_space(net, 2, {});
  const auto r = fit_unknown_support(net, 2, tmpl, sc);
  EXPECT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.reference, r.pairs[0].membership);
  const auto direct = fit(net, 2, default_space(net, 2, r.supports), sc.final_fit, nullptr, &r.reference);
  EXPECT_NEAR(r.fit.loglik(), direct.loglik(), 1e-6);
  EXPECT_EQ(r.fit.supports, r.supports);
}

TEST(UnknownSupport, IndependentLayersGiveSparseSupports) {
  auto c = gen::preset(2, 0.5, 4);
  c.N = 60;
  c.M = 6;
  c.K = 2;
  c.community_probs = {0.5, 0.5};
  c.sigma.kind = gen::SigmaScheme::Kind::kIdentity;
  const auto [net, truth] = gen::sample_network(c);
  const auto tmpl = default_space(net, 2, {});
  const auto r = fit_unknown_support(net, 2, tmpl, SupportConfig{});
  int selected = 0;
  for (const auto& s : r.supports) selected += s.size();
  // Mostly empty: at most a fifth of the 3 x 15 candidate pairs.
  EXPECT_LE(selected, 9);
  EXPECT_TRUE(r.failed_pairs.empty());
  EXPECT_EQ(r.reference, r.pairs.front().membership);
  const auto ks = fit(net, 2, default_space(net, 2, truth.supports), FitConfig{});
  EXPECT_LE(std::abs(err_pair_mismatch(r.fit.membership_hat, truth.membership) -
                     err_pair_mismatch(ks.membership_hat, truth.membership)),
            0.05);
}

TEST(UnknownSupport, BandBudgetAndPairSet) {
  std::mt19937_64 rng(6);
  const auto net = oracle::random_network(20, 5, 0.3, rng);
  const auto tmpl = default_space(net, 2, {});
  SupportConfig sc;
  sc.band_budget = 1;
  EXPECT_EQ(fit_unknown_support(net, 2, tmpl, sc).pairs.size(), 4u);
  sc.pair_set = {{0, 4}, {1, 2}};
  EXPECT_EQ(fit_unknown_support(net, 2, tmpl, sc).pairs.size(), 2u);
  sc.pair_set = {{2, 2}};
  EXPECT_THROW(fit_unknown_support(net, 2, tmpl, sc), ConfigError);
  MultilayerNetwork one(10, 1);
  EXPECT_THROW(fit_unknown_support(one, 2, default_space(one, 2, {}), SupportConfig{}), ConfigError);
}

TEST(DefaultLambda, BlockRules) {
  const Membership e({0, 0, 0, 0, 1, 1, 1}, 2);
  // Node pairs: (0,0) 6, (0,1) 12, (1,1) 3.
  const auto per = block_lambdas(e, 20, LambdaRule::kPerBlock);
  EXPECT_NEAR(per[block_index(0, 0, 2)], default_lambda(20, 6), 1e-15);
  EXPECT_NEAR(per[block_index(0, 1, 2)], default_lambda(20, 12), 1e-15);
  EXPECT_NEAR(per[block_index(1, 1, 2)], default_lambda(20, 3), 1e-15);
  for (double v : block_lambdas(e, 20, LambdaRule::kMinBlock)) EXPECT_NEAR(v, default_lambda(20, 3), 1e-15);
  const Membership gap({0, 0, 1}, 3);
  EXPECT_EQ(block_lambdas(gap, 4, LambdaRule::kPerBlock)[block_index(2, 2, 3)], 1.0);
}

TEST(ThresholdSupport, PerBlockThresholds) {
  Eigen::MatrixXd s(2, 2);
  s << 0.3, 0.2, 0.2, 0.1;
  const auto sup = threshold_support({make_estimate(0, 1, s)}, 2, 2, std::vector<double>{0.25, 0.25, 0.05});
  EXPECT_EQ(sup[0].size(), 1);
  EXPECT_EQ(sup[1].size(), 0);
  EXPECT_EQ(sup[2].size(), 1);
  EXPECT_THROW(threshold_support({make_estimate(0, 1, s)}, 2, 2, std::vector<double>{0.1}), DomainError);
}
