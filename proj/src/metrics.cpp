#include "mlp/metrics.hpp"

#include <cmath>

#include "mlp/assignment.hpp"
#include "mlp/error.hpp"
#include "mlp/likelihood.hpp"
#include "mlp/probkit.hpp"

namespace mlp {
namespace {

void check_lengths(const Membership& a, const Membership& b) {
  if (a.n_nodes() != b.n_nodes()) throw DomainError("memberships have different lengths");
}

// Ordered pairs i != j per (k^, l^, k*, l*) label combination.
std::vector<std::int64_t> joint_pair_counts(const Membership& e_hat, const Membership& e_true) {
  const int Kh = e_hat.K;
  const int Kt = e_true.K;
  std::vector<std::int64_t> node(static_cast<std::size_t>(Kh) * Kt, 0);
  for (int i = 0; i < e_hat.n_nodes(); ++i) ++node[static_cast<std::size_t>(e_hat[i]) * Kt + e_true[i]];
  std::vector<std::int64_t> pairs(static_cast<std::size_t>(Kh) * Kt * Kh * Kt, 0);
  for (int a = 0; a < Kh * Kt; ++a) {
    for (int b = 0; b < Kh * Kt; ++b) {
      const std::int64_t n = a == b ? node[a] * (node[a] - 1) : node[a] * node[b];
      const int kh = a / Kt, kt = a % Kt, lh = b / Kt, lt = b % Kt;
      pairs[((static_cast<std::size_t>(kh) * Kh + lh) * Kt + kt) * Kt + lt] = n;
    }
  }
  return pairs;
}

}  // namespace

double err_pair_mismatch(const Membership& e_true, const Membership& e_hat) {
  check_lengths(e_true, e_hat);
  const int N = e_true.n_nodes();
  if (N < 2) return 0.0;
  std::int64_t bad = 0;
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      bad += ((e_true[i] == e_true[j]) != (e_hat[i] == e_hat[j])) ? 1 : 0;
    }
  }
  return 2.0 * static_cast<double>(bad) / (static_cast<double>(N) * (N - 1));
}

DistResult dist_min_permutation(const Membership& e_true, const Membership& e_hat) {
  check_lengths(e_true, e_hat);
  if (e_true.K != e_hat.K) throw DomainError("memberships have different K");
  const int K = e_true.K;
  const int N = e_true.n_nodes();
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(K, K);
  for (int i = 0; i < N; ++i) overlap(e_true[i], e_hat[i]) += 1.0;
  DistResult r;
  r.perm = solve_assignment(-overlap);
  double matched = 0.0;
  for (int k = 0; k < K; ++k) matched += overlap(k, r.perm[k]);
  r.value = N == 0 ? 0.0 : (N - matched) / N;
  return r;
}

double hellinger_avg(const BlockParams& theta_hat, const Membership& e_hat, const BlockParams& theta_true,
                     const Membership& e_true) {
  check_lengths(e_true, e_hat);
  const int M = theta_true.M();
  if (theta_hat.M() != M) throw DomainError("parameter sets have different M");
  const int N = e_true.n_nodes();
  if (N == 0 || M < 2) return 0.0;
  const int Kh = e_hat.K, Kt = e_true.K;
  const auto pairs = joint_pair_counts(e_hat, e_true);
  double total = 0.0;
  for (int kh = 0; kh < Kh; ++kh) {
    for (int lh = 0; lh < Kh; ++lh) {
      for (int kt = 0; kt < Kt; ++kt) {
        for (int lt = 0; lt < Kt; ++lt) {
          const std::int64_t n = pairs[((static_cast<std::size_t>(kh) * Kh + lh) * Kt + kt) * Kt + lt];
          if (n == 0) continue;
          const auto& mh = theta_hat.mu(kh, lh);
          const auto& sh = theta_hat.sigma(kh, lh);
          const auto& mt = theta_true.mu(kt, lt);
          const auto& st = theta_true.sigma(kt, lt);
          double s = 0.0;
          for (int b = 0; b < M; ++b) {
            for (int d = b + 1; d < M; ++d) {
              const auto ah = cell_probs(mh(b), mh(d), sh(b, d));
              const auto at = cell_probs(mt(b), mt(d), st(b, d));
              for (int c = 0; c < 4; ++c) {
                const double diff = std::sqrt(std::max(ah[c], 0.0)) - std::sqrt(std::max(at[c], 0.0));
                s += diff * diff;
              }
            }
          }
          total += static_cast<double>(n) * s;
        }
      }
    }
  }
  return total / (static_cast<double>(N) * N * M * M);
}

ParamErrors param_errors(const BlockParams& theta_hat, const Membership& e_hat, const BlockParams& theta_true,
                         const Membership& e_true, double D, double rho) {
  check_lengths(e_true, e_hat);
  const int M = theta_true.M();
  if (theta_hat.M() != M) throw DomainError("parameter sets have different M");
  const int N = e_true.n_nodes();
  ParamErrors out;
  if (N == 0) return out;
  const double q = prob::std_normal_quantile(rho);
  const double B = q * q;
  const int Kh = e_hat.K, Kt = e_true.K;
  const auto pairs = joint_pair_counts(e_hat, e_true);
  double mu_sum = 0.0, sigma_sum = 0.0;
  for (int kh = 0; kh < Kh; ++kh) {
    for (int lh = 0; lh < Kh; ++lh) {
      for (int kt = 0; kt < Kt; ++kt) {
        for (int lt = 0; lt < Kt; ++lt) {
          const std::int64_t n = pairs[((static_cast<std::size_t>(kh) * Kh + lh) * Kt + kt) * Kt + lt];
          if (n == 0) continue;
          mu_sum += static_cast<double>(n) * (theta_hat.mu(kh, lh) - theta_true.mu(kt, lt)).squaredNorm();
          const Eigen::MatrixXd diff = theta_hat.sigma(kh, lh) - theta_true.sigma(kt, lt);
          double s = 0.0;
          for (int b = 0; b < M; ++b) {
            for (int d = b + 1; d < M; ++d) s += diff(b, d) * diff(b, d);
          }
          sigma_sum += static_cast<double>(n) * s;
        }
      }
    }
  }
  const double nn = static_cast<double>(N) * N;
  out.mu_mse = mu_sum / (M * nn);
  out.sigma_weighted_mse = (1.0 - D) * B * sigma_sum / (static_cast<double>(M) * M * nn);
  return out;
}

SupportRates support_recovery_rates(const std::vector<SupportSet>& estimated, const std::vector<SupportSet>& truth,
                                    int K, const std::vector<int>& perm) {
  if (static_cast<int>(estimated.size()) != n_blocks(K) || static_cast<int>(truth.size()) != n_blocks(K)) {
    throw DomainError("support lists must hold one set per unordered block");
  }
  double fpr = 0.0, fnr = 0.0;
  int n_fpr = 0, n_fnr = 0;
  for (int k = 0; k < K; ++k) {
    for (int l = k; l < K; ++l) {
      const SupportSet& t = truth[block_index(k, l, K)];
      const int pk = perm.empty() ? k : perm[k];
      const int pl = perm.empty() ? l : perm[l];
      const SupportSet& e = estimated[block_index(pk, pl, K)];
      const int M = t.M();
      int fp = 0, fn = 0, neg = 0, pos = 0;
      for (int b = 0; b < M; ++b) {
        for (int d = b + 1; d < M; ++d) {
          const bool in_t = t.contains(b, d), in_e = e.contains(b, d);
          if (in_t) {
            ++pos;
            fn += in_e ? 0 : 1;
          } else {
            ++neg;
            fp += in_e ? 1 : 0;
          }
        }
      }
      if (neg > 0) {
        fpr += static_cast<double>(fp) / neg;
        ++n_fpr;
      }
      if (pos > 0) {
        fnr += static_cast<double>(fn) / pos;
        ++n_fnr;
      }
    }
  }
  return {n_fpr ? fpr / n_fpr : 0.0, n_fnr ? fnr / n_fnr : 0.0};
}

EvalReport evaluate(const Membership& e_hat, const BlockParams& theta_hat, const std::vector<SupportSet>* est_supports,
                    const TruthView& truth, double D, double rho) {
  if (!truth.membership) throw DomainError("evaluation needs a true membership");
  EvalReport r;
  r.err_pair = err_pair_mismatch(*truth.membership, e_hat);
  const DistResult dist = dist_min_permutation(*truth.membership, e_hat);
  r.dist_perm = dist.value;
  if (truth.theta) {
    r.hellinger_sq = hellinger_avg(theta_hat, e_hat, *truth.theta, *truth.membership);
    const ParamErrors pe = param_errors(theta_hat, e_hat, *truth.theta, *truth.membership, D, rho);
    r.mu_mse = pe.mu_mse;
    r.sigma_weighted_mse = pe.sigma_weighted_mse;
    r.param_error = pe.combined();
  }
  if (truth.supports && est_supports) {
    const SupportRates s = support_recovery_rates(*est_supports, *truth.supports, e_hat.K, dist.perm);
    r.has_support = true;
    r.support_fpr = s.fpr;
    r.support_fnr = s.fnr;
  }
  return r;
}

}  // namespace mlp
