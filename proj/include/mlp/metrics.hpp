#pragma once

// Evaluation against a known truth. All pair sums run over ordered pairs
// i != j; the node-level metrics do not depend on how either side labels its
// communities.

#include <vector>

#include "mlp/model.hpp"

namespace mlp {

/// Fraction of pairs i < j on which the two assignments disagree about
/// co-membership.
double err_pair_mismatch(const Membership& e_true, const Membership& e_hat);

struct DistResult {
  double value = 0.0;
  std::vector<int> perm;  // perm[k]: estimated label matched to true community k
};

/// min over permutations of (1/N) sum_k |C*_k \ C^_{pi_k}|, via optimal assignment.
DistResult dist_min_permutation(const Membership& e_true, const Membership& e_hat);

/// (1 / (N^2 M^2)) sum_{i != j} sum_{b<d} sum_c (sqrt(alpha_c^) - sqrt(alpha_c*))^2.
double hellinger_avg(const BlockParams& theta_hat, const Membership& e_hat, const BlockParams& theta_true,
                     const Membership& e_true);

struct ParamErrors {
  double mu_mse = 0.0;
  double sigma_weighted_mse = 0.0;
  double combined() const { return mu_mse + sigma_weighted_mse; }
};

/// mu term: (1/(M N^2)) sum_{i != j} sum_b (mu^ - mu*)^2. Sigma term:
/// ((1 - D) B / (M^2 N^2)) sum_{i != j} sum_{b<d} (Sigma^ - Sigma*)^2 with
/// B = Phi^{-1}(rho)^2.
ParamErrors param_errors(const BlockParams& theta_hat, const Membership& e_hat, const BlockParams& theta_true,
                         const Membership& e_true, double D, double rho);

struct SupportRates {
  double fpr = 0.0;
  double fnr = 0.0;
};

/// Off-diagonal false positive and false negative rates, averaged over the
/// blocks where each rate is defined. perm maps true labels to estimated
/// labels (identity if empty).
SupportRates support_recovery_rates(const std::vector<SupportSet>& estimated, const std::vector<SupportSet>& truth,
                                    int K, const std::vector<int>& perm = {});

struct EvalReport {
  double err_pair = 0.0;
  double dist_perm = 0.0;
  double hellinger_sq = 0.0;
  double mu_mse = 0.0;
  double sigma_weighted_mse = 0.0;
  double param_error = 0.0;
  bool has_support = false;
  double support_fpr = 0.0;
  double support_fnr = 0.0;
};

struct TruthView {
  const Membership* membership = nullptr;
  const BlockParams* theta = nullptr;  // optional
  const std::vector<SupportSet>* supports = nullptr;  // optional
};

/// Emits every metric the truth allows.
EvalReport evaluate(const Membership& e_hat, const BlockParams& theta_hat, const std::vector<SupportSet>* est_supports,
                    const TruthView& truth, double D, double rho);

}  // namespace mlp
