#include <algorithm>
#include <cmath>

#include "mlp/error.hpp"
#include "mlp/model.hpp"

namespace mlp {
namespace {

// Unit diagonal, zero off-support, entries clipped to [-D, D].
Eigen::MatrixXd project_box(const Eigen::MatrixXd& S, const SupportSet& support, double D) {
  const Eigen::Index M = S.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(M, M);
  for (auto [b, d] : support.pairs()) {
    const double v = std::clamp(0.5 * (S(b, d) + S(d, b)), -D, D);
    out(b, d) = out(d, b) = v;
  }
  return out;
}

Eigen::MatrixXd project_eigen_floor(const Eigen::MatrixXd& S, double floor, double* min_eig) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  if (min_eig) *min_eig = es.eigenvalues().minCoeff();
  if (es.eigenvalues().minCoeff() >= floor) return S;
  const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
}

void check_symmetric(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) throw DomainError("correlation block must be square");
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError("projection input must be symmetric");
  }
}

}  // namespace

double min_eigenvalue(const Eigen::MatrixXd& S) {
  if (S.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  return es.eigenvalues().minCoeff();
}

Eigen::MatrixXd shrink_to_floor(const Eigen::MatrixXd& C, double floor) {
  const Eigen::Index M = C.rows();
  Eigen::MatrixXd off = C;
  off.diagonal().setZero();
  const double lmin = min_eigenvalue(off);
  if (1.0 + lmin >= floor) return C;
  const double t = (1.0 - floor) / (-lmin);
  return Eigen::MatrixXd::Identity(M, M) + t * off;
}

Eigen::VectorXd project_mu(const Eigen::VectorXd& mu, const ParameterSpace& space) {
  const auto [lo, hi] = space.mu_bounds();
  return mu.cwiseMax(lo).cwiseMin(hi);
}

SigmaProjection project_sigma(const Eigen::MatrixXd& S, const SupportSet& support, double D,
                              double pd_floor, const ProjectionOptions& opts) {
  check_symmetric(S);
  if (support.M() != S.rows()) throw DomainError("support dimension mismatch");

  SigmaProjection result;
  const Eigen::Index M = S.rows();
  Eigen::MatrixXd x = S;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(M, M);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(M, M);
  Eigen::MatrixXd y_prev;
  Eigen::MatrixXd y;
  result.converged = false;

  for (int it = 1; it <= opts.max_iterations; ++it) {
    result.iterations = it;
    y = project_box(x + p, support, D);
    p = x + p - y;
    double lmin = 0.0;
    const Eigen::MatrixXd x_next = project_eigen_floor(y + q, pd_floor, &lmin);
    q = y + q - x_next;
    // When the box point is already above the floor it is the projection of
    // the current Dykstra input; on the first pass that input is S itself.
    if (lmin >= pd_floor && (it == 1 || (y - x_next).norm() < opts.tolerance)) {
      result.converged = true;
      break;
    }
    if (it > 1 && (y - y_prev).norm() < opts.tolerance && (y - x_next).norm() < 1e-8) {
      result.converged = true;
      break;
    }
    y_prev = y;
    x = x_next;
  }

  if (min_eigenvalue(y) < pd_floor - 1e-10) {
    y = shrink_to_floor(y, pd_floor);
    result.converged = false;
  }
  result.value = std::move(y);
  return result;
}

SigmaProjection project_sigma_precision(const Eigen::MatrixXd& S, const SupportSet& support,
                                        double D, double pd_floor) {
  check_symmetric(S);
  const Eigen::Index M = S.rows();
  Eigen::MatrixXd start = S;
  start.diagonal().setOnes();
  start = project_eigen_floor(start, pd_floor, nullptr);

  Eigen::MatrixXd prec = start.inverse();
  for (Eigen::Index b = 0; b < M; ++b)
    for (Eigen::Index d = 0; d < M; ++d)
      if (b != d && !support.contains(static_cast<int>(b), static_cast<int>(d))) prec(b, d) = 0.0;
  prec = project_eigen_floor(prec, pd_floor, nullptr);

  Eigen::MatrixXd cov = prec.inverse();
  const Eigen::VectorXd scale = cov.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd corr = scale.asDiagonal() * cov * scale.asDiagonal();
  corr = 0.5 * (corr + corr.transpose());
  corr.diagonal().setOnes();

  double max_off = 0.0;
  for (Eigen::Index b = 0; b < M; ++b)
    for (Eigen::Index d = b + 1; d < M; ++d) max_off = std::max(max_off, std::abs(corr(b, d)));
  if (max_off > D) {
    const double t = D / max_off;
    corr = Eigen::MatrixXd::Identity(M, M) + t * (corr - Eigen::MatrixXd::Identity(M, M));
  }
  SigmaProjection result;
  result.value = shrink_to_floor(corr, pd_floor);
  result.approximate = true;
  result.converged = true;
  result.iterations = 1;
  return result;
}

SigmaProjection project_block_sigma(const Eigen::MatrixXd& S, const ParameterSpace& space,
                                    int block) {
  const SupportSet& support = space.supports[block];
  if (space.scenario == SupportScenario::kSparsePrecision) {
    return project_sigma_precision(S, support, space.D, space.pd_floor);
  }
  return project_sigma(S, support, space.D, space.pd_floor);
}

}  // namespace mlp
