#include "mlp/model.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <sstream>

#include "mlp/error.hpp"
#include "mlp/probkit.hpp"

namespace mlp {

MultilayerNetwork::MultilayerNetwork(int n_nodes, int n_layers)
    : n_(n_nodes), m_(n_layers), words_((static_cast<std::size_t>(n_nodes) + 63) / 64) {
  if (n_nodes < 0 || n_layers < 0) throw DomainError("network dimensions must be nonnegative");
  bits_.assign(static_cast<std::size_t>(n_) * m_ * words_, 0);
}

bool MultilayerNetwork::edge(int layer, int i, int j) const {
  return (bits_[offset(layer, i) + j / 64] >> (j % 64)) & 1u;
}

void MultilayerNetwork::set_entry(int layer, int i, int j, bool on) {
  if (layer < 0 || layer >= m_ || i < 0 || i >= n_ || j < 0 || j >= n_) {
    throw DomainError("edge index out of range");
  }
  Word& w = bits_[offset(layer, i) + j / 64];
  const Word bit = Word{1} << (j % 64);
  w = on ? (w | bit) : (w & ~bit);
}

void MultilayerNetwork::set_edge(int layer, int i, int j, bool on) {
  if (i == j) throw DomainError("self loops are not allowed");
  set_entry(layer, i, j, on);
  set_entry(layer, j, i, on);
}

std::size_t MultilayerNetwork::edge_count(int layer) const {
  std::size_t total = 0;
  const std::size_t begin = offset(layer, 0);
  const std::size_t end = begin + static_cast<std::size_t>(n_) * words_;
  for (std::size_t w = begin; w < end; ++w) total += std::popcount(bits_[w]);
  return total / 2;
}

std::size_t MultilayerNetwork::total_edges() const {
  std::size_t t = 0;
  for (int b = 0; b < m_; ++b) t += edge_count(b);
  return t;
}

MultilayerNetwork MultilayerNetwork::select_layers(std::span<const int> layers) const {
  MultilayerNetwork out(n_, static_cast<int>(layers.size()));
  for (std::size_t t = 0; t < layers.size(); ++t) {
    const int b = layers[t];
    if (b < 0 || b >= m_) throw DomainError("layer index out of range");
    std::copy_n(bits_.begin() + offset(b, 0), static_cast<std::size_t>(n_) * words_,
                out.bits_.begin() + out.offset(static_cast<int>(t), 0));
  }
  return out;
}

MultilayerNetwork MultilayerNetwork::permute_nodes(std::span<const int> order) const {
  if (static_cast<int>(order.size()) != n_) throw DomainError("permutation length mismatch");
  MultilayerNetwork out(n_, m_);
  for (int b = 0; b < m_; ++b) {
    for (int i = 0; i < n_; ++i) {
      for (int j = i + 1; j < n_; ++j) {
        if (edge(b, order[i], order[j])) out.set_edge(b, i, j);
      }
    }
  }
  return out;
}

std::string Violation::message() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kSymmetry: os << "symmetry"; break;
    case Kind::kDiagonal: os << "diagonal"; break;
    case Kind::kBinary: os << "binary"; break;
    case Kind::kShape: os << "shape"; break;
  }
  os << " violation in layer " << layer + 1 << " at (" << i + 1 << "," << j + 1 << ")";
  return os.str();
}

std::vector<Violation> validate_network(const MultilayerNetwork& net) {
  std::vector<Violation> out;
  const int n = net.n_nodes();
  for (int b = 0; b < net.n_layers(); ++b) {
    for (int i = 0; i < n; ++i) {
      if (net.edge(b, i, i)) out.push_back({Violation::Kind::kDiagonal, b, i, i});
      for (int j = i + 1; j < n; ++j) {
        if (net.edge(b, i, j) != net.edge(b, j, i)) {
          out.push_back({Violation::Kind::kSymmetry, b, i, j});
        }
      }
    }
  }
  return out;
}

std::vector<Violation> validate_dense_layers(std::span<const Eigen::MatrixXi> layers) {
  std::vector<Violation> out;
  if (layers.empty()) return out;
  const Eigen::Index n = layers.front().rows();
  for (std::size_t t = 0; t < layers.size(); ++t) {
    const auto& A = layers[t];
    const int b = static_cast<int>(t);
    if (A.rows() != n || A.cols() != n) {
      out.push_back({Violation::Kind::kShape, b, static_cast<int>(A.rows()),
                     static_cast<int>(A.cols())});
      continue;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const int v = A(i, j);
        if (v != 0 && v != 1) {
          out.push_back({Violation::Kind::kBinary, b, static_cast<int>(i), static_cast<int>(j)});
        }
      }
      if (A(i, i) != 0) {
        out.push_back({Violation::Kind::kDiagonal, b, static_cast<int>(i), static_cast<int>(i)});
      }
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (A(i, j) != A(j, i)) {
          out.push_back(
              {Violation::Kind::kSymmetry, b, static_cast<int>(i), static_cast<int>(j)});
        }
      }
    }
  }
  return out;
}

MultilayerNetwork network_from_dense(std::span<const Eigen::MatrixXi> layers) {
  const auto violations = validate_dense_layers(layers);
  if (!violations.empty()) {
    throw DataError(violations.front().message() + " (" + std::to_string(violations.size()) +
                    " violations)");
  }
  const int n = layers.empty() ? 0 : static_cast<int>(layers.front().rows());
  MultilayerNetwork net(n, static_cast<int>(layers.size()));
  for (std::size_t b = 0; b < layers.size(); ++b) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (layers[b](i, j)) net.set_edge(static_cast<int>(b), i, j);
      }
    }
  }
  return net;
}

double empirical_density(const MultilayerNetwork& net) {
  const double n = net.n_nodes();
  if (net.n_nodes() < 2) throw DomainError("empirical density needs at least two nodes");
  if (net.n_layers() < 1) throw DomainError("empirical density needs at least one layer");
  return 2.0 * static_cast<double>(net.total_edges()) / (n * (n - 1.0) * net.n_layers());
}

Membership::Membership(std::vector<int> a, int k) : assign(std::move(a)), K(k) {
  if (K < 1) throw DomainError("membership needs K >= 1");
  for (int v : assign) {
    if (v < 0 || v >= K) throw DomainError("membership label out of range");
  }
}

std::vector<int> Membership::community_sizes() const {
  std::vector<int> sizes(K, 0);
  for (int v : assign) ++sizes[v];
  return sizes;
}

std::pair<int, int> block_of(int index, int K) {
  for (int k = 0; k < K; ++k) {
    const int span = K - k;
    if (index < span) return {k, k + index};
    index -= span;
  }
  throw DomainError("block index out of range");
}

std::pair<int, int> pair_of(int index, int M) {
  for (int b = 0; b < M; ++b) {
    const int span = M - 1 - b;
    if (index < span) return {b, b + 1 + index};
    index -= span;
  }
  throw DomainError("layer pair index out of range");
}

BlockParams::BlockParams(int K, int M) : K_(K), M_(M) {
  mu_.assign(n_blocks(K), Eigen::VectorXd::Zero(M));
  sigma_.assign(n_blocks(K), Eigen::MatrixXd::Identity(M, M));
}

BlockParams BlockParams::relabel(std::span<const int> perm) const {
  BlockParams out(K_, M_);
  for (int k = 0; k < K_; ++k) {
    for (int l = k; l < K_; ++l) {
      out.mu(k, l) = mu(perm[k], perm[l]);
      out.sigma(k, l) = sigma(perm[k], perm[l]);
    }
  }
  return out;
}

SupportSet::SupportSet(int M, std::vector<std::pair<int, int>> pairs) : M_(M) {
  dense_.assign(static_cast<std::size_t>(M) * M, 0);
  for (auto [b, d] : pairs) {
    if (b == d) continue;
    if (b > d) std::swap(b, d);
    if (b < 0 || d >= M) throw DomainError("support pair out of range");
    if (!dense_[b * M + d]) {
      dense_[b * M + d] = dense_[d * M + b] = 1;
      pairs_.emplace_back(b, d);
    }
  }
  std::sort(pairs_.begin(), pairs_.end());
}

SupportSet SupportSet::full(int M) {
  std::vector<std::pair<int, int>> p;
  for (int b = 0; b < M; ++b)
    for (int d = b + 1; d < M; ++d) p.emplace_back(b, d);
  return SupportSet(M, std::move(p));
}

SupportSet SupportSet::band(int M, int width) {
  std::vector<std::pair<int, int>> p;
  for (int b = 0; b < M; ++b)
    for (int d = b + 1; d < M && d - b <= width; ++d) p.emplace_back(b, d);
  return SupportSet(M, std::move(p));
}

SupportSet SupportSet::of_matrix(const Eigen::MatrixXd& X, double tol) {
  const int M = static_cast<int>(X.rows());
  std::vector<std::pair<int, int>> p;
  for (int b = 0; b < M; ++b)
    for (int d = b + 1; d < M; ++d)
      if (std::abs(X(b, d)) > tol) p.emplace_back(b, d);
  return SupportSet(M, std::move(p));
}

bool SupportSet::contains(int b, int d) const {
  if (b == d) return true;
  return dense_[static_cast<std::size_t>(b) * M_ + d] != 0;
}

Eigen::MatrixXd SupportSet::mask() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(M_, M_);
  for (auto [b, d] : pairs_) m(b, d) = m(d, b) = 1.0;
  return m;
}

void ParameterSpace::validate() const {
  if (!(c_l < 1.0 && c_l > 0.0)) throw ConfigError("c_l must lie in (0, 1)");
  if (!(c_u > 1.0)) throw ConfigError("c_u must exceed 1");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
  if (c_u * rho > 1.0 + 1e-12) throw ConfigError("c_u * rho must not exceed 1");
  if (!(D > 0.0 && D < 1.0)) throw ConfigError("D must lie in (0, 1)");
  if (!(pd_floor > 0.0 && pd_floor < 1.0 - D)) throw ConfigError("pd_floor must lie in (0, 1-D)");
  if (K < 1 || M < 1) throw ConfigError("K and M must be positive");
  if (static_cast<int>(supports.size()) != n_blocks(K)) {
    throw ConfigError("one support set per unordered block is required");
  }
  for (const auto& s : supports) {
    if (s.M() != M) throw ConfigError("support dimension does not match M");
  }
}

std::pair<double, double> ParameterSpace::mu_bounds() const {
  const double lo = prob::std_normal_quantile(c_l * rho);
  const double upper_p = c_u * rho;
  const double hi = upper_p >= 1.0 ? std::numeric_limits<double>::infinity()
                                   : prob::std_normal_quantile(upper_p);
  return {lo, hi};
}

ParameterSpace ParameterSpace::uniform(int K, int M, double rho, const SupportSet& support,
                                       double c_l, double c_u, double D) {
  ParameterSpace s;
  s.K = K;
  s.M = M;
  s.rho = rho;
  s.c_l = c_l;
  s.c_u = std::min(c_u, 1.0 / rho);
  if (!(s.c_u > 1.0)) s.c_u = std::nextafter(1.0, 2.0);
  s.D = D;
  s.supports.assign(n_blocks(K), support);
  return s;
}

}  // namespace mlp
