#include <bit>

#include "mlp/kernels.hpp"

namespace mlp::kernels::scalar {

std::uint64_t popcount_and(const Word* a, const Word* b, std::size_t n) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < n; ++i) total += std::popcount(a[i] & b[i]);
  return total;
}

std::uint64_t popcount_and3(const Word* a, const Word* b, const Word* c, std::size_t n) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < n; ++i) total += std::popcount(a[i] & b[i] & c[i]);
  return total;
}

double dot_counts(const std::int32_t* counts, const double* weights, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(counts[i]) * weights[i];
  return s;
}

}  // namespace mlp::kernels::scalar
