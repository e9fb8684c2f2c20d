#include <cstdlib>
#include <cstring>

#include "mlp/kernels.hpp"

namespace mlp::kernels {
namespace {

struct Table {
  Isa isa;
  std::uint64_t (*popcount_and)(const Word*, const Word*, std::size_t);
  std::uint64_t (*popcount_and3)(const Word*, const Word*, const Word*, std::size_t);
  double (*dot_counts)(const std::int32_t*, const double*, std::size_t);
};

bool cpu_has_avx2() {
#if defined(MLP_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
         __builtin_cpu_supports("popcnt");
#else
  return false;
#endif
}

Table select() {
  const char* force = std::getenv("MLP_FORCE_SCALAR");
  const bool forced = force != nullptr && std::strcmp(force, "0") != 0 && *force != '\0';
#if defined(MLP_HAVE_AVX2_TU)
  if (!forced && cpu_has_avx2()) {
    return {Isa::kAvx2, &avx2::popcount_and, &avx2::popcount_and3, &avx2::dot_counts};
  }
#else
  (void)forced;
#endif
  return {Isa::kScalar, &scalar::popcount_and, &scalar::popcount_and3, &scalar::dot_counts};
}

const Table& table() {
  static const Table t = select();
  return t;
}

}  // namespace

#if !defined(MLP_HAVE_AVX2_TU)
// Fallbacks so the avx2 namespace links on targets without the AVX2 unit.
namespace avx2 {
std::uint64_t popcount_and(const Word* a, const Word* b, std::size_t n) {
  return scalar::popcount_and(a, b, n);
}
std::uint64_t popcount_and3(const Word* a, const Word* b, const Word* c, std::size_t n) {
  return scalar::popcount_and3(a, b, c, n);
}
double dot_counts(const std::int32_t* counts, const double* weights, std::size_t n) {
  return scalar::dot_counts(counts, weights, n);
}
}  // namespace avx2
#endif

std::string_view isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

Isa active_isa() { return table().isa; }

bool avx2_available() { return cpu_has_avx2(); }

std::uint64_t popcount_and(std::span<const Word> a, std::span<const Word> b) {
  return table().popcount_and(a.data(), b.data(), a.size());
}

std::uint64_t popcount_and3(std::span<const Word> a, std::span<const Word> b,
                            std::span<const Word> c) {
  return table().popcount_and3(a.data(), b.data(), c.data(), a.size());
}

double dot_counts(std::span<const std::int32_t> counts, std::span<const double> weights) {
  return table().dot_counts(counts.data(), weights.data(), counts.size());
}

}  // namespace mlp::kernels
