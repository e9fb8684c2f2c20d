// Compiled with -mavx2 -mfma -mpopcnt; only reached through the dispatcher
// after a runtime CPU check.

#include <immintrin.h>

#include <bit>

#include "mlp/kernels.hpp"

namespace mlp::kernels::avx2 {
namespace {

// Nibble-table popcount (Mula): per-byte counts via pshufb, folded with sad.
inline __m256i popcount_bytes(__m256i v) {
  const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                       0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low_mask);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
  return _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
}

inline std::uint64_t horizontal_sum(__m256i acc) {
  return static_cast<std::uint64_t>(_mm256_extract_epi64(acc, 0)) +
         static_cast<std::uint64_t>(_mm256_extract_epi64(acc, 1)) +
         static_cast<std::uint64_t>(_mm256_extract_epi64(acc, 2)) +
         static_cast<std::uint64_t>(_mm256_extract_epi64(acc, 3));
}

}  // namespace

std::uint64_t popcount_and(const Word* a, const Word* b, std::size_t n) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    acc = _mm256_add_epi64(
        acc, _mm256_sad_epu8(popcount_bytes(_mm256_and_si256(va, vb)), _mm256_setzero_si256()));
  }
  std::uint64_t total = horizontal_sum(acc);
  for (; i < n; ++i) total += std::popcount(a[i] & b[i]);
  return total;
}

std::uint64_t popcount_and3(const Word* a, const Word* b, const Word* c, std::size_t n) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    const __m256i vc = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(c + i));
    const __m256i v = _mm256_and_si256(_mm256_and_si256(va, vb), vc);
    acc = _mm256_add_epi64(acc, _mm256_sad_epu8(popcount_bytes(v), _mm256_setzero_si256()));
  }
  std::uint64_t total = horizontal_sum(acc);
  for (; i < n; ++i) total += std::popcount(a[i] & b[i] & c[i]);
  return total;
}

double dot_counts(const std::int32_t* counts, const double* weights, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m128i c0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(counts + i));
    const __m128i c1 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(counts + i + 4));
    acc0 = _mm256_fmadd_pd(_mm256_cvtepi32_pd(c0), _mm256_loadu_pd(weights + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_cvtepi32_pd(c1), _mm256_loadu_pd(weights + i + 4), acc1);
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc0);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += static_cast<double>(counts[i]) * weights[i];
  return s;
}

}  // namespace mlp::kernels::avx2
