#pragma once

// Data-parallel inner loops used by the count and likelihood code.
//
// Each kernel has a portable scalar reference and an AVX2 variant. The
// variant is chosen once at startup from the CPU feature flags; setting the
// environment variable MLP_FORCE_SCALAR=1 pins the scalar path. Popcount
// kernels are exact on every path; dot_counts agrees to rounding only.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace mlp::kernels {

using Word = std::uint64_t;

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

/// ISA selected for this process.
Isa active_isa();

/// True when the AVX2 variant is compiled in and supported by this CPU.
bool avx2_available();

/// popcount(a & b) over equal-length word spans.
std::uint64_t popcount_and(std::span<const Word> a, std::span<const Word> b);

/// popcount(a & b & c).
std::uint64_t popcount_and3(std::span<const Word> a, std::span<const Word> b,
                            std::span<const Word> c);

/// sum_i counts[i] * weights[i].
double dot_counts(std::span<const std::int32_t> counts, std::span<const double> weights);

namespace scalar {
std::uint64_t popcount_and(const Word* a, const Word* b, std::size_t n);
std::uint64_t popcount_and3(const Word* a, const Word* b, const Word* c, std::size_t n);
double dot_counts(const std::int32_t* counts, const double* weights, std::size_t n);
}  // namespace scalar

namespace avx2 {
std::uint64_t popcount_and(const Word* a, const Word* b, std::size_t n);
std::uint64_t popcount_and3(const Word* a, const Word* b, const Word* c, std::size_t n);
double dot_counts(const std::int32_t* counts, const double* weights, std::size_t n);
}  // namespace avx2

}  // namespace mlp::kernels
