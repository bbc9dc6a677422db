// Compiled with -mavx2. Only reached through the dispatcher after a CPUID check.

#include <immintrin.h>

#include <bit>

#include "tasil/simd/kernels.hpp"

namespace tasil::simd::detail {

namespace {

inline std::uint64_t popcount_mask(__m256i m) noexcept {
  return static_cast<std::uint64_t>(
      std::popcount(static_cast<std::uint32_t>(_mm256_movemask_epi8(m))));
}

}  // namespace

void count_pairs_avx2(const std::uint8_t* first, const std::uint8_t* second, std::size_t n,
                      PairMatrix& out) noexcept {
  const __m256i code0 = _mm256_setzero_si256();
  const __m256i code1 = _mm256_set1_epi8(1);
  const __m256i code2 = _mm256_set1_epi8(2);

  PairMatrix acc{};
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(first + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(second + i));
    const __m256i a[3] = {_mm256_cmpeq_epi8(va, code0), _mm256_cmpeq_epi8(va, code1),
                          _mm256_cmpeq_epi8(va, code2)};
    const __m256i b[3] = {_mm256_cmpeq_epi8(vb, code0), _mm256_cmpeq_epi8(vb, code1),
                          _mm256_cmpeq_epi8(vb, code2)};
    for (std::size_t x = 0; x < 3; ++x) {
      for (std::size_t y = 0; y < 3; ++y) {
        acc[x * 3 + y] += popcount_mask(_mm256_and_si256(a[x], b[y]));
      }
    }
  }
  count_pairs_scalar(first + i, second + i, n - i, acc);
  for (std::size_t k = 0; k < acc.size(); ++k) out[k] += acc[k];
}

void count_codes_avx2(const std::uint8_t* labels, std::size_t n, Histogram& out) noexcept {
  __m256i code[kHistogramClasses];
  for (std::size_t c = 0; c < kHistogramClasses; ++c) {
    code[c] = _mm256_set1_epi8(static_cast<char>(c));
  }
  Histogram acc{};
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(labels + i));
    for (std::size_t c = 0; c < kHistogramClasses; ++c) {
      acc[c] += popcount_mask(_mm256_cmpeq_epi8(v, code[c]));
    }
  }
  count_codes_scalar(labels + i, n - i, acc);
  for (std::size_t c = 0; c < kHistogramClasses; ++c) out[c] += acc[c];
}

}  // namespace tasil::simd::detail
