#include "tasil/simd/kernels.hpp"

namespace tasil::simd::detail {

void count_pairs_scalar(const std::uint8_t* first, const std::uint8_t* second, std::size_t n,
                        PairMatrix& out) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned a = first[i];
    const unsigned b = second[i];
    if (a < kPairClasses && b < kPairClasses) {
      ++out[a * kPairClasses + b];
    }
  }
}

void count_codes_scalar(const std::uint8_t* labels, std::size_t n, Histogram& out) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned c = labels[i];
    if (c < kHistogramClasses) {
      ++out[c];
    }
  }
}

}  // namespace tasil::simd::detail
