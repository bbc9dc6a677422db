#pragma once

// Byte-label kernels used by the grid and co-occurrence code.
//
// Every kernel has a scalar reference implementation and, where the target
// supports it, an AVX2 variant. The variant is picked once at runtime from
// CPUID; callers may also request a specific backend, which the equivalence
// tests use to check the vector paths against the scalar ones.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace tasil::simd {

enum class Backend : std::uint8_t { Auto, Scalar, Avx2 };

// Labels handled by the pair kernel are the codes 0, 1, 2. Anything else
// (the non-ROI code 3) is skipped.
inline constexpr std::size_t kPairClasses = 3;
inline constexpr std::size_t kHistogramClasses = 4;

// Ordered pair counts: entry [a * 3 + b] is the number of positions i with
// first[i] == a and second[i] == b.
using PairMatrix = std::array<std::uint64_t, kPairClasses * kPairClasses>;
using Histogram = std::array<std::uint64_t, kHistogramClasses>;

bool cpu_has_avx2() noexcept;
bool backend_available(Backend b) noexcept;

// Resolves Auto to the best backend available on this CPU. A concrete
// backend that is not available falls back to Scalar.
Backend resolve(Backend b) noexcept;

std::string_view backend_name(Backend b) noexcept;
Backend parse_backend(std::string_view name);

// Backends that can actually run here, Scalar first.
std::vector<Backend> available_backends();

// Accumulates into `out`. `first` and `second` must have equal length.
void count_pairs(std::span<const std::uint8_t> first, std::span<const std::uint8_t> second,
                 PairMatrix& out, Backend b = Backend::Auto);

// Accumulates per-code counts for codes 0..3 into `out`. Codes >= 4 are ignored.
void count_codes(std::span<const std::uint8_t> labels, Histogram& out, Backend b = Backend::Auto);

namespace detail {
void count_pairs_scalar(const std::uint8_t* first, const std::uint8_t* second, std::size_t n,
                        PairMatrix& out) noexcept;
void count_codes_scalar(const std::uint8_t* labels, std::size_t n, Histogram& out) noexcept;

#if defined(TASIL_HAVE_AVX2_KERNELS)
void count_pairs_avx2(const std::uint8_t* first, const std::uint8_t* second, std::size_t n,
                      PairMatrix& out) noexcept;
void count_codes_avx2(const std::uint8_t* labels, std::size_t n, Histogram& out) noexcept;
#endif
}  // namespace detail

}  // namespace tasil::simd
