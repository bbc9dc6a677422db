#include <stdexcept>
#include <string>

#include "tasil/simd/kernels.hpp"

namespace tasil::simd {

bool cpu_has_avx2() noexcept {
#if defined(TASIL_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  static const bool has = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  return has;
#else
  return false;
#endif
}

bool backend_available(Backend b) noexcept {
  switch (b) {
    case Backend::Auto:
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
      return cpu_has_avx2();
  }
  return false;
}

Backend resolve(Backend b) noexcept {
  if (b == Backend::Auto) return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
  return backend_available(b) ? b : Backend::Scalar;
}

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
    case Backend::Auto:
      return "auto";
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  if (name == "auto") return Backend::Auto;
  if (name == "scalar") return Backend::Scalar;
  if (name == "avx2") return Backend::Avx2;
  throw std::invalid_argument("unknown SIMD backend '" + std::string(name) + "'");
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out{Backend::Scalar};
  if (cpu_has_avx2()) out.push_back(Backend::Avx2);
  return out;
}

void count_pairs(std::span<const std::uint8_t> first, std::span<const std::uint8_t> second,
                 PairMatrix& out, Backend b) {
  if (first.size() != second.size()) {
    throw std::invalid_argument("count_pairs: spans differ in length");
  }
  switch (resolve(b)) {
#if defined(TASIL_HAVE_AVX2_KERNELS)
    case Backend::Avx2:
      detail::count_pairs_avx2(first.data(), second.data(), first.size(), out);
      return;
#endif
    default:
      detail::count_pairs_scalar(first.data(), second.data(), first.size(), out);
      return;
  }
}

void count_codes(std::span<const std::uint8_t> labels, Histogram& out, Backend b) {
  switch (resolve(b)) {
#if defined(TASIL_HAVE_AVX2_KERNELS)
    case Backend::Avx2:
      detail::count_codes_avx2(labels.data(), labels.size(), out);
      return;
#endif
    default:
      detail::count_codes_scalar(labels.data(), labels.size(), out);
      return;
  }
}

}  // namespace tasil::simd
