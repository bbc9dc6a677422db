#include <doctest.h>

#include <random>
#include <stdexcept>
#include <vector>

#include "tasil/simd/kernels.hpp"

using namespace tasil::simd;

namespace {

std::vector<std::uint8_t> random_codes(std::mt19937_64& rng, std::size_t n, int max_code) {
  std::uniform_int_distribution<int> d(0, max_code);
  std::vector<std::uint8_t> v(n);
  for (auto& c : v) c = static_cast<std::uint8_t>(d(rng));
  return v;
}

}  // namespace

TEST_CASE("backend names round trip") {
  for (auto b : {Backend::Auto, Backend::Scalar, Backend::Avx2}) {
    CHECK(parse_backend(backend_name(b)) == b);
  }
  CHECK_THROWS(parse_backend("neon"));
  CHECK(resolve(Backend::Scalar) == Backend::Scalar);
  CHECK(resolve(Backend::Auto) != Backend::Auto);
  CHECK(available_backends().front() == Backend::Scalar);
  CHECK(backend_available(Backend::Avx2) == (available_backends().size() == 2));
}

TEST_CASE("scalar pair kernel matches a direct tally") {
  std::mt19937_64 rng(1);
  const auto a = random_codes(rng, 1000, 5);
  const auto b = random_codes(rng, 1000, 5);
  PairMatrix got{};
  count_pairs(a, b, got, Backend::Scalar);
  PairMatrix expect{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 3 && b[i] < 3) ++expect[a[i] * 3 + b[i]];
  }
  CHECK(got == expect);
  CHECK_THROWS_AS(count_pairs(std::span(a).first(3), std::span(b).first(4), got), std::invalid_argument);
}

TEST_CASE("every available backend agrees with scalar") {
  std::mt19937_64 rng(2);
  // Lengths straddle the 32-byte vector width and its tails.
  for (std::size_t n : {0u, 1u, 7u, 31u, 32u, 33u, 63u, 64u, 65u, 100u, 255u, 256u, 1000u, 4099u}) {
    for (int max_code : {2, 3, 255}) {
      const auto a = random_codes(rng, n, max_code);
      const auto b = random_codes(rng, n, max_code);
      PairMatrix ref_pairs{};
      Histogram ref_hist{};
      detail::count_pairs_scalar(a.data(), b.data(), n, ref_pairs);
      detail::count_codes_scalar(a.data(), n, ref_hist);
      for (auto backend : available_backends()) {
        CAPTURE(backend_name(backend));
        CAPTURE(n);
        PairMatrix pairs{};
        Histogram hist{};
        count_pairs(a, b, pairs, backend);
        count_codes(a, hist, backend);
        CHECK(pairs == ref_pairs);
        CHECK(hist == ref_hist);
      }
    }
  }
}

TEST_CASE("kernels accumulate rather than overwrite") {
  const std::vector<std::uint8_t> a{0, 1, 2, 3};
  for (auto backend : available_backends()) {
    Histogram h{};
    count_codes(a, h, backend);
    count_codes(a, h, backend);
    CHECK(h == Histogram{2, 2, 2, 2});
  }
}

TEST_CASE("unaligned subspans") {
  std::mt19937_64 rng(3);
  const auto a = random_codes(rng, 300, 3);
  const auto b = random_codes(rng, 300, 3);
  for (std::size_t off = 0; off < 9; ++off) {
    const auto sa = std::span(a).subspan(off, 200 + off);
    const auto sb = std::span(b).subspan(9 - off, 200 + off);
    PairMatrix ref{};
    count_pairs(sa, sb, ref, Backend::Scalar);
    for (auto backend : available_backends()) {
      PairMatrix got{};
      count_pairs(sa, sb, got, backend);
      CHECK(got == ref);
    }
  }
}
