#pragma once

// Patch co-occurrence counting and the digital scores built on it.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>

#include "tasil/format.hpp"
#include "tasil/grid.hpp"
#include "tasil/simd/kernels.hpp"

namespace tasil::cooccur {

enum class Connectivity : std::uint8_t { FourNeighbour, EightNeighbour };

// Unordered adjacency-pair counts over {Tumour, TAS, Lymphocyte}. Each
// geometric pair of neighbouring cells is counted once.
struct CooccurrenceCounts {
  std::uint64_t tt = 0;
  std::uint64_t tl = 0;
  std::uint64_t ts = 0;
  std::uint64_t ll = 0;
  std::uint64_t ls = 0;
  std::uint64_t ss = 0;

  std::uint64_t total() const noexcept { return tt + tl + ts + ll + ls + ss; }
  CooccurrenceCounts& operator+=(const CooccurrenceCounts& o) noexcept;
  bool operator==(const CooccurrenceCounts&) const = default;
};

struct CountOptions {
  Connectivity connectivity = Connectivity::EightNeighbour;
  simd::Backend backend = simd::Backend::Auto;
  // Row stripes counted on separate threads; 0 or 1 means sequential.
  unsigned threads = 1;
};

CooccurrenceCounts count_cooccurrences(const grid::AnalysisGrid& grid,
                                       const CountOptions& options = {});

inline CooccurrenceCounts count_cooccurrences(const grid::AnalysisGrid& grid, Connectivity conn) {
  return count_cooccurrences(grid, CountOptions{conn});
}

// Number of neighbouring cell pairs in a rows x cols grid.
std::uint64_t adjacent_pair_count(std::size_t rows, std::size_t cols, Connectivity conn) noexcept;

// SL / (SS + SL + ST); nullopt when no TAS co-occurrence exists.
std::optional<double> tasil_score(const CooccurrenceCounts& counts) noexcept;

// Lymphocyte patches over all non-NonROI patches.
std::optional<double> l_percentage(const grid::ClassCounts& classes) noexcept;
std::optional<double> l_percentage(const grid::AnalysisGrid& grid);

// Everything a score formula may look at for one slide.
struct ScoreInputs {
  grid::ClassCounts classes{};
  CooccurrenceCounts pairs{};
};

using ScoreFormula = std::function<std::optional<double>(const ScoreInputs&)>;

// Formulas for the comparison scores. The defaults are count/co-occurrence
// ratio re-expressions of the published scores; swap in another formula to
// compare against a different definition.
struct ComparisonFormulas {
  ScoreFormula ts_ratio;
  ScoreFormula ic_coloc;
  ScoreFormula tilab;

  static ComparisonFormulas defaults();
};

// T / (T + TAS) over patch counts.
std::optional<double> default_ts_ratio(const ScoreInputs& in) noexcept;
// tl / (tt + tl + ll).
std::optional<double> default_ic_coloc(const ScoreInputs& in) noexcept;
// Mean of L / (L + T) and ic_coloc; undefined if either is.
std::optional<double> default_tilab(const ScoreInputs& in) noexcept;

struct DigitalScores {
  std::optional<double> tasil;
  std::optional<double> l_percentage;
  std::optional<double> ts_ratio;
  std::optional<double> ic_coloc;
  std::optional<double> tilab;

  bool operator==(const DigitalScores&) const = default;
};

DigitalScores comparison_scores(const ScoreInputs& inputs,
                                const ComparisonFormulas& formulas = ComparisonFormulas::defaults());
DigitalScores comparison_scores(const grid::AnalysisGrid& grid, const CooccurrenceCounts& counts,
                                const ComparisonFormulas& formulas = ComparisonFormulas::defaults());

// Counts and scores one grid.
DigitalScores score_grid(const grid::AnalysisGrid& grid, const CountOptions& options = {});

// ---- CSV --------------------------------------------------------------------

inline constexpr const char* kScoresCsvHeader = "slide_id,tasil,l_percentage,ts_ratio,ic_coloc,tilab";

void write_scores_row(std::ostream& out, const std::string& slide_id, const DigitalScores& s);

}  // namespace tasil::cooccur
