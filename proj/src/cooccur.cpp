#include "tasil/cooccur.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace tasil::cooccur {

using grid::AnalysisClass;
using grid::AnalysisGrid;

CooccurrenceCounts& CooccurrenceCounts::operator+=(const CooccurrenceCounts& o) noexcept {
  tt += o.tt;
  tl += o.tl;
  ts += o.ts;
  ll += o.ll;
  ls += o.ls;
  ss += o.ss;
  return *this;
}

namespace {

constexpr std::size_t kT = static_cast<std::size_t>(AnalysisClass::Tumour);
constexpr std::size_t kS = static_cast<std::size_t>(AnalysisClass::TAS);
constexpr std::size_t kL = static_cast<std::size_t>(AnalysisClass::Lymphocyte);

constexpr std::uint64_t entry(const simd::PairMatrix& m, std::size_t a, std::size_t b) {
  return m[a * simd::kPairClasses + b];
}

CooccurrenceCounts fold(const simd::PairMatrix& m) {
  CooccurrenceCounts c;
  c.tt = entry(m, kT, kT);
  c.ll = entry(m, kL, kL);
  c.ss = entry(m, kS, kS);
  c.tl = entry(m, kT, kL) + entry(m, kL, kT);
  c.ts = entry(m, kT, kS) + entry(m, kS, kT);
  c.ls = entry(m, kL, kS) + entry(m, kS, kL);
  return c;
}

// Ordered pairs for every neighbour pair whose upper/left cell lies in rows
// [r0, r1). Each unordered pair is visited once: right, down, and (for the
// 8-neighbourhood) down-right and down-left.
simd::PairMatrix count_stripe(const AnalysisGrid& g, std::size_t r0, std::size_t r1,
                              Connectivity conn, simd::Backend backend) {
  simd::PairMatrix m{};
  const std::size_t cols = g.cols();
  for (std::size_t r = r0; r < r1; ++r) {
    const auto row = g.row_codes(r);
    if (cols > 1) simd::count_pairs(row.first(cols - 1), row.subspan(1), m, backend);
    if (r + 1 >= g.rows()) continue;
    const auto below = g.row_codes(r + 1);
    simd::count_pairs(row, below, m, backend);
    if (conn == Connectivity::EightNeighbour && cols > 1) {
      simd::count_pairs(row.first(cols - 1), below.subspan(1), m, backend);
      simd::count_pairs(row.subspan(1), below.first(cols - 1), m, backend);
    }
  }
  return m;
}

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) noexcept {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

CooccurrenceCounts count_cooccurrences(const AnalysisGrid& grid, const CountOptions& options) {
  const simd::Backend backend = simd::resolve(options.backend);
  const std::size_t rows = grid.rows();
  const std::size_t stripes =
      std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(rows, 1));
  if (stripes == 1) return fold(count_stripe(grid, 0, rows, options.connectivity, backend));

  std::vector<simd::PairMatrix> partial(stripes);
  {
    std::vector<std::jthread> workers;
    workers.reserve(stripes);
    for (std::size_t s = 0; s < stripes; ++s) {
      const std::size_t r0 = rows * s / stripes;
      const std::size_t r1 = rows * (s + 1) / stripes;
      workers.emplace_back([&, s, r0, r1] {
        partial[s] = count_stripe(grid, r0, r1, options.connectivity, backend);
      });
    }
  }
  CooccurrenceCounts total;
  for (const auto& m : partial) total += fold(m);
  return total;
}

std::uint64_t adjacent_pair_count(std::size_t rows, std::size_t cols, Connectivity conn) noexcept {
  const std::uint64_t r = rows;
  const std::uint64_t c = cols;
  if (r == 0 || c == 0) return 0;
  std::uint64_t n = r * (c - 1) + c * (r - 1);
  if (conn == Connectivity::EightNeighbour) n += 2 * (r - 1) * (c - 1);
  return n;
}

std::optional<double> tasil_score(const CooccurrenceCounts& counts) noexcept {
  return ratio(counts.ls, counts.ss + counts.ls + counts.ts);
}

std::optional<double> l_percentage(const grid::ClassCounts& classes) noexcept {
  return ratio(classes[kL], classes[kT] + classes[kS] + classes[kL]);
}

std::optional<double> l_percentage(const AnalysisGrid& grid) {
  return l_percentage(grid::class_counts(grid));
}

std::optional<double> default_ts_ratio(const ScoreInputs& in) noexcept {
  return ratio(in.classes[kT], in.classes[kT] + in.classes[kS]);
}

std::optional<double> default_ic_coloc(const ScoreInputs& in) noexcept {
  return ratio(in.pairs.tl, in.pairs.tt + in.pairs.tl + in.pairs.ll);
}

std::optional<double> default_tilab(const ScoreInputs& in) noexcept {
  const auto abundance = ratio(in.classes[kL], in.classes[kL] + in.classes[kT]);
  const auto coloc = default_ic_coloc(in);
  if (!abundance || !coloc) return std::nullopt;
  return 0.5 * (*abundance + *coloc);
}

ComparisonFormulas ComparisonFormulas::defaults() {
  return {&default_ts_ratio, &default_ic_coloc, &default_tilab};
}

DigitalScores comparison_scores(const ScoreInputs& inputs, const ComparisonFormulas& formulas) {
  DigitalScores s;
  s.tasil = tasil_score(inputs.pairs);
  s.l_percentage = l_percentage(inputs.classes);
  if (formulas.ts_ratio) s.ts_ratio = formulas.ts_ratio(inputs);
  if (formulas.ic_coloc) s.ic_coloc = formulas.ic_coloc(inputs);
  if (formulas.tilab) s.tilab = formulas.tilab(inputs);
  return s;
}

DigitalScores comparison_scores(const AnalysisGrid& grid, const CooccurrenceCounts& counts,
                                const ComparisonFormulas& formulas) {
  return comparison_scores(ScoreInputs{grid::class_counts(grid), counts}, formulas);
}

DigitalScores score_grid(const AnalysisGrid& grid, const CountOptions& options) {
  const ScoreInputs in{grid::class_counts(grid, options.backend),
                       count_cooccurrences(grid, options)};
  return comparison_scores(in);
}

void write_scores_row(std::ostream& out, const std::string& slide_id, const DigitalScores& s) {
  out << slide_id << ',' << format_value(s.tasil) << ',' << format_value(s.l_percentage) << ','
      << format_value(s.ts_ratio) << ',' << format_value(s.ic_coloc) << ','
      << format_value(s.tilab) << '\n';
}

}  // namespace tasil::cooccur
