#pragma once

// Shared fixtures and brute-force oracles for the test suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "tasil/cooccur.hpp"
#include "tasil/grid.hpp"
#include "tasil/survival.hpp"

namespace tasil::testing {

inline grid::AnalysisGrid random_analysis_grid(std::mt19937_64& rng, std::size_t rows,
                                               std::size_t cols, std::string id = "g") {
  std::uniform_int_distribution<int> cls(0, 3);
  std::vector<grid::AnalysisClass> labels(rows * cols);
  for (auto& l : labels) l = static_cast<grid::AnalysisClass>(cls(rng));
  return grid::AnalysisGrid(std::move(id), rows, cols, std::move(labels));
}

inline grid::AnalysisGrid grid_from_rows(const std::vector<std::string>& rows) {
  std::vector<grid::AnalysisClass> labels;
  for (const auto& r : rows) {
    for (char c : r) labels.push_back(*grid::from_code<grid::AnalysisClass>(c));
  }
  return grid::AnalysisGrid("fixture", rows.size(), rows.empty() ? 0 : rows[0].size(),
                            std::move(labels));
}

// Visits every unordered pair of distinct cells and keeps the neighbouring ones.
inline cooccur::CooccurrenceCounts pair_oracle(const grid::AnalysisGrid& g,
                                               cooccur::Connectivity conn) {
  using grid::AnalysisClass;
  cooccur::CooccurrenceCounts c;
  const long n = static_cast<long>(g.size());
  const long cols = static_cast<long>(g.cols());
  for (long a = 0; a < n; ++a) {
    for (long b = a + 1; b < n; ++b) {
      const long dr = std::labs(a / cols - b / cols);
      const long dc = std::labs(a % cols - b % cols);
      const bool adjacent = conn == cooccur::Connectivity::FourNeighbour
                                ? dr + dc == 1
                                : std::max(dr, dc) == 1;
      if (!adjacent) continue;
      auto x = g.labels()[a];
      auto y = g.labels()[b];
      if (x == AnalysisClass::NonROI || y == AnalysisClass::NonROI) continue;
      if (x > y) std::swap(x, y);
      if (x == AnalysisClass::Tumour && y == AnalysisClass::Tumour) ++c.tt;
      if (x == AnalysisClass::Tumour && y == AnalysisClass::TAS) ++c.ts;
      if (x == AnalysisClass::Tumour && y == AnalysisClass::Lymphocyte) ++c.tl;
      if (x == AnalysisClass::TAS && y == AnalysisClass::TAS) ++c.ss;
      if (x == AnalysisClass::TAS && y == AnalysisClass::Lymphocyte) ++c.ls;
      if (x == AnalysisClass::Lymphocyte && y == AnalysisClass::Lymphocyte) ++c.ll;
    }
  }
  return c;
}

inline survival::SurvivalRecord record(std::string id, double time, bool event,
                                       std::map<std::string, double> cov = {}) {
  return survival::SurvivalRecord{std::move(id), time, event, std::move(cov)};
}

// Random cohort with one "score" covariate; times and scores drawn from small
// integer grids so ties are common.
inline std::vector<survival::SurvivalRecord> random_tied_cohort(std::mt19937_64& rng,
                                                                std::size_t n) {
  std::uniform_int_distribution<int> t(1, 12);
  std::uniform_int_distribution<int> s(0, 6);
  std::bernoulli_distribution e(0.6);
  std::vector<survival::SurvivalRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(record("c" + std::to_string(i), t(rng), e(rng), {{"score", s(rng)}}));
  }
  return out;
}

// Harrell's C by looking at every ordered pair.
struct BruteConcordance {
  double c = 0.5;
  std::size_t comparable = 0;
  double concordant = 0.0;
};

inline BruteConcordance brute_c_index(const std::vector<survival::SurvivalRecord>& r,
                                      const std::string& score, bool higher_is_riskier) {
  BruteConcordance out;
  for (const auto& i : r) {
    for (const auto& j : r) {
      if (!(i.event && i.time < j.time)) continue;
      ++out.comparable;
      double si = i.covariates.at(score);
      double sj = j.covariates.at(score);
      if (!higher_is_riskier) std::swap(si, sj);
      if (si > sj) out.concordant += 1.0;
      if (si == sj) out.concordant += 0.5;
    }
  }
  if (out.comparable > 0) out.c = out.concordant / static_cast<double>(out.comparable);
  return out;
}

// Average 1-based ranks by counting smaller and equal values.
inline std::vector<double> brute_mid_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

inline double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace tasil::testing

namespace tasil::testing {

// Log-rank chi-square straight from the textbook sums over distinct event times.
inline double logrank_oracle(const std::vector<survival::SurvivalRecord>& a,
                             const std::vector<survival::SurvivalRecord>& b) {
  std::vector<double> times;
  for (const auto* g : {&a, &b}) {
    for (const auto& r : *g) {
      if (r.event) times.push_back(r.time);
    }
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  double o = 0, e = 0, v = 0;
  for (double t : times) {
    double na = 0, nb = 0, da = 0, db = 0;
    for (const auto& r : a) {
      na += r.time >= t;
      da += r.time == t && r.event;
    }
    for (const auto& r : b) {
      nb += r.time >= t;
      db += r.time == t && r.event;
    }
    const double n = na + nb, d = da + db;
    o += da;
    e += d * na / n;
    if (n > 1) v += d * (na / n) * (nb / n) * (n - d) / (n - 1);
  }
  return (o - e) * (o - e) / v;
}

// Exponential survival with hazard lambda * exp(beta' x), x ~ N(0, 1) per
// covariate, uniform censoring on (0, horizon).
inline std::vector<survival::SurvivalRecord> simulate_cox(std::mt19937_64& rng, std::size_t n,
                                                          const std::vector<double>& beta,
                                                          double lambda = 0.1,
                                                          double horizon = 30.0) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<survival::SurvivalRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    survival::SurvivalRecord r;
    r.case_id = "s" + std::to_string(i);
    double eta = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) {
      const double x = z(rng);
      r.covariates["x" + std::to_string(j)] = x;
      eta += beta[j] * x;
    }
    const double t = -std::log(1.0 - u(rng)) / (lambda * std::exp(eta));
    const double c = horizon * (1.0 - u(rng));
    r.time = std::min(t, c);
    r.event = t <= c;
    out.push_back(std::move(r));
  }
  return out;
}

// Two-sided exact permutation p of Spearman's rho, enumerating the distinct
// arrangements of y's ranks against x's ranks.
inline double spearman_enumeration_p(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = brute_mid_ranks(x);
  const auto ry = brute_mid_ranks(y);
  const double observed = std::abs(pearson_oracle(rx, ry));
  std::vector<double> perm = ry;
  std::sort(perm.begin(), perm.end());
  std::size_t total = 0, extreme = 0;
  do {
    ++total;
    if (std::abs(pearson_oracle(rx, perm)) >= observed - 1e-9) ++extreme;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace tasil::testing

namespace tasil::testing {

// Walks every cell's neighbour offsets and counts ordered class pairs; each
// unordered pair is then seen twice.
inline cooccur::CooccurrenceCounts offset_oracle(const grid::AnalysisGrid& g,
                                                 cooccur::Connectivity conn) {
  std::uint64_t ordered[4][4] = {};
  const long rows = static_cast<long>(g.rows());
  const long cols = static_cast<long>(g.cols());
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      for (long dr = -1; dr <= 1; ++dr) {
        for (long dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (conn == cooccur::Connectivity::FourNeighbour && dr != 0 && dc != 0) continue;
          const long rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= rows || cc >= cols) continue;
          ++ordered[grid::index_of(g.at(r, c))][grid::index_of(g.at(rr, cc))];
        }
      }
    }
  }
  constexpr int T = 0, S = 1, L = 2;
  cooccur::CooccurrenceCounts out;
  out.tt = ordered[T][T] / 2;
  out.ss = ordered[S][S] / 2;
  out.ll = ordered[L][L] / 2;
  out.tl = ordered[T][L];
  out.ts = ordered[T][S];
  out.ls = ordered[L][S];
  return out;
}

}  // namespace tasil::testing
