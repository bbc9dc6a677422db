#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "tasil/error.hpp"
#include "tasil/special.hpp"
#include "tasil/survival.hpp"

namespace tasil::survival {

namespace {

// Counts over score ranks 0..n-1.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}

  void add(std::size_t i) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  // Number of inserted ranks < i.
  std::size_t below(std::size_t i) const {
    std::size_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::size_t> tree_;
};

}  // namespace

// O(n log n): walk times from latest to earliest, keeping every subject with
// a strictly later time in a Fenwick tree keyed by score rank.
Concordance concordance(std::span<const SurvivalRecord> records, const std::string& score_name,
                        RiskDirection direction) {
  struct Subject {
    double time;
    bool event;
    double score;
    std::size_t rank = 0;
  };
  std::vector<Subject> subjects;
  Concordance out;
  for (const auto& r : records) {
    const auto s = r.covariate(score_name);
    if (!s) {
      ++out.excluded;
      continue;
    }
    subjects.push_back({r.time, r.event, *s});
  }

  std::vector<double> distinct;
  distinct.reserve(subjects.size());
  for (const auto& s : subjects) distinct.push_back(s.score);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (auto& s : subjects) {
    s.rank = static_cast<std::size_t>(
        std::lower_bound(distinct.begin(), distinct.end(), s.score) - distinct.begin());
  }
  std::sort(subjects.begin(), subjects.end(),
            [](const Subject& a, const Subject& b) { return a.time > b.time; });

  Fenwick tree(distinct.size());
  std::size_t inserted = 0;
  std::uint64_t comparable = 0, concordant = 0, tied = 0;
  for (std::size_t i = 0; i < subjects.size();) {
    std::size_t j = i;
    while (j < subjects.size() && subjects[j].time == subjects[i].time) ++j;
    for (std::size_t k = i; k < j; ++k) {
      if (!subjects[k].event) continue;
      const std::size_t lower = tree.below(subjects[k].rank);
      const std::size_t equal = tree.below(subjects[k].rank + 1) - lower;
      const std::size_t higher = inserted - lower - equal;
      comparable += inserted;
      tied += equal;
      concordant += direction == RiskDirection::HigherScoreHigherRisk ? lower : higher;
    }
    for (std::size_t k = i; k < j; ++k) tree.add(subjects[k].rank);
    inserted += j - i;
    i = j;
  }
  if (comparable == 0) throw DataError("C-index: no comparable pairs");

  out.comparable = comparable;
  out.concordant = concordant;
  out.tied = tied;
  out.c_index = (2.0 * static_cast<double>(concordant) + static_cast<double>(tied)) /
                (2.0 * static_cast<double>(comparable));
  return out;
}

double c_index(std::span<const SurvivalRecord> records, const std::string& score_name,
               RiskDirection direction) {
  return concordance(records, score_name, direction).c_index;
}

std::vector<double> mid_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 (0-based) share the mean 1-based rank.
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

namespace {

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("Spearman: a sequence is constant, rho undefined");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Two-sided permutation p over all n! orderings of y. Ranks are doubled so
// every quantity is an exact integer.
double exact_permutation_p(const std::vector<double>& rx, const std::vector<double>& ry) {
  const std::size_t n = rx.size();
  std::vector<std::int64_t> a(n), b(n);
  std::int64_t sa = 0, sb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = std::llround(2.0 * rx[i]);
    b[i] = std::llround(2.0 * ry[i]);
    sa += a[i];
    sb += b[i];
  }
  const auto centred = [&](const std::vector<std::size_t>& perm) {
    std::int64_t cross = 0;
    for (std::size_t i = 0; i < n; ++i) cross += a[i] * b[perm[i]];
    const std::int64_t d = static_cast<std::int64_t>(n) * cross - sa * sb;
    return d < 0 ? -d : d;
  };
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const std::int64_t observed = centred(perm);
  std::uint64_t extreme = 0, total = 0;
  do {
    ++total;
    if (centred(perm) >= observed) ++extreme;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

SpearmanResult spearman(std::span<const double> x, std::span<const double> y,
                        const SpearmanOptions& options) {
  if (x.size() != y.size()) throw DataError("Spearman: sequences differ in length");
  if (x.size() < 3) throw DataError("Spearman: need at least 3 observations");

  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  SpearmanResult res;
  res.n = x.size();
  res.rho = pearson(rx, ry);

  // n! enumeration beyond 12 is not practical.
  if (res.n <= std::min<std::size_t>(options.exact_max_n, 12)) {
    res.exact = true;
    res.p_value = exact_permutation_p(rx, ry);
    return res;
  }
  const double df = static_cast<double>(res.n) - 2.0;
  if (std::fabs(res.rho) >= 1.0) {
    res.p_value = 0.0;
    return res;
  }
  const double t = res.rho * std::sqrt(df / (1.0 - res.rho * res.rho));
  res.p_value = special::student_t_two_sided(t, df);
  return res;
}

}  // namespace tasil::survival
