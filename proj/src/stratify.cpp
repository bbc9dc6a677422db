#include "tasil/stratify.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>

#include "tasil/error.hpp"
#include "tasil/format.hpp"

namespace tasil::stratify {

using survival::Cohort;
using survival::SurvivalRecord;

void ThresholdSearchConfig::validate() const {
  if (!(quantile_lo > 0.0 && quantile_lo < quantile_hi && quantile_hi < 1.0)) {
    throw DataError("threshold search: need 0 < quantile_lo < quantile_hi < 1");
  }
  if (!(min_group_fraction >= 0.0 && min_group_fraction < 0.5)) {
    throw DataError("threshold search: min_group_fraction must lie in [0, 0.5)");
  }
  if (score_name.empty()) throw DataError("threshold search: score name is empty");
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

struct Scored {
  const SurvivalRecord* record;
  double score;
};

}  // namespace

ThresholdSearchResult discover_threshold(const Cohort& discovery, const ThresholdSearchConfig& cfg) {
  cfg.validate();
  ThresholdSearchResult res;
  std::vector<Scored> scored;
  std::size_t events = 0;
  for (const auto& r : discovery.records) {
    const auto s = r.covariate(cfg.score_name);
    if (!s) {
      ++res.excluded;
      continue;
    }
    scored.push_back({&r, *s});
    events += r.event ? 1 : 0;
  }
  res.n = scored.size();
  if (scored.size() < 20) {
    throw DataError("threshold search: need at least 20 cases with '" + cfg.score_name + "', have " +
                    std::to_string(scored.size()));
  }
  if (events == 0) throw DataError("threshold search: discovery cohort has no events");
  if (events < 2) throw DataError("threshold search: need at least 2 events");

  std::vector<double> sorted;
  sorted.reserve(scored.size());
  for (const auto& s : scored) sorted.push_back(s.score);
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) throw DataError("score has no variation");

  const double q_lo = quantile(sorted, cfg.quantile_lo);
  const double q_hi = quantile(sorted, cfg.quantile_hi);
  const double median = quantile(sorted, 0.5);
  const double n = static_cast<double>(sorted.size());
  const double min_group = cfg.min_group_fraction * n;

  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  bool found = false;
  std::vector<SurvivalRecord> low, high;
  for (const double v : distinct) {
    if (v < q_lo || v > q_hi) continue;
    if (v <= sorted.front() || v >= sorted.back()) continue;
    const auto n_low = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), v) -
                                           sorted.begin());
    if (n_low < min_group || n - n_low < min_group) continue;

    low.clear();
    high.clear();
    for (const auto& s : scored) (s.score <= v ? low : high).push_back(*s.record);
    survival::LogRankResult lr;
    try {
      lr = survival::logrank_test(low, high);
    } catch (const DataError&) {
      continue;  // no events or zero variance at this split
    }
    ++res.candidates;
    const bool better =
        !found || lr.chi_square > res.best.chi_square ||
        (lr.chi_square == res.best.chi_square &&
         (std::fabs(v - median) < std::fabs(res.threshold - median) ||
          (std::fabs(v - median) == std::fabs(res.threshold - median) && v < res.threshold)));
    if (better) {
      found = true;
      res.threshold = v;
      res.best = lr;
    }
  }
  if (!found) {
    throw DataError("threshold search: no admissible threshold for '" + cfg.score_name +
                    "' in the quantile window");
  }
  return res;
}

GroupAssignment apply_threshold(const Cohort& cohort, const std::string& score_name,
                                double threshold) {
  GroupAssignment out;
  for (const auto& r : cohort.records) {
    const auto s = r.covariate(score_name);
    if (!s) {
      ++out.excluded;
      continue;
    }
    const Group g = *s <= threshold ? Group::Low : Group::High;
    out.entries.push_back({r.case_id, g});
    (g == Group::Low ? out.low : out.high).push_back(r);
  }
  return out;
}

StratificationResult run_protocol(const Cohort& discovery, const Cohort& validation,
                                  const ThresholdSearchConfig& cfg) {
  StratificationResult res;
  res.score_name = cfg.score_name;
  // Only the discovery cohort is visible to the search.
  res.discovery = discover_threshold(discovery, cfg);
  res.threshold = res.discovery.threshold;

  res.validation_groups = apply_threshold(validation, cfg.score_name, res.threshold);
  if (res.validation_groups.degenerate()) {
    throw DataError("validation cohort '" + validation.name + "' falls entirely into one group at threshold " +
                    format_value(res.threshold));
  }
  res.validation_logrank =
      survival::logrank_test(res.validation_groups.low, res.validation_groups.high);
  res.km_low = survival::km_fit(res.validation_groups.low);
  res.km_high = survival::km_fit(res.validation_groups.high);

  std::vector<SurvivalRecord> indicator;
  indicator.reserve(res.validation_groups.low.size() + res.validation_groups.high.size());
  for (const auto* group : {&res.validation_groups.low, &res.validation_groups.high}) {
    const double value = group == &res.validation_groups.high ? 1.0 : 0.0;
    for (const auto& r : *group) {
      SurvivalRecord copy{r.case_id, r.time, r.event, {{kGroupIndicator, value}}};
      indicator.push_back(std::move(copy));
    }
  }
  res.validation_hr = survival::cox_fit(indicator, {kGroupIndicator});
  return res;
}

// ---- TIL categories ---------------------------------------------------------

TilLevel parse_til_level(const std::string& s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "low") return TilLevel::Low;
  if (lower == "moderate") return TilLevel::Moderate;
  if (lower == "high") return TilLevel::High;
  throw DataError("unknown TIL level '" + s + "' (expected Low, Moderate or High)");
}

MergedCategories merge_til_categories(const std::vector<TilLevel>& levels, CategoryMerge merge) {
  if (levels.empty()) throw DataError("merge_til_categories: no levels given");
  MergedCategories out;
  out.groups.reserve(levels.size());
  for (TilLevel l : levels) {
    if (l != TilLevel::Low && l != TilLevel::Moderate && l != TilLevel::High) {
      throw DataError("merge_til_categories: unknown TIL level");
    }
    const bool in_b = merge == CategoryMerge::LowModerateVsHigh ? l == TilLevel::High
                                                                : l != TilLevel::Low;
    out.groups.push_back(in_b ? MergedGroup::B : MergedGroup::A);
  }
  out.degenerate = std::all_of(out.groups.begin(), out.groups.end(),
                               [&](MergedGroup g) { return g == out.groups.front(); });
  return out;
}

// ---- report -----------------------------------------------------------------

void write_km_rows(std::ostream& out, const std::string& group, const survival::KMCurve& curve) {
  std::size_t e = 0;
  std::size_t c = 0;
  double s = 1.0;
  while (e < curve.steps.size() || c < curve.censorings.size()) {
    const bool take_event =
        c >= curve.censorings.size() ||
        (e < curve.steps.size() && curve.steps[e].time <= curve.censorings[c].time);
    if (take_event) {
      const auto& st = curve.steps[e++];
      s = st.survival;
      out << group << ',' << format_value(st.time) << ',' << format_value(st.survival) << ','
          << st.n_at_risk << ',' << st.n_events << '\n';
    } else {
      const auto& cs = curve.censorings[c++];
      out << group << ',' << format_value(cs.time) << ',' << format_value(s) << ','
          << cs.n_at_risk << ",0\n";
    }
  }
}

void write_report(std::ostream& out, const StratificationResult& r) {
  const auto kv = [&](const char* key, const std::string& value) {
    out << key << ',' << value << '\n';
  };
  const auto& hr = r.validation_hr.terms.front();
  kv("score", r.score_name);
  kv("threshold", format_value(r.threshold));
  kv("threshold_selection", kThresholdSelectionLabel);
  kv("discovery_n", std::to_string(r.discovery.n));
  kv("discovery_excluded", std::to_string(r.discovery.excluded));
  kv("discovery_candidates", std::to_string(r.discovery.candidates));
  kv("discovery_chi_square", format_value(r.discovery.best.chi_square));
  kv("discovery_p_uncorrected", format_value(r.discovery.best.p_value));
  kv("validation_n_low", std::to_string(r.validation_groups.low.size()));
  kv("validation_n_high", std::to_string(r.validation_groups.high.size()));
  kv("validation_excluded", std::to_string(r.validation_groups.excluded));
  kv("validation_chi_square", format_value(r.validation_logrank.chi_square));
  kv("validation_p", format_value(r.validation_logrank.p_value));
  kv("validation_hr_high_vs_low", format_value(hr.hazard_ratio));
  kv("validation_hr_ci_low", format_value(hr.ci_low));
  kv("validation_hr_ci_high", format_value(hr.ci_high));
  kv("validation_hr_p", format_value(hr.p_value));
  kv("validation_hr_converged", r.validation_hr.converged ? "1" : "0");
  out << '\n' << kKmCsvHeader << '\n';
  write_km_rows(out, "low", r.km_low);
  out << '\n' << kKmCsvHeader << '\n';
  write_km_rows(out, "high", r.km_high);
}

}  // namespace tasil::stratify
