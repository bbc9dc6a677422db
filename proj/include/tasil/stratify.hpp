#pragma once

// Discovery/validation stratification: pick a score cutpoint on one cohort,
// split another cohort at it and compare the two groups.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "tasil/survival.hpp"

namespace tasil::stratify {

struct ThresholdSearchConfig {
  std::string score_name = "tasil";
  double quantile_lo = 0.1;
  double quantile_hi = 0.9;
  double min_group_fraction = 0.1;

  void validate() const;
};

struct ThresholdSearchResult {
  double threshold = 0.0;
  // Naive log-rank at the maximally selected cutpoint; not corrected for
  // the search, so its p-value is optimistic.
  survival::LogRankResult best;
  std::size_t candidates = 0;
  std::size_t n = 0;
  std::size_t excluded = 0;
};

inline constexpr const char* kThresholdSelectionLabel = "maximally-selected log-rank, uncorrected";

// Type-7 (linear interpolation) sample quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q);

// Maximizes the log-rank chi-square over distinct score values inside the
// [quantile_lo, quantile_hi] window that leave both groups with at least
// min_group_fraction of the cases. Ties go to the candidate closest to the
// median score, then to the smaller candidate.
ThresholdSearchResult discover_threshold(const survival::Cohort& discovery,
                                         const ThresholdSearchConfig& cfg);

enum class Group : unsigned char { Low, High };

struct GroupAssignment {
  struct Entry {
    std::string case_id;
    Group group;
  };
  std::vector<Entry> entries;  // cohort order, cases without the score omitted
  std::vector<survival::SurvivalRecord> low;
  std::vector<survival::SurvivalRecord> high;
  std::size_t excluded = 0;

  // Only one of the groups is populated.
  bool degenerate() const noexcept { return low.empty() || high.empty(); }
};

// score <= threshold is Low, score > threshold is High.
GroupAssignment apply_threshold(const survival::Cohort& cohort, const std::string& score_name,
                                double threshold);

struct StratificationResult {
  std::string score_name;
  double threshold = 0.0;
  ThresholdSearchResult discovery;
  GroupAssignment validation_groups;
  survival::LogRankResult validation_logrank;
  // Univariate Cox fit on the indicator high = 1, low = 0.
  survival::CoxFit validation_hr;
  survival::KMCurve km_low;
  survival::KMCurve km_high;
};

inline constexpr const char* kGroupIndicator = "high_group";

StratificationResult run_protocol(const survival::Cohort& discovery,
                                  const survival::Cohort& validation,
                                  const ThresholdSearchConfig& cfg);

// ---- pathologist TIL categories --------------------------------------------

enum class TilLevel : unsigned char { Low, Moderate, High };
enum class CategoryMerge : unsigned char { LowModerateVsHigh, LowVsModerateHigh };
enum class MergedGroup : unsigned char { A, B };

TilLevel parse_til_level(const std::string& s);

struct MergedCategories {
  std::vector<MergedGroup> groups;
  bool degenerate = false;  // every entry landed in the same group
};

MergedCategories merge_til_categories(const std::vector<TilLevel>& levels, CategoryMerge merge);

// ---- report -----------------------------------------------------------------

inline constexpr const char* kKmCsvHeader = "group,time,survival,n_at_risk,n_events";

// One row per distinct observed time. Rows with n_events = 0 are
// censoring-only times.
void write_km_rows(std::ostream& out, const std::string& group, const survival::KMCurve& curve);

// key,value summary lines followed by one KM CSV block per group.
void write_report(std::ostream& out, const StratificationResult& result);

}  // namespace tasil::stratify
