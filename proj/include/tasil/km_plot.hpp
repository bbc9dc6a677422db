#pragma once

// Kaplan-Meier tables (group,time,survival,n_at_risk,n_events) and a
// dependency-free SVG step-plot emitter for them.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tasil/survival.hpp"

namespace tasil::km_plot {

struct KmRow {
  double time = 0.0;
  double survival = 1.0;
  std::size_t n_at_risk = 0;
  std::size_t n_events = 0;
};

struct KmSeries {
  std::string group;
  std::vector<KmRow> rows;  // increasing time

  std::size_t n() const noexcept { return rows.empty() ? 0 : rows.front().n_at_risk; }
  // Subjects censored at row i: those leaving the risk set without an event.
  std::size_t censored_at(std::size_t i) const noexcept;
};

// Reads every KM block in a file. Lines before a block header (for example
// the key,value lines of a stratification report) are skipped; blank lines
// end a block. Series keep first-appearance order.
std::vector<KmSeries> read_km_tables(std::istream& in, const std::string& source);

// Rebuilds per-subject records (time, event) from a table, enough to rerun a
// log-rank test on plotted data.
std::vector<survival::SurvivalRecord> reconstruct_records(const KmSeries& series);

struct SvgOptions {
  int width = 640;
  int height = 420;
  std::string title = "Kaplan-Meier estimate";
  std::string x_label = "Time (months)";
  std::string y_label = "Survival probability";
};

// Axes, one step curve per series, censoring ticks and a legend with group
// sizes and (when given) the log-rank p-value.
std::string render_svg(const std::vector<KmSeries>& series, std::optional<double> logrank_p,
                       const SvgOptions& options = {});

}  // namespace tasil::km_plot
