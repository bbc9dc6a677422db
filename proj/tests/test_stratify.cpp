#include <doctest.h>

#include <random>
#include <sstream>

#include "support.hpp"
#include "tasil/error.hpp"
#include "tasil/stratify.hpp"
#include "tasil/synth.hpp"

using namespace tasil;
using namespace tasil::stratify;
using survival::Cohort;
using testing::record;

namespace {

Cohort planted(std::uint64_t seed, double beta, std::size_t n = 200) {
  synth::PlantedCohortConfig cfg;
  cfg.seed = seed;
  cfg.effect_beta = beta;
  cfg.n_cases = n;
  cfg.score_name = "tasil";
  return synth::generate_planted_cohort(cfg);
}

}  // namespace

TEST_CASE("type-7 quantiles") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile(v, 0.1) == doctest::Approx(1.3));
  CHECK(quantile(v, 0.9) == doctest::Approx(3.7));
  CHECK(quantile({5.0}, 0.3) == 5.0);
  CHECK_THROWS_AS(quantile({}, 0.5), DataError);
}

TEST_CASE("threshold search finds the largest admissible chi-square") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Cohort c = planted(seed, 1.0, 120);
    const ThresholdSearchConfig cfg;
    const auto res = discover_threshold(c, cfg);

    std::vector<double> scores;
    for (const auto& r : c.records) scores.push_back(r.covariates.at("tasil"));
    std::sort(scores.begin(), scores.end());
    const double lo = quantile(scores, 0.1), hi = quantile(scores, 0.9);
    double best = -1, best_v = 0;
    for (double v : scores) {
      if (v < lo || v > hi || v == scores.front() || v == scores.back()) continue;
      std::vector<survival::SurvivalRecord> a, b;
      for (const auto& r : c.records) (r.covariates.at("tasil") <= v ? a : b).push_back(r);
      if (a.size() < 12 || b.size() < 12) continue;
      const double chi = testing::logrank_oracle(a, b);
      if (chi > best) {
        best = chi;
        best_v = v;
      }
    }
    CHECK(res.threshold == best_v);
    CHECK(res.best.chi_square == doctest::Approx(best).epsilon(1e-10));
    CHECK(res.threshold > scores.front());
    CHECK(res.threshold < scores.back());
  }
}

TEST_CASE("ties between candidates go to the one nearest the median") {
  // Case i and case 29 - i share a survival time, so the split keeping the
  // first k cases low ties with the one keeping the first 30 - k low.
  Cohort c;
  c.name = "mirror";
  c.covariate_names = {"tasil"};
  for (int i = 0; i < 30; ++i) {
    const double t = 1.0 + std::min(i, 29 - i);
    c.records.push_back(record("c" + std::to_string(i), t, true, {{"tasil", static_cast<double>(i)}}));
  }
  // Window [3.5, 24.5] admits v = 4..24, closed under the twin map v -> 28 - v.
  ThresholdSearchConfig cfg;
  cfg.quantile_lo = 3.5 / 29.0;
  cfg.quantile_hi = 24.5 / 29.0;
  std::map<double, double> chi;
  for (int v = 4; v <= 24; ++v) {
    std::vector<survival::SurvivalRecord> a(c.records.begin(), c.records.begin() + v + 1);
    std::vector<survival::SurvivalRecord> b(c.records.begin() + v + 1, c.records.end());
    chi[v] = survival::logrank_test(a, b).chi_square;
  }
  double best = 0;
  for (const auto& [v, x] : chi) best = std::max(best, x);
  std::vector<double> winners;
  for (const auto& [v, x] : chi) {
    if (x == best) winners.push_back(v);
  }
  REQUIRE(winners.size() == 2);
  // Median score is 14.5; the upper twin is one step closer to it.
  const auto res = discover_threshold(c, cfg);
  CHECK(res.threshold == winners[1]);
  CHECK(std::abs(winners[1] - 14.5) < std::abs(winners[0] - 14.5));
}

TEST_CASE("threshold search input errors") {
  Cohort small = planted(1, 1.0, 19);
  CHECK_THROWS_AS(discover_threshold(small, {}), DataError);
  Cohort flat = planted(2, 1.0, 40);
  for (auto& r : flat.records) r.covariates["tasil"] = 0.5;
  CHECK_THROWS_WITH_AS(discover_threshold(flat, {}), "score has no variation", DataError);
  Cohort quiet = planted(3, 1.0, 40);
  for (auto& r : quiet.records) r.event = false;
  CHECK_THROWS_AS(discover_threshold(quiet, {}), DataError);
  ThresholdSearchConfig bad;
  bad.quantile_lo = 0.9;
  bad.quantile_hi = 0.1;
  CHECK_THROWS_AS(discover_threshold(planted(4, 1.0, 40), bad), DataError);
}

TEST_CASE("apply_threshold puts ties in the low group") {
  Cohort c;
  c.records = {record("a", 1, true, {{"s", 0.2}}), record("b", 2, true, {{"s", 0.5}}),
               record("c", 3, false, {{"s", 0.7}}), record("d", 4, false, {})};
  const auto g = apply_threshold(c, "s", 0.5);
  CHECK(g.low.size() == 2);
  CHECK(g.high.size() == 1);
  CHECK(g.excluded == 1);
  CHECK(g.entries[1].group == Group::Low);
  CHECK_FALSE(g.degenerate());
  CHECK(apply_threshold(c, "s", 1.0).degenerate());
}

TEST_CASE("protocol on planted cohorts") {
  const auto res = run_protocol(planted(10, 1.5, 400), planted(11, 1.5, 400), ThresholdSearchConfig{});
  CHECK(std::abs(res.threshold - 0.5) < 0.15);
  CHECK(res.validation_logrank.p_value < 0.01);
  CHECK(res.validation_hr.terms.front().name == kGroupIndicator);
  CHECK(res.validation_hr.terms.front().hazard_ratio < 1.0);
  CHECK(res.km_low.n + res.km_high.n == 400);

  std::ostringstream out;
  write_report(out, res);
  const std::string text = out.str();
  CHECK(text.find("threshold_selection,maximally-selected log-rank, uncorrected\n") != std::string::npos);
  CHECK(text.find("\n\ngroup,time,survival,n_at_risk,n_events\nlow,") != std::string::npos);
  CHECK(text.find("\n\ngroup,time,survival,n_at_risk,n_events\nhigh,") != std::string::npos);
}

TEST_CASE("KM rows interleave censoring-only times") {
  const std::vector<survival::SurvivalRecord> r{record("a", 2, true), record("b", 4, false),
                                                record("c", 5, true), record("d", 7, true)};
  std::ostringstream out;
  write_km_rows(out, "g", survival::km_fit(r));
  CHECK(out.str() == "g,2,0.75,4,1\ng,4,0.75,3,0\ng,5,0.375,2,1\ng,7,0,1,1\n");
}

TEST_CASE("pathologist TIL categories") {
  CHECK(parse_til_level("Low") == TilLevel::Low);
  CHECK(parse_til_level("MODERATE") == TilLevel::Moderate);
  CHECK(parse_til_level("high") == TilLevel::High);
  CHECK_THROWS_AS(parse_til_level("absent"), DataError);
  const std::vector levels{TilLevel::Low, TilLevel::Moderate, TilLevel::High};
  CHECK(merge_til_categories(levels, CategoryMerge::LowModerateVsHigh).groups ==
        std::vector{MergedGroup::A, MergedGroup::A, MergedGroup::B});
  CHECK(merge_til_categories(levels, CategoryMerge::LowVsModerateHigh).groups ==
        std::vector{MergedGroup::A, MergedGroup::B, MergedGroup::B});
  CHECK(merge_til_categories({TilLevel::Low, TilLevel::Moderate}, CategoryMerge::LowModerateVsHigh).degenerate);
  CHECK_THROWS_AS(merge_til_categories({}, CategoryMerge::LowVsModerateHigh), DataError);
}
