#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "support.hpp"
#include "tasil/error.hpp"
#include "tasil/synth.hpp"

using namespace tasil;
using namespace tasil::synth;
using grid::AnalysisClass;

namespace {

SynthGridConfig grid_config(std::uint64_t seed, double theta) {
  SynthGridConfig cfg;
  cfg.seed = seed;
  cfg.infiltration_theta = theta;
  return cfg;
}

}  // namespace

TEST_CASE("seed derivation separates indices and streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    seen.insert(derive_seed(42, i));
    seen.insert(derive_seed(42, i, 1));
  }
  CHECK(seen.size() == 2000);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}

TEST_CASE("uniform draws stay inside the open interval") {
  Rng rng(7);
  double lo = 1, hi = 0, mean = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    mean += u / 100000;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  for (int i = 0; i < 1000; ++i) {
    const auto k = rng.integer(3, 5);
    CHECK(k >= 3);
    CHECK(k <= 5);
  }
}

TEST_CASE("grids are deterministic in the seed") {
  const auto a = generate_grid(grid_config(5, 0.4), "x");
  const auto b = generate_grid(grid_config(5, 0.4), "x");
  const auto c = generate_grid(grid_config(6, 0.4), "x");
  CHECK(a.grid == b.grid);
  CHECK_FALSE(a.grid == c.grid);
}

TEST_CASE("grid layout: nests, stroma band, infiltration") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = generate_grid(grid_config(seed, 0.5)).grid;
    const auto counts = grid::class_counts(g);
    CHECK(counts[0] > 0);
    CHECK(counts[1] + counts[2] > 0);
    // Tumour never touches the background: the band is two cells wide.
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) {
        if (g.at(r, c) != AnalysisClass::Tumour) continue;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const auto rr = static_cast<std::ptrdiff_t>(r) + dr;
            const auto cc = static_cast<std::ptrdiff_t>(c) + dc;
            if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(g.rows()) ||
                cc >= static_cast<std::ptrdiff_t>(g.cols())) {
              continue;
            }
            CHECK(g.at(rr, cc) != AnalysisClass::NonROI);
          }
        }
      }
    }
  }
}

TEST_CASE("theta zero gives no lymphocytes and a zero score") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = generate_grid(grid_config(seed, 0.0)).grid;
    CHECK(grid::class_counts(g)[2] == 0);
    CHECK(*cooccur::score_grid(g).tasil == 0.0);
  }
}

TEST_CASE("larger theta only adds lymphocytes") {
  const auto lo = generate_grid(grid_config(3, 0.2)).grid;
  const auto hi = generate_grid(grid_config(3, 0.6)).grid;
  std::size_t band = 0, lymph = 0;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (lo.labels()[i] == AnalysisClass::Lymphocyte) CHECK(hi.labels()[i] == AnalysisClass::Lymphocyte);
    if (lo.labels()[i] == AnalysisClass::Tumour) CHECK(hi.labels()[i] == AnalysisClass::Tumour);
    if (hi.labels()[i] == AnalysisClass::TAS || hi.labels()[i] == AnalysisClass::Lymphocyte) ++band;
    if (hi.labels()[i] == AnalysisClass::Lymphocyte) ++lymph;
  }
  CHECK(static_cast<double>(lymph) / band == doctest::Approx(0.6).epsilon(0.15));
}

TEST_CASE("grid config validation") {
  auto cfg = grid_config(1, 0.9);
  CHECK_THROWS_AS(generate_grid(cfg), DataError);
  cfg = grid_config(1, 0.3);
  cfg.rows = 5;
  CHECK_THROWS_AS(generate_grid(cfg), DataError);
  cfg = grid_config(1, 0.3);
  cfg.nest_radius_min = 7;
  CHECK_THROWS_AS(generate_grid(cfg), DataError);
}

TEST_CASE("cohorts are reproducible and thread-count independent") {
  SynthCohortConfig cfg;
  cfg.n_cases = 24;
  cfg.seed = 99;
  const auto a = generate_cohort(cfg, 1);
  const auto b = generate_cohort(cfg, 5);
  std::ostringstream sa, sb;
  survival::write_cohort_csv(sa, a.cohort);
  survival::write_cohort_csv(sb, b.cohort);
  CHECK(sa.str() == sb.str());
  CHECK(a.theta == b.theta);
  CHECK(a.grids == b.grids);
  CHECK(a.cohort.records.front().case_id == "case00");
  for (std::size_t i = 0; i < a.theta.size(); ++i) {
    CHECK(a.theta[i] >= cfg.theta_lo);
    CHECK(a.theta[i] <= cfg.theta_hi);
    CHECK(a.cohort.records[i].time > 0.0);
    CHECK(a.cohort.records[i].time <= cfg.censor_horizon_months);
    CHECK(*a.cohort.records[i].covariate("tasil") == *cooccur::score_grid(a.grids[i]).tasil);
  }
  a.cohort.validate();
}

TEST_CASE("score tracks theta across a cohort") {
  SynthCohortConfig cfg;
  cfg.n_cases = 40;
  cfg.seed = 4;
  const auto c = generate_cohort(cfg, 4);
  std::vector<double> tasil;
  for (const auto& r : c.cohort.records) tasil.push_back(*r.covariate("tasil"));
  CHECK(survival::spearman(c.theta, tasil).rho > 0.9);
}

TEST_CASE("step hazard separates at the cut") {
  SynthCohortConfig cfg;
  cfg.n_cases = 300;
  cfg.seed = 12;
  cfg.hazard = HazardModel::Step;
  cfg.effect_beta = 2.0;
  cfg.grid.rows = cfg.grid.cols = 32;
  cfg.grid.n_tumour_nests = 2;
  const auto c = generate_cohort(cfg, 4);
  std::vector<survival::SurvivalRecord> lo, hi;
  for (std::size_t i = 0; i < c.theta.size(); ++i) {
    (c.theta[i] > cfg.step_cut ? hi : lo).push_back(c.cohort.records[i]);
  }
  CHECK(survival::logrank_test(lo, hi).p_value < 0.01);
}

TEST_CASE("planted cohorts") {
  PlantedCohortConfig cfg;
  cfg.seed = 3;
  const auto a = generate_planted_cohort(cfg);
  const auto b = generate_planted_cohort(cfg);
  CHECK(a.records.size() == 400);
  std::ostringstream sa, sb;
  survival::write_cohort_csv(sa, a);
  survival::write_cohort_csv(sb, b);
  CHECK(sa.str() == sb.str());
  for (const auto& r : a.records) {
    const double s = *r.covariate("score");
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    CHECK(r.time <= cfg.censor_horizon_months);
  }
}

namespace {

// Concordance of two uncensored cases with hazards exp(-beta * theta),
// theta ~ U(0, w): |theta_i - theta_j| has density 2(w - d)/w^2.
double pairwise_c_oracle(double beta, double w) {
  const int n = 2000;
  const double h = w / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double d = i * h;
    const double f = 2.0 * (w - d) / (w * w) / (1.0 + std::exp(-beta * d));
    sum += f * (i == 0 || i == n ? 1.0 : i % 2 ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("tasil c-index follows the generating hazard") {
  // The widest theta range caps beta = 1.5 below 0.6 even for a perfect score.
  CHECK(pairwise_c_oracle(1.5, 0.8) == doctest::Approx(0.5966).epsilon(1e-3));
  CHECK(pairwise_c_oracle(0.0, 0.8) == doctest::Approx(0.5));

  SynthCohortConfig cfg;
  cfg.n_cases = 1000;
  cfg.seed = 21;
  const auto c_of = [&](double beta) {
    cfg.effect_beta = beta;
    return survival::c_index(generate_cohort(cfg, 4).cohort.records, "tasil",
                             survival::RiskDirection::HigherScoreLowerRisk);
  };
  const double null = c_of(0.0);
  CHECK(std::abs(null - 0.5) < 0.05);
  const double mid = c_of(1.5);
  CHECK(mid > 0.55);
  CHECK(std::abs(mid - pairwise_c_oracle(1.5, 0.8)) < 0.03);
  const double strong = c_of(3.0);
  CHECK(strong > 0.6);
  CHECK(std::abs(strong - pairwise_c_oracle(3.0, 0.8)) < 0.03);
}

TEST_CASE("survival times under no effect") {
  SynthCohortConfig cfg;
  cfg.n_cases = 5000;
  cfg.seed = 33;
  cfg.effect_beta = 0.0;
  cfg.grid.rows = cfg.grid.cols = 24;
  cfg.grid.n_tumour_nests = 1;
  const auto c = generate_cohort(cfg, 4);
  const auto km = survival::km_fit(c.cohort.records);
  for (double t : {6.0, 24.0, 60.0, 100.0}) {
    INFO("t = " << t);
    CHECK(std::abs(km.survival_at(t) - std::exp(-cfg.baseline_hazard_lambda0 * t)) < 0.03);
  }

  cfg.n_cases = 500;
  cfg.censor_horizon_months = 1e9;
  const auto open = generate_cohort(cfg, 4);
  std::size_t events = 0;
  for (const auto& r : open.cohort.records) events += r.event;
  CHECK(events >= 499);
}
