#include "tasil/synth.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "tasil/error.hpp"

namespace tasil::synth {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t stream) noexcept {
  std::uint64_t z = base ^ (index * 0x9E3779B97F4A7C15ULL) ^ (stream * 0xD1B54A32D192ED03ULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::int64_t Rng::integer(std::int64_t lo, std::int64_t hi) noexcept {
  const double span = static_cast<double>(hi - lo + 1);
  const auto k = static_cast<std::int64_t>(std::floor(uniform() * span));
  return lo + std::min<std::int64_t>(k, hi - lo);
}

void SynthGridConfig::validate() const {
  if (rows == 0 || cols == 0) throw DataError("synth grid: rows and cols must be positive");
  if (n_tumour_nests == 0) throw DataError("synth grid: need at least one tumour nest");
  if (nest_radius_min > nest_radius_max) {
    throw DataError("synth grid: nest radius range is empty");
  }
  if (stroma_width == 0) throw DataError("synth grid: stroma width must be positive");
  if (!(infiltration_theta >= 0.0 && infiltration_theta <= 0.8)) {
    throw DataError("synth grid: infiltration theta must lie in [0, 0.8]");
  }
  if (2 * nest_radius_min + 1 > std::min(rows, cols)) {
    throw DataError("synth grid: nests of radius " + std::to_string(nest_radius_min) +
                    " cannot be placed in a " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " grid");
  }
}

SynthGrid generate_grid(const SynthGridConfig& cfg, std::string slide_id) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0, 0x6772));

  struct Nest {
    std::int64_t r, c, radius;
  };
  std::vector<Nest> nests;
  const auto rows = static_cast<std::int64_t>(cfg.rows);
  const auto cols = static_cast<std::int64_t>(cfg.cols);
  const auto rmax_fit = (std::min(rows, cols) - 1) / 2;
  constexpr int kAttempts = 1000;
  for (std::size_t k = 0; k < cfg.n_tumour_nests; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      const std::int64_t radius =
          rng.integer(static_cast<std::int64_t>(cfg.nest_radius_min),
                      std::min(static_cast<std::int64_t>(cfg.nest_radius_max), rmax_fit));
      const Nest n{rng.integer(radius, rows - 1 - radius), rng.integer(radius, cols - 1 - radius),
                   radius};
      placed = std::none_of(nests.begin(), nests.end(), [&](const Nest& o) {
        const auto dr = n.r - o.r, dc = n.c - o.c;
        const auto gap = n.radius + o.radius + 1;
        return dr * dr + dc * dc <= gap * gap;
      });
      if (placed) nests.push_back(n);
    }
    if (!placed) {
      throw DataError("synth grid: could not place tumour nest " + std::to_string(k + 1) + " of " +
                      std::to_string(cfg.n_tumour_nests));
    }
  }

  const auto width = static_cast<double>(cfg.stroma_width);
  std::vector<grid::AnalysisClass> labels(cfg.rows * cfg.cols, grid::AnalysisClass::NonROI);
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) {
      auto& cell = labels[static_cast<std::size_t>(r * cols + c)];
      for (const Nest& n : nests) {
        const double dist = std::hypot(static_cast<double>(r - n.r), static_cast<double>(c - n.c));
        if (dist <= static_cast<double>(n.radius)) {
          cell = grid::AnalysisClass::Tumour;
          break;
        }
        if (dist <= static_cast<double>(n.radius) + width) cell = grid::AnalysisClass::TAS;
      }
    }
  }
  for (auto& cell : labels) {
    if (cell != grid::AnalysisClass::TAS) continue;
    if (rng.uniform() < cfg.infiltration_theta) cell = grid::AnalysisClass::Lymphocyte;
  }
  return {grid::AnalysisGrid(std::move(slide_id), cfg.rows, cfg.cols, std::move(labels),
                             cfg.patch_size_um),
          cfg.infiltration_theta};
}

void SynthCohortConfig::validate() const {
  if (n_cases == 0) throw DataError("synth cohort: n_cases must be positive");
  if (!(theta_lo >= 0.0 && theta_lo <= theta_hi && theta_hi <= 0.8)) {
    throw DataError("synth cohort: need 0 <= theta_lo <= theta_hi <= 0.8");
  }
  if (!(baseline_hazard_lambda0 > 0.0)) throw DataError("synth cohort: lambda0 must be positive");
  if (!(censor_horizon_months > 0.0)) throw DataError("synth cohort: censor horizon must be positive");
  if (!std::isfinite(effect_beta)) throw DataError("synth cohort: effect beta must be finite");
  SynthGridConfig g = grid;
  g.infiltration_theta = theta_lo;
  g.validate();
}

void attach_scores(survival::SurvivalRecord& record, const cooccur::DigitalScores& s) {
  const std::optional<double> values[] = {s.tasil, s.l_percentage, s.ts_ratio, s.ic_coloc, s.tilab};
  for (std::size_t i = 0; i < kScoreColumns.size(); ++i) {
    if (values[i]) record.covariates[kScoreColumns[i]] = *values[i];
  }
}

namespace {

std::string case_id(const std::string& prefix, std::size_t k, std::size_t n) {
  std::string digits = std::to_string(k);
  const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

// Observed time and event flag under independent Uniform(0, horizon) censoring.
std::pair<double, bool> draw_survival(Rng& rng, double rate, double horizon) {
  const double t = rng.exponential(rate);
  const double c = rng.uniform(0.0, horizon);
  return t <= c ? std::pair{t, true} : std::pair{c, false};
}

}  // namespace

SynthCohort generate_cohort(const SynthCohortConfig& cfg, unsigned threads) {
  cfg.validate();
  const std::size_t n = cfg.n_cases;

  struct Case {
    survival::SurvivalRecord record;
    double theta = 0.0;
    std::optional<grid::AnalysisGrid> grid;
  };
  std::vector<Case> cases(n);

  const auto make_case = [&](std::size_t k) {
    const std::uint64_t case_seed = derive_seed(cfg.seed, k);
    Rng rng(derive_seed(case_seed, 0, 0x7468));
    Case out;
    out.theta = rng.uniform(cfg.theta_lo, cfg.theta_hi);

    SynthGridConfig gcfg = cfg.grid;
    gcfg.infiltration_theta = out.theta;
    gcfg.seed = derive_seed(case_seed, 1);
    const std::string id = case_id(cfg.case_prefix, k, n);
    SynthGrid g = generate_grid(gcfg, id);
    const auto scores = cooccur::score_grid(g.grid, cfg.count);

    const double x = cfg.hazard == HazardModel::LogLinear
                         ? out.theta
                         : (out.theta > cfg.step_cut ? 1.0 : 0.0);
    const double rate = cfg.baseline_hazard_lambda0 * std::exp(-cfg.effect_beta * x);
    Rng surv(derive_seed(case_seed, 2, 0x7376));
    const auto [time, event] = draw_survival(surv, rate, cfg.censor_horizon_months);

    out.record.case_id = id;
    out.record.time = time;
    out.record.event = event;
    attach_scores(out.record, scores);
    out.grid = std::move(g.grid);
    return out;
  };

  const std::size_t workers = std::clamp<std::size_t>(threads, 1, n);
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) cases[k] = make_case(k);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t k = w; k < n; k += workers) cases[k] = make_case(k);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  SynthCohort out;
  out.cohort.name = "synthetic";
  out.cohort.covariate_names = kScoreColumns;
  out.cohort.records.reserve(n);
  out.theta.reserve(n);
  out.grids.reserve(n);
  for (auto& c : cases) {
    out.cohort.records.push_back(std::move(c.record));
    out.theta.push_back(c.theta);
    out.grids.push_back(std::move(*c.grid));
  }
  return out;
}

survival::Cohort generate_planted_cohort(const PlantedCohortConfig& cfg) {
  if (cfg.n_cases == 0) throw DataError("planted cohort: n_cases must be positive");
  if (!(cfg.baseline_hazard_lambda0 > 0.0) || !(cfg.censor_horizon_months > 0.0)) {
    throw DataError("planted cohort: lambda0 and censor horizon must be positive");
  }
  survival::Cohort cohort;
  cohort.name = "planted";
  cohort.covariate_names = {cfg.score_name};
  cohort.records.reserve(cfg.n_cases);
  for (std::size_t k = 0; k < cfg.n_cases; ++k) {
    Rng rng(derive_seed(cfg.seed, k, 0x706c));
    const double score = rng.uniform();
    const double rate =
        cfg.baseline_hazard_lambda0 * std::exp(score > cfg.cut ? -cfg.effect_beta : 0.0);
    const auto [time, event] = draw_survival(rng, rate, cfg.censor_horizon_months);
    cohort.records.push_back({case_id(cfg.case_prefix, k, cfg.n_cases), time, event,
                              {{cfg.score_name, score}}});
  }
  return cohort;
}

}  // namespace tasil::synth
