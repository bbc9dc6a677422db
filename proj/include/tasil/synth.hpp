#pragma once

// Synthetic tumour microenvironments and survival cohorts with known ground
// truth, for end-to-end checks of the scoring and survival code.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tasil/cooccur.hpp"
#include "tasil/grid.hpp"
#include "tasil/survival.hpp"

namespace tasil::synth {

// Mixes a base seed with an index and a stream tag (splitmix64 finalizer), so
// any case or sub-stream can be regenerated on its own.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t stream = 0) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi) noexcept;
  double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }
  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

struct SynthGridConfig {
  std::size_t rows = 64;
  std::size_t cols = 64;
  std::size_t n_tumour_nests = 4;
  std::size_t nest_radius_min = 3;
  std::size_t nest_radius_max = 6;
  std::size_t stroma_width = 2;
  double infiltration_theta = 0.3;  // in [0, 0.8]
  std::uint64_t seed = 0;
  double patch_size_um = grid::kDefaultPatchSizeUm;

  void validate() const;
};

struct SynthGrid {
  grid::AnalysisGrid grid;
  double theta;
};

// Disc-shaped tumour nests ringed by a TAS band; each TAS cell becomes
// Lymphocyte with probability theta. One uniform is drawn per band cell
// whatever theta is, so for a fixed seed a larger theta only adds lymphocytes.
SynthGrid generate_grid(const SynthGridConfig& cfg, std::string slide_id = "synth");

enum class HazardModel : unsigned char {
  LogLinear,  // lambda0 * exp(-beta * theta)
  Step,       // lambda0 * exp(-beta * [theta > step_cut])
};

struct SynthCohortConfig {
  std::size_t n_cases = 200;
  double theta_lo = 0.0;
  double theta_hi = 0.8;
  double baseline_hazard_lambda0 = 0.02;  // per month
  double effect_beta = 1.0;
  double censor_horizon_months = 120.0;
  std::uint64_t seed = 0;
  HazardModel hazard = HazardModel::LogLinear;
  double step_cut = 0.5;
  // Layout of every case's grid; theta and seed are set per case.
  SynthGridConfig grid{};
  cooccur::CountOptions count{};
  std::string case_prefix = "case";

  void validate() const;
};

struct SynthCohort {
  survival::Cohort cohort;  // covariates: the five digital scores
  std::vector<double> theta;
  std::vector<grid::AnalysisGrid> grids;
};

inline const std::vector<std::string> kScoreColumns{"tasil", "l_percentage", "ts_ratio",
                                                    "ic_coloc", "tilab"};

// Deterministic in the config; the thread count never changes the output.
SynthCohort generate_cohort(const SynthCohortConfig& cfg, unsigned threads = 1);

// Attaches DigitalScores as covariates, leaving undefined scores missing.
void attach_scores(survival::SurvivalRecord& record, const cooccur::DigitalScores& scores);

// Cohort whose score is Uniform(0, 1) and whose hazard drops by exp(-beta)
// above `cut`; used to check cutpoint recovery.
struct PlantedCohortConfig {
  std::size_t n_cases = 400;
  double cut = 0.5;
  double effect_beta = 1.0;
  double baseline_hazard_lambda0 = 0.03;
  double censor_horizon_months = 60.0;
  std::uint64_t seed = 0;
  std::string score_name = "score";
  std::string case_prefix = "p";
};

survival::Cohort generate_planted_cohort(const PlantedCohortConfig& cfg);

}  // namespace tasil::synth
