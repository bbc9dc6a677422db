#pragma once

// Survival statistics: Kaplan-Meier, two-group log-rank, Cox proportional
// hazards (Breslow ties), Harrell's C-index and Spearman correlation.

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tasil::survival {

struct SurvivalRecord {
  std::string case_id;
  double time = 0.0;  // months, > 0
  bool event = false; // true = death / recurrence observed
  // Absent key = missing value.
  std::map<std::string, double> covariates;

  std::optional<double> covariate(const std::string& name) const;
};

struct Cohort {
  std::string name;
  // Column order for CSV output.
  std::vector<std::string> covariate_names;
  std::vector<SurvivalRecord> records;

  // Checks time > 0 and unique case ids; throws DataError.
  void validate() const;
};

// Records carrying every named covariate, plus how many were dropped.
struct CompleteCases {
  std::vector<SurvivalRecord> records;
  std::size_t excluded = 0;
};

CompleteCases complete_cases(std::span<const SurvivalRecord> records,
                             const std::vector<std::string>& names);

// ---- cohort CSV -------------------------------------------------------------
//
//   case_id,time_months,event,<covariate...>
//
// event is 0 or 1; an empty covariate field is a missing value.

Cohort read_cohort_csv(std::istream& in, std::string name, const std::string& source);
Cohort load_cohort(const std::filesystem::path& path);
void write_cohort_csv(std::ostream& out, const Cohort& cohort);
void save_cohort(const Cohort& cohort, const std::filesystem::path& path);

// ---- Kaplan-Meier -----------------------------------------------------------

struct KMStep {
  double time = 0.0;
  double survival = 1.0;
  std::size_t n_at_risk = 0;
  std::size_t n_events = 0;
};

// Distinct times where only censoring happened. They do not change S.
struct KMCensoring {
  double time = 0.0;
  std::size_t n_at_risk = 0;
  std::size_t n_censored = 0;
};

struct KMCurve {
  std::vector<KMStep> steps;  // one per distinct event time, increasing
  std::vector<KMCensoring> censorings;
  std::size_t n = 0;

  // Right-continuous S(t).
  double survival_at(double t) const noexcept;
};

KMCurve km_fit(std::span<const SurvivalRecord> records);

// ---- log-rank ---------------------------------------------------------------

struct LogRankResult {
  double chi_square = 0.0;
  double p_value = 1.0;
  double observed_a = 0.0;
  double expected_a = 0.0;
  double observed_b = 0.0;
  double expected_b = 0.0;
  double variance = 0.0;
};

LogRankResult logrank_test(std::span<const SurvivalRecord> group_a,
                           std::span<const SurvivalRecord> group_b);

// ---- Cox proportional hazards ----------------------------------------------

struct PartialLikelihood {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

// Breslow partial log-likelihood with exact gradient and Hessian.
PartialLikelihood cox_partial_loglik(const Eigen::VectorXd& beta,
                                     std::span<const SurvivalRecord> records,
                                     const std::vector<std::string>& covariate_names);

struct CoxOptions {
  int max_iterations = 50;
  double gradient_tolerance = 1e-8;
  double loglik_tolerance = 1e-10;
  // |beta| beyond this marks a monotone likelihood (separation).
  double separation_bound = 20.0;
  double z_critical = 1.959964;
};

struct CoxTerm {
  std::string name;
  double beta = 0.0;
  double se = 0.0;
  double hazard_ratio = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};

struct CoxFit {
  std::vector<CoxTerm> terms;
  double loglik = 0.0;
  double loglik_null = 0.0;
  double max_abs_gradient = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
  std::size_t n = 0;
  std::size_t n_events = 0;
  std::size_t excluded = 0;
};

CoxFit cox_fit(std::span<const SurvivalRecord> records,
               const std::vector<std::string>& covariate_names, const CoxOptions& options = {});

// ---- concordance ------------------------------------------------------------

enum class RiskDirection { HigherScoreHigherRisk, HigherScoreLowerRisk };

struct Concordance {
  double c_index = 0.5;
  std::size_t comparable = 0;
  std::size_t concordant = 0;
  std::size_t tied = 0;
  std::size_t excluded = 0;
};

// Harrell's C over pairs with time_i < time_j and event_i. Score ties count
// one half. Records missing the score are excluded.
Concordance concordance(std::span<const SurvivalRecord> records, const std::string& score_name,
                        RiskDirection direction);
double c_index(std::span<const SurvivalRecord> records, const std::string& score_name,
               RiskDirection direction);

// ---- Spearman ---------------------------------------------------------------

struct SpearmanOptions {
  // Exact permutation p-value up to this many observations, t-approximation above.
  std::size_t exact_max_n = 10;
};

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  bool exact = false;
};

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> mid_ranks(std::span<const double> values);

SpearmanResult spearman(std::span<const double> x, std::span<const double> y,
                        const SpearmanOptions& options = {});

}  // namespace tasil::survival
