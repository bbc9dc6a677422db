#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tasil/error.hpp"
#include "tasil/special.hpp"
#include "tasil/survival.hpp"

namespace tasil::survival {

namespace {

// Design sorted by decreasing time; tied times form contiguous blocks.
struct CoxDesign {
  Eigen::MatrixXd x;  // n x p
  std::vector<double> time;
  std::vector<bool> event;
  std::size_t n_events = 0;
};

CoxDesign make_design(std::span<const SurvivalRecord> records,
                      const std::vector<std::string>& names) {
  const std::size_t n = records.size();
  const std::size_t p = names.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Case id breaks time ties so the summation order, and hence every bit of
  // the result, does not depend on input order.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].time != records[b].time) return records[a].time > records[b].time;
    return records[a].case_id < records[b].case_id;
  });

  CoxDesign d;
  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  d.time.resize(n);
  d.event.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[order[i]];
    d.time[i] = r.time;
    d.event[i] = r.event;
    d.n_events += r.event ? 1 : 0;
    for (std::size_t j = 0; j < p; ++j) {
      const auto v = r.covariate(names[j]);
      if (!v) throw DataError("case '" + r.case_id + "' is missing covariate '" + names[j] + "'");
      if (!std::isfinite(*v)) {
        throw DataError("case '" + r.case_id + "' has a non-finite '" + names[j] + "'");
      }
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
    }
  }
  return d;
}

PartialLikelihood evaluate(const CoxDesign& d, const Eigen::VectorXd& beta) {
  const Eigen::Index n = d.x.rows();
  const Eigen::Index p = d.x.cols();
  const Eigen::VectorXd eta = d.x * beta;
  const double shift = n > 0 ? eta.maxCoeff() : 0.0;

  PartialLikelihood out;
  out.gradient = Eigen::VectorXd::Zero(p);
  out.hessian = Eigen::MatrixXd::Zero(p, p);

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd event_x(p);

  for (Eigen::Index i = 0; i < n;) {
    const double t = d.time[static_cast<std::size_t>(i)];
    double deaths = 0.0;
    double event_eta = 0.0;
    event_x.setZero();
    // The whole tied block joins the risk set before its events are scored.
    for (; i < n && d.time[static_cast<std::size_t>(i)] == t; ++i) {
      const auto xi = d.x.row(i).transpose();
      const double w = std::exp(eta(i) - shift);
      s0 += w;
      s1.noalias() += w * xi;
      s2.noalias() += w * xi * xi.transpose();
      if (d.event[static_cast<std::size_t>(i)]) {
        deaths += 1.0;
        event_eta += eta(i);
        event_x += xi;
      }
    }
    if (deaths == 0.0) continue;
    const Eigen::VectorXd mean = s1 / s0;
    out.loglik += event_eta - deaths * (std::log(s0) + shift);
    out.gradient += event_x - deaths * mean;
    out.hessian -= deaths * (s2 / s0 - mean * mean.transpose());
  }
  return out;
}

}  // namespace

PartialLikelihood cox_partial_loglik(const Eigen::VectorXd& beta,
                                     std::span<const SurvivalRecord> records,
                                     const std::vector<std::string>& covariate_names) {
  if (static_cast<std::size_t>(beta.size()) != covariate_names.size()) {
    throw DataError("cox: coefficient vector length does not match covariate count");
  }
  return evaluate(make_design(records, covariate_names), beta);
}

CoxFit cox_fit(std::span<const SurvivalRecord> records,
               const std::vector<std::string>& covariate_names, const CoxOptions& options) {
  if (covariate_names.empty()) throw DataError("cox: no covariates given");
  const CompleteCases cc = complete_cases(records, covariate_names);
  const CoxDesign design = make_design(cc.records, covariate_names);
  const Eigen::Index p = design.x.cols();

  if (design.n_events == 0) throw DataError("cox: no events");
  for (Eigen::Index j = 0; j < p; ++j) {
    if (design.x.col(j).maxCoeff() == design.x.col(j).minCoeff()) {
      throw DataError("cox: covariate '" + covariate_names[static_cast<std::size_t>(j)] +
                      "' is constant");
    }
  }

  CoxFit fit;
  fit.n = cc.records.size();
  fit.n_events = design.n_events;
  fit.excluded = cc.excluded;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  PartialLikelihood cur = evaluate(design, beta);
  fit.loglik_null = cur.loglik;
  double last_change = std::numeric_limits<double>::infinity();

  for (int iter = 0;; ++iter) {
    fit.iterations = iter;
    const Eigen::MatrixXd info = -cur.hessian;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    Eigen::VectorXd step = ldlt.solve(cur.gradient);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      fit.degenerate = true;
      break;
    }
    // Gradient or likelihood tolerance alone is not enough: under a monotone
    // likelihood the gradient vanishes while the Newton step stays large.
    bool step_small = true;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std::fabs(step(j)) > 1e-6 * std::max(1.0, std::fabs(beta(j)))) step_small = false;
    }
    const double gmax = cur.gradient.cwiseAbs().maxCoeff();
    if (step_small && (gmax < options.gradient_tolerance ||
                       std::fabs(last_change) < options.loglik_tolerance)) {
      fit.converged = true;
      break;
    }
    if (iter >= options.max_iterations) break;

    // Step halving keeps every accepted iterate non-decreasing in loglik.
    Eigen::VectorXd next = beta + step;
    PartialLikelihood trial = evaluate(design, next);
    for (int half = 0; half < 40 && !(trial.loglik >= cur.loglik - 1e-12); ++half) {
      step *= 0.5;
      next = beta + step;
      trial = evaluate(design, next);
    }
    last_change = trial.loglik - cur.loglik;
    beta = next;
    cur = std::move(trial);
    if (beta.cwiseAbs().maxCoeff() > options.separation_bound) {
      fit.iterations = iter + 1;
      fit.degenerate = true;
      break;
    }
  }

  fit.loglik = cur.loglik;
  fit.max_abs_gradient = cur.gradient.cwiseAbs().maxCoeff();

  const Eigen::MatrixXd info = -cur.hessian;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  if (lu.isInvertible()) cov = lu.inverse();

  for (Eigen::Index j = 0; j < p; ++j) {
    CoxTerm t;
    t.name = covariate_names[static_cast<std::size_t>(j)];
    t.beta = beta(j);
    const double var = cov(j, j);
    t.se = var > 0.0 ? std::sqrt(var) : std::numeric_limits<double>::quiet_NaN();
    t.hazard_ratio = std::exp(t.beta);
    t.ci_low = std::exp(t.beta - options.z_critical * t.se);
    t.ci_high = std::exp(t.beta + options.z_critical * t.se);
    t.z = t.beta / t.se;
    t.p_value = std::isfinite(t.z) ? special::normal_two_sided(t.z)
                                   : std::numeric_limits<double>::quiet_NaN();
    fit.terms.push_back(std::move(t));
  }
  return fit;
}

}  // namespace tasil::survival
