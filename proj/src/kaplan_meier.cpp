#include <algorithm>
#include <vector>

#include "tasil/error.hpp"
#include "tasil/special.hpp"
#include "tasil/survival.hpp"

namespace tasil::survival {

double KMCurve::survival_at(double t) const noexcept {
  double s = 1.0;
  for (const auto& step : steps) {
    if (step.time > t) break;
    s = step.survival;
  }
  return s;
}

KMCurve km_fit(std::span<const SurvivalRecord> records) {
  if (records.empty()) throw DataError("Kaplan-Meier needs at least one record");

  std::vector<std::pair<double, bool>> obs;
  obs.reserve(records.size());
  for (const auto& r : records) obs.emplace_back(r.time, r.event);
  std::sort(obs.begin(), obs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  KMCurve curve;
  curve.n = obs.size();
  double s = 1.0;
  std::size_t at_risk = obs.size();
  for (std::size_t i = 0; i < obs.size();) {
    const double t = obs[i].first;
    std::size_t d = 0;
    std::size_t c = 0;
    for (; i < obs.size() && obs[i].first == t; ++i) {
      obs[i].second ? ++d : ++c;
    }
    if (d > 0) {
      s *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
      curve.steps.push_back({t, s, at_risk, d});
    } else {
      curve.censorings.push_back({t, at_risk, c});
    }
    at_risk -= d + c;
  }
  return curve;
}

LogRankResult logrank_test(std::span<const SurvivalRecord> group_a,
                           std::span<const SurvivalRecord> group_b) {
  if (group_a.empty() || group_b.empty()) throw DataError("log-rank: both groups must be non-empty");

  struct Obs {
    double time;
    bool event;
    bool in_a;
  };
  std::vector<Obs> obs;
  obs.reserve(group_a.size() + group_b.size());
  for (const auto& r : group_a) obs.push_back({r.time, r.event, true});
  for (const auto& r : group_b) obs.push_back({r.time, r.event, false});
  std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.time < b.time; });

  double n_a = static_cast<double>(group_a.size());
  double n_b = static_cast<double>(group_b.size());
  double observed_a = 0.0;
  double observed_b = 0.0;
  // Sum of O_A - E_A, written as (d_a n_b - d_b n_a) / n so that swapping
  // the groups negates it exactly.
  double u = 0.0;
  double v = 0.0;
  for (std::size_t i = 0; i < obs.size();) {
    const double t = obs[i].time;
    double d_a = 0, d_b = 0, c_a = 0, c_b = 0;
    for (; i < obs.size() && obs[i].time == t; ++i) {
      const Obs& o = obs[i];
      if (o.event) {
        o.in_a ? ++d_a : ++d_b;
      } else {
        o.in_a ? ++c_a : ++c_b;
      }
    }
    const double d = d_a + d_b;
    const double n = n_a + n_b;
    if (d > 0) {
      u += (d_a * n_b - d_b * n_a) / n;
      if (n > 1) v += d * (n_a * n_b) * (n - d) / (n * n * (n - 1));
    }
    observed_a += d_a;
    observed_b += d_b;
    n_a -= d_a + c_a;
    n_b -= d_b + c_b;
  }
  if (observed_a + observed_b == 0) throw DataError("log-rank: no events in either group");
  if (!(v > 0.0)) throw DataError("log-rank: variance is zero, statistic undefined");

  LogRankResult res;
  res.observed_a = observed_a;
  res.observed_b = observed_b;
  res.expected_a = observed_a - u;
  res.expected_b = observed_b + u;
  res.variance = v;
  res.chi_square = u * u / v;
  res.p_value = special::chi_square_sf(res.chi_square, 1.0);
  return res;
}

}  // namespace tasil::survival
