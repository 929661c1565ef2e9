#pragma once

// Randomised invariant checks shared by the unit suite and the acceptance
// runner. Each returns the list of violations found; empty means pass.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stagesurv/stagesurv.hpp"

namespace stagesurv::test_support {

using Violations = std::vector<std::string>;

inline std::string describe(const RateParams& p) {
  return dump(to_json(p));
}

inline Violations check_row_stochastic(const RateParams& p) {
  Violations v;
  const TransitionMatrix m = build_transition_matrix(p);
  for (State from : kAllStates) {
    double sum = 0.0;
    for (State to : kAllStates) {
      const double x = m(from, to);
      if (x < 0.0 || x > 1.0) v.push_back("entry out of [0,1] in row " + std::string(name(from)));
      if (x != 0.0 && !TransitionMatrix::allowed(from, to)) v.push_back("zero pattern broken");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) v.push_back("row " + std::string(name(from)) + " sum");
  }
  if (m(State::M, State::M) != 1.0) v.push_back("M not absorbing");
  return v;
}

// With gamma < 1 every state eventually reaches M. With gamma == 1 the
// detected D1/D2 states trap and lifetime mortality from U1 drops below one.
inline Violations check_absorption(const RateParams& p) {
  const TransitionMatrix m = build_transition_matrix(p);
  Violations v;
  if (p.gamma < 1.0) {
    for (State s : kAllStates)
      if (std::abs(lifetime_mortality(m, s) - 1.0) > 1e-12)
        v.push_back("absorption from " + std::string(name(s)));
  } else {
    if (lifetime_mortality(m, State::D1) != 0.0) v.push_back("D1 should trap at gamma 1");
    if (std::abs(lifetime_mortality(m, State::D3) - 1.0) > 1e-12) v.push_back("absorption from D3");
  }
  return v;
}

inline Violations check_survival_curves(const RateParams& p, int horizon = 40) {
  Violations v;
  const TransitionMatrix m = build_transition_matrix(p);
  for (Stage st : kAllStages) {
    const SurvivalCurve c = survival_curve(m, st, horizon);
    if (c.values.front() != 1.0) v.push_back("s(0) != 1");
    for (std::size_t t = 0; t < c.values.size(); ++t) {
      if (c.values[t] < -1e-15 || c.values[t] > 1.0) v.push_back("survival out of [0,1]");
      if (t > 0 && c.values[t] > c.values[t - 1] + 1e-15) v.push_back("survival increased");
    }
    const double enumerated = survival_by_enumeration(p, number(st), 5);
    if (std::abs(enumerated - c.values[5]) > 1e-12) v.push_back("s(5) disagrees with enumeration");
  }
  return v;
}

inline Violations check_gamma_monotonicity(const RateParams& p, double other_gamma) {
  Violations v;
  RateParams lo = p, hi = p;
  lo.gamma = std::min(p.gamma, other_gamma);
  hi.gamma = std::max(p.gamma, other_gamma);
  const TransitionMatrix ml = build_transition_matrix(lo);
  const TransitionMatrix mh = build_transition_matrix(hi);
  if (mh(State::D1, State::D2) > ml(State::D1, State::D2)) v.push_back("D1->D2 increased with gamma");
  if (mh(State::D2, State::D3) > ml(State::D2, State::D3)) v.push_back("D2->D3 increased with gamma");
  for (State s : {State::U1, State::U2, State::U3, State::D3, State::M})
    for (State t : kAllStates)
      if (ml(s, t) != mh(s, t)) v.push_back("row " + std::string(name(s)) + " changed with gamma");
  const StageSurvival sl = five_year_survival(ml);
  const StageSurvival sh = five_year_survival(mh);
  if (sh.localized < sl.localized - 1e-15) v.push_back("s1(5) decreased with gamma");
  if (sh.regional < sl.regional - 1e-15) v.push_back("s2(5) decreased with gamma");
  if (sh.distant != sl.distant) v.push_back("s3(5) changed with gamma");
  return v;
}

inline Violations check_stage_split(const RateParams& p) {
  Violations v;
  const TransitionMatrix m = build_transition_matrix(p);
  const StageDistribution d = stage_distribution(m);
  const auto brute = stage_split_by_iteration(m);
  if (std::abs(d.localized - brute[0]) > 1e-10 || std::abs(d.regional - brute[1]) > 1e-10 ||
      std::abs(d.distant - brute[2]) > 1e-10) {
    v.push_back("closed-form split disagrees with iteration");
  }
  if (std::abs(d.localized + d.regional + d.distant - 1.0) > 1e-12) v.push_back("split sum");
  return v;
}

inline bool close_rel(double a, double b, double tol = 1e-13) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

inline Violations check_round_trips(const RateParams& p, std::uint64_t seed) {
  Violations v;
  // Parameters.
  const RateParams back = params_from_json(Json::parse(dump(to_json(p))));
  for (auto [a, b] : {std::pair{back.lambda1, p.lambda1}, {back.lambda2, p.lambda2},
                      {back.kappa1, p.kappa1}, {back.kappa2, p.kappa2}, {back.kappa3, p.kappa3},
                      {back.mu, p.mu}, {back.gamma, p.gamma}}) {
    if (!close_rel(a, b)) v.push_back("params round trip");
  }
  // Matrix CSV.
  const TransitionMatrix m = build_transition_matrix(p);
  const TransitionMatrix mb = matrix_from_csv(to_csv(m));
  for (State s : kAllStates)
    for (State t : kAllStates)
      if (!close_rel(m(s, t), mb(s, t))) v.push_back("matrix csv round trip");
  // Sweep JSON.
  const double k1 = p.kappa1;
  const auto rows = screening_sweep(p, std::span<const double>(&k1, 1));
  const auto rb = sweep_from_json(Json::parse(dump(to_json(std::span<const SweepRow>(rows)))));
  if (rb.size() != 1 || !close_rel(rb[0].pooled, rows[0].pooled) ||
      !close_rel(rb[0].survival.regional, rows[0].survival.regional)) {
    v.push_back("sweep json round trip");
  }
  // Cohort summary: counts are exact.
  CohortSummary s;
  s.n = 1000 + seed % 1000;
  s.seed = seed;
  s.horizon = static_cast<int>(seed % 20);
  s.stage_counts = {seed % 300, seed % 200, s.n - seed % 300 - seed % 200};
  s.survivors = {s.stage_counts[0] / 2, s.stage_counts[1] / 3, 0};
  if (cohort_from_json(Json::parse(dump(to_json(s)))) != s) v.push_back("cohort json round trip");
  // Fit result.
  FitResult f;
  f.params = p;
  f.loss = p.mu * 1e-3;
  f.max_abs_dev = p.kappa3;
  f.iterations = static_cast<int>(seed % 2000);
  f.converged = seed % 2 == 0;
  f.gamma_fixed = p.gamma;
  const FitResult fb = fit_from_json(Json::parse(dump(to_json(f))));
  if (!close_rel(fb.params.lambda1, f.params.lambda1) || !close_rel(fb.loss, f.loss) ||
      fb.iterations != f.iterations || fb.converged != f.converged || !fb.gamma_fixed ||
      !close_rel(*fb.gamma_fixed, *f.gamma_fixed)) {
    v.push_back("fit json round trip");
  }
  // Targets CSV.
  SurvivalTable table;
  const auto q = matched_quantities(p);
  table.rows.push_back({"Site, with comma", q.survival, q.shares});
  table.rows.push_back({"No shares", q.survival, std::nullopt});
  const SurvivalTable tb = parse_targets(to_csv(table));
  if (tb.rows.size() != 2 || tb.rows[0].site != "Site, with comma" || !tb.rows[0].shares ||
      tb.rows[1].shares || !close_rel(tb.rows[0].survival.regional, q.survival.regional) ||
      !close_rel(tb.rows[0].shares->distant, q.shares.distant, 1e-12)) {
    v.push_back("targets csv round trip");
  }
  return v;
}

struct PropertyReport {
  int cases = 0;
  Violations violations;
};

// Runs every property over `cases` random parameter sets.
inline PropertyReport run_property_suite(int cases, std::uint64_t seed) {
  PropertyReport r;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto absorb = [&](Violations&& v, const RateParams& p) {
    for (auto& s : v) r.violations.push_back(s + " for " + describe(p));
  };
  for (int i = 0; i < cases; ++i) {
    RateParams p = random_params(rng);
    // Exercise the gamma = 1 boundary regularly.
    if (i % 50 == 0) p.gamma = 1.0;
    absorb(check_row_stochastic(p), p);
    absorb(check_absorption(p), p);
    absorb(check_survival_curves(p), p);
    absorb(check_gamma_monotonicity(p, u(rng)), p);
    absorb(check_stage_split(p), p);
    absorb(check_round_trips(p, rng()), p);
    ++r.cases;
  }
  return r;
}

}  // namespace stagesurv::test_support
