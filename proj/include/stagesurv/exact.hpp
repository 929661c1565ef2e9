#pragma once

// Deterministic statistics of the progression chain: which stage a tumor is
// diagnosed at, stage-conditional survival after diagnosis, lifetime
// absorption into M and the screening sweep built from them.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stagesurv/errors.hpp"
#include "stagesurv/model.hpp"

namespace stagesurv {

// Probability mass over the seven states.
using Distribution = std::array<double, kNumStates>;

inline Distribution unit_distribution(State s) noexcept {
  Distribution d{};
  d[index(s)] = 1.0;
  return d;
}

// One year of evolution: returns d * P.
inline Distribution step(const TransitionMatrix& m, const Distribution& d) noexcept {
  Distribution out{};
  for (State from : kAllStates) {
    const double mass = d[index(from)];
    if (mass == 0.0) continue;
    for (State to : kAllStates) out[index(to)] += mass * m(from, to);
  }
  return out;
}

struct StageDistribution {
  double localized = 0.0;
  double regional = 0.0;
  double distant = 0.0;

  double operator[](Stage s) const noexcept {
    switch (s) {
      case Stage::Localized: return localized;
      case Stage::Regional: return regional;
      case Stage::Distant: return distant;
    }
    return 0.0;
  }
};

// First-passage split of a tumor starting in U1 over D1, D2, D3. Only exit
// hazards of reachable undetected states are required to be positive.
inline StageDistribution stage_distribution(const TransitionMatrix& m) {
  const double l1 = m(State::U1, State::U2);
  const double k1 = m(State::U1, State::D1);
  const double l2 = m(State::U2, State::U3);
  const double k2 = m(State::U2, State::D2);
  const double k3 = m(State::U3, State::D3);

  if (l1 + k1 <= 0.0) throw DegenerateError("U1", "no exit from U1; tumor is never diagnosed");
  const double leave1 = l1 / (l1 + k1);
  if (leave1 > 0.0 && l2 + k2 <= 0.0) {
    throw DegenerateError("U2", "no exit from U2; tumor is never diagnosed");
  }
  const double leave2 = leave1 > 0.0 ? l2 / (l2 + k2) : 0.0;
  if (leave1 * leave2 > 0.0 && k3 <= 0.0) {
    throw DegenerateError("U3", "no exit from U3; tumor is never diagnosed");
  }

  StageDistribution out;
  out.localized = k1 / (l1 + k1);
  out.regional = leave1 > 0.0 ? leave1 * (k2 / (l2 + k2)) : 0.0;
  out.distant = leave1 * leave2;
  return out;
}

struct SurvivalCurve {
  Stage stage = Stage::Localized;
  std::vector<double> values;  // values[t] = P(alive t years after diagnosis)

  double at(std::size_t t) const { return values.at(t); }
  int horizon() const noexcept { return static_cast<int>(values.size()) - 1; }
};

inline void check_horizon(int horizon) {
  if (horizon < 0) throw ParameterError("horizon", "must be nonnegative, got " + std::to_string(horizon));
}

// Diagnosis at t = 0; s(t) = 1 - P(in M at t | started in D_stage).
inline SurvivalCurve survival_curve(const TransitionMatrix& m, Stage stage, int horizon) {
  check_horizon(horizon);
  SurvivalCurve curve{stage, {}};
  curve.values.reserve(static_cast<std::size_t>(horizon) + 1);
  Distribution d = unit_distribution(detected_state(stage));
  curve.values.push_back(1.0);
  for (int t = 1; t <= horizon; ++t) {
    d = step(m, d);
    curve.values.push_back(1.0 - d[index(State::M)]);
  }
  return curve;
}

struct StageSurvival {
  double localized = 0.0;
  double regional = 0.0;
  double distant = 0.0;

  double operator[](Stage s) const noexcept {
    switch (s) {
      case Stage::Localized: return localized;
      case Stage::Regional: return regional;
      case Stage::Distant: return distant;
    }
    return 0.0;
  }
};

inline StageSurvival survival_at(const TransitionMatrix& m, int horizon) {
  return {survival_curve(m, Stage::Localized, horizon).values.back(),
          survival_curve(m, Stage::Regional, horizon).values.back(),
          survival_curve(m, Stage::Distant, horizon).values.back()};
}

inline StageSurvival five_year_survival(const TransitionMatrix& m) { return survival_at(m, 5); }

// Survival at `horizon` over all diagnosed tumors, weighted by stage share.
inline double pooled_survival(const TransitionMatrix& m, int horizon) {
  const StageDistribution shares = stage_distribution(m);
  const StageSurvival s = survival_at(m, horizon);
  return shares.localized * s.localized + shares.regional * s.regional +
         shares.distant * s.distant;
}

// Probability of eventual absorption in M starting from `from`. Every
// transition leads to the same or a later state, so the absorbing-chain
// equations are solved by back-substitution.
inline double lifetime_mortality(const TransitionMatrix& m, State from = State::U1) {
  Distribution absorb{};
  absorb[index(State::M)] = 1.0;
  for (std::size_t i = index(State::D3) + 1; i-- > 0;) {
    const State s = kAllStates[i];
    double exit = 0.0;
    double acc = 0.0;
    for (std::size_t j = i + 1; j < kNumStates; ++j) {
      exit += m(s, kAllStates[j]);
      acc += m(s, kAllStates[j]) * absorb[j];
    }
    absorb[i] = exit > 0.0 ? acc / exit : 0.0;
  }
  return absorb[index(from)];
}

struct SweepRow {
  double kappa1 = 0.0;
  StageDistribution shares;
  StageSurvival survival;
  double pooled = 0.0;
  double lifetime_mortality = 0.0;
};

// One row per kappa1 value, in input order, all other rates held fixed.
inline std::vector<SweepRow> screening_sweep(const RateParams& params,
                                             std::span<const double> kappa1_values,
                                             int horizon = 5) {
  check_horizon(horizon);
  std::vector<SweepRow> rows;
  rows.reserve(kappa1_values.size());
  for (double k1 : kappa1_values) {
    RateParams p = params;
    p.kappa1 = k1;
    const TransitionMatrix m = build_transition_matrix(p);
    SweepRow row;
    row.kappa1 = k1;
    row.shares = stage_distribution(m);
    row.survival = survival_at(m, horizon);
    row.pooled = row.shares.localized * row.survival.localized +
                 row.shares.regional * row.survival.regional +
                 row.shares.distant * row.survival.distant;
    row.lifetime_mortality = lifetime_mortality(m);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace stagesurv
