#pragma once

#include <cmath>
#include <string>

#include "stagesurv/errors.hpp"
#include "stagesurv/exact.hpp"
#include "stagesurv/model.hpp"

namespace stagesurv {

// Early-diagnosed cohort split into tumors that would not kill within the
// horizon even untreated (fraction f) and progressive ones.
struct MixtureScenario {
  double overall_survival = 0.0;
  double nonprogressive_fraction = 0.0;
};

inline void validate(const MixtureScenario& s) {
  const double surv = s.overall_survival;
  const double f = s.nonprogressive_fraction;
  if (!std::isfinite(surv) || surv < 0.0 || surv > 1.0) {
    throw MixtureError("overall survival must be in [0, 1]");
  }
  if (!std::isfinite(f) || f < 0.0 || f > 1.0) {
    throw MixtureError("non-progressive fraction must be in [0, 1)");
  }
  if (f == 1.0) throw MixtureError("undefined mixture: no progressive tumors (fraction = 1)");
  if (surv < f) {
    throw MixtureError("inconsistent mixture: overall survival " + std::to_string(surv) +
                       " is below the non-progressive fraction " + std::to_string(f));
  }
}

// Survival among progressive tumors: (s - f) / (1 - f).
inline double progressive_survival(const MixtureScenario& s) {
  validate(s);
  const double f = s.nonprogressive_fraction;
  return (s.overall_survival - f) / (1.0 - f);
}

// P(alive `alive_horizon` years after the actual late diagnosis) had the
// tumor been diagnosed at stage 1 `back_years` earlier and treated with
// effectiveness `gamma_cf`.
inline double counterfactual_alive(const RateParams& params, double gamma_cf, int back_years,
                                   int alive_horizon) {
  if (back_years < 0) throw ParameterError("back_years", "must be nonnegative");
  if (alive_horizon < 0) throw ParameterError("alive_horizon", "must be nonnegative");
  RateParams p = params;
  p.gamma = gamma_cf;
  const TransitionMatrix m = build_transition_matrix(p);
  return survival_curve(m, Stage::Localized, back_years + alive_horizon).values.back();
}

// Gain in that probability attributable to treatment: the counterfactual
// under `gamma_cf` minus the same early diagnosis with ineffective treatment.
inline double counterfactual_gain(const RateParams& params, double gamma_cf, int back_years,
                                  int alive_horizon) {
  return counterfactual_alive(params, gamma_cf, back_years, alive_horizon) -
         counterfactual_alive(params, 0.0, back_years, alive_horizon);
}

}  // namespace stagesurv
