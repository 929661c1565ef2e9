#pragma once

// Fitting RateParams to an observed survival-by-stage table.
//
// Five quantities are matched: the three stage-conditional 5-year survival
// rates and the localized/regional stage shares (the distant share is implied).
// The search runs Nelder-Mead in an unconstrained space:
//
//   (lambda_i, kappa_i) = total_i * (share_i, 1 - share_i),
//   total_i, share_i, kappa3, mu, gamma = logistic(coordinate),
//
// so every point decodes to a valid RateParams.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stagesurv/errors.hpp"
#include "stagesurv/exact.hpp"
#include "stagesurv/model.hpp"
#include "stagesurv/montecarlo.hpp"
#include "stagesurv/simplex.hpp"

namespace stagesurv {

struct SurvivalTarget {
  std::string site;
  StageSurvival survival;                   // 5-year rates as fractions
  std::optional<StageDistribution> shares;  // absent when the table has no stage mix
};

inline void validate(const SurvivalTarget& t) {
  for (Stage s : kAllStages) {
    const double v = t.survival[s];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ParameterError("survival[" + std::to_string(number(s)) + "]",
                           "must be in [0, 1] for site '" + t.site + "'");
    }
  }
  if (t.shares) {
    double sum = 0.0;
    for (Stage s : kAllStages) {
      const double v = (*t.shares)[s];
      if (!std::isfinite(v) || v < 0.0) {
        throw ParameterError("shares[" + std::to_string(number(s)) + "]",
                             "must be nonnegative for site '" + t.site + "'");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ParameterError("shares", "must sum to 1 for site '" + t.site + "'");
    }
  }
}

struct LossWeights {
  double s1 = 1.0;
  double s2 = 1.0;
  double s3 = 1.0;
  double p1 = 1.0;
  double p2 = 1.0;
};

inline constexpr double kDegeneratePenalty = 1e6;

// The five model outputs compared against a target.
struct MatchedQuantities {
  StageSurvival survival;
  StageDistribution shares;
};

inline MatchedQuantities matched_quantities(const RateParams& p) {
  const TransitionMatrix m = build_transition_matrix(p);
  return {five_year_survival(m), stage_distribution(m)};
}

inline double loss(const RateParams& p, const SurvivalTarget& target, const LossWeights& w = {}) {
  validate(p);
  MatchedQuantities q;
  try {
    q = matched_quantities(p);
  } catch (const DegenerateError&) {
    return kDegeneratePenalty;
  }
  auto sq = [](double a, double b) { return (a - b) * (a - b); };
  double l = w.s1 * sq(q.survival.localized, target.survival.localized) +
             w.s2 * sq(q.survival.regional, target.survival.regional) +
             w.s3 * sq(q.survival.distant, target.survival.distant);
  if (target.shares) {
    l += w.p1 * sq(q.shares.localized, target.shares->localized) +
         w.p2 * sq(q.shares.regional, target.shares->regional);
  }
  return l;
}

// Worst absolute deviation over the matched quantities, in percentage points.
inline double max_abs_deviation_pp(const RateParams& p, const SurvivalTarget& target) {
  MatchedQuantities q;
  try {
    q = matched_quantities(p);
  } catch (const DegenerateError&) {
    return 100.0;
  }
  double dev = 0.0;
  for (Stage s : kAllStages) dev = std::max(dev, std::abs(q.survival[s] - target.survival[s]));
  if (target.shares) {
    dev = std::max(dev, std::abs(q.shares.localized - target.shares->localized));
    dev = std::max(dev, std::abs(q.shares.regional - target.shares->regional));
  }
  return 100.0 * dev;
}

// Maps unconstrained coordinates to RateParams. With gamma fixed the space
// has six dimensions, otherwise seven.
class ParamTransform {
 public:
  explicit ParamTransform(std::optional<double> gamma_fixed) : gamma_fixed_(gamma_fixed) {
    if (gamma_fixed_) {
      const double g = *gamma_fixed_;
      if (!std::isfinite(g) || g < 0.0 || g > 1.0) {
        throw ParameterError("gamma", "fixed value must be in [0, 1]");
      }
    }
  }

  std::size_t dimension() const noexcept { return gamma_fixed_ ? 6 : 7; }

  RateParams decode(std::span<const double> x) const {
    RateParams p;
    const double total1 = logistic(x[0]);
    const double share1 = logistic(x[1]);
    const double total2 = logistic(x[2]);
    const double share2 = logistic(x[3]);
    p.lambda1 = total1 * share1;
    p.kappa1 = total1 * (1.0 - share1);
    p.lambda2 = total2 * share2;
    p.kappa2 = total2 * (1.0 - share2);
    p.kappa3 = logistic(x[4]);
    p.mu = logistic(x[5]);
    p.gamma = gamma_fixed_ ? *gamma_fixed_ : logistic(x[6]);
    return p;
  }

  // Inverse of decode for params strictly inside the box.
  std::vector<double> encode(const RateParams& p) const {
    const double total1 = p.lambda1 + p.kappa1;
    const double total2 = p.lambda2 + p.kappa2;
    std::vector<double> x = {logit(total1), logit(p.lambda1 / total1), logit(total2),
                             logit(p.lambda2 / total2), logit(p.kappa3), logit(p.mu)};
    if (!gamma_fixed_) x.push_back(logit(p.gamma));
    return x;
  }

  static double logistic(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  }
  static double logit(double p) noexcept { return std::log(p / (1.0 - p)); }

 private:
  std::optional<double> gamma_fixed_;
};

struct FitOptions {
  int restarts = 20;
  int max_iterations = 2000;
  double x_tolerance = 1e-9;
  std::uint64_t seed = kDefaultSeed;
  double start_spread = 2.0;  // start coordinates drawn from [-spread, spread]
  LossWeights weights;
};

struct FitResult {
  RateParams params;
  double loss = 0.0;
  double max_abs_dev = 0.0;  // percentage points
  int iterations = 0;        // of the winning restart
  bool converged = false;
  int best_restart = 0;
  std::optional<double> gamma_fixed;
};

// Multi-start simplex search. Deterministic in (target, gamma_fixed, options).
// An exhausted budget is reported through `converged`, not an exception.
inline FitResult fit(const SurvivalTarget& target, std::optional<double> gamma_fixed,
                     const FitOptions& opt = {}) {
  validate(target);
  if (opt.restarts < 1) throw ParameterError("restarts", "budget must allow at least one restart");
  const ParamTransform transform(gamma_fixed);
  const std::size_t dim = transform.dimension();

  auto objective = [&](const std::vector<double>& x) {
    const RateParams p = transform.decode(x);
    if (!is_valid(p)) return kDegeneratePenalty;
    return loss(p, target, opt.weights);
  };

  SimplexOptions sopt;
  sopt.max_iterations = opt.max_iterations;
  sopt.x_tolerance = opt.x_tolerance;

  FitResult best;
  bool have_best = false;
  for (int r = 0; r < opt.restarts; ++r) {
    Stream stream(opt.seed, static_cast<std::uint64_t>(r));
    std::vector<double> start(dim);
    for (double& c : start) c = opt.start_spread * (2.0 * stream.uniform() - 1.0);
    const SimplexResult sr = nelder_mead(objective, start, sopt);
    if (!have_best || sr.value < best.loss) {
      have_best = true;
      best.params = transform.decode(sr.x);
      best.loss = sr.value;
      best.iterations = sr.iterations;
      best.converged = sr.converged;
      best.best_restart = r;
    }
  }
  best.gamma_fixed = gamma_fixed;
  best.max_abs_dev = max_abs_deviation_pp(best.params, target);
  return best;
}

struct IdentifiabilityRow {
  double gamma = 0.0;
  FitResult fit;
};

// One gamma-constrained fit per grid point, in grid order.
inline std::vector<IdentifiabilityRow> identifiability_report(const SurvivalTarget& target,
                                                              std::span<const double> gamma_grid,
                                                              const FitOptions& opt = {}) {
  std::vector<IdentifiabilityRow> rows;
  rows.reserve(gamma_grid.size());
  for (double g : gamma_grid) rows.push_back({g, fit(target, g, opt)});
  return rows;
}

// Target whose survival and shares are exactly those produced by `p`.
inline SurvivalTarget target_from_model(const RateParams& p, std::string site = "model") {
  const MatchedQuantities q = matched_quantities(p);
  return {std::move(site), q.survival, q.shares};
}

}  // namespace stagesurv
