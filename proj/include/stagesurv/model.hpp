#pragma once

// State space, rate parameters and the one-year transition matrix of the
// seven-state tumor progression chain.
//
//   U1 -> U2 -> U3        undetected track (progression lambda1, lambda2)
//   |     |     |         detection kappa1, kappa2, kappa3
//   D1 -> D2 -> D3 -> M   detected track (progression scaled by 1 - gamma)
//
// Rates are used directly as one-step probabilities.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include "stagesurv/errors.hpp"

namespace stagesurv {

enum class State : std::size_t { U1 = 0, U2, U3, D1, D2, D3, M };

inline constexpr std::size_t kNumStates = 7;

inline constexpr std::array<State, kNumStates> kAllStates = {
    State::U1, State::U2, State::U3, State::D1, State::D2, State::D3, State::M};

constexpr std::size_t index(State s) noexcept { return static_cast<std::size_t>(s); }

constexpr std::string_view name(State s) noexcept {
  constexpr std::array<std::string_view, kNumStates> names = {"U1", "U2", "U3", "D1",
                                                              "D2", "D3", "M"};
  return names[index(s)];
}

constexpr bool is_undetected(State s) noexcept { return index(s) <= index(State::U3); }
constexpr bool is_detected(State s) noexcept {
  return index(s) >= index(State::D1) && index(s) <= index(State::D3);
}

// Stage at diagnosis. Values match the clinical numbering (1 = localized).
enum class Stage : int { Localized = 1, Regional = 2, Distant = 3 };

inline constexpr std::array<Stage, 3> kAllStages = {Stage::Localized, Stage::Regional,
                                                    Stage::Distant};

constexpr int number(Stage s) noexcept { return static_cast<int>(s); }
constexpr std::size_t slot(Stage s) noexcept { return static_cast<std::size_t>(s) - 1; }

constexpr State detected_state(Stage s) noexcept {
  return static_cast<State>(index(State::D1) + slot(s));
}

inline Stage stage_from_number(int n) {
  if (n < 1 || n > 3) throw ParameterError("stage", "must be 1, 2 or 3, got " + std::to_string(n));
  return static_cast<Stage>(n);
}

struct RateParams {
  double lambda1 = 0.0;  // stage 1 -> 2 progression
  double lambda2 = 0.0;  // stage 2 -> 3 progression
  double kappa1 = 0.0;   // detection at stage 1
  double kappa2 = 0.0;
  double kappa3 = 0.0;
  double mu = 0.0;     // mortality from D3
  double gamma = 0.0;  // treatment effectiveness on detected-track progression

  friend bool operator==(const RateParams&, const RateParams&) = default;
};

// Parameters that reproduce the published one-year matrix.
inline constexpr RateParams kReferenceParams{.lambda1 = 0.15,
                                             .lambda2 = 0.16,
                                             .kappa1 = 0.09,
                                             .kappa2 = 0.18,
                                             .kappa3 = 0.80,
                                             .mu = 0.30,
                                             .gamma = 0.0};

namespace detail {
// Slack for sums such as 0.85 + 0.15 that land one ulp above 1.
inline constexpr double kSumSlack = 1e-12;

inline void check_unit(std::string_view field, double v) {
  if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
    throw ParameterError(std::string(field),
                         "must be a finite probability in [0, 1], got " + std::to_string(v));
  }
}
}  // namespace detail

// Throws ParameterError naming the first offending field.
inline void validate(const RateParams& p) {
  detail::check_unit("lambda1", p.lambda1);
  detail::check_unit("lambda2", p.lambda2);
  detail::check_unit("kappa1", p.kappa1);
  detail::check_unit("kappa2", p.kappa2);
  detail::check_unit("kappa3", p.kappa3);
  detail::check_unit("mu", p.mu);
  detail::check_unit("gamma", p.gamma);
  if (p.lambda1 + p.kappa1 > 1.0 + detail::kSumSlack) {
    throw ParameterError("lambda1+kappa1", "must not exceed 1 (stay probability of U1 would be negative)");
  }
  if (p.lambda2 + p.kappa2 > 1.0 + detail::kSumSlack) {
    throw ParameterError("lambda2+kappa2", "must not exceed 1 (stay probability of U2 would be negative)");
  }
}

inline bool is_valid(const RateParams& p) noexcept {
  try {
    validate(p);
    return true;
  } catch (const ParameterError&) {
    return false;
  }
}

using MatrixRows = std::array<std::array<double, kNumStates>, kNumStates>;

// Row-stochastic 7x7 one-year transition matrix over the fixed state order.
// Instances always satisfy the structural invariants checked by from_rows().
class TransitionMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-12;

  // Validates entries, row sums, absorption of M and the allowed zero pattern.
  static TransitionMatrix from_rows(const MatrixRows& rows) {
    for (State from : kAllStates) {
      double sum = 0.0;
      for (State to : kAllStates) {
        double v = rows[index(from)][index(to)];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
          throw MatrixError("entry " + std::string(name(from)) + "->" + std::string(name(to)) +
                            " is not a probability");
        }
        if (v != 0.0 && !allowed(from, to)) {
          throw MatrixError("transition " + std::string(name(from)) + "->" +
                            std::string(name(to)) + " is not part of the model");
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        throw MatrixError("row " + std::string(name(from)) + " sums to " + std::to_string(sum));
      }
    }
    if (rows[index(State::M)][index(State::M)] != 1.0) {
      throw MatrixError("M must be absorbing");
    }
    return TransitionMatrix(rows);
  }

  // True when `from -> to` may carry probability in this model.
  static constexpr bool allowed(State from, State to) noexcept {
    if (from == to) return true;
    switch (from) {
      case State::U1: return to == State::U2 || to == State::D1;
      case State::U2: return to == State::U3 || to == State::D2;
      case State::U3: return to == State::D3;
      case State::D1: return to == State::D2;
      case State::D2: return to == State::D3;
      case State::D3: return to == State::M;
      case State::M: return false;
    }
    return false;
  }

  double operator()(State from, State to) const noexcept {
    return rows_[index(from)][index(to)];
  }

  const MatrixRows& rows() const noexcept { return rows_; }

  friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

 private:
  explicit TransitionMatrix(const MatrixRows& rows) : rows_(rows) {}

  MatrixRows rows_{};
};

inline TransitionMatrix build_transition_matrix(const RateParams& p) {
  validate(p);
  MatrixRows r{};
  auto set = [&r](State from, State to, double v) { r[index(from)][index(to)] = v; };
  auto stay = [](double out) { return out >= 1.0 ? 0.0 : 1.0 - out; };

  set(State::U1, State::U2, p.lambda1);
  set(State::U1, State::D1, p.kappa1);
  set(State::U1, State::U1, stay(p.lambda1 + p.kappa1));

  set(State::U2, State::U3, p.lambda2);
  set(State::U2, State::D2, p.kappa2);
  set(State::U2, State::U2, stay(p.lambda2 + p.kappa2));

  set(State::U3, State::D3, p.kappa3);
  set(State::U3, State::U3, 1.0 - p.kappa3);

  const double d1_progress = p.lambda1 * (1.0 - p.gamma);
  const double d2_progress = p.lambda2 * (1.0 - p.gamma);
  set(State::D1, State::D2, d1_progress);
  set(State::D1, State::D1, 1.0 - d1_progress);
  set(State::D2, State::D3, d2_progress);
  set(State::D2, State::D2, 1.0 - d2_progress);

  set(State::D3, State::M, p.mu);
  set(State::D3, State::D3, 1.0 - p.mu);

  set(State::M, State::M, 1.0);
  return TransitionMatrix::from_rows(r);
}

}  // namespace stagesurv
