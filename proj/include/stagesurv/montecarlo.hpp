#pragma once

// Monte Carlo cohort simulation of the progression chain.
//
// Every trajectory draws from its own generator, seeded by a counter-based
// split of the master seed, so a cohort is a pure function of
// (matrix, n, master_seed) whatever the thread count.

#include <algorithm>
#include <array>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "stagesurv/errors.hpp"
#include "stagesurv/model.hpp"

namespace stagesurv {

inline constexpr int kDefaultMaxSteps = 100;
inline constexpr std::uint64_t kDefaultSeed = 1;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed of stream `i` under `master`.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t i) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(i + 0x632BE59BD9B4E019ULL));
}

// Per-trajectory generator. Uniforms are built from the raw 64-bit output so
// results do not depend on the standard library's distribution code.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}
  Stream(std::uint64_t master, std::uint64_t i) : engine_(stream_seed(master, i)) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

struct Trajectory {
  std::vector<State> states;  // states[t] = state at year t, states[0] = U1
  Stage diagnosis_stage = Stage::Localized;
  int diagnosis_time = 0;
  int death_time = 0;
  bool exceeded_cap = false;  // absorption needed more than max_steps years
};

namespace detail {
// Guard against parameterisations whose absorption time is astronomically long.
inline constexpr int kHardStepLimit = 10'000'000;

inline State sample_next(const TransitionMatrix& m, State from, double u) {
  double cum = 0.0;
  State last = from;
  for (State to : kAllStates) {
    const double p = m(from, to);
    if (p == 0.0) continue;
    cum += p;
    last = to;
    if (u < cum) return to;
  }
  return last;
}
}  // namespace detail

// Runs from U1 until absorption in M. Steps beyond `max_steps` are still
// simulated, and flagged on the trajectory.
inline Trajectory simulate_trajectory(const TransitionMatrix& m, Stream& stream,
                                      int max_steps = kDefaultMaxSteps) {
  Trajectory tr;
  tr.states.reserve(static_cast<std::size_t>(std::max(max_steps, 0)) + 1);
  State s = State::U1;
  tr.states.push_back(s);
  bool diagnosed = false;
  for (int t = 1; s != State::M; ++t) {
    if (m(s, s) >= 1.0) {
      throw DegenerateError(std::string(name(s)), "state is trapping; trajectory never reaches M");
    }
    if (t > detail::kHardStepLimit) {
      throw DegenerateError(std::string(name(s)), "no absorption within the hard step limit");
    }
    s = detail::sample_next(m, s, stream.uniform());
    tr.states.push_back(s);
    if (!diagnosed && is_detected(s)) {
      diagnosed = true;
      tr.diagnosis_time = t;
      tr.diagnosis_stage = static_cast<Stage>(index(s) - index(State::D1) + 1);
    }
    if (s == State::M) tr.death_time = t;
  }
  tr.exceeded_cap = tr.death_time > max_steps;
  return tr;
}

struct CohortOptions {
  int horizon = 5;
  int max_steps = kDefaultMaxSteps;
  unsigned threads = 0;  // 0 = hardware concurrency
  bool keep_trajectories = false;
};

struct CohortSummary {
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  int horizon = 5;
  std::array<std::uint64_t, 3> stage_counts{};
  std::array<std::uint64_t, 3> survivors{};  // death_time - diagnosis_time > horizon
  std::uint64_t exceeded_cap = 0;

  double stage_share(Stage s) const noexcept {
    return n == 0 ? 0.0 : static_cast<double>(stage_counts[slot(s)]) / static_cast<double>(n);
  }

  // Empty when no trajectory was diagnosed at `s`.
  std::optional<double> survival_rate(Stage s) const noexcept {
    const auto c = stage_counts[slot(s)];
    if (c == 0) return std::nullopt;
    return static_cast<double>(survivors[slot(s)]) / static_cast<double>(c);
  }

  friend bool operator==(const CohortSummary&, const CohortSummary&) = default;
};

struct Cohort {
  CohortSummary summary;
  std::vector<Trajectory> trajectories;  // filled only with keep_trajectories
};

inline Cohort run_cohort(const TransitionMatrix& m, std::uint64_t n, std::uint64_t master_seed,
                         const CohortOptions& opt = {}) {
  if (n < 1) throw ParameterError("n", "cohort size must be at least 1");
  if (opt.horizon < 0) throw ParameterError("horizon", "must be nonnegative");

  Cohort out;
  out.summary.n = n;
  out.summary.seed = master_seed;
  out.summary.horizon = opt.horizon;
  if (opt.keep_trajectories) out.trajectories.resize(n);

  unsigned threads = opt.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opt.threads;
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n));

  struct Partial {
    std::array<std::uint64_t, 3> counts{};
    std::array<std::uint64_t, 3> survivors{};
    std::uint64_t exceeded = 0;
  };
  std::vector<Partial> partials(threads);
  std::vector<std::exception_ptr> errors(threads);

  auto work = [&](unsigned w) {
    try {
      const std::uint64_t begin = n * w / threads;
      const std::uint64_t end = n * (w + 1) / threads;
      Partial& acc = partials[w];
      for (std::uint64_t i = begin; i < end; ++i) {
        Stream stream(master_seed, i);
        Trajectory tr = simulate_trajectory(m, stream, opt.max_steps);
        const auto k = slot(tr.diagnosis_stage);
        ++acc.counts[k];
        if (tr.death_time - tr.diagnosis_time > opt.horizon) ++acc.survivors[k];
        if (tr.exceeded_cap) ++acc.exceeded;
        if (opt.keep_trajectories) out.trajectories[i] = std::move(tr);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (const Partial& p : partials) {
    for (std::size_t k = 0; k < 3; ++k) {
      out.summary.stage_counts[k] += p.counts[k];
      out.summary.survivors[k] += p.survivors[k];
    }
    out.summary.exceeded_cap += p.exceeded;
  }
  return out;
}

inline CohortSummary simulate_cohort(const TransitionMatrix& m, std::uint64_t n,
                                     std::uint64_t master_seed, const CohortOptions& opt = {}) {
  CohortOptions o = opt;
  o.keep_trajectories = false;
  return run_cohort(m, n, master_seed, o).summary;
}

}  // namespace stagesurv
