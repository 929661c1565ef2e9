// stagesurv: command-line front end for the tumor progression model.
//
// Exit codes: 0 success, 2 input/validation error, 3 numerical failure.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stagesurv/stagesurv.hpp"

namespace {

using namespace stagesurv;

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

std::string data_dir() {
  if (const char* env = std::getenv("STAGESURV_DATA_DIR"); env && *env) return env;
  return STAGESURV_DEFAULT_DATA_DIR;
}

std::string default_params_path() { return data_dir() + "/default_params.json"; }
std::string default_targets_path() { return data_dir() + "/seer_2014_2020.csv"; }

ReportFormat parse_format(const std::string& s) {
  return s == "csv" ? ReportFormat::Csv : ReportFormat::Json;
}

std::string matrix_table(const TransitionMatrix& m) {
  std::string out = "    ";
  for (State s : kAllStates) {
    char cell[16];
    std::snprintf(cell, sizeof cell, "%6s", std::string(name(s)).c_str());
    out += cell;
  }
  out += "\n";
  for (State from : kAllStates) {
    char label[8];
    std::snprintf(label, sizeof label, "%-4s", std::string(name(from)).c_str());
    out += label;
    for (State to : kAllStates) {
      char cell[16];
      std::snprintf(cell, sizeof cell, "%6.2f", m(from, to));
      out += cell;
    }
    out += "\n";
  }
  return out;
}

struct MatrixArgs {
  std::string params = default_params_path();
  std::string format = "table";
  std::string out = "-";
};

int run_matrix(const MatrixArgs& a) {
  const TransitionMatrix m = build_transition_matrix(load_params(a.params));
  write_text(a.out, a.format == "csv" ? to_csv(m) : matrix_table(m));
  return 0;
}

struct SimulateArgs {
  std::string params = default_params_path();
  std::uint64_t n = 10000;
  std::uint64_t seed = kDefaultSeed;
  int horizon = 5;
  int max_steps = kDefaultMaxSteps;
  unsigned threads = 0;
  std::string format = "json";
  std::string out = "-";
  std::string trajectories;
  bool verbose = false;
};

int run_simulate(const SimulateArgs& a) {
  const TransitionMatrix m = build_transition_matrix(load_params(a.params));
  CohortOptions opt;
  opt.horizon = a.horizon;
  opt.max_steps = a.max_steps;
  opt.threads = a.threads;
  opt.keep_trajectories = !a.trajectories.empty();
  const Cohort cohort = run_cohort(m, a.n, a.seed, opt);
  write_report(cohort.summary, a.out, parse_format(a.format));
  if (!a.trajectories.empty()) {
    write_text(a.trajectories, trajectories_to_csv(cohort.trajectories, a.verbose));
  }
  if (cohort.summary.exceeded_cap > 0) {
    std::cerr << "note: " << cohort.summary.exceeded_cap << " trajectories needed more than "
              << a.max_steps << " steps to reach M\n";
  }
  return 0;
}

struct ExactArgs {
  std::string params = default_params_path();
  int horizon = 5;
  std::string format = "json";
  std::string out = "-";
  std::string curves;
};

int run_exact(const ExactArgs& a) {
  const TransitionMatrix m = build_transition_matrix(load_params(a.params));
  std::vector<SurvivalCurve> curves;
  for (Stage s : kAllStages) curves.push_back(survival_curve(m, s, a.horizon));
  const std::string curve_csv = curves_to_csv(curves);
  if (!a.curves.empty()) write_text(a.curves, curve_csv);
  if (a.format == "csv") {
    write_text(a.out, curve_csv);
    return 0;
  }
  const StageSurvival at = survival_at(m, a.horizon);
  Json j{{"horizon", a.horizon},
         {"stage_shares", to_json(stage_distribution(m))},
         {"survival_by_stage", to_json(at)},
         {"pooled_survival", round15(pooled_survival(m, a.horizon))},
         {"lifetime_mortality", round15(lifetime_mortality(m))}};
  write_text(a.out, dump(j));
  return 0;
}

struct FitArgs {
  std::string target = default_targets_path();
  std::string site;
  std::optional<double> gamma;
  std::vector<double> gamma_grid;
  std::uint64_t seed = kDefaultSeed;
  int restarts = 20;
  int max_iterations = 2000;
  bool survival_only = false;
  std::string format = "json";
  std::string out = "-";
  std::string params_out;
};

int run_fit(const FitArgs& a) {
  const SurvivalTable table = load_targets(a.target);
  const SurvivalTarget* found = table.find(a.site);
  if (!found) {
    std::cerr << "error: site not found: '" << a.site << "'\n";
    return kExitInput;
  }
  SurvivalTarget target = *found;
  if (a.survival_only) {
    target.shares.reset();
  } else if (!target.shares) {
    std::cerr << "error: site '" << a.site
              << "' has no stage shares; pass --survival-only to fit survival alone\n";
    return kExitInput;
  }

  FitOptions opt;
  opt.seed = a.seed;
  opt.restarts = a.restarts;
  opt.max_iterations = a.max_iterations;

  if (!a.gamma_grid.empty()) {
    const auto rows = identifiability_report(target, a.gamma_grid, opt);
    write_report(rows, a.out, parse_format(a.format));
    return 0;
  }
  const FitResult r = fit(target, a.gamma, opt);
  if (a.format == "csv") {
    write_text(a.out, to_csv(r));
  } else {
    Json j = to_json(r);
    j["site"] = target.site;
    j["survival_only"] = !target.shares.has_value();
    write_text(a.out, dump(j));
  }
  if (!a.params_out.empty()) write_text(a.params_out, dump(to_json(r.params)));
  if (!r.converged) std::cerr << "note: simplex did not converge within the budget\n";
  return 0;
}

struct SweepArgs {
  std::string params = default_params_path();
  std::vector<double> kappa1;
  int horizon = 5;
  std::string format = "csv";
  std::string out = "-";
};

int run_sweep(const SweepArgs& a) {
  const auto rows = screening_sweep(load_params(a.params), a.kappa1, a.horizon);
  write_report(rows, a.out, parse_format(a.format));
  return 0;
}

struct CounterfactualArgs {
  std::string params = default_params_path();
  double gamma_cf = 0.0;
  int back = 10;
  int horizon = 5;
  std::vector<double> mixture;
  std::string out = "-";
};

int run_counterfactual(const CounterfactualArgs& a) {
  Json j;
  if (!a.mixture.empty()) {
    const MixtureScenario sc{a.mixture.at(0), a.mixture.at(1)};
    j["probability"] = round15(progressive_survival(sc));
    j["assumptions"] = Json{{"mode", "mixture"},
                            {"overall_survival", round15(sc.overall_survival)},
                            {"nonprogressive_fraction", round15(sc.nonprogressive_fraction)}};
  } else {
    const RateParams p = load_params(a.params);
    j["probability"] = round15(counterfactual_alive(p, a.gamma_cf, a.back, a.horizon));
    j["survival_gain"] = round15(counterfactual_gain(p, a.gamma_cf, a.back, a.horizon));
    j["assumptions"] = Json{{"mode", "model"},
                            {"gamma_cf", round15(a.gamma_cf)},
                            {"back_years", a.back},
                            {"alive_horizon", a.horizon},
                            {"diagnosis_stage", 1},
                            {"params", to_json(p)}};
  }
  write_text(a.out, dump(j));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seven-state tumor progression model: survival by stage, simulation, calibration"};
  app.require_subcommand(1);
  const std::vector<std::string> json_csv = {"json", "csv"};

  MatrixArgs ma;
  auto* matrix = app.add_subcommand("matrix", "Print the one-year transition matrix");
  matrix->add_option("--params", ma.params, "Parameter JSON file")->capture_default_str();
  matrix->add_option("--format", ma.format, "table or csv")
      ->check(CLI::IsMember({"table", "csv"}))
      ->capture_default_str();
  matrix->add_option("--out", ma.out, "Output file (- for stdout)");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo cohort summary");
  simulate->add_option("--params", sa.params, "Parameter JSON file")->capture_default_str();
  simulate->add_option("--n", sa.n, "Cohort size")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--seed", sa.seed, "Master seed")->capture_default_str();
  simulate->add_option("--horizon", sa.horizon, "Survival horizon in years")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--max-steps", sa.max_steps, "Nominal step cap (exceeding it is reported)")
      ->capture_default_str();
  simulate->add_option("--threads", sa.threads, "Worker threads (0 = all cores)");
  simulate->add_option("--format", sa.format, "json or csv")->check(CLI::IsMember(json_csv));
  simulate->add_option("--out", sa.out, "Output file (- for stdout)");
  simulate->add_option("--trajectories", sa.trajectories, "Write a per-trajectory CSV dump");
  simulate->add_flag("--verbose", sa.verbose, "Include full state sequences in the dump");

  ExactArgs ea;
  auto* exact = app.add_subcommand("exact", "Exact stage shares and survival curves");
  exact->add_option("--params", ea.params, "Parameter JSON file")->capture_default_str();
  exact->add_option("--horizon", ea.horizon, "Horizon in years")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  exact->add_option("--format", ea.format, "json summary or csv curves")->check(CLI::IsMember(json_csv));
  exact->add_option("--out", ea.out, "Output file (- for stdout)");
  exact->add_option("--curves", ea.curves, "Also write survival curves CSV here");

  FitArgs fa;
  auto* fitcmd = app.add_subcommand("fit", "Calibrate rates to a survival table row");
  fitcmd->add_option("--target", fa.target, "Target CSV")->capture_default_str();
  fitcmd->add_option("--site", fa.site, "Site name")->required();
  fitcmd->add_option("--gamma", fa.gamma, "Hold treatment effectiveness fixed")
      ->check(CLI::Range(0.0, 1.0));
  fitcmd->add_option("--gamma-grid", fa.gamma_grid, "Comma-separated gamma values (identifiability report)")
      ->delimiter(',')
      ->excludes("--gamma");
  fitcmd->add_option("--seed", fa.seed, "Seed for restart points")->capture_default_str();
  fitcmd->add_option("--restarts", fa.restarts, "Simplex restarts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fitcmd->add_option("--max-iter", fa.max_iterations, "Iterations per restart")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fitcmd->add_flag("--survival-only", fa.survival_only, "Ignore stage shares, match survival only");
  fitcmd->add_option("--format", fa.format, "json or csv")->check(CLI::IsMember(json_csv));
  fitcmd->add_option("--out", fa.out, "Output file (- for stdout)");
  fitcmd->add_option("--params-out", fa.params_out, "Write the fitted parameter file here");

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "Vary stage-1 detection with everything else fixed");
  sweep->add_option("--params", wa.params, "Parameter JSON file")->capture_default_str();
  sweep->add_option("--kappa1", wa.kappa1, "Comma-separated kappa1 values")->delimiter(',')->required();
  sweep->add_option("--horizon", wa.horizon, "Survival horizon")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sweep->add_option("--format", wa.format, "csv or json")->check(CLI::IsMember(json_csv));
  sweep->add_option("--out", wa.out, "Output file (- for stdout)");

  CounterfactualArgs ca;
  auto* cf = app.add_subcommand("counterfactual", "Counterfactual early-diagnosis survival");
  cf->add_option("--params", ca.params, "Parameter JSON file")->capture_default_str();
  auto* gcf = cf->add_option("--gamma-cf", ca.gamma_cf, "Treatment effectiveness in the counterfactual")
                  ->check(CLI::Range(0.0, 1.0));
  auto* back = cf->add_option("--back", ca.back, "Years earlier the hypothetical diagnosis happens")
                   ->check(CLI::NonNegativeNumber)
                   ->capture_default_str();
  auto* hor = cf->add_option("--horizon", ca.horizon, "Years after the actual diagnosis")
                  ->check(CLI::NonNegativeNumber)
                  ->capture_default_str();
  cf->add_option("--mixture", ca.mixture, "Overall survival S and non-progressive fraction F")
      ->expected(2)
      ->excludes(gcf)
      ->excludes(back)
      ->excludes(hor);
  cf->add_option("--out", ca.out, "Output file (- for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*matrix) return run_matrix(ma);
    if (*simulate) return run_simulate(sa);
    if (*exact) return run_exact(ea);
    if (*fitcmd) return run_fit(fa);
    if (*sweep) return run_sweep(wa);
    if (*cf) return run_counterfactual(ca);
  } catch (const DegenerateError& e) {
    std::cerr << "error: degenerate model: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: internal failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitInput;
}
