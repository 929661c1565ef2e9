#pragma once

// File formats: parameter JSON, survival-target CSV (percentages, as printed
// in registry tables) and the CSV/JSON reports emitted by the CLI.
//
// Output is bit-stable: JSON keys are sorted and every float is written with
// 15 significant digits.

#include <concepts>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stagesurv/calibrate.hpp"
#include "stagesurv/errors.hpp"
#include "stagesurv/exact.hpp"
#include "stagesurv/model.hpp"
#include "stagesurv/montecarlo.hpp"

namespace stagesurv {

using Json = nlohmann::json;

enum class ReportFormat { Csv, Json };

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// Value as it will read back after being written with 15 significant digits.
inline double round15(double v) { return std::stod(format_number(v)); }

// ---------------------------------------------------------------- text I/O

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "-" or "" writes to stdout.
inline void write_text(const std::string& path, std::string_view content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- params

inline Json to_json(const RateParams& p) {
  return Json{{"lambda1", round15(p.lambda1)}, {"lambda2", round15(p.lambda2)},
              {"kappa1", round15(p.kappa1)},   {"kappa2", round15(p.kappa2)},
              {"kappa3", round15(p.kappa3)},   {"mu", round15(p.mu)},
              {"gamma", round15(p.gamma)}};
}

namespace detail {
inline double number_field(const Json& j, const char* key, std::string_view where) {
  if (!j.is_object()) throw ParseError(std::string(where) + ": expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string(where) + ": missing key '" + key + "'");
  if (!it->is_number()) throw ParseError(std::string(where) + ": key '" + key + "' is not a number");
  return it->get<double>();
}
}  // namespace detail

// Parses and validates; a range violation raises ParameterError.
inline RateParams params_from_json(const Json& j, std::string_view where = "params") {
  RateParams p;
  p.lambda1 = detail::number_field(j, "lambda1", where);
  p.lambda2 = detail::number_field(j, "lambda2", where);
  p.kappa1 = detail::number_field(j, "kappa1", where);
  p.kappa2 = detail::number_field(j, "kappa2", where);
  p.kappa3 = detail::number_field(j, "kappa3", where);
  p.mu = detail::number_field(j, "mu", where);
  p.gamma = detail::number_field(j, "gamma", where);
  validate(p);
  return p;
}

inline Json parse_json(const std::string& text, std::string_view where) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string(where) + ": " + e.what());
  }
}

inline RateParams load_params(const std::string& path) {
  return params_from_json(parse_json(read_text(path), path), path);
}

// ---------------------------------------------------------------- matrix

inline std::string to_csv(const TransitionMatrix& m) {
  std::string out = "from";
  for (State s : kAllStates) out += "," + std::string(name(s));
  out += "\n";
  for (State from : kAllStates) {
    out += name(from);
    for (State to : kAllStates) out += "," + format_number(m(from, to));
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- CSV reading

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}
}  // namespace detail

inline TransitionMatrix matrix_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("matrix csv: empty input");
  MatrixRows rows{};
  for (std::size_t r = 0; r < kNumStates; ++r) {
    if (!std::getline(in, line)) throw ParseError("matrix csv: expected 7 data rows");
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != kNumStates + 1) {
      throw ParseError("matrix csv: row " + std::to_string(r + 2) + " has wrong column count");
    }
    for (std::size_t c = 0; c < kNumStates; ++c) {
      try {
        rows[r][c] = std::stod(cells[c + 1]);
      } catch (const std::exception&) {
        throw ParseError("matrix csv: row " + std::to_string(r + 2) + ", column " +
                         std::to_string(c + 2) + " is not numeric");
      }
    }
  }
  return TransitionMatrix::from_rows(rows);
}

// ---------------------------------------------------------------- targets

struct SurvivalTable {
  std::vector<SurvivalTarget> rows;

  const SurvivalTarget* find(std::string_view site) const noexcept {
    for (const auto& r : rows)
      if (r.site == site) return &r;
    return nullptr;
  }
};

inline constexpr std::string_view kTargetColumns[] = {"site",        "s_localized", "s_regional",
                                                      "s_distant",   "p_localized", "p_regional",
                                                      "p_distant"};

// Shares must sum to 100% within 2 points (printed rounding) and are
// renormalised to sum exactly to one. All three share cells may be left empty.
inline SurvivalTable parse_targets(const std::string& text, std::string_view source = "targets") {
  const std::string src(source);
  std::istringstream in(text);
  std::string line;
  SurvivalTable table;
  if (!std::getline(in, line)) return table;

  const auto header = detail::split_csv_line(line);
  std::size_t col[7];
  for (std::size_t k = 0; k < 7; ++k) {
    bool found = false;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (detail::trim(header[c]) == kTargetColumns[k]) {
        col[k] = c;
        found = true;
        break;
      }
    }
    if (!found) {
      throw ParseError(src + ": row 1: missing column '" + std::string(kTargetColumns[k]) + "'");
    }
  }

  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    const std::string where = src + ": row " + std::to_string(row_no);
    auto cell = [&](std::size_t k) -> std::string {
      if (col[k] >= cells.size()) {
        if (k >= 4) return {};  // share columns are optional
        throw ParseError(where + ", column '" + std::string(kTargetColumns[k]) + "': missing cell");
      }
      return detail::trim(cells[col[k]]);
    };
    auto number = [&](std::size_t k) -> double {
      const std::string s = cell(k);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (s.empty() || used != s.size() || !std::isfinite(v)) {
        throw ParseError(where + ", column '" + std::string(kTargetColumns[k]) +
                         "': not a number: '" + s + "'");
      }
      return v;
    };

    SurvivalTarget t;
    t.site = cell(0);
    if (t.site.empty()) throw ParseError(where + ", column 'site': empty site name");
    if (table.find(t.site)) throw ParseError(where + ": duplicate site '" + t.site + "'");
    t.survival = {number(1) / 100.0, number(2) / 100.0, number(3) / 100.0};
    for (std::size_t k = 1; k <= 3; ++k) {
      const double v = number(k);
      if (v < 0.0 || v > 100.0) {
        throw ParseError(where + ", column '" + std::string(kTargetColumns[k]) +
                         "': percentage out of range");
      }
    }

    const bool any_share = !cell(4).empty() || !cell(5).empty() || !cell(6).empty();
    if (any_share) {
      double p[3];
      double sum = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        p[k] = number(4 + k) / 100.0;
        if (p[k] < 0.0) {
          throw ParseError(where + ", column '" + std::string(kTargetColumns[4 + k]) +
                           "': negative share");
        }
        sum += p[k];
      }
      if (std::abs(sum - 1.0) > 0.02) {
        throw ParseError(where + ", columns 'p_*': shares sum to " + format_number(100.0 * sum) +
                         "%, expected 100% within 2 points");
      }
      t.shares = StageDistribution{p[0] / sum, p[1] / sum, p[2] / sum};
    }
    table.rows.push_back(std::move(t));
  }
  return table;
}

inline SurvivalTable load_targets(const std::string& path) {
  return parse_targets(read_text(path), path);
}

inline std::string to_csv(const SurvivalTable& table) {
  std::string out;
  for (std::size_t k = 0; k < 7; ++k) out += (k ? "," : "") + std::string(kTargetColumns[k]);
  out += "\n";
  for (const auto& t : table.rows) {
    out += detail::quote_csv(t.site);
    for (Stage s : kAllStages) out += "," + format_number(100.0 * t.survival[s]);
    for (Stage s : kAllStages) out += "," + (t.shares ? format_number(100.0 * (*t.shares)[s]) : "");
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- exact results

inline Json to_json(const StageDistribution& d) {
  return Json{{"localized", round15(d.localized)},
              {"regional", round15(d.regional)},
              {"distant", round15(d.distant)}};
}

inline Json to_json(const StageSurvival& s) {
  return Json{{"localized", round15(s.localized)},
              {"regional", round15(s.regional)},
              {"distant", round15(s.distant)}};
}

// Columns t, s1, s2, s3; curves must share one horizon and be ordered by stage.
inline std::string curves_to_csv(std::span<const SurvivalCurve> curves) {
  std::string out = "t";
  for (const auto& c : curves) out += ",s" + std::to_string(number(c.stage));
  out += "\n";
  const std::size_t len = curves.empty() ? 0 : curves.front().values.size();
  for (std::size_t t = 0; t < len; ++t) {
    out += std::to_string(t);
    for (const auto& c : curves) out += "," + format_number(c.values.at(t));
    out += "\n";
  }
  return out;
}

inline Json to_json(const SweepRow& r) {
  return Json{{"kappa1", round15(r.kappa1)},
              {"stage_shares", to_json(r.shares)},
              {"survival_by_stage", to_json(r.survival)},
              {"pooled_survival", round15(r.pooled)},
              {"lifetime_mortality", round15(r.lifetime_mortality)}};
}

inline Json to_json(std::span<const SweepRow> rows) {
  Json arr = Json::array();
  for (const auto& r : rows) arr.push_back(to_json(r));
  return arr;
}

inline std::string to_csv(std::span<const SweepRow> rows) {
  std::string out =
      "kappa1,p_localized,p_regional,p_distant,s1,s2,s3,pooled_survival,lifetime_mortality\n";
  for (const auto& r : rows) {
    for (double v : {r.kappa1, r.shares.localized, r.shares.regional, r.shares.distant,
                     r.survival.localized, r.survival.regional, r.survival.distant, r.pooled}) {
      out += format_number(v) + ",";
    }
    out += format_number(r.lifetime_mortality) + "\n";
  }
  return out;
}

inline std::vector<SweepRow> sweep_from_json(const Json& j) {
  std::vector<SweepRow> rows;
  if (!j.is_array()) throw ParseError("sweep: expected a JSON array");
  for (const auto& e : j) {
    SweepRow r;
    r.kappa1 = detail::number_field(e, "kappa1", "sweep");
    const auto& sh = e.at("stage_shares");
    r.shares = {detail::number_field(sh, "localized", "stage_shares"),
                detail::number_field(sh, "regional", "stage_shares"),
                detail::number_field(sh, "distant", "stage_shares")};
    const auto& sv = e.at("survival_by_stage");
    r.survival = {detail::number_field(sv, "localized", "survival_by_stage"),
                  detail::number_field(sv, "regional", "survival_by_stage"),
                  detail::number_field(sv, "distant", "survival_by_stage")};
    r.pooled = detail::number_field(e, "pooled_survival", "sweep");
    r.lifetime_mortality = detail::number_field(e, "lifetime_mortality", "sweep");
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------- cohort

inline Json to_json(const CohortSummary& s) {
  Json shares, survival, counts, survivors;
  for (Stage st : kAllStages) {
    const std::string key = std::to_string(number(st));
    shares[key] = round15(s.stage_share(st));
    const auto rate = s.survival_rate(st);
    survival[key] = rate ? Json(round15(*rate)) : Json(nullptr);
    counts[key] = s.stage_counts[slot(st)];
    survivors[key] = s.survivors[slot(st)];
  }
  return Json{{"n", s.n},
              {"seed", s.seed},
              {"five_year_horizon", s.horizon},
              {"stage_shares", shares},
              {"survival_by_stage", survival},
              {"stage_counts", counts},
              {"survivors", survivors},
              {"exceeded_step_cap", s.exceeded_cap}};
}

inline CohortSummary cohort_from_json(const Json& j) {
  try {
    CohortSummary s;
    s.n = j.at("n").get<std::uint64_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.horizon = j.at("five_year_horizon").get<int>();
    for (Stage st : kAllStages) {
      const std::string key = std::to_string(number(st));
      s.stage_counts[slot(st)] = j.at("stage_counts").at(key).get<std::uint64_t>();
      s.survivors[slot(st)] = j.at("survivors").at(key).get<std::uint64_t>();
    }
    s.exceeded_cap = j.at("exceeded_step_cap").get<std::uint64_t>();
    return s;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("cohort summary: ") + e.what());
  }
}

inline std::string to_csv(const CohortSummary& s) {
  std::string out = "stage,count,share,survivors,survival\n";
  for (Stage st : kAllStages) {
    const auto rate = s.survival_rate(st);
    out += std::to_string(number(st)) + "," + std::to_string(s.stage_counts[slot(st)]) + "," +
           format_number(s.stage_share(st)) + "," + std::to_string(s.survivors[slot(st)]) + "," +
           (rate ? format_number(*rate) : "") + "\n";
  }
  return out;
}

// Columns id, diagnosis_stage, diagnosis_time, death_time (+ states when verbose).
inline std::string trajectories_to_csv(std::span<const Trajectory> trs, bool verbose = false) {
  std::string out = "id,diagnosis_stage,diagnosis_time,death_time";
  out += verbose ? ",states\n" : "\n";
  for (std::size_t i = 0; i < trs.size(); ++i) {
    const auto& t = trs[i];
    out += std::to_string(i) + "," + std::to_string(number(t.diagnosis_stage)) + "," +
           std::to_string(t.diagnosis_time) + "," + std::to_string(t.death_time);
    if (verbose) {
      out += ",";
      for (std::size_t k = 0; k < t.states.size(); ++k) {
        if (k) out += ' ';
        out += name(t.states[k]);
      }
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- fits

inline Json to_json(const FitResult& f) {
  return Json{{"params", to_json(f.params)},
              {"loss", round15(f.loss)},
              {"max_abs_dev", round15(f.max_abs_dev)},
              {"iterations", f.iterations},
              {"converged", f.converged},
              {"best_restart", f.best_restart},
              {"gamma_fixed", f.gamma_fixed ? Json(round15(*f.gamma_fixed)) : Json(nullptr)}};
}

inline FitResult fit_from_json(const Json& j) {
  try {
    FitResult f;
    f.params = params_from_json(j.at("params"), "fit.params");
    f.loss = j.at("loss").get<double>();
    f.max_abs_dev = j.at("max_abs_dev").get<double>();
    f.iterations = j.at("iterations").get<int>();
    f.converged = j.at("converged").get<bool>();
    f.best_restart = j.at("best_restart").get<int>();
    if (!j.at("gamma_fixed").is_null()) f.gamma_fixed = j.at("gamma_fixed").get<double>();
    return f;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("fit result: ") + e.what());
  }
}

inline std::string to_csv(const FitResult& f) {
  std::string out =
      "lambda1,lambda2,kappa1,kappa2,kappa3,mu,gamma,loss,max_abs_dev,iterations,converged\n";
  const auto& p = f.params;
  for (double v : {p.lambda1, p.lambda2, p.kappa1, p.kappa2, p.kappa3, p.mu, p.gamma, f.loss,
                   f.max_abs_dev}) {
    out += format_number(v) + ",";
  }
  out += std::to_string(f.iterations) + "," + (f.converged ? "true" : "false") + "\n";
  return out;
}

inline Json to_json(std::span<const IdentifiabilityRow> rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json e = to_json(r.fit);
    e["gamma"] = round15(r.gamma);
    arr.push_back(std::move(e));
  }
  return arr;
}

inline std::string to_csv(std::span<const IdentifiabilityRow> rows) {
  std::string out =
      "gamma,loss,max_abs_dev,converged,lambda1,lambda2,kappa1,kappa2,kappa3,mu\n";
  for (const auto& r : rows) {
    const auto& p = r.fit.params;
    out += format_number(r.gamma) + "," + format_number(r.fit.loss) + "," +
           format_number(r.fit.max_abs_dev) + "," + (r.fit.converged ? "true" : "false");
    for (double v : {p.lambda1, p.lambda2, p.kappa1, p.kappa2, p.kappa3, p.mu}) {
      out += "," + format_number(v);
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- reports

template <class T>
concept Reportable = requires(const T& t) {
  { to_json(t) } -> std::convertible_to<Json>;
  { to_csv(t) } -> std::convertible_to<std::string>;
};

template <class T>
std::string render(const T& results, ReportFormat format) {
  if (format == ReportFormat::Json) return dump(to_json(results));
  return to_csv(results);
}

template <Reportable T>
void write_report(const T& results, const std::string& path, ReportFormat format) {
  write_text(path, render(results, format));
}

template <class Row>
void write_report(const std::vector<Row>& rows, const std::string& path, ReportFormat format) {
  write_report(std::span<const Row>(rows), path, format);
}

}  // namespace stagesurv
