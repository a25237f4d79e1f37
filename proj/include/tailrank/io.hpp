#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "tailrank/error.hpp"
#include "tailrank/estimators.hpp"
#include "tailrank/montecarlo.hpp"
#include "tailrank/tailscore.hpp"

namespace tailrank {

// ---------------------------------------------------------------------------
// number formatting and parsing

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) {
    return "nan";
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) {
    return std::nullopt;
  }
  if (s.front() == '+') {
    s.remove_prefix(1);
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return value;
}

inline std::optional<std::uint64_t> parse_unsigned(std::string_view s) {
  s = trim(s);
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return value;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return out;
}

/// "logs" or "es:<beta>" ("crps" is accepted as es:1).
inline ScoreRule parse_rule(std::string_view text) {
  const std::string_view t = trim(text);
  if (t == "logs") {
    return ScoreRule::logs();
  }
  if (t == "crps") {
    return ScoreRule::crps();
  }
  if (t.substr(0, 3) == "es:") {
    if (auto beta = parse_double(t.substr(3))) {
      return ScoreRule::energy(*beta);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scoring rule '" + std::string(t) + "' (expected logs or es:<beta>)");
}

inline std::string rule_name(const ScoreRule& rule) {
  return rule.is_energy() ? "es:" + format_double(rule.beta) : "logs";
}

// ---------------------------------------------------------------------------
// delimited text

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) {
        return i;
      }
    }
    return std::nullopt;
  }
};

/// Comma-separated text with a header row; double-quoted fields may contain
/// commas, newlines and doubled quotes.
inline CsvTable parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  char ch;
  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) {
      records.push_back(std::move(record));
    }
    record.clear();
  };
  while (in.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\n') {
      end_record();
    } else if (ch != '\r') {
      field.push_back(ch);
      field_started = true;
    }
  }
  if (quoted) {
    throw Error(ErrorCode::Data, "unterminated quoted field");
  }
  if (!field.empty() || !record.empty()) {
    end_record();
  }
  if (records.empty()) {
    throw Error(ErrorCode::Schema, "input has no header row");
  }
  CsvTable table;
  table.header = std::move(records.front());
  for (auto& h : table.header) {
    h = std::string(trim(h));
  }
  table.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return table;
}

inline bool is_missing(std::string_view field) {
  const auto t = trim(field);
  return t.empty() || t == "NA";
}

struct DatasetSpec {
  std::string path;
  std::string value_column;
  std::optional<std::pair<std::string, std::string>> filter;
  bool drop_missing = false;
};

struct IngestReport {
  Sample sample;
  std::size_t rows_read = 0;
  std::size_t rows_dropped_missing = 0;
  std::size_t rows_filtered_out = 0;
};

/// Row numbers in messages are 1-based data rows (the header is row 0).
inline IngestReport ingest(const DatasetSpec& spec, std::istream& in) {
  const CsvTable table = parse_csv(in);
  const auto value_col = table.column(spec.value_column);
  if (!value_col) {
    throw Error(ErrorCode::Schema, "column '" + spec.value_column + "' not found in header");
  }
  std::optional<std::size_t> filter_col;
  if (spec.filter) {
    filter_col = table.column(spec.filter->first);
    if (!filter_col) {
      throw Error(ErrorCode::Schema, "filter column '" + spec.filter->first + "' not found in header");
    }
  }
  IngestReport report;
  report.rows_read = table.rows.size();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string row_label = "row " + std::to_string(r + 1);
    if (row.size() != table.header.size()) {
      throw Error(ErrorCode::Data, row_label + " has " + std::to_string(row.size()) + " fields, header has " +
                                       std::to_string(table.header.size()));
    }
    if (filter_col) {
      const std::string& fv = row[*filter_col];
      if (is_missing(fv)) {
        if (spec.drop_missing) {
          ++report.rows_dropped_missing;
        } else {
          ++report.rows_filtered_out;
        }
        continue;
      }
      if (trim(fv) != spec.filter->second) {
        ++report.rows_filtered_out;
        continue;
      }
    }
    const std::string& raw = row[*value_col];
    if (is_missing(raw)) {
      if (spec.drop_missing) {
        ++report.rows_dropped_missing;
        continue;
      }
      throw Error(ErrorCode::Data, row_label + ": missing value in column '" + spec.value_column + "'");
    }
    const auto value = parse_double(raw);
    if (!value || !std::isfinite(*value)) {
      throw Error(ErrorCode::Data, row_label + ": cannot parse '" + raw + "' as a number");
    }
    if (!(*value > 0.0)) {
      throw Error(ErrorCode::Data, row_label + ": value " + raw + " is not positive");
    }
    report.sample.values.push_back(*value);
  }
  if (report.sample.values.empty()) {
    throw Error(ErrorCode::EmptySubset, "no observations left after filtering");
  }
  report.sample.dgp_label = "file:" + spec.path + ":" + spec.value_column;
  if (spec.filter) {
    report.sample.dgp_label += "[" + spec.filter->first + "=" + spec.filter->second + "]";
  }
  return report;
}

inline IngestReport ingest(const DatasetSpec& spec) {
  std::ifstream in(spec.path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open '" + spec.path + "'");
  }
  return ingest(spec, in);
}

// ---------------------------------------------------------------------------
// result tables

inline void write_score_curves_csv(std::ostream& out, std::span<const ScoreCurve> curves) {
  out << "k,candidate_gamma,score,ci_low,ci_high\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out << p.k << ',' << format_double(c.candidate.gamma()) << ',' << format_double(p.score) << ',';
      if (p.ci_half_width) {
        out << format_double(p.score - *p.ci_half_width) << ',' << format_double(p.score + *p.ci_half_width);
      } else {
        out << ',';
      }
      out << '\n';
    }
  }
}

inline nlohmann::ordered_json score_curves_json(std::span<const ScoreCurve> curves) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : curves) {
    nlohmann::ordered_json jc;
    jc["candidate_gamma"] = c.candidate.gamma();
    jc["rule"] = rule_name(c.rule);
    auto pts = nlohmann::ordered_json::array();
    for (const auto& p : c.points) {
      nlohmann::ordered_json jp;
      jp["k"] = p.k;
      jp["score"] = p.score;
      if (p.ci_half_width) {
        jp["ci_half_width"] = *p.ci_half_width;
      } else {
        jp["ci_half_width"] = nullptr;
      }
      pts.push_back(std::move(jp));
    }
    jc["points"] = std::move(pts);
    arr.push_back(std::move(jc));
  }
  return arr;
}

inline nlohmann::ordered_json ranking_json(const RankingReport& report, const ScoreRule& rule) {
  nlohmann::ordered_json j;
  j["rule"] = rule_name(rule);
  j["stability_range"] = report.stability_range;
  auto means = nlohmann::ordered_json::array();
  for (const auto& m : report.mean_scores) {
    means.push_back({{"candidate_gamma", m.candidate.gamma()}, {"mean_score", m.mean_score}});
  }
  j["mean_scores"] = std::move(means);
  auto order = nlohmann::ordered_json::array();
  std::size_t rank = 1;
  for (const auto& m : report.order) {
    order.push_back({{"rank", rank++}, {"candidate_gamma", m.candidate.gamma()}, {"mean_score", m.mean_score}});
  }
  j["order"] = std::move(order);
  return j;
}

inline std::string method_name(const EstimateTrace& t) {
  return t.method == EstimateTrace::Method::Hill ? "hill" : "score_opt:" + rule_name(t.rule);
}

inline void write_estimates_csv(std::ostream& out, std::span<const EstimateTrace> traces) {
  out << "method,beta,k,gamma_hat,objective,boundary_flag\n";
  for (const auto& t : traces) {
    out << method_name(t) << ',' << (t.rule.is_energy() ? format_double(t.rule.beta) : "") << ',' << t.k << ','
        << format_double(t.gamma_hat) << ',' << format_double(t.objective) << ',' << (t.at_boundary ? 1 : 0) << '\n';
  }
}

inline void write_bias_variance_csv(std::ostream& out, std::span<const BiasVarianceCell> cells) {
  out << "method,beta,gamma_true,n,k_fraction,k,mean,bias,variance\n";
  for (const auto& c : cells) {
    out << c.method << ',' << (c.beta ? format_double(*c.beta) : "") << ',' << format_double(c.gamma_true) << ','
        << c.n << ',' << format_double(c.k_fraction) << ',' << c.k << ',' << format_double(c.mean) << ','
        << format_double(c.bias) << ',' << (c.variance ? format_double(*c.variance) : "") << '\n';
  }
}

inline void write_proportions_csv(std::ostream& out, double gamma_true, std::span<const ProportionCurve> curves) {
  out << "gamma_true,n,k,k_over_n,proportion\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out << format_double(gamma_true) << ',' << c.n << ',' << p.k << ',' << format_double(p.k_over_n) << ','
          << format_double(p.proportion) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// experiment configuration: "key = value" lines, '#' starts a comment

struct ExperimentConfig {
  enum class Kind { Ranking, Estimator, Coverage };

  Kind kind = Kind::Ranking;
  std::vector<ExperimentSpec> specs;  // one per gamma_true
  std::vector<double> k_fractions{0.05, 0.15, 0.25};
  bool beta_schedule = true;
  std::size_t grid_points = 150;
  std::size_t workers = 1;
  std::size_t coverage_k = 100;
  std::map<std::string, std::string> resolved;  // every key with its effective value
};

inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) {
      s = s.substr(0, hash);
    }
    s = trim(s);
    if (s.empty()) {
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::Config, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(s.substr(0, eq)));
    if (key.empty()) {
      throw Error(ErrorCode::Config, "line " + std::to_string(line_no) + ": empty key");
    }
    if (kv.count(key)) {
      throw Error(ErrorCode::Config, "key '" + key + "' given twice");
    }
    kv[key] = std::string(trim(s.substr(eq + 1)));
  }
  return kv;
}

namespace detail {

inline Error config_error(const std::string& key, const std::string& what) {
  return Error(ErrorCode::Config, "key '" + key + "': " + what);
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split(value, ',')) {
    const auto v = parse_double(item);
    if (!v) {
      throw config_error(key, "cannot parse '" + item + "' as a number");
    }
    out.push_back(*v);
  }
  return out;
}

inline std::uint64_t parse_count(const std::string& key, const std::string& value) {
  const auto v = parse_unsigned(value);
  if (!v) {
    throw config_error(key, "expected a nonnegative integer, got '" + value + "'");
  }
  return *v;
}

}  // namespace detail

inline ExperimentConfig build_experiment_config(const std::map<std::string, std::string>& raw) {
  static const std::vector<std::string> known = {
      "experiment", "dgp",         "gamma_true",     "burr_t",   "scaling",       "n_values",
      "candidates", "rule",        "k_grid",         "k_min",    "k_max_fraction", "k_points",
      "replications", "base_seed", "k_fractions",    "beta_schedule", "grid_points", "workers",
      "coverage_k"};
  for (const auto& [key, value] : raw) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw detail::config_error(key, "unknown key");
    }
  }
  std::map<std::string, std::string> kv = {
      {"experiment", "ranking"}, {"dgp", "frechet"},  {"gamma_true", "1"},         {"burr_t", "1"},
      {"scaling", "none"},       {"n_values", "1000, 10000, 100000"}, {"candidates", "0.8, 1, 1.2, 1.5"},
      {"rule", "logs"},          {"k_grid", "evenly"}, {"k_min", "50"},            {"k_max_fraction", "0.25"},
      {"k_points", "100"},       {"replications", "100"}, {"base_seed", "0"},      {"k_fractions", "0.05, 0.15, 0.25"},
      {"beta_schedule", "true"}, {"grid_points", "150"}, {"workers", "1"},         {"coverage_k", "100"}};
  for (const auto& [key, value] : raw) {
    kv[key] = value;
  }

  ExperimentConfig cfg;
  const auto& kind = kv["experiment"];
  if (kind == "ranking") {
    cfg.kind = ExperimentConfig::Kind::Ranking;
  } else if (kind == "estimator") {
    cfg.kind = ExperimentConfig::Kind::Estimator;
  } else if (kind == "coverage") {
    cfg.kind = ExperimentConfig::Kind::Coverage;
  } else {
    throw detail::config_error("experiment", "expected ranking, estimator or coverage");
  }

  ExperimentSpec base;
  const auto& dgp = kv["dgp"];
  if (dgp == "frechet") {
    base.dgp.kind = DgpSpec::Kind::Frechet;
  } else if (dgp == "burr") {
    base.dgp.kind = DgpSpec::Kind::Burr;
  } else if (dgp == "pareto") {
    base.dgp.kind = DgpSpec::Kind::Pareto;
  } else {
    throw detail::config_error("dgp", "expected frechet, burr or pareto");
  }
  const auto burr_t = parse_double(kv["burr_t"]);
  if (!burr_t || !(*burr_t > 0.0)) {
    throw detail::config_error("burr_t", "expected a positive number");
  }
  base.dgp.burr_t = *burr_t;

  const auto& scaling = kv["scaling"];
  if (scaling == "none") {
    base.scaling = ScalingKind::None;
  } else if (scaling == "linear") {
    base.scaling = ScalingKind::Linear;
  } else if (scaling == "sinusoidal") {
    base.scaling = ScalingKind::Sinusoidal;
  } else {
    throw detail::config_error("scaling", "expected none, linear or sinusoidal");
  }

  base.n_values.clear();
  for (const auto& item : split(kv["n_values"], ',')) {
    base.n_values.push_back(detail::parse_count("n_values", item));
  }
  base.candidates.clear();
  for (double g : detail::parse_double_list("candidates", kv["candidates"])) {
    if (!(g > 0.0)) {
      throw detail::config_error("candidates", "tail indices must be positive");
    }
    base.candidates.emplace_back(g);
  }
  try {
    base.rule = parse_rule(kv["rule"]);
  } catch (const Error& e) {
    throw detail::config_error("rule", e.what());
  }

  const auto& k_grid = kv["k_grid"];
  if (k_grid == "evenly") {
    base.k_policy.kind = KPolicy::Kind::Evenly;
  } else if (k_grid == "all_integers") {
    base.k_policy.kind = KPolicy::Kind::AllIntegers;
  } else {
    throw detail::config_error("k_grid", "expected evenly or all_integers");
  }
  base.k_policy.k_min = detail::parse_count("k_min", kv["k_min"]);
  const auto kmf = parse_double(kv["k_max_fraction"]);
  if (!kmf || !(*kmf > 0.0 && *kmf < 1.0)) {
    throw detail::config_error("k_max_fraction", "expected a number in (0, 1)");
  }
  base.k_policy.k_max_fraction = *kmf;
  base.k_policy.points = detail::parse_count("k_points", kv["k_points"]);
  base.replications = detail::parse_count("replications", kv["replications"]);
  if (base.replications < 1) {
    throw detail::config_error("replications", "must be >= 1");
  }
  base.base_seed = detail::parse_count("base_seed", kv["base_seed"]);

  cfg.k_fractions = detail::parse_double_list("k_fractions", kv["k_fractions"]);
  for (double f : cfg.k_fractions) {
    if (!(f > 0.0 && f < 1.0)) {
      throw detail::config_error("k_fractions", "fractions must lie in (0, 1)");
    }
  }
  const auto& bs = kv["beta_schedule"];
  if (bs == "true") {
    cfg.beta_schedule = true;
  } else if (bs == "false") {
    cfg.beta_schedule = false;
  } else {
    throw detail::config_error("beta_schedule", "expected true or false");
  }
  cfg.grid_points = detail::parse_count("grid_points", kv["grid_points"]);
  if (cfg.grid_points < 2) {
    throw detail::config_error("grid_points", "must be >= 2");
  }
  cfg.workers = std::max<std::size_t>(1, detail::parse_count("workers", kv["workers"]));
  cfg.coverage_k = detail::parse_count("coverage_k", kv["coverage_k"]);

  const auto gammas = detail::parse_double_list("gamma_true", kv["gamma_true"]);
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(gammas[i] > 0.0)) {
      throw detail::config_error("gamma_true", "tail indices must be positive");
    }
    ExperimentSpec spec = base;
    spec.dgp.gamma = gammas[i];
    spec.group = static_cast<std::uint16_t>(i);
    if (cfg.kind == ExperimentConfig::Kind::Ranking) {
      try {
        true_candidate_index(spec);
      } catch (const Error&) {
        throw detail::config_error("candidates", "must include every gamma_true for a ranking experiment");
      }
    }
    cfg.specs.push_back(std::move(spec));
  }
  cfg.resolved = std::move(kv);
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
  }
  return build_experiment_config(parse_key_values(in));
}

}  // namespace tailrank
