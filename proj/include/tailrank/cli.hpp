#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tailrank/distributions.hpp"
#include "tailrank/error.hpp"
#include "tailrank/estimators.hpp"
#include "tailrank/io.hpp"
#include "tailrank/montecarlo.hpp"
#include "tailrank/tailscore.hpp"

#ifndef TAILRANK_VERSION
#define TAILRANK_VERSION "0.0.0"
#endif

namespace tailrank::cli {

struct PendingFile {
  std::string name;
  std::string content;
};

struct DataOptions {
  std::string input;
  std::string value_column = "value";
  std::string filter;
  bool drop_missing = false;
};

struct KOptions {
  std::size_t k_min = 10;
  std::size_t k_max = 0;  // 0: floor(n/4)
  std::size_t k_points = 0;
  bool all_integers = false;
  std::vector<std::size_t> k_list;

  KGrid grid(std::size_t n) const {
    if (!k_list.empty()) {
      std::vector<std::size_t> ks = k_list;
      std::sort(ks.begin(), ks.end());
      ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
      return KGrid(std::move(ks));
    }
    const std::size_t hi = k_max == 0 ? n / 4 : k_max;
    if (k_points > 0 && !all_integers) {
      return KGrid::evenly_spaced(k_min, hi, k_points);
    }
    return KGrid::all_integers(k_min, hi);
  }
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline DatasetSpec dataset_spec(const DataOptions& o) {
  DatasetSpec spec{o.input, o.value_column, std::nullopt, o.drop_missing};
  if (!o.filter.empty()) {
    const auto eq = o.filter.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::InvalidArgument, "--filter expects COL=VAL");
    }
    spec.filter = std::make_pair(o.filter.substr(0, eq), o.filter.substr(eq + 1));
  }
  return spec;
}

inline nlohmann::ordered_json dataset_json(const DataOptions& o, const IngestReport& r) {
  return {{"input", o.input},
          {"value_column", o.value_column},
          {"filter", o.filter},
          {"drop_missing", o.drop_missing},
          {"rows_read", r.rows_read},
          {"rows_dropped_missing", r.rows_dropped_missing},
          {"rows_filtered_out", r.rows_filtered_out},
          {"n", r.sample.n()}};
}

/// Writes every pending file plus manifest.json; nothing is written unless all
/// results were computed.
inline void commit(const std::string& out_dir, const std::string& command, const std::vector<std::string>& argv,
                   nlohmann::ordered_json config, std::optional<std::uint64_t> seed,
                   const std::vector<PendingFile>& files) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::Io, "cannot create output directory '" + out_dir + "': " + ec.message());
  }
  nlohmann::ordered_json manifest;
  manifest["command"] = command;
  manifest["argv"] = argv;
  manifest["config"] = std::move(config);
  manifest["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
  manifest["timestamp"] = utc_timestamp();
  manifest["version"] = TAILRANK_VERSION;
  auto outputs = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    outputs.push_back((fs::path(out_dir) / f.name).string());
  }
  outputs.push_back((fs::path(out_dir) / "manifest.json").string());
  manifest["outputs"] = outputs;

  auto write = [&](const std::string& name, const std::string& content) {
    const fs::path path = fs::path(out_dir) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) {
      throw Error(ErrorCode::Io, "failed to write '" + path.string() + "'");
    }
  };
  for (const auto& f : files) {
    write(f.name, f.content);
  }
  write("manifest.json", manifest.dump(2) + "\n");
}

inline std::vector<ParetoCandidate> make_candidates(const std::vector<double>& gammas) {
  std::vector<ParetoCandidate> out;
  for (double g : gammas) {
    out.emplace_back(g);
  }
  return out;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rank heavy-tailed models and estimate tail indices with scores on normalized upper order statistics",
               "tailrank"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TAILRANK_VERSION);

  std::string out_dir = ".";
  std::string format = "csv";
  DataOptions data;
  KOptions kopt;
  std::uint64_t seed = 0;

  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--input", data.input, "Comma-separated input file with a header row")->required();
    sub->add_option("--value-column", data.value_column, "Column holding the positive observations")
        ->capture_default_str();
    sub->add_option("--filter", data.filter, "Keep rows where COL equals VAL (COL=VAL)");
    sub->add_flag("--drop-missing", data.drop_missing, "Drop rows with empty/NA values in the used columns");
  };
  auto add_k = [&](CLI::App* sub) {
    sub->add_option("--k-min", kopt.k_min, "Smallest k")->capture_default_str();
    sub->add_option("--k-max", kopt.k_max, "Largest k (default floor(n/4))");
    auto* points = sub->add_option("--k-points", kopt.k_points, "Evenly spaced grid with this many points");
    sub->add_flag("--k-all-integers", kopt.all_integers, "Every integer k in [k-min, k-max] (default)")
        ->excludes(points);
  };

  // score
  auto* score = app.add_subcommand("score", "Score curves, ranking and confidence intervals for Pareto candidates");
  std::vector<double> score_candidates{0.3, 0.5, 0.8, 1.0, 1.3};
  std::string score_rule = "logs";
  double stability_fraction = 0.25;
  double ci_candidate = 1.0;
  double level = 0.95;
  add_data(score);
  add_k(score);
  score->add_option("--candidates", score_candidates, "Candidate tail indices")->delimiter(',')->capture_default_str();
  score->add_option("--rule", score_rule, "logs or es:<beta>")->capture_default_str();
  score->add_option("--stability-fraction", stability_fraction, "Lower fraction of the k grid used for ranking")
      ->capture_default_str();
  score->add_option("--ci-candidate", ci_candidate, "Candidate whose pointwise CI is reported")->capture_default_str();
  score->add_option("--level", level, "Confidence level")->capture_default_str();
  score->add_option("--seed", seed, "Recorded in the manifest");
  score->add_option("--out-dir", out_dir)->capture_default_str();
  score->add_option("--format", format, "Score-curve table format")->check(CLI::IsMember({"csv", "json"}));

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Hill and score-optimization tail-index estimates over k");
  std::string method = "both";
  std::string est_rule = "logs";
  double grid_lo = 0.0;
  double grid_hi = 0.0;
  std::size_t grid_points = 150;
  add_data(estimate);
  add_k(estimate);
  estimate->add_option("--k-list", kopt.k_list, "Explicit k values")->delimiter(',');
  estimate->add_option("--method", method, "hill, score or both")
      ->check(CLI::IsMember({"hill", "score", "both"}))
      ->capture_default_str();
  estimate->add_option("--rule", est_rule, "Rule for the score estimator: logs or es:<beta>")->capture_default_str();
  estimate->add_option("--grid-lo", grid_lo, "Lower end of the gamma grid (default 0.8 x pilot Hill)");
  estimate->add_option("--grid-hi", grid_hi, "Upper end of the gamma grid (default 2 x pilot Hill)");
  estimate->add_option("--grid-points", grid_points, "Number of gamma grid points")->capture_default_str();
  estimate->add_option("--seed", seed, "Recorded in the manifest");
  estimate->add_option("--out-dir", out_dir)->capture_default_str();
  estimate->add_option("--format", format, "Estimate table format")->check(CLI::IsMember({"csv", "json"}));

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run a Monte Carlo experiment from a key-value config file");
  std::string config_path;
  std::size_t workers = 0;
  experiment->add_option("--config", config_path, "Experiment config file")->required();
  experiment->add_option("--workers", workers, "Override the worker count (never changes results)");
  experiment->add_option("--out-dir", out_dir)->capture_default_str();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic sample to sample.csv");
  std::string sim_dgp = "frechet";
  double sim_gamma = 1.0;
  double sim_burr_t = 1.0;
  std::size_t sim_n = 1000;
  std::string sim_scaling = "none";
  simulate->add_option("--dgp", sim_dgp)->check(CLI::IsMember({"frechet", "burr", "pareto"}))->capture_default_str();
  simulate->add_option("--gamma", sim_gamma, "True tail index")->capture_default_str();
  simulate->add_option("--burr-t", sim_burr_t)->capture_default_str();
  simulate->add_option("--n", sim_n)->capture_default_str();
  simulate->add_option("--scaling", sim_scaling)
      ->check(CLI::IsMember({"none", "linear", "sinusoidal"}))
      ->capture_default_str();
  simulate->add_option("--seed", seed)->capture_default_str();
  simulate->add_option("--out-dir", out_dir)->capture_default_str();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    std::vector<PendingFile> files;
    nlohmann::ordered_json config;
    std::optional<std::uint64_t> manifest_seed;
    std::string command;

    if (*score) {
      command = "score";
      const ScoreRule rule = parse_rule(score_rule);
      const IngestReport rep = ingest(dataset_spec(data));
      const OrderStatistics order(rep.sample);
      const KGrid grid = kopt.grid(order.n());
      const auto candidates = make_candidates(score_candidates);
      auto curves = score_curve(order, grid, candidates, rule, false);
      const ParetoCandidate ci_ref(ci_candidate);
      bool found_ref = false;
      for (auto& c : curves) {
        if (c.candidate == ci_ref) {
          found_ref = true;
          for (auto& p : c.points) {
            p.ci_half_width = ci_half_width(rule, c.candidate, p.k, level);
          }
        }
      }
      if (!found_ref) {
        throw Error(ErrorCode::InvalidArgument, "--ci-candidate must be one of --candidates");
      }
      const auto stability = select_stability_range(grid, StabilityPolicy::lower_fraction(stability_fraction));
      const RankingReport ranking = rank_candidates(curves, stability);

      if (format == "json") {
        files.push_back({"score_curves.json", score_curves_json(curves).dump(2) + "\n"});
      } else {
        std::ostringstream os;
        write_score_curves_csv(os, curves);
        files.push_back({"score_curves.csv", os.str()});
      }
      files.push_back({"ranking.json", ranking_json(ranking, rule).dump(2) + "\n"});
      config = {{"dataset", dataset_json(data, rep)},
                {"rule", rule_name(rule)},
                {"candidates", score_candidates},
                {"k_grid", grid.values()},
                {"stability_fraction", stability_fraction},
                {"ci_candidate", ci_candidate},
                {"level", level},
                {"format", format}};
      manifest_seed = seed;
      out << "n=" << rep.sample.n() << " top candidate gamma=" << format_double(ranking.order.front().candidate.gamma())
          << "\n";
    } else if (*estimate) {
      command = "estimate";
      const ScoreRule rule = parse_rule(est_rule);
      const IngestReport rep = ingest(dataset_spec(data));
      const OrderStatistics order(rep.sample);
      const KGrid grid = kopt.grid(order.n());
      grid.validate_for(order.n());

      std::vector<double> hills;
      for (std::size_t k : grid.values()) {
        hills.push_back(hill(order.view(k)));
      }
      double pilot = 0.0;
      {
        std::vector<double> sorted = hills;
        std::sort(sorted.begin(), sorted.end());
        pilot = sorted[sorted.size() / 2];
      }
      const double lo = grid_lo > 0.0 ? grid_lo : 0.8 * pilot;
      const double hi = grid_hi > 0.0 ? grid_hi : 2.0 * pilot;
      const GammaGrid gamma_grid = GammaGrid::equidistant(lo, hi, grid_points);
      if (method != "hill" && rule.is_energy() && !(rule.beta < 1.0 / gamma_grid.upper())) {
        throw Error(ErrorCode::InvalidBeta, "beta must be below 1/grid-hi = " + format_double(1.0 / gamma_grid.upper()));
      }

      std::vector<EstimateTrace> traces;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const TailView view = order.view(grid.values()[i]);
        if (method != "score") {
          traces.push_back(hill_trace(view));
        }
        if (method != "hill") {
          traces.push_back(score_opt_estimate(view, rule, gamma_grid));
        }
      }
      if (format == "json") {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& t : traces) {
          arr.push_back({{"method", method_name(t)},
                         {"beta", t.rule.is_energy() ? nlohmann::ordered_json(t.rule.beta) : nlohmann::ordered_json()},
                         {"k", t.k},
                         {"gamma_hat", t.gamma_hat},
                         {"objective", std::isnan(t.objective) ? nlohmann::ordered_json() : nlohmann::ordered_json(t.objective)},
                         {"boundary_flag", t.at_boundary}});
        }
        files.push_back({"estimates.json", arr.dump(2) + "\n"});
      } else {
        std::ostringstream os;
        write_estimates_csv(os, traces);
        files.push_back({"estimates.csv", os.str()});
      }
      config = {{"dataset", dataset_json(data, rep)},
                {"method", method},
                {"rule", rule_name(rule)},
                {"k_grid", grid.values()},
                {"pilot_hill", pilot},
                {"gamma_grid", {{"lower", gamma_grid.lower()}, {"upper", gamma_grid.upper()}, {"points", grid_points}}},
                {"gamma_grid_from_pilot", grid_lo <= 0.0 || grid_hi <= 0.0},
                {"format", format}};
      manifest_seed = seed;
      out << "n=" << rep.sample.n() << " rows=" << traces.size() << "\n";
    } else if (*experiment) {
      command = "experiment";
      ExperimentConfig cfg = load_experiment_config(config_path);
      const std::size_t w = workers > 0 ? workers : cfg.workers;
      std::ostringstream os;
      std::string name;
      if (cfg.kind == ExperimentConfig::Kind::Ranking) {
        name = "proportions.csv";
        os << "gamma_true,n,k,k_over_n,proportion\n";
        for (const auto& spec : cfg.specs) {
          const auto curves = run_ranking_experiment(spec, w);
          std::ostringstream part;
          write_proportions_csv(part, spec.dgp.gamma, curves);
          const std::string text = part.str();
          os << text.substr(text.find('\n') + 1);
        }
      } else if (cfg.kind == ExperimentConfig::Kind::Estimator) {
        name = "bias_variance.csv";
        std::vector<BiasVarianceCell> all;
        for (const auto& spec : cfg.specs) {
          auto cells = run_estimator_experiment(spec, cfg.k_fractions, cfg.beta_schedule, w, cfg.grid_points);
          all.insert(all.end(), cells.begin(), cells.end());
        }
        write_bias_variance_csv(os, all);
      } else {
        name = "coverage.csv";
        os << "gamma_true,n,k,replications,coverage\n";
        for (const auto& spec : cfg.specs) {
          const std::size_t n = spec.n_values.front();
          const double cov =
              run_coverage_check(spec.dgp.gamma, n, cfg.coverage_k, spec.replications, spec.base_seed, w);
          os << format_double(spec.dgp.gamma) << ',' << n << ',' << cfg.coverage_k << ',' << spec.replications << ','
             << format_double(cov) << '\n';
        }
      }
      files.push_back({name, os.str()});
      nlohmann::ordered_json resolved(cfg.resolved);
      config = {{"config_file", config_path}, {"resolved", resolved}, {"workers", w}};
      manifest_seed = cfg.specs.front().base_seed;
      out << "wrote " << name << "\n";
    } else if (*simulate) {
      command = "simulate";
      DgpSpec dgp;
      dgp.kind = sim_dgp == "frechet" ? DgpSpec::Kind::Frechet
                                      : (sim_dgp == "burr" ? DgpSpec::Kind::Burr : DgpSpec::Kind::Pareto);
      dgp.gamma = sim_gamma;
      dgp.burr_t = sim_burr_t;
      const ScalingKind scaling = sim_scaling == "none"     ? ScalingKind::None
                                  : sim_scaling == "linear" ? ScalingKind::Linear
                                                            : ScalingKind::Sinusoidal;
      const Sample s = apply_scaling(dgp.draw(sim_n, seed, 0), scaling);
      std::ostringstream os;
      os << "value\n";
      for (double v : s.values) {
        os << format_double(v) << '\n';
      }
      files.push_back({"sample.csv", os.str()});
      config = {{"dgp", sim_dgp}, {"gamma", sim_gamma}, {"burr_t", sim_burr_t},
                {"n", sim_n},     {"scaling", sim_scaling}, {"label", s.dgp_label}};
      manifest_seed = seed;
      out << "wrote " << sim_n << " draws\n";
    }
    commit(out_dir, command, args, std::move(config), manifest_seed, files);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace tailrank::cli
