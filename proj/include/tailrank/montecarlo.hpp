#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "tailrank/distributions.hpp"
#include "tailrank/error.hpp"
#include "tailrank/estimators.hpp"
#include "tailrank/rng.hpp"
#include "tailrank/scoring.hpp"
#include "tailrank/tailscore.hpp"

namespace tailrank {

struct DgpSpec {
  enum class Kind { Frechet, Burr, Pareto };

  Kind kind = Kind::Frechet;
  double gamma = 1.0;
  double burr_t = 1.0;

  std::string label() const {
    switch (kind) {
      case Kind::Frechet: return "frechet";
      case Kind::Burr: return "burr";
      case Kind::Pareto: return "pareto";
    }
    return "unknown";
  }

  Sample draw(std::size_t n, std::uint64_t seed, std::uint64_t stream) const {
    switch (kind) {
      case Kind::Frechet: return sample_frechet(FrechetLaw::from_tail_index(gamma), n, seed, stream);
      case Kind::Burr: return sample_burr(BurrLaw(1.0 / gamma, burr_t), n, seed, stream);
      case Kind::Pareto: return sample_pareto(ParetoCandidate(gamma), n, seed, stream);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown data-generating process");
  }
};

/// Recipe that turns a sample size into a k grid.
struct KPolicy {
  enum class Kind { Evenly, AllIntegers };

  Kind kind = Kind::Evenly;
  std::size_t k_min = 50;
  double k_max_fraction = 0.25;
  std::size_t points = 100;

  KGrid grid(std::size_t n) const {
    const auto k_max = static_cast<std::size_t>(std::floor(k_max_fraction * static_cast<double>(n)));
    return kind == Kind::Evenly ? KGrid::evenly_spaced(k_min, k_max, points) : KGrid::all_integers(k_min, k_max);
  }
};

struct ExperimentSpec {
  DgpSpec dgp;
  ScalingKind scaling = ScalingKind::None;
  std::vector<std::size_t> n_values{1000, 10000, 100000};
  std::vector<ParetoCandidate> candidates{ParetoCandidate(0.8), ParetoCandidate(1.0), ParetoCandidate(1.2),
                                          ParetoCandidate(1.5)};
  ScoreRule rule = ScoreRule::logs();
  KPolicy k_policy;
  std::size_t replications = 100;
  std::uint64_t base_seed = 0;
  // Distinguishes specs that share a base seed inside one batch.
  std::uint16_t group = 0;

  void validate() const {
    if (replications < 1) {
      throw Error(ErrorCode::Config, "replications must be >= 1");
    }
    if (candidates.empty()) {
      throw Error(ErrorCode::Config, "candidates must be nonempty");
    }
    if (n_values.empty()) {
      throw Error(ErrorCode::Config, "n_values must be nonempty");
    }
    detail::require_positive(dgp.gamma, "gamma_true");
  }

  std::uint64_t stream_for(std::size_t n_index, std::size_t replication) const {
    return stream_id(group, n_index, replication);
  }

  Sample draw(std::size_t n_index, std::size_t replication) const {
    Sample s = dgp.draw(n_values.at(n_index), base_seed, stream_for(n_index, replication));
    return apply_scaling(s, scaling);
  }
};

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
/// handled exactly once and results are written by index, so the output never
/// depends on the worker count.
template <typename Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) {
          body(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) {
    t.join();
  }
  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

struct ProportionPoint {
  std::size_t k = 0;
  double k_over_n = 0.0;
  double proportion = 0.0;
};

struct ProportionCurve {
  std::size_t n = 0;
  std::vector<ProportionPoint> points;
};

/// Index of the best-scoring candidate; exact ties go to the smaller gamma.
inline std::size_t best_candidate(std::span<const double> scores, std::span<const ParetoCandidate> candidates) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[best] ||
        (scores[j] == scores[best] && candidates[j].gamma() < candidates[best].gamma())) {
      best = j;
    }
  }
  return best;
}

inline std::size_t true_candidate_index(const ExperimentSpec& spec) {
  for (std::size_t j = 0; j < spec.candidates.size(); ++j) {
    if (std::abs(spec.candidates[j].gamma() - spec.dgp.gamma) <= 1e-12 * spec.dgp.gamma) {
      return j;
    }
  }
  throw Error(ErrorCode::Config, "candidates must include the true tail index");
}

/// Fraction of replications whose empirical tail score is maximized at the
/// candidate equal to the true tail index, per sample size and grid k.
inline std::vector<ProportionCurve> run_ranking_experiment(const ExperimentSpec& spec, std::size_t workers = 1) {
  spec.validate();
  const std::size_t truth = true_candidate_index(spec);
  std::vector<ProportionCurve> out;
  for (std::size_t ni = 0; ni < spec.n_values.size(); ++ni) {
    const std::size_t n = spec.n_values[ni];
    const KGrid grid = spec.k_policy.grid(n);
    grid.validate_for(n);
    const auto& ks = grid.values();
    std::vector<std::vector<char>> hits(spec.replications, std::vector<char>(ks.size(), 0));
    parallel_for(spec.replications, workers, [&](std::size_t r) {
      const OrderStatistics order(spec.draw(ni, r));
      for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        const auto scores = empirical_tail_scores(order.view(ks[ki]), spec.rule, spec.candidates);
        hits[r][ki] = best_candidate(scores, spec.candidates) == truth ? 1 : 0;
      }
    });
    ProportionCurve curve{n, {}};
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      std::size_t count = 0;
      for (std::size_t r = 0; r < spec.replications; ++r) {
        count += static_cast<std::size_t>(hits[r][ki]);
      }
      curve.points.push_back({ks[ki], static_cast<double>(ks[ki]) / static_cast<double>(n),
                              static_cast<double>(count) / static_cast<double>(spec.replications)});
    }
    out.push_back(std::move(curve));
  }
  return out;
}

struct BiasVarianceCell {
  std::string method;
  std::optional<double> beta;
  double gamma_true = 0.0;
  std::size_t n = 0;
  double k_fraction = 0.0;
  std::size_t k = 0;
  double mean = 0.0;
  double bias = 0.0;
  std::optional<double> variance;  // absent when only one replication
};

struct Summary {
  double mean = 0.0;
  std::optional<double> variance;  // (m-1) denominator; absent when m = 1
};

/// Mean and sample variance, accumulated about the first value so that a
/// constant column gives exactly its value and zero variance.
inline Summary summarize(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "nothing to summarize");
  }
  const auto m = static_cast<double>(values.size());
  const double shift = values.front();
  double sum = 0.0;
  for (double v : values) {
    sum += v - shift;
  }
  const double centered_mean = sum / m;
  Summary out;
  out.mean = shift + centered_mean;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) {
      const double d = (v - shift) - centered_mean;
      ss += d * d;
    }
    out.variance = ss / (m - 1.0);
  }
  return out;
}

struct EstimatorMethod {
  std::string label;
  ScoreRule rule;
  bool hill = false;
};

inline std::vector<EstimatorMethod> estimator_methods(const ExperimentSpec& spec, bool beta_schedule_flag) {
  std::vector<EstimatorMethod> methods{{"hill", ScoreRule::logs(), true}};
  if (beta_schedule_flag) {
    const auto betas = beta_schedule(spec.dgp.gamma);
    for (std::size_t i = 0; i < betas.size(); ++i) {
      methods.push_back({"beta" + std::to_string(i + 1), ScoreRule::energy(betas[i]), false});
    }
  } else if (spec.rule.is_energy()) {
    methods.push_back({"es", spec.rule, false});
  } else {
    methods.push_back({"logs", spec.rule, false});
  }
  return methods;
}

/// Bias (mean minus truth) and (m-1)-denominator variance of each estimator
/// at k = floor(fraction * n), over the spec's replications.
inline std::vector<BiasVarianceCell> run_estimator_experiment(const ExperimentSpec& spec,
                                                              const std::vector<double>& k_fractions,
                                                              bool beta_schedule_flag, std::size_t workers = 1,
                                                              std::size_t grid_points = 150) {
  spec.validate();
  const auto methods = estimator_methods(spec, beta_schedule_flag);
  const GammaGrid grid = GammaGrid::around(spec.dgp.gamma, grid_points);
  std::vector<std::optional<EnergyGridObjective>> objectives;
  for (const auto& m : methods) {
    if (!m.hill && m.rule.is_energy()) {
      objectives.emplace_back(EnergyGridObjective(m.rule.beta, grid));
    } else {
      objectives.emplace_back(std::nullopt);
    }
  }
  std::vector<BiasVarianceCell> cells;
  for (std::size_t ni = 0; ni < spec.n_values.size(); ++ni) {
    const std::size_t n = spec.n_values[ni];
    std::vector<std::size_t> ks;
    for (double f : k_fractions) {
      if (!(f > 0.0 && f < 1.0)) {
        throw Error(ErrorCode::Config, "k fractions must lie in (0, 1)");
      }
      const auto k = static_cast<std::size_t>(std::floor(f * static_cast<double>(n)));
      if (k < 2 || k >= n) {
        throw Error(ErrorCode::Config, "k = floor(fraction * n) must satisfy 2 <= k < n");
      }
      ks.push_back(k);
    }
    // estimates[r][fraction][method]
    std::vector<std::vector<std::vector<double>>> estimates(
        spec.replications, std::vector<std::vector<double>>(ks.size(), std::vector<double>(methods.size())));
    parallel_for(spec.replications, workers, [&](std::size_t r) {
      const OrderStatistics order(spec.draw(ni, r));
      for (std::size_t fi = 0; fi < ks.size(); ++fi) {
        const TailView view = order.view(ks[fi]);
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
          if (methods[mi].hill) {
            estimates[r][fi][mi] = hill(view);
          } else if (objectives[mi]) {
            estimates[r][fi][mi] = objectives[mi]->estimate(view).gamma_hat;
          } else {
            estimates[r][fi][mi] = score_opt_estimate(view, methods[mi].rule, grid).gamma_hat;
          }
        }
      }
    });
    std::vector<double> column(spec.replications);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      for (std::size_t fi = 0; fi < ks.size(); ++fi) {
        for (std::size_t r = 0; r < spec.replications; ++r) {
          column[r] = estimates[r][fi][mi];
        }
        const Summary sum = summarize(column);
        BiasVarianceCell cell;
        cell.method = methods[mi].label;
        if (methods[mi].rule.is_energy()) {
          cell.beta = methods[mi].rule.beta;
        }
        cell.gamma_true = spec.dgp.gamma;
        cell.n = n;
        cell.k_fraction = k_fractions[fi];
        cell.k = ks[fi];
        cell.mean = sum.mean;
        cell.bias = sum.mean - spec.dgp.gamma;
        cell.variance = sum.variance;
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

/// Fraction of exact-Pareto replications whose 95% LogS score interval at
/// candidate gamma covers E[LogS(F_gamma, Y)] with Y ~ Pareto(gamma).
inline double run_coverage_check(double gamma, std::size_t n, std::size_t k, std::size_t replications,
                                 std::uint64_t base_seed, std::size_t workers = 1, double level = 0.95) {
  if (replications < 1) {
    throw Error(ErrorCode::Config, "replications must be >= 1");
  }
  const ParetoCandidate candidate(gamma);
  const double target = expected_logs(gamma, gamma);
  const double half = score_ci_half_width(candidate, k, level);
  std::vector<char> covered(replications, 0);
  parallel_for(replications, workers, [&](std::size_t r) {
    const Sample s = sample_pareto(candidate, n, base_seed, stream_id(0, 0, r));
    const TailView view = OrderStatistics(s).view(k);
    const double score = empirical_tail_score(view, ScoreRule::logs(), candidate);
    covered[r] = std::abs(score - target) <= half ? 1 : 0;
  });
  std::size_t hits = 0;
  for (char c : covered) {
    hits += static_cast<std::size_t>(c);
  }
  return static_cast<double>(hits) / static_cast<double>(replications);
}

}  // namespace tailrank
