#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "tailrank/error.hpp"
#include "tailrank/scoring.hpp"
#include "tailrank/tailscore.hpp"

namespace tailrank {

/// Finite candidate set for the tail index, within [lower, upper].
class GammaGrid {
 public:
  GammaGrid(std::vector<double> values, double lower, double upper)
      : values_(std::move(values)), lower_(lower), upper_(upper) {
    if (values_.empty()) {
      throw Error(ErrorCode::EmptyRange, "gamma grid is empty");
    }
    if (!(lower > 0.0) || values_.front() < lower || values_.back() > upper) {
      throw Error(ErrorCode::InvalidArgument, "gamma grid must lie inside (0, upper] with lower > 0");
    }
    for (std::size_t i = 1; i < values_.size(); ++i) {
      if (!(values_[i] > values_[i - 1])) {
        throw Error(ErrorCode::InvalidArgument, "gamma grid must be strictly increasing");
      }
    }
  }

  static GammaGrid equidistant(double lower, double upper, std::size_t points) {
    if (points < 2 || !(upper > lower)) {
      if (points == 1 && upper == lower) {
        return GammaGrid({lower}, lower, upper);
      }
      throw Error(ErrorCode::InvalidArgument, "need at least two points on a nonempty interval");
    }
    std::vector<double> v(points);
    const double step = (upper - lower) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
      v[i] = lower + static_cast<double>(i) * step;
    }
    v.back() = upper;
    return GammaGrid(std::move(v), lower, upper);
  }

  /// 150 points on [0.8 gamma_ref, 2 gamma_ref].
  static GammaGrid around(double gamma_ref, std::size_t points = 150) {
    detail::require_positive(gamma_ref, "gamma_ref");
    return equidistant(0.8 * gamma_ref, 2.0 * gamma_ref, points);
  }

  const std::vector<double>& values() const noexcept { return values_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

 private:
  std::vector<double> values_;
  double lower_;
  double upper_;
};

struct EstimateTrace {
  enum class Method { Hill, ScoreOpt };

  std::size_t k = 0;
  double gamma_hat = 0.0;
  double objective = 0.0;
  Method method = Method::Hill;
  ScoreRule rule;  // LogS for Hill
  bool at_boundary = false;
};

/// Hill estimator: mean log of the normalized exceedances.
inline double hill(const TailView& view) {
  if (view.k == 0 || view.ratios.size() != view.k) {
    throw Error(ErrorCode::InvalidView, "view ratios do not match k");
  }
  for (double z : view.ratios) {
    if (!(z >= 1.0)) {
      throw Error(ErrorCode::InvalidView, "normalized exceedances must be >= 1");
    }
  }
  return mean_log_ratio(view);
}

inline EstimateTrace hill_trace(const TailView& view) {
  const double g = hill(view);
  EstimateTrace t;
  t.k = view.k;
  t.gamma_hat = g;
  t.method = EstimateTrace::Method::Hill;
  t.rule = ScoreRule::logs();
  t.objective = g > 0.0 ? -std::log(g) - (1.0 / g + 1.0) * g : std::numeric_limits<double>::quiet_NaN();
  return t;
}

/// d/dgamma of the empirical LogS objective; vanishes at the Hill estimate.
inline double logs_objective_stationarity(const TailView& view, double gamma) {
  detail::require_positive(gamma, "gamma");
  return -1.0 / gamma + mean_log_ratio(view) / (gamma * gamma);
}

/// Exhaustive argmax of the empirical tail score over the grid; exact ties go
/// to the smaller gamma.
inline EstimateTrace score_opt_estimate(const TailView& view, const ScoreRule& rule, const GammaGrid& grid) {
  if (rule.is_energy() && !(rule.beta < 1.0 / grid.upper())) {
    throw Error(ErrorCode::InvalidBeta, "energy score exponent must satisfy beta < 1/gamma_upper (beta=" +
                                            std::to_string(rule.beta) + ", gamma_upper=" +
                                            std::to_string(grid.upper()) + ")");
  }
  if (view.k == 0 || view.ratios.size() != view.k) {
    throw Error(ErrorCode::InvalidView, "view ratios do not match k");
  }
  const auto& gammas = grid.values();
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  if (rule.is_energy()) {
    for (std::size_t i = 0; i < gammas.size(); ++i) {
      const double value = energy_kernel(gammas[i], rule.beta)->mean_score(view.ratios);
      if (value > best_value) {
        best_value = value;
        best = i;
      }
    }
  } else {
    const double mlr = mean_log_ratio(view);
    for (std::size_t i = 0; i < gammas.size(); ++i) {
      const double g = gammas[i];
      const double value = -std::log(g) - (1.0 / g + 1.0) * mlr;
      if (value > best_value) {
        best_value = value;
        best = i;
      }
    }
  }
  EstimateTrace t;
  t.k = view.k;
  t.gamma_hat = gammas[best];
  t.objective = best_value;
  t.method = EstimateTrace::Method::ScoreOpt;
  t.rule = rule;
  t.at_boundary = best == 0 || best + 1 == gammas.size();
  return t;
}

/// Kernels for every grid point, built once and reused across views.
class EnergyGridObjective {
 public:
  EnergyGridObjective(double beta, const GammaGrid& grid) : grid_(grid), beta_(beta) {
    if (!(beta < 1.0 / grid.upper())) {
      throw Error(ErrorCode::InvalidBeta, "energy score exponent must satisfy beta < 1/gamma_upper");
    }
    for (double g : grid.values()) {
      kernels_.push_back(energy_kernel(g, beta));
    }
  }

  EstimateTrace estimate(const TailView& view) const {
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kernels_.size(); ++i) {
      const double value = kernels_[i]->mean_score(view.ratios);
      if (value > best_value) {
        best_value = value;
        best = i;
      }
    }
    EstimateTrace t;
    t.k = view.k;
    t.gamma_hat = grid_.values()[best];
    t.objective = best_value;
    t.method = EstimateTrace::Method::ScoreOpt;
    t.rule = ScoreRule::energy(beta_);
    t.at_boundary = best == 0 || best + 1 == kernels_.size();
    return t;
  }

 private:
  GammaGrid grid_;
  double beta_;
  std::vector<std::shared_ptr<const EnergyKernel>> kernels_;
};

/// (beta1, beta2, beta3) = (1/(2 gamma) - 0.001, 0.8 beta1, 0.7 beta1).
inline std::array<double, 3> beta_schedule(double gamma_true) {
  if (!(gamma_true > 0.0)) {
    throw Error(ErrorCode::InvalidGamma, "gamma must be positive");
  }
  const double b1 = 1.0 / (2.0 * gamma_true) - 0.001;
  if (!(b1 > 0.0)) {
    throw Error(ErrorCode::InvalidGamma, "beta schedule is nonpositive for gamma=" + std::to_string(gamma_true));
  }
  return {b1, 0.8 * b1, 0.7 * b1};
}

}  // namespace tailrank
