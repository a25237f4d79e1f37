#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "tailrank/distributions.hpp"
#include "tailrank/error.hpp"
#include "tailrank/scoring.hpp"

namespace tailrank {

/// Top-k order statistics normalized by the (k+1)-th largest value.
struct TailView {
  std::size_t k = 0;
  double threshold = 0.0;
  std::vector<double> ratios;  // nonincreasing, all >= 1
};

/// A sample sorted once in descending order; views for every k share it.
class OrderStatistics {
 public:
  explicit OrderStatistics(std::span<const double> values) : desc_(values.begin(), values.end()) {
    if (desc_.empty()) {
      throw Error(ErrorCode::EmptySample, "no observations");
    }
    std::sort(desc_.begin(), desc_.end(), std::greater<>());
  }
  explicit OrderStatistics(const Sample& sample) : OrderStatistics(std::span<const double>(sample.values)) {}

  std::size_t n() const noexcept { return desc_.size(); }
  std::span<const double> descending() const noexcept { return desc_; }

  /// The (k+1)-th largest observation, Y_{n,n-k}.
  double threshold(std::size_t k) const {
    check_k(k);
    return desc_[k];
  }

  TailView view(std::size_t k) const {
    check_k(k);
    const double t = desc_[k];
    if (!(t > 0.0)) {
      throw Error(ErrorCode::InvalidThreshold, "threshold order statistic must be positive");
    }
    TailView v{k, t, std::vector<double>(k)};
    for (std::size_t i = 0; i < k; ++i) {
      v.ratios[i] = desc_[i] / t;
    }
    return v;
  }

 private:
  void check_k(std::size_t k) const {
    if (k == 0) {
      throw Error(ErrorCode::InsufficientData, "k must be at least 1");
    }
    if (k >= desc_.size()) {
      throw Error(ErrorCode::InsufficientData,
                  "k=" + std::to_string(k) + " needs more than " + std::to_string(desc_.size()) + " observations");
    }
  }

  std::vector<double> desc_;
};

inline TailView normalized_exceedances(const Sample& sample, std::size_t k) {
  return OrderStatistics(sample).view(k);
}

inline double mean_log_ratio(const TailView& view) {
  double acc = 0.0;
  for (double z : view.ratios) {
    acc += std::log(z);
  }
  return acc / static_cast<double>(view.k);
}

/// S_k(F_gamma): mean single-observation score over the view's ratios.
inline double empirical_tail_score(const TailView& view, const ScoreRule& rule, const ParetoCandidate& candidate) {
  if (view.k == 0 || view.ratios.size() != view.k) {
    throw Error(ErrorCode::InvalidView, "view ratios do not match k");
  }
  if (rule.is_energy()) {
    if (!(rule.beta < candidate.alpha())) {
      throw Error(ErrorCode::MomentDivergence, "energy score needs beta < 1/gamma");
    }
    if (view.ratios.back() < 1.0) {
      throw Error(ErrorCode::OutOfSupport, "ratios must be >= 1");
    }
    return energy_kernel(candidate.gamma(), rule.beta)->mean_score(view.ratios);
  }
  if (view.ratios.back() < 1.0) {
    throw Error(ErrorCode::OutOfSupport, "ratios must be >= 1");
  }
  // LogS is affine in log z, so the mean score is affine in the mean log ratio.
  const double g = candidate.gamma();
  return -std::log(g) - (1.0 / g + 1.0) * mean_log_ratio(view);
}

/// S_k(F_j) for several candidates on one view; the LogS mean log ratio is
/// computed once and shared.
inline std::vector<double> empirical_tail_scores(const TailView& view, const ScoreRule& rule,
                                                 std::span<const ParetoCandidate> candidates) {
  std::vector<double> out;
  out.reserve(candidates.size());
  if (rule.is_energy()) {
    for (const auto& c : candidates) {
      out.push_back(empirical_tail_score(view, rule, c));
    }
    return out;
  }
  if (view.k == 0 || view.ratios.size() != view.k) {
    throw Error(ErrorCode::InvalidView, "view ratios do not match k");
  }
  if (view.ratios.back() < 1.0) {
    throw Error(ErrorCode::OutOfSupport, "ratios must be >= 1");
  }
  const double mlr = mean_log_ratio(view);
  for (const auto& c : candidates) {
    const double g = c.gamma();
    out.push_back(-std::log(g) - (1.0 / g + 1.0) * mlr);
  }
  return out;
}

class KGrid {
 public:
  KGrid() = default;
  explicit KGrid(std::vector<std::size_t> values) : values_(std::move(values)) {
    if (values_.empty()) {
      throw Error(ErrorCode::EmptyRange, "k grid is empty");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (values_[i] < 2) {
        throw Error(ErrorCode::InvalidArgument, "k grid values must be >= 2");
      }
      if (i > 0 && values_[i] <= values_[i - 1]) {
        throw Error(ErrorCode::InvalidArgument, "k grid must be strictly increasing");
      }
    }
  }

  /// `points` evenly spaced values on [k_min, k_max], rounded to the nearest
  /// integer and deduplicated.
  static KGrid evenly_spaced(std::size_t k_min, std::size_t k_max, std::size_t points) {
    if (points == 0 || k_max < k_min) {
      throw Error(ErrorCode::EmptyRange, "empty k range");
    }
    std::vector<std::size_t> v;
    v.reserve(points);
    for (std::size_t i = 0; i < points; ++i) {
      const double x = points == 1 ? static_cast<double>(k_min)
                                   : static_cast<double>(k_min) + static_cast<double>(i) *
                                                                     static_cast<double>(k_max - k_min) /
                                                                     static_cast<double>(points - 1);
      const auto k = static_cast<std::size_t>(std::llround(x));
      if (v.empty() || k != v.back()) {
        v.push_back(k);
      }
    }
    return KGrid(std::move(v));
  }

  static KGrid all_integers(std::size_t k_min, std::size_t k_max) {
    if (k_max < k_min) {
      throw Error(ErrorCode::EmptyRange, "empty k range");
    }
    std::vector<std::size_t> v;
    for (std::size_t k = k_min; k <= k_max; ++k) {
      v.push_back(k);
    }
    return KGrid(std::move(v));
  }

  /// 100 evenly spaced values from 50 to floor(n/4).
  static KGrid simulation_default(std::size_t n) { return evenly_spaced(50, n / 4, 100); }

  /// Every integer from 10 to floor(n/4).
  static KGrid real_data_default(std::size_t n) { return all_integers(10, n / 4); }

  const std::vector<std::size_t>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool contains(std::size_t k) const { return std::binary_search(values_.begin(), values_.end(), k); }

  void validate_for(std::size_t n) const {
    if (values_.empty()) {
      throw Error(ErrorCode::EmptyRange, "k grid is empty");
    }
    if (values_.back() >= n) {
      throw Error(ErrorCode::InsufficientData,
                  "largest k=" + std::to_string(values_.back()) + " is not below n=" + std::to_string(n));
    }
  }

 private:
  std::vector<std::size_t> values_;
};

struct CurvePoint {
  std::size_t k = 0;
  double score = 0.0;
  std::optional<double> ci_half_width;
};

struct ScoreCurve {
  ParetoCandidate candidate{1.0};
  ScoreRule rule;
  std::vector<CurvePoint> points;
};

/// Two-sided standard normal critical value; 0.95 maps to the conventional 1.96.
inline double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "confidence level must lie in (0, 1)");
  }
  if (level == 0.95) {
    return 1.96;
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

/// Pointwise CI half-width for a LogS tail score, with the variance plug-in
/// evaluated at the candidate's own tail index: sigma = (1/gamma + 1) gamma.
inline double score_ci_half_width(const ParetoCandidate& candidate, std::size_t k, double level) {
  if (k == 0) {
    throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  }
  const double sigma = std::sqrt(var_logs(candidate.gamma(), candidate.gamma()));
  return normal_critical_value(level) * sigma / std::sqrt(static_cast<double>(k));
}

inline std::pair<double, double> score_ci(double score, const ParetoCandidate& candidate, std::size_t k,
                                          double level = 0.95) {
  const double h = score_ci_half_width(candidate, k, level);
  return {score - h, score + h};
}

/// CI half-width for any rule, when a variance formula is available: LogS
/// always, CRPS when its variance moments are finite at gamma_G = gamma.
inline std::optional<double> ci_half_width(const ScoreRule& rule, const ParetoCandidate& candidate, std::size_t k,
                                           double level = 0.95) {
  if (!rule.is_energy()) {
    return score_ci_half_width(candidate, k, level);
  }
  if (rule.beta != 1.0) {
    return std::nullopt;
  }
  try {
    const double sigma = std::sqrt(var_es1(candidate.gamma(), candidate.gamma()));
    if (!(sigma > 0.0)) {
      return std::nullopt;
    }
    return normal_critical_value(level) * sigma / std::sqrt(static_cast<double>(k));
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline std::vector<ScoreCurve> score_curve(const OrderStatistics& order, const KGrid& grid,
                                           std::span<const ParetoCandidate> candidates, const ScoreRule& rule,
                                           bool with_ci, double level = 0.95) {
  grid.validate_for(order.n());
  std::vector<ScoreCurve> curves;
  curves.reserve(candidates.size());
  for (const auto& c : candidates) {
    curves.push_back(ScoreCurve{c, rule, {}});
    curves.back().points.reserve(grid.size());
  }
  for (std::size_t k : grid.values()) {
    const TailView view = order.view(k);
    const auto scores = empirical_tail_scores(view, rule, candidates);
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      CurvePoint p{k, scores[j], std::nullopt};
      if (with_ci) {
        p.ci_half_width = ci_half_width(rule, candidates[j], k, level);
      }
      curves[j].points.push_back(p);
    }
  }
  return curves;
}

inline std::vector<ScoreCurve> score_curve(const Sample& sample, const KGrid& grid,
                                           std::span<const ParetoCandidate> candidates, const ScoreRule& rule,
                                           bool with_ci, double level = 0.95) {
  return score_curve(OrderStatistics(sample), grid, candidates, rule, with_ci, level);
}

struct StabilityPolicy {
  enum class Kind { LowerFraction, Explicit };

  Kind kind = Kind::LowerFraction;
  double fraction = 0.25;
  std::vector<std::size_t> explicit_range;

  static StabilityPolicy lower_fraction(double f) { return {Kind::LowerFraction, f, {}}; }
  static StabilityPolicy explicit_values(std::vector<std::size_t> ks) { return {Kind::Explicit, 0.0, std::move(ks)}; }
};

inline std::vector<std::size_t> select_stability_range(const KGrid& grid, const StabilityPolicy& policy) {
  std::vector<std::size_t> out;
  if (policy.kind == StabilityPolicy::Kind::LowerFraction) {
    if (!(policy.fraction > 0.0 && policy.fraction <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "stability fraction must lie in (0, 1]");
    }
    const auto count = static_cast<std::size_t>(std::ceil(policy.fraction * static_cast<double>(grid.size()) - 1e-9));
    out.assign(grid.values().begin(), grid.values().begin() + static_cast<std::ptrdiff_t>(std::min(count, grid.size())));
  } else {
    for (std::size_t k : policy.explicit_range) {
      if (!grid.contains(k)) {
        throw Error(ErrorCode::InvalidArgument, "stability value k=" + std::to_string(k) + " is not on the grid");
      }
    }
    out = policy.explicit_range;
  }
  if (out.empty()) {
    throw Error(ErrorCode::EmptyRange, "stability range is empty");
  }
  return out;
}

struct RankedCandidate {
  ParetoCandidate candidate;
  double mean_score;
};

struct RankingReport {
  std::vector<std::size_t> stability_range;
  std::vector<RankedCandidate> mean_scores;  // input order
  std::vector<RankedCandidate> order;        // best first
};

/// Orders candidates by their mean score over the stability range; exact ties
/// go to the smaller tail index.
inline RankingReport rank_candidates(std::span<const ScoreCurve> curves, std::span<const std::size_t> stability) {
  if (curves.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no curves to rank");
  }
  if (stability.empty()) {
    throw Error(ErrorCode::EmptyRange, "stability range is empty");
  }
  RankingReport report;
  report.stability_range.assign(stability.begin(), stability.end());
  for (const auto& curve : curves) {
    double acc = 0.0;
    for (std::size_t k : stability) {
      auto it = std::find_if(curve.points.begin(), curve.points.end(), [k](const CurvePoint& p) { return p.k == k; });
      if (it == curve.points.end()) {
        throw Error(ErrorCode::MissingPoint, "curve for gamma=" + std::to_string(curve.candidate.gamma()) +
                                                 " has no point at k=" + std::to_string(k));
      }
      acc += it->score;
    }
    report.mean_scores.push_back({curve.candidate, acc / static_cast<double>(stability.size())});
  }
  report.order = report.mean_scores;
  std::stable_sort(report.order.begin(), report.order.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.mean_score != b.mean_score) {
      return a.mean_score > b.mean_score;
    }
    return a.candidate.gamma() < b.candidate.gamma();
  });
  return report;
}

}  // namespace tailrank
