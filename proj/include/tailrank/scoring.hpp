#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tailrank/distributions.hpp"
#include "tailrank/error.hpp"

namespace tailrank {

/// Scoring rule in positive orientation (larger is better).
struct ScoreRule {
  enum class Kind { LogS, Energy };

  Kind kind = Kind::LogS;
  double beta = 0.0;  // only meaningful for Energy

  static ScoreRule logs() { return {Kind::LogS, 0.0}; }
  static ScoreRule energy(double beta) {
    if (!(beta > 0.0 && beta < 2.0)) {
      throw Error(ErrorCode::InvalidBeta, "energy score exponent must lie in (0, 2)");
    }
    return {Kind::Energy, beta};
  }
  static ScoreRule crps() { return energy(1.0); }

  bool is_energy() const noexcept { return kind == Kind::Energy; }

  friend bool operator==(const ScoreRule&, const ScoreRule&) = default;
};

/// Log predictive density of Pareto(gamma) at z >= 1.
inline double logs_pareto(const ParetoCandidate& candidate, double z) {
  if (!(z >= 1.0)) {
    throw Error(ErrorCode::OutOfSupport, "LogS of a Pareto candidate requires z >= 1");
  }
  const double g = candidate.gamma();
  return -std::log(g) - (1.0 / g + 1.0) * std::log(z);
}

/// Energy-score machinery for X ~ Pareto(gamma) and a fixed exponent beta.
///
/// With alpha = 1/gamma and z >= 1,
///   E|X - z|^beta = alpha z^{beta-alpha} [ B(alpha-beta, beta+1) + J(1/z) ],
///   J(w) = int_w^1 (1-v)^beta v^{-alpha-1} dv,
/// where the Beta term is the exact contribution of x > z. J is evaluated by
/// power series: in s = 1-w when w >= 1/2, and in w otherwise (after the
/// first few non-integrable monomials are peeled off and integrated exactly).
/// The pair-difference constant has the closed form
///   E|X - X'|^beta = 2 alpha^2 B(alpha-beta, beta+1) / (2 alpha - beta).
class EnergyKernel {
 public:
  EnergyKernel(double gamma, double beta) : gamma_(gamma), beta_(beta), alpha_(1.0 / gamma) {
    detail::require_positive(gamma, "gamma");
    if (!(beta > 0.0 && beta < 2.0)) {
      throw Error(ErrorCode::InvalidBeta, "energy score exponent must lie in (0, 2)");
    }
    if (!(beta < alpha_)) {
      throw Error(ErrorCode::MomentDivergence,
                  "energy score needs beta < 1/gamma (beta=" + std::to_string(beta) +
                      ", gamma=" + std::to_string(gamma) + ")");
    }
    tail_beta_ = std::beta(alpha_ - beta_, beta_ + 1.0);
    pair_difference_ = 2.0 * alpha_ * alpha_ * tail_beta_ / (2.0 * alpha_ - beta_);
    build_series();
  }

  double gamma() const noexcept { return gamma_; }
  double beta() const noexcept { return beta_; }

  /// E|X - X'|^beta for X, X' i.i.d. Pareto(gamma).
  double pair_difference() const noexcept { return pair_difference_; }

  /// E|X - z|^beta for z >= 1.
  double expected_distance(double z) const noexcept {
    if (z <= 2.0) {
      const double prefactor = alpha_ * std::pow(z, beta_ - alpha_);
      return prefactor * (tail_beta_ + near_series(1.0 - 1.0 / z));
    }
    return far_expected_distance(z);
  }

  /// ES_beta(F_gamma, z) = E|X-X'|^beta / 2 - E|X-z|^beta.
  double score(double z) const noexcept { return 0.5 * pair_difference_ - expected_distance(z); }

  double mean_score(std::span<const double> ratios) const noexcept {
    double acc = 0.0;
    for (double z : ratios) {
      acc += expected_distance(z);
    }
    return 0.5 * pair_difference_ - acc / static_cast<double>(ratios.size());
  }

 private:
  // sum_j d_j s^{j+beta+1} / (j+beta+1), d_j = (alpha+1)_j / j!
  double near_series(double s) const noexcept {
    if (s <= 0.0) {
      return 0.0;
    }
    double power = std::pow(s, beta_ + 1.0);
    double total = 0.0;
    for (std::size_t j = 0; j < near_coef_.size(); ++j) {
      const double term = near_coef_[j] * power;
      total += term;
      if (j > near_peak_ && term < 1e-17 * total) {
        break;
      }
      power *= s;
    }
    return total;
  }

  double far_expected_distance(double z) const noexcept {
    const double log_z = std::log(z);
    const double w = 1.0 / z;
    const double z_pow_tail = std::exp((beta_ - alpha_) * log_z);  // z^{beta-alpha}
    double total = alpha_ * z_pow_tail * (tail_beta_ + far_constant_);
    // exactly integrated monomials j < head_count_
    double z_pow_j = std::exp(beta_ * log_z);  // z^{beta-j}
    for (std::size_t j = 0; j < head_count_; ++j) {
      const double e = static_cast<double>(j) - alpha_;
      double integral;  // z^{beta-alpha} * int_w^1 v^{e-1} dv
      if (e == 0.0) {
        integral = z_pow_tail * log_z;
      } else if (std::abs(e) < 0.5) {
        integral = z_pow_tail * (-std::expm1(-e * log_z) / e);
      } else {
        integral = (z_pow_tail - z_pow_j) / e;
      }
      total += alpha_ * head_coef_[j] * integral;
      z_pow_j *= w;
    }
    // remaining monomials integrated from 0: subtract int_0^w
    double tail = 0.0;
    for (double coef : far_coef_) {
      const double term = coef * z_pow_j;
      tail += term;
      if (std::abs(term) < 1e-18 * std::abs(total)) {
        break;
      }
      z_pow_j *= w;
    }
    return total - alpha_ * tail;
  }

  void build_series() {
    // (1-v)^beta = sum_j c_j v^j
    head_count_ = static_cast<std::size_t>(std::floor(alpha_)) + 2;
    double c = 1.0;
    for (std::size_t j = 0; j < head_count_; ++j) {
      head_coef_.push_back(c);
      c *= (static_cast<double>(j) - beta_) / static_cast<double>(j + 1);
    }
    // far series coefficients c_j / (j - alpha), used only with w < 1/2
    for (std::size_t j = head_count_; j < head_count_ + 4000; ++j) {
      const double coef = c / (static_cast<double>(j) - alpha_);
      far_coef_.push_back(coef);
      if (std::abs(coef) * std::ldexp(1.0, -static_cast<int>(j)) < 1e-22) {
        break;
      }
      c *= (static_cast<double>(j) - beta_) / static_cast<double>(j + 1);
    }
    // near series coefficients d_j / (j + beta + 1), used only with s <= 1/2
    double d = 1.0;
    for (std::size_t j = 0; j < 4000; ++j) {
      near_coef_.push_back(d / (static_cast<double>(j) + beta_ + 1.0));
      if (static_cast<double>(j) + 1.0 < 0.5 * (alpha_ + 1.0 + static_cast<double>(j))) {
        near_peak_ = j + 1;
      }
      if (j > near_peak_ && d * std::ldexp(1.0, -static_cast<int>(j)) < 1e-22) {
        break;
      }
      d *= (alpha_ + 1.0 + static_cast<double>(j)) / static_cast<double>(j + 1);
    }
    // Constant K from matching both representations of J at w = 1/2.
    const double half_j = near_series(0.5);
    double head = 0.0;
    const double log_w = std::log(0.5);
    for (std::size_t j = 0; j < head_count_; ++j) {
      const double e = static_cast<double>(j) - alpha_;
      head += head_coef_[j] * (e == 0.0 ? -log_w : -std::expm1(e * log_w) / e);
    }
    double tail = 0.0;
    double w_pow = std::pow(0.5, static_cast<double>(head_count_) - alpha_);
    for (double coef : far_coef_) {
      tail += coef * w_pow;
      w_pow *= 0.5;
    }
    far_constant_ = half_j - head + tail;
  }

  double gamma_;
  double beta_;
  double alpha_;
  double tail_beta_ = 0.0;
  double pair_difference_ = 0.0;
  double far_constant_ = 0.0;
  std::size_t head_count_ = 0;
  std::size_t near_peak_ = 0;
  std::vector<double> head_coef_;
  std::vector<double> far_coef_;
  std::vector<double> near_coef_;
};

/// Process-wide memo of energy kernels keyed by (gamma, beta); safe under
/// concurrent lookup and insertion.
inline std::shared_ptr<const EnergyKernel> energy_kernel(double gamma, double beta) {
  static std::mutex mutex;
  static std::map<std::pair<double, double>, std::shared_ptr<const EnergyKernel>> cache;
  const auto key = std::make_pair(gamma, beta);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) {
      return it->second;
    }
  }
  auto kernel = std::make_shared<const EnergyKernel>(gamma, beta);
  std::lock_guard lock(mutex);
  return cache.emplace(key, std::move(kernel)).first->second;
}

inline double es_beta_pareto(const ParetoCandidate& candidate, double beta, double z) {
  if (!(z >= 1.0)) {
    throw Error(ErrorCode::OutOfSupport, "energy score of a Pareto candidate requires z >= 1");
  }
  if (!(beta < candidate.alpha())) {
    throw Error(ErrorCode::MomentDivergence, "energy score needs beta < 1/gamma");
  }
  return energy_kernel(candidate.gamma(), beta)->score(z);
}

/// Single-observation score under any supported rule.
inline double score_pareto(const ScoreRule& rule, const ParetoCandidate& candidate, double z) {
  return rule.is_energy() ? es_beta_pareto(candidate, rule.beta, z) : logs_pareto(candidate, z);
}

/// E[LogS(F_gamma, Y)] for Y ~ Pareto(true_gamma); uses E[log Y] = true_gamma.
inline double expected_logs(double candidate_gamma, double true_gamma) {
  detail::require_positive(candidate_gamma, "candidate_gamma");
  detail::require_positive(true_gamma, "true_gamma");
  return -std::log(candidate_gamma) - (1.0 / candidate_gamma + 1.0) * true_gamma;
}

inline double var_logs(double candidate_gamma, double true_gamma) {
  detail::require_positive(candidate_gamma, "candidate_gamma");
  if (!(true_gamma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "true_gamma must be nonnegative");
  }
  const double slope = 1.0 / candidate_gamma + 1.0;
  return slope * slope * true_gamma * true_gamma;
}

/// Var(ES_1(F_gamma, Y)) for Y ~ Pareto(true_gamma), with a = 2g/(g-1) and p = 1 - 1/g.
inline double var_es1(double candidate_gamma, double true_gamma) {
  detail::require_positive(candidate_gamma, "candidate_gamma");
  if (!(true_gamma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "true_gamma must be nonnegative");
  }
  if (candidate_gamma == 1.0) {
    throw Error(ErrorCode::SingularParameter, "CRPS variance is undefined at gamma = 1");
  }
  const double a = 2.0 * candidate_gamma / (candidate_gamma - 1.0);
  const double p = 1.0 - 1.0 / candidate_gamma;
  const double g = true_gamma;
  const double den[] = {1.0 - 2.0 * g, 1.0 - (1.0 + p) * g, 1.0 - 2.0 * p * g, 1.0 - g, 1.0 - p * g};
  for (double d : den) {
    if (!(d > 0.0)) {
      throw Error(ErrorCode::MomentDivergence, "CRPS variance moments diverge for these indices");
    }
  }
  const double mean = 1.0 / den[3] - a / den[4];
  const double v = 1.0 / den[0] - 2.0 * a / den[1] + a * a / den[2] - mean * mean;
  return v < 0.0 ? 0.0 : v;
}

}  // namespace tailrank
