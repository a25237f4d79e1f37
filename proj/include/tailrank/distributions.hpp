#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "tailrank/error.hpp"
#include "tailrank/rng.hpp"

namespace tailrank {

namespace detail {
inline void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive and finite");
  }
}
}  // namespace detail

/// Pareto law on [1, inf) with survival x^{-1/gamma}. Used both as the
/// limiting tail law and as the candidate predictive distribution.
class ParetoCandidate {
 public:
  explicit ParetoCandidate(double gamma) : gamma_(gamma) { detail::require_positive(gamma, "gamma"); }

  double gamma() const noexcept { return gamma_; }
  double alpha() const noexcept { return 1.0 / gamma_; }

  double cdf(double x) const noexcept { return x <= 1.0 ? 0.0 : -std::expm1(-std::log(x) / gamma_); }
  double survival(double x) const noexcept { return x <= 1.0 ? 1.0 : std::pow(x, -1.0 / gamma_); }
  double density(double x) const noexcept {
    return x < 1.0 ? 0.0 : std::pow(x, -1.0 / gamma_ - 1.0) / gamma_;
  }
  double quantile(double u) const noexcept { return std::exp(-gamma_ * std::log1p(-u)); }

  friend bool operator==(const ParetoCandidate&, const ParetoCandidate&) = default;

 private:
  double gamma_;
};

/// Frechet law exp(-x^{-s}) on (0, inf); tail index 1/s.
class FrechetLaw {
 public:
  explicit FrechetLaw(double shape_s) : shape_(shape_s) { detail::require_positive(shape_s, "shape_s"); }
  static FrechetLaw from_tail_index(double gamma) { return FrechetLaw(1.0 / gamma); }

  double shape() const noexcept { return shape_; }
  double tail_index() const noexcept { return 1.0 / shape_; }

  double cdf(double x) const noexcept { return x <= 0.0 ? 0.0 : std::exp(-std::pow(x, -shape_)); }
  double quantile(double u) const noexcept { return std::pow(-std::log(u), -1.0 / shape_); }

 private:
  double shape_;
};

/// Burr XII law 1 - (1 + x^c)^{-t} on (0, inf); tail index 1/(c t).
class BurrLaw {
 public:
  BurrLaw(double shape_c, double shape_t) : c_(shape_c), t_(shape_t) {
    detail::require_positive(shape_c, "shape_c");
    detail::require_positive(shape_t, "shape_t");
  }

  double shape_c() const noexcept { return c_; }
  double shape_t() const noexcept { return t_; }
  double tail_index() const noexcept { return 1.0 / (c_ * t_); }

  double cdf(double x) const noexcept {
    return x <= 0.0 ? 0.0 : -std::expm1(-t_ * std::log1p(std::pow(x, c_)));
  }
  double quantile(double u) const noexcept {
    return std::pow(std::expm1(-std::log1p(-u) / t_), 1.0 / c_);
  }

 private:
  double c_;
  double t_;
};

enum class ScalingKind { None, Linear, Sinusoidal };

/// Scale factor attached to observation index i (1-based) out of n.
inline double scaling_factor(ScalingKind kind, std::size_t i, std::size_t n) noexcept {
  const double r = static_cast<double>(i) / static_cast<double>(n);
  switch (kind) {
    case ScalingKind::None: return 1.0;
    case ScalingKind::Linear: return r;
    case ScalingKind::Sinusoidal: return 1.5 + 0.5 * std::sin(6.0 * r * std::numbers::pi);
  }
  return 1.0;
}

struct Sample {
  std::vector<double> values;
  std::optional<std::uint64_t> seed;
  std::string dgp_label;

  std::size_t n() const noexcept { return values.size(); }
};

/// Draws n variates by inverse transform from any law exposing quantile().
template <typename Law>
Sample sample_law(const Law& law, std::size_t n, PhiloxStream& rng, std::string label) {
  if (n == 0) {
    throw Error(ErrorCode::EmptySample, "cannot draw a sample of size 0");
  }
  Sample out;
  out.values.resize(n);
  for (auto& v : out.values) {
    v = law.quantile(rng.uniform_open());
  }
  out.seed = rng.seed();
  out.dgp_label = std::move(label);
  return out;
}

inline Sample sample_frechet(const FrechetLaw& law, std::size_t n, std::uint64_t seed,
                             std::uint64_t stream = 0) {
  PhiloxStream rng(seed, stream);
  return sample_law(law, n, rng, "frechet(s=" + std::to_string(law.shape()) + ")");
}

inline Sample sample_burr(const BurrLaw& law, std::size_t n, std::uint64_t seed,
                          std::uint64_t stream = 0) {
  PhiloxStream rng(seed, stream);
  return sample_law(law, n, rng,
                    "burr(c=" + std::to_string(law.shape_c()) + ",t=" + std::to_string(law.shape_t()) + ")");
}

inline Sample sample_pareto(const ParetoCandidate& law, std::size_t n, std::uint64_t seed,
                            std::uint64_t stream = 0) {
  PhiloxStream rng(seed, stream);
  return sample_law(law, n, rng, "pareto(gamma=" + std::to_string(law.gamma()) + ")");
}

/// Y_i = X_i * Z_i with X_i taken by original (1-based) observation index.
inline Sample apply_scaling(const Sample& sample, ScalingKind kind) {
  if (sample.values.empty()) {
    throw Error(ErrorCode::EmptySample, "cannot scale an empty sample");
  }
  Sample out = sample;
  if (kind == ScalingKind::None) {
    return out;
  }
  const std::size_t n = out.values.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] *= scaling_factor(kind, i + 1, n);
  }
  out.dgp_label += kind == ScalingKind::Linear ? "*linear" : "*sinusoidal";
  return out;
}

/// G^t(x) = (G(tx) - G(t)) / (1 - G(t)).
inline double tail_counterpart_cdf(const std::function<double(double)>& base_cdf, double t, double x) {
  if (t < 1.0) {
    throw Error(ErrorCode::InvalidArgument, "threshold t must be >= 1");
  }
  if (x < 1.0) {
    throw Error(ErrorCode::OutOfSupport, "tail counterpart is supported on [1, inf)");
  }
  const double gt = base_cdf(t);
  if (!(gt < 1.0)) {
    throw Error(ErrorCode::DegenerateThreshold, "base cdf equals 1 at the threshold");
  }
  return (base_cdf(t * x) - gt) / (1.0 - gt);
}

}  // namespace tailrank
