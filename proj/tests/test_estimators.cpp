#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tailrank/estimators.hpp"

using namespace tailrank;

namespace {

TailView view_of(std::vector<double> ratios) {
  TailView v;
  v.k = ratios.size();
  v.threshold = 1.0;
  v.ratios = std::move(ratios);
  return v;
}

// Golden-section maximization of a unimodal function on [lo, hi]. Comparing
// function values only resolves the argmax to about sqrt(epsilon), so the
// search runs in long double to get below 1e-8.
template <typename F>
long double golden_max(F&& f, long double lo, long double hi) {
  const long double r = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  long double a = lo;
  long double b = hi;
  long double c = b - r * (b - a);
  long double d = a + r * (b - a);
  long double fc = f(c);
  long double fd = f(d);
  for (int i = 0; i < 400 && (b - a) > 1e-18L * (std::abs(a) + std::abs(b)); ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / 2.0L;
}

}  // namespace

TEST(Hill, Examples) {
  const double e = std::exp(1.0);
  EXPECT_EQ(hill(view_of({1.0, 1.0, 1.0})), 0.0);
  EXPECT_NEAR(hill(view_of({e, e, e})), 1.0, 1e-15);
  EXPECT_NEAR(hill(view_of({e * e * e, e * e, e})), 2.0, 1e-15);
}

TEST(Hill, InvalidView) {
  try {
    hill(view_of({2.0, 0.5}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidView);
  }
}

TEST(Hill, TraceObjectiveIsTailScore) {
  const TailView v = normalized_exceedances(sample_pareto(ParetoCandidate(0.6), 4000, 3), 250);
  const auto t = hill_trace(v);
  EXPECT_NEAR(t.objective, empirical_tail_score(v, ScoreRule::logs(), ParetoCandidate(t.gamma_hat)), 1e-13);
  EXPECT_EQ(t.method, EstimateTrace::Method::Hill);
}

TEST(Stationarity, SignsAndZero) {
  const TailView v = normalized_exceedances(sample_frechet(FrechetLaw(1.0), 3000, 4), 200);
  const double h = hill(v);
  EXPECT_NEAR(logs_objective_stationarity(v, h), 0.0, 1e-12);
  EXPECT_GT(logs_objective_stationarity(v, 0.9 * h), 0.0);
  EXPECT_LT(logs_objective_stationarity(v, 1.1 * h), 0.0);
}

TEST(HillLogsEquivalence, ContinuousMaximizer) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> kd(10, 500);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::size_t k = kd(rng);
    const TailView v = normalized_exceedances(sample_frechet(FrechetLaw(1.0 / (0.3 + 0.01 * s)), 2000, s, 1), k);
    const double h = hill(v);
    long double mlr = 0.0L;
    for (double z : v.ratios) {
      mlr += std::log(static_cast<long double>(z));
    }
    mlr /= static_cast<long double>(k);
    // Maximize over log gamma so the bracket [1e-3, 1e3] is well scaled.
    const long double lg = golden_max([&](long double x) {
      const long double g = std::exp(x);
      return -std::log(g) - (1.0L / g + 1.0L) * mlr;
    }, std::log(1e-3L), std::log(1e3L));
    const auto g = static_cast<double>(std::exp(lg));
    EXPECT_NEAR(g, h, 1e-8 * h) << "seed=" << s;
  }
}

TEST(ScoreOpt, LogsGridContainingHill) {
  const TailView v = normalized_exceedances(sample_pareto(ParetoCandidate(0.8), 5000, 5), 300);
  const double h = hill(v);
  const GammaGrid grid({0.5 * h, 0.9 * h, h, 1.1 * h, 2.0 * h}, 0.5 * h, 2.0 * h);
  const auto t = score_opt_estimate(v, ScoreRule::logs(), grid);
  EXPECT_EQ(t.gamma_hat, h);
  EXPECT_FALSE(t.at_boundary);
  EXPECT_EQ(t.method, EstimateTrace::Method::ScoreOpt);
}

TEST(ScoreOpt, LogsWithinOneStep) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const TailView v = normalized_exceedances(sample_frechet(FrechetLaw(1.0), 5000, s, 2), 50 + 4 * s);
    const double h = hill(v);
    const GammaGrid grid = GammaGrid::equidistant(0.5, 2.0, 151);
    const double step = 0.01;
    const auto t = score_opt_estimate(v, ScoreRule::logs(), grid);
    EXPECT_LE(std::abs(t.gamma_hat - h), step * (1 + 1e-9)) << "seed=" << s;
    EXPECT_NEAR(t.objective, empirical_tail_score(v, ScoreRule::logs(), ParetoCandidate(t.gamma_hat)), 1e-13);
  }
}

TEST(ScoreOpt, SinglePoint) {
  const auto t = score_opt_estimate(view_of({std::exp(1.0)}), ScoreRule::logs(), GammaGrid::equidistant(0.5, 2.0, 301));
  EXPECT_NEAR(t.gamma_hat, 1.0, 0.005);
}

TEST(ScoreOpt, InvalidBeta) {
  const TailView v = view_of({2.0, 1.5});
  try {
    score_opt_estimate(v, ScoreRule::energy(0.5), GammaGrid::equidistant(0.8, 2.0, 10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidBeta);
  }
  EXPECT_THROW(EnergyGridObjective(0.5, GammaGrid::equidistant(0.8, 2.0, 10)), Error);
}

TEST(ScoreOpt, BoundaryFlag) {
  // All ratios 1 leaves -log gamma, maximized at the lower end.
  const TailView v = view_of({1.0});
  const auto t = score_opt_estimate(v, ScoreRule::logs(), GammaGrid::equidistant(1.0, 2.0, 11));
  EXPECT_EQ(t.gamma_hat, 1.0);
  EXPECT_TRUE(t.at_boundary);
}

TEST(ScoreOpt, EnergyGridObjectiveMatchesDirect) {
  const TailView v = normalized_exceedances(sample_frechet(FrechetLaw(1.0), 10000, 8), 500);
  const GammaGrid grid = GammaGrid::around(1.0);
  const EnergyGridObjective obj(0.45, grid);
  const auto a = obj.estimate(v);
  const auto b = score_opt_estimate(v, ScoreRule::energy(0.45), grid);
  EXPECT_EQ(a.gamma_hat, b.gamma_hat);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_NEAR(a.objective, empirical_tail_score(v, ScoreRule::energy(0.45), ParetoCandidate(a.gamma_hat)), 1e-12);
}

TEST(ScoreOpt, GridRefinementNeverLowersObjective) {
  const TailView v = normalized_exceedances(sample_frechet(FrechetLaw(1.0), 10000, 9), 700);
  for (const auto& rule : {ScoreRule::logs(), ScoreRule::energy(0.45)}) {
    const auto coarse = score_opt_estimate(v, rule, GammaGrid::equidistant(0.8, 2.0, 76));
    const auto fine = score_opt_estimate(v, rule, GammaGrid::equidistant(0.8, 2.0, 151));
    EXPECT_GE(fine.objective, coarse.objective);
  }
}

TEST(ScoreOpt, EnergyConsistency) {
  const GammaGrid grid = GammaGrid::equidistant(0.8, 2.0, 150);
  const EnergyGridObjective obj(0.45, grid);
  double prev = 1e300;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    const auto k = static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(n)));
    double mae = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
      mae += std::abs(obj.estimate(normalized_exceedances(sample_pareto(ParetoCandidate(1.0), n, s, 3), k)).gamma_hat -
                      1.0);
    }
    mae /= 50.0;
    EXPECT_LT(mae, prev) << "n=" << n;
    prev = mae;
  }
}

TEST(ScaleInvariance, Estimates) {
  const Sample s = sample_frechet(FrechetLaw(0.8), 20000, 10);
  const GammaGrid grid = GammaGrid::around(1.25);
  for (double c : {1e-3, 1e3, 0.125}) {
    Sample t = s;
    for (auto& v : t.values) {
      v *= c;
    }
    for (std::size_t k : {100u, 1000u, 5000u}) {
      const TailView a = normalized_exceedances(s, k);
      const TailView b = normalized_exceedances(t, k);
      EXPECT_NEAR(hill(a), hill(b), 1e-13 * hill(a));
      EXPECT_EQ(score_opt_estimate(a, ScoreRule::logs(), grid).gamma_hat,
                score_opt_estimate(b, ScoreRule::logs(), grid).gamma_hat);
      EXPECT_EQ(score_opt_estimate(a, ScoreRule::energy(0.39), grid).gamma_hat,
                score_opt_estimate(b, ScoreRule::energy(0.39), grid).gamma_hat);
    }
  }
}

TEST(BetaSchedule, Examples) {
  const auto b = beta_schedule(1.0);
  EXPECT_NEAR(b[0], 0.499, 1e-15);
  EXPECT_NEAR(b[1], 0.3992, 1e-15);
  EXPECT_NEAR(b[2], 0.3493, 1e-15);
  const auto c = beta_schedule(0.5);
  EXPECT_NEAR(c[0], 0.999, 1e-15);
  EXPECT_NEAR(c[1], 0.7992, 1e-15);
  EXPECT_NEAR(c[2], 0.6993, 1e-15);
  for (double g : {0.1, 0.33, 1.33, 100.0}) {
    const auto s = beta_schedule(g);
    EXPECT_GT(s[0], s[1]);
    EXPECT_GT(s[1], s[2]);
    EXPECT_GT(s[2], 0.0);
  }
}

TEST(BetaSchedule, InvalidGamma) {
  for (double g : {0.0, -1.0, 500.0}) {
    try {
      beta_schedule(g);
      FAIL() << g;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidGamma);
    }
  }
}

TEST(GammaGrid, Around) {
  const GammaGrid g = GammaGrid::around(1.33);
  EXPECT_EQ(g.values().size(), 150u);
  EXPECT_DOUBLE_EQ(g.lower(), 0.8 * 1.33);
  EXPECT_EQ(g.values().back(), 2.0 * 1.33);
  EXPECT_THROW(GammaGrid({1.0, 0.9}, 0.5, 2.0), Error);
  EXPECT_THROW(GammaGrid({}, 0.5, 2.0), Error);
}
