#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "oracles.hpp"
#include "tailrank/scoring.hpp"

using namespace tailrank;

TEST(LogS, Examples) {
  EXPECT_DOUBLE_EQ(logs_pareto(ParetoCandidate(1.0), 1.0), 0.0);
  EXPECT_NEAR(logs_pareto(ParetoCandidate(0.5), 1.0), 0.693147180559945, 1e-14);
  EXPECT_NEAR(logs_pareto(ParetoCandidate(1.0), std::exp(1.0)), -2.0, 1e-14);
}

TEST(LogS, MatchesLogDensity) {
  const ParetoCandidate c(0.7);
  for (double z : {1.0, 1.3, 7.0, 1e5}) {
    EXPECT_NEAR(logs_pareto(c, z), std::log(c.density(z)), 1e-12 * std::max(1.0, std::abs(std::log(c.density(z)))));
  }
}

TEST(LogS, OutOfSupport) {
  try {
    logs_pareto(ParetoCandidate(1.0), 0.99);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfSupport);
  }
}

TEST(ScoreRule, Contract) {
  EXPECT_THROW(ScoreRule::energy(0.0), Error);
  EXPECT_THROW(ScoreRule::energy(2.0), Error);
  EXPECT_EQ(ScoreRule::crps(), ScoreRule::energy(1.0));
  EXPECT_FALSE(ScoreRule::logs().is_energy());
}

TEST(EnergyScore, AnalyticCell) {
  EXPECT_NEAR(es_beta_pareto(ParetoCandidate(0.5), 1.0, 1.0), -1.0 / 3.0, 1e-12);
  EXPECT_NEAR(energy_kernel(0.5, 1.0)->pair_difference(), 4.0 / 3.0, 1e-13);
}

TEST(EnergyScore, CrpsClosedForm) {
  // For beta = 1: E|X - z| = z - E X + 2 z^{1-alpha}/(alpha-1).
  for (double g : {0.2, 0.5, 0.8}) {
    const double a = 1.0 / g;
    for (double z : {1.0, 1.7, 2.0, 2.5, 30.0, 1e6}) {
      const double expect = z - a / (a - 1.0) + 2.0 * std::pow(z, 1.0 - a) / (a - 1.0);
      EXPECT_NEAR(energy_kernel(g, 1.0)->expected_distance(z), expect, 1e-11 * std::max(1.0, expect))
          << "gamma=" << g << " z=" << z;
    }
  }
}

TEST(EnergyScore, ExpectedDistanceMatchesQuadrature) {
  const double gammas[] = {0.1, 0.33, 0.5, 0.9, 1.33, 2.66};
  const double fracs[] = {0.05, 0.4, 0.8, 0.97};
  const double zs[] = {1.0, 1.0001, 1.5, 1.99, 2.0, 2.01, 3.0, 17.0, 1e3, 1e6};
  for (double g : gammas) {
    for (double f : fracs) {
      const double beta = std::min(1.99, f / g);
      const auto kernel = energy_kernel(g, beta);
      for (double z : zs) {
        const double ref = oracle::expected_distance(g, beta, z);
        EXPECT_NEAR(kernel->expected_distance(z), ref, 1e-9 * std::max(1.0, ref))
            << "gamma=" << g << " beta=" << beta << " z=" << z;
      }
    }
  }
}

TEST(EnergyScore, PairDifferenceMatchesNestedQuadrature) {
  const double cells[][2] = {{0.5, 1.0}, {0.5, 0.3}, {0.9, 0.8}, {1.33, 0.37}, {0.25, 1.5}};
  for (const auto& c : cells) {
    const double ref = oracle::pair_difference(c[0], c[1]);
    EXPECT_NEAR(energy_kernel(c[0], c[1])->pair_difference(), ref, 1e-7 * ref) << c[0] << " " << c[1];
  }
}

TEST(EnergyScore, MatchesImportanceSampledMonteCarlo) {
  std::uint64_t seed = 1;
  for (double g : {0.5, 0.9}) {
    for (double beta : {0.3, 0.9 / g * 0.9}) {
      for (double z : {1.0, 2.0, 10.0}) {
        const auto mc = oracle::energy_score_is(g, beta, z, 1000000, seed++);
        const double v = es_beta_pareto(ParetoCandidate(g), beta, z);
        EXPECT_LE(std::abs(v - mc.mean), 4.0 * mc.se) << "gamma=" << g << " beta=" << beta << " z=" << z;
      }
    }
  }
}

TEST(EnergyScore, CrpsMaximizedAtMedian) {
  for (double g : {0.3, 0.5, 0.8}) {
    const auto kernel = energy_kernel(g, 1.0);
    const double median = std::pow(2.0, g);
    double best_z = 1.0;
    double best = -1e300;
    const double step = 1e-4;
    for (double z = 1.0; z < 4.0; z += step) {
      const double s = kernel->score(z);
      if (s > best) {
        best = s;
        best_z = z;
      }
    }
    EXPECT_NEAR(best_z, median, 2 * step) << "gamma=" << g;
  }
}

TEST(EnergyScore, MomentDivergence) {
  try {
    es_beta_pareto(ParetoCandidate(1.0), 1.0, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MomentDivergence);
  }
  EXPECT_THROW(es_beta_pareto(ParetoCandidate(0.5), 1.0, 0.5), Error);
  EXPECT_THROW(EnergyKernel(2.0, 0.6), Error);
}

TEST(EnergyScore, KernelMemoIsSharedAcrossThreads) {
  std::vector<std::shared_ptr<const EnergyKernel>> got(4);
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&, i] { got[i] = energy_kernel(0.77, 0.41); });
  }
  for (auto& t : threads) {
    t.join();
  }
  for (const auto& k : got) {
    EXPECT_EQ(k.get(), got[0].get());
  }
}

TEST(ExpectedLogs, Examples) {
  EXPECT_DOUBLE_EQ(expected_logs(1.0, 1.0), -2.0);
  EXPECT_NEAR(expected_logs(2.0, 1.0), -std::log(2.0) - 1.5, 1e-14);
}

TEST(ExpectedLogs, MatchesQuadrature) {
  boost::math::quadrature::tanh_sinh<double> q;
  for (auto [g, gg] : {std::pair{1.0, 1.0}, std::pair{2.0, 1.0}, std::pair{0.4, 0.7}}) {
    // Y = u^{-gamma_G}, u ~ U(0,1).
    auto f = [&](double u) { return logs_pareto(ParetoCandidate(g), std::pow(u, -gg)); };
    EXPECT_NEAR(expected_logs(g, gg), q.integrate(f, 0.0, 1.0, 1e-12), 1e-8);
  }
}

TEST(ExpectedLogs, ProperAtLimitLaw) {
  for (int i = 0; i < 20; ++i) {
    const double gg = 0.3 + 1.2 * i / 19.0;
    std::size_t best = 0;
    double best_v = -1e300;
    std::size_t nearest = 0;
    double nearest_d = 1e300;
    for (std::size_t j = 0; j < 200; ++j) {
      const double g = 0.5 * gg + 1.5 * gg * static_cast<double>(j) / 199.0;
      const double v = expected_logs(g, gg);
      if (v > best_v) {
        best_v = v;
        best = j;
      }
      if (std::abs(g - gg) < nearest_d) {
        nearest_d = std::abs(g - gg);
        nearest = j;
      }
    }
    EXPECT_EQ(best, nearest) << "gamma_G=" << gg;
  }
}

TEST(EnergyScore, ProperAtLimitLaw) {
  // Stratified draws of Y ~ Pareto(gamma_G) shared across the candidate grid.
  const std::size_t m = 100000;
  for (double gg : {0.3, 0.6, 1.0, 1.5}) {
    const double beta = 0.45 / gg;  // below 1/(2 gamma_G) = 1/max(grid)
    std::vector<double> ys(m);
    for (std::size_t i = 0; i < m; ++i) {
      ys[i] = std::pow((static_cast<double>(i) + 0.5) / static_cast<double>(m), -gg);
    }
    const double step = 1.5 * gg / 199.0;
    std::size_t best = 0;
    double best_v = -1e300;
    for (std::size_t j = 0; j < 200; ++j) {
      const double g = 0.5 * gg + static_cast<double>(j) * step;
      const double v = energy_kernel(g, beta)->mean_score(ys);
      if (v > best_v) {
        best_v = v;
        best = j;
      }
    }
    EXPECT_NEAR(0.5 * gg + static_cast<double>(best) * step, gg, step * 1.0001) << "gamma_G=" << gg;
  }
}

TEST(VarLogs, Examples) {
  EXPECT_DOUBLE_EQ(var_logs(1.0, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(var_logs(1.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(var_logs(0.5, 1.0), 9.0);
}

TEST(VarLogs, MatchesMonteCarlo) {
  const auto ys = oracle::pareto_draws(1.0, 1000000, 21);
  std::vector<double> scores;
  scores.reserve(ys.size());
  for (double y : ys) {
    scores.push_back(logs_pareto(ParetoCandidate(0.5), y));
  }
  const auto v = oracle::variance_with_se(scores);
  EXPECT_LE(std::abs(v.mean - var_logs(0.5, 1.0)), 4.0 * v.se);
}

TEST(VarEs1, Examples) {
  EXPECT_NEAR(var_es1(0.5, 0.25), 0.0622222222222, 1e-10);
  EXPECT_NEAR(var_es1(0.5, 1e-9), 0.0, 1e-7);
  EXPECT_EQ(var_es1(0.5, 0.0), 0.0);
}

TEST(VarEs1, NonnegativeInContract) {
  for (double g : {0.2, 0.5, 0.8, 1.5, 3.0}) {
    for (double gg = 0.0; gg < 0.5; gg += 0.01) {
      try {
        EXPECT_GE(var_es1(g, gg), 0.0);
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MomentDivergence);
      }
    }
  }
}

TEST(VarEs1, Errors) {
  try {
    var_es1(1.0, 0.2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularParameter);
  }
  try {
    var_es1(0.5, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MomentDivergence);
  }
}

TEST(VarEs1, MatchesMonteCarlo) {
  const auto ys = oracle::pareto_draws(0.15, 1000000, 22);
  for (double g : {0.5, 0.8}) {
    const auto kernel = energy_kernel(g, 1.0);
    std::vector<double> scores;
    scores.reserve(ys.size());
    for (double y : ys) {
      scores.push_back(kernel->score(y));
    }
    const auto v = oracle::variance_with_se(scores);
    EXPECT_LE(std::abs(v.mean - var_es1(g, 0.15)), 4.0 * v.se) << "gamma=" << g;
  }
}

TEST(LogS, DominationBound) {
  // |S(z)| <= A z^{(1-delta)/gamma} with delta = 1/2 over z in [1, 1e6].
  for (double g : {0.3, 1.0, 2.0}) {
    const ParetoCandidate c(g);
    double a = 0.0;
    for (double z = 1.0; z <= 1e6; z *= 1.01) {
      a = std::max(a, std::abs(logs_pareto(c, z)) / std::pow(z, 0.5 / g));
    }
    ASSERT_TRUE(std::isfinite(a));
    for (double z = 1.0; z <= 1e6; z *= 1.37) {
      EXPECT_LE(std::abs(logs_pareto(c, z)), a * std::pow(z, 0.5 / g) * (1 + 1e-12));
    }
  }
}
