#include <gtest/gtest.h>

#include <numeric>

#include "bayescat/indel_model.hpp"
#include "bayescat/simulator.hpp"
#include "oracles.hpp"

using namespace bayescat;

TEST(EquilibriumLength, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(equilibrium_length_log_pmf(0, 0.5), std::log(0.5));
  EXPECT_DOUBLE_EQ(equilibrium_length_log_pmf(2, 0.5), std::log(0.125));
  auto r = 100.0 / 12300.0;
  auto v = equilibrium_length_log_pmf(120, r);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, std::log(r) + 120 * std::log(1 - r), 1e-12);
  EXPECT_THROW(equilibrium_length_log_pmf(1, 1.0), std::domain_error);
  EXPECT_THROW(equilibrium_length_log_pmf(1, 0.0), std::domain_error);
}

TEST(RateRatio, GeometricMatchesSeries) {
  auto d = SizeDistribution::geometric(0.5);
  EXPECT_NEAR(rate_ratio(0.1, d), 0.45 / 0.55, 1e-14);
  auto series = oracle::ratio_by_series(0.1, [](int k) { return oracle::geom(k, 0.5); }, 10000);
  EXPECT_NEAR(rate_ratio(0.1, d), series, 1e-12);
  EXPECT_LT(rate_ratio(1.0 - 1e-9, d), 1e-8);
}

TEST(RateRatio, SingleBaseDeletionsGiveOneMinusR) {
  for (auto r : {0.01, 0.2, 0.7}) {
    EXPECT_DOUBLE_EQ(rate_ratio(r, SizeDistribution::geometric(1.0)), 1.0 - r);
  }
}

TEST(RateRatio, NonGeometricLawsMatchSeries) {
  auto nb = SizeDistribution::negative_binomial(2.0, 0.6);
  auto pl = SizeDistribution::power_law(2.5, 50.0);
  for (const auto* d : {&nb, &pl}) {
    auto series = oracle::ratio_by_series(0.05, [&](int k) { return d->pmf(k); }, 5000);
    EXPECT_NEAR(rate_ratio(0.05, *d), series, 1e-10);
  }
}

TEST(InsertionSizes, GeometricInsertionLaw) {
  auto p = IndelParams::geometric(0.1, 0.5, 0.1);
  EXPECT_NEAR(p.insertion_size(1), 0.55, 1e-14);
  EXPECT_NEAR(p.insertion_size(2), 0.2475, 1e-14);
  EXPECT_NEAR(p.r_i(), 0.55, 1e-15);
  auto tkf = IndelParams::geometric(0.3, 1.0, 0.1);
  EXPECT_NEAR(tkf.insertion_size(1), 1.0, 1e-14);
  EXPECT_EQ(tkf.log_insertion_size(2), k_neg_inf);
}

TEST(InsertionSizes, SumToOneForAllKinds) {
  auto laws = std::vector<SizeDistribution>{SizeDistribution::geometric(0.3), SizeDistribution::negative_binomial(3.0, 0.4),
                                            SizeDistribution::power_law(1.8, 200.0)};
  for (const auto& d : laws) {
    auto p = IndelParams{0.02, d, 0.1};
    auto s = 0.0;
    for (auto k = 1; k <= 200000; ++k) {
      s += p.insertion_size(k);
    }
    EXPECT_NEAR(s, 1.0, 1e-10);
  }
}

TEST(DeletionMass, DirectSummationValues) {
  auto p = IndelParams::geometric(0.1, 0.5, 0.1);
  EXPECT_EQ(p.f(0), 0.0);
  EXPECT_DOUBLE_EQ(p.f(1), 0.5);
  EXPECT_DOUBLE_EQ(p.f(3), 2.125);
  EXPECT_DOUBLE_EQ(p.f(10), 9.0009765625);
  auto d = [](int k) { return oracle::geom(k, 0.5); };
  for (auto x = 0; x < 60; ++x) {
    EXPECT_NEAR(p.f(x), oracle::f_by_sum(x, d), 1e-11);
  }
}

TEST(DeletionMass, NonGeometricMatchesSummation) {
  auto p = IndelParams{0.02, SizeDistribution::negative_binomial(2.0, 0.5), 0.1};
  auto d = [&](int k) { return p.deletion_sizes().pmf(k); };
  for (auto x : {0, 1, 2, 7, 40, 300}) {
    EXPECT_NEAR(p.f(x), oracle::f_by_sum(x, d), 1e-9 * std::max(1.0, p.f(x)));
  }
}

TEST(EventRate, Values) {
  auto p = IndelParams::geometric(0.1, 0.5, 0.1);
  EXPECT_NEAR(p.mu(), 0.1 / (0.45 / 0.55), 1e-15);
  EXPECT_DOUBLE_EQ(p.eta(0), 0.1);
  EXPECT_NEAR(p.eta(5), 0.6 + 4.03125 * p.mu(), 1e-14);
  EXPECT_NEAR(p.eta(5), 1.09271, 1e-5);
  EXPECT_NEAR(p.eta(10), 1.1 + 9.0009765625 * p.mu(), 1e-14);
}

TEST(EdgeDensity, EmptyHistory) {
  auto p = IndelParams::geometric(0.1, 0.5, 0.1);
  auto h = EdgeHistory{{}, 5, 5, 0.2};
  EXPECT_NEAR(edge_history_log_density(h, p), -0.218542, 1e-6);
  EXPECT_NEAR(std::exp(edge_history_log_density(h, p)), 0.8037, 1e-4);
  EXPECT_EQ(edge_history_log_density(EdgeHistory{{}, 5, 5, 0.0}, p), 0.0);
}

TEST(EdgeDensity, EmptyHistoryMatchesGeneratorExponential) {
  // The probability of no event in time v is the survival of the pure-jump
  // process; compare against the diagonal-only generator solution.
  auto p = IndelParams::geometric(0.1, 0.5, 0.1);
  Eigen::MatrixXd q(1, 1);
  q(0, 0) = -oracle::f_by_sum(5, [](int k) { return oracle::geom(k, 0.5); }) * p.mu() - 6 * 0.1;
  Eigen::MatrixXd m = (q * 0.2).exp();
  auto survival = m(0, 0);
  EXPECT_NEAR(edge_history_log_density(EdgeHistory{{}, 5, 5, 0.2}, p), std::log(survival), 1e-12);
}

TEST(EdgeDensity, SingleInsertionAssembledFromParts) {
  auto p = IndelParams::geometric(0.1, 0.5, 0.1);
  auto v = 0.3;
  auto h = EdgeHistory{{insertion(v / 2, 2, 1, 5)}, 5, 6, v};
  auto expected = -p.eta(5) * v / 2 - p.eta(6) * v / 2 + std::log(0.1) + std::log(0.55);
  EXPECT_NEAR(edge_history_log_density(h, p), expected, 1e-12);
}

TEST(EdgeDensity, MatchesTermByTermOracle) {
  auto rng = Rng{19};
  for (auto rep = 0; rep < 500; ++rep) {
    auto r = uniform_real(rng, 0.01, 0.5);
    auto r_d = uniform_real(rng, 0.1, 0.95);
    auto lambda = uniform_real(rng, 0.05, 2.0);
    auto p = IndelParams::geometric(r, r_d, lambda);
    auto h = simulate_edge_history(rng, static_cast<int>(uniform_index(rng, 20)), uniform_real(rng, 0.1, 2.0), p);
    EXPECT_NEAR(edge_history_log_density(h, p), oracle::edge_log_density(h, r, r_d, lambda), 1e-9);
  }
}

TEST(EdgeDensity, RejectsInvalidHistory) {
  auto p = IndelParams::geometric(0.1, 0.5, 0.1);
  auto bad = EdgeHistory{{deletion(0.1, 4, 3, 5)}, 5, 2, 0.2};
  EXPECT_THROW(edge_history_log_density(bad, p), std::invalid_argument);
}

TEST(DetailedBalance, ForwardAndReversedHistoriesAgree) {
  auto rng = Rng{23};
  for (auto r : {0.05, 0.5}) {
    for (auto r_d : {0.3, 0.9}) {
      auto p = IndelParams::geometric(r, r_d, 0.7);
      for (auto rep = 0; rep < 500; ++rep) {
        auto n0 = sample_equilibrium_length(rng, r);
        auto h = simulate_edge_history(rng, n0, uniform_real(rng, 0.05, 3.0), p);
        auto lhs = p.log_q(h.parent_length) + edge_history_log_density(h, p);
        auto rhs = p.log_q(h.child_length) + edge_history_log_density(reverse_edge_history(h), p);
        EXPECT_NEAR(lhs, rhs, 1e-9);
      }
    }
  }
}

TEST(TreeDensity, StarTreeWithoutEvents) {
  auto t = Tree{{"a", "b", "c"}, {3, 3, 3, k_no_node}, {0.1, 0.2, 0.4, 0.0}};
  auto p = IndelParams::geometric(0.1, 0.5, 0.1);
  auto h = TreeHistory{6, std::vector<EdgeHistory>(4)};
  for (auto e : t.edges()) {
    h.edge(e) = EdgeHistory{{}, 6, 6, t.branch_length(e)};
  }
  EXPECT_NEAR(tree_history_log_density(t, h, p), p.log_q(6) - p.eta(6) * 0.7, 1e-12);
}

TEST(TreeDensity, InvariantToHistoryRoot) {
  auto rng = Rng{29};
  auto cfg = SimulationConfig{};
  cfg.params = Parameters{};
  cfg.params->r = 0.05;
  cfg.params->lambda = 0.3;
  cfg.params->gamma = 1.5;
  for (auto rep = 0; rep < 100; ++rep) {
    auto sim = simulate_dataset(rng, default_taxon_names(6), cfg);
    auto p = cfg.params->indel();
    auto base = tree_history_log_density(sim.truth.tree, sim.truth.history, p);
    ASSERT_TRUE(std::isfinite(base));
    for (auto v : sim.truth.tree.internal_nodes()) {
      auto [t2, h2] = reroot_history(sim.truth.tree, sim.truth.history, v);
      EXPECT_NEAR(tree_history_log_density(t2, h2, p), base, 1e-9);
    }
  }
}

TEST(SizeSampling, DeletionSizesFollowTruncatedLaw) {
  auto p = IndelParams::geometric(0.1, 0.4, 0.1);
  auto rng = Rng{31};
  auto n = 6;
  auto counts = std::vector<int>(static_cast<std::size_t>(n + 1), 0);
  auto draws = 200000;
  for (auto i = 0; i < draws; ++i) {
    ++counts[static_cast<std::size_t>(p.sample_deletion_size(rng, n))];
  }
  // sizes weighted by d(l) times the number of feasible positions
  auto weights = std::vector<double>(static_cast<std::size_t>(n + 1), 0.0);
  auto total = 0.0;
  for (auto l = 1; l <= n; ++l) {
    weights[static_cast<std::size_t>(l)] = (n - l + 1) * oracle::geom(l, 0.4);
    total += weights[static_cast<std::size_t>(l)];
  }
  for (auto l = 1; l <= n; ++l) {
    auto prob = weights[static_cast<std::size_t>(l)] / total;
    EXPECT_NEAR(std::exp(p.log_deletion_size_given_length(l, n)), prob, 1e-12);
    auto se = std::sqrt(prob * (1 - prob) / draws);
    EXPECT_NEAR(counts[static_cast<std::size_t>(l)] / static_cast<double>(draws), prob, 4 * se + 1e-12);
  }
}

TEST(SizeSampling, InsertionSizesFollowLaw) {
  auto p = IndelParams{0.05, SizeDistribution::negative_binomial(2.0, 0.5), 0.1};
  auto rng = Rng{37};
  auto draws = 200000;
  auto counts = std::map<int, int>{};
  for (auto i = 0; i < draws; ++i) {
    ++counts[p.sample_insertion_size(rng)];
  }
  for (auto k = 1; k <= 6; ++k) {
    auto prob = p.insertion_size(k);
    auto se = std::sqrt(prob * (1 - prob) / draws);
    EXPECT_NEAR(counts[k] / static_cast<double>(draws), prob, 4 * se);
  }
}

TEST(Parameters, RejectsOutOfDomain) {
  EXPECT_THROW(IndelParams::geometric(0.1, 0.5, 0.0), std::domain_error);
  EXPECT_THROW(IndelParams::geometric(1.0, 0.5, 0.1), std::domain_error);
  EXPECT_THROW(IndelParams::geometric(0.1, 0.0, 0.1), std::domain_error);
}
