#include <gtest/gtest.h>

#include "bayescat/core_types.hpp"
#include "bayescat/homology.hpp"
#include "bayescat/simulator.hpp"
#include "oracles.hpp"

using namespace bayescat;

namespace {

// Root 4 with children X=5, c=2, d=3; X has leaves a=0, b=1.
auto four_taxon_tree() -> Tree {
  return Tree{{"a", "b", "c", "d"}, {5, 5, 4, 4, k_no_node, 4}, {0.1, 0.1, 0.2, 0.3, 0.0, 0.15}};
}

auto empty_edge(int n, double v) -> EdgeHistory { return EdgeHistory{{}, n, n, v}; }

// Root of length 5; the edge to c inserts three residues after position 3 then
// deletes three starting at position 5; the edge to X inserts two after 1.
auto worked_history(const Tree& t) -> TreeHistory {
  auto h = TreeHistory{5, std::vector<EdgeHistory>(6)};
  h.edge(2) = EdgeHistory{{insertion(0.1, 3, 3, 5), deletion(0.15, 5, 3, 8)}, 5, 5, 0.2};
  h.edge(5) = EdgeHistory{{insertion(0.05, 1, 2, 5)}, 5, 7, 0.15};
  h.edge(0) = empty_edge(7, t.branch_length(0));
  h.edge(1) = empty_edge(7, t.branch_length(1));
  h.edge(3) = empty_edge(5, t.branch_length(3));
  return h;
}

}  // namespace

TEST(EdgeHistoryValidation, EmptyHistoryIsValid) {
  EXPECT_FALSE(validate_edge_history(empty_edge(5, 0.2)).has_value());
}

TEST(EdgeHistoryValidation, InsertThenDeleteIsValid) {
  auto h = EdgeHistory{{insertion(0.1, 3, 3, 5), deletion(0.15, 5, 3, 8)}, 5, 5, 0.2};
  EXPECT_FALSE(validate_edge_history(h).has_value());
}

TEST(EdgeHistoryValidation, OversizedDeletionReportsEvent) {
  auto h = EdgeHistory{{deletion(0.1, 4, 3, 5)}, 5, 2, 0.2};
  auto bad = validate_edge_history(h);
  ASSERT_TRUE(bad.has_value());
  EXPECT_EQ(bad->event_index, 0U);
}

TEST(EdgeHistoryValidation, RejectsBadTimesAndLengths) {
  auto late = EdgeHistory{{insertion(0.3, 0, 1, 2)}, 2, 3, 0.2};
  EXPECT_TRUE(validate_edge_history(late).has_value());
  auto unordered = EdgeHistory{{insertion(0.1, 0, 1, 2), insertion(0.1, 0, 1, 3)}, 2, 4, 0.2};
  auto bad = validate_edge_history(unordered);
  ASSERT_TRUE(bad.has_value());
  EXPECT_EQ(bad->event_index, 1U);
  auto wrong_end = EdgeHistory{{insertion(0.1, 0, 1, 2)}, 2, 2, 0.2};
  EXPECT_TRUE(validate_edge_history(wrong_end).has_value());
  auto position = EdgeHistory{{insertion(0.1, 3, 1, 2)}, 2, 3, 0.2};
  EXPECT_TRUE(validate_edge_history(position).has_value());
}

TEST(EdgeHistoryValidation, ReverseIsValidAndInvolutive) {
  auto h = EdgeHistory{{insertion(0.1, 3, 3, 5), deletion(0.15, 5, 3, 8)}, 5, 5, 0.2};
  auto r = reverse_edge_history(h);
  EXPECT_FALSE(validate_edge_history(r).has_value());
  auto rr = reverse_edge_history(r);
  ASSERT_EQ(rr.events.size(), h.events.size());
  for (auto i = std::size_t{0}; i < h.events.size(); ++i) {
    EXPECT_NEAR(rr.events[i].time, h.events[i].time, 1e-15);
    EXPECT_EQ(rr.events[i].kind, h.events[i].kind);
    EXPECT_EQ(rr.events[i].position, h.events[i].position);
    EXPECT_EQ(rr.events[i].size, h.events[i].size);
  }
}

TEST(TreeHistory, WorkedExampleValidatesAndProjects) {
  auto t = four_taxon_tree();
  auto h = worked_history(t);
  auto lengths = std::vector<int>{7, 7, 5, 5};
  ASSERT_FALSE(validate_tree_history(t, h, &lengths).has_value());
  auto aln = project_alignment(t, h);
  EXPECT_FALSE(check_alignment(aln, lengths).has_value());
  // 5 root residues, 2 surviving right-edge insertions, 2 left-edge insertions
  EXPECT_EQ(aln.num_columns(), 9);
  EXPECT_EQ(oracle::homologous_pairs(aln), oracle::homologous_pairs_from_ids(oracle::leaf_lineage_ids(t, h)));
  // left insertions shared by a and b only
  auto col = aln.residue_column[0][1];
  EXPECT_EQ(aln.cells[1][static_cast<std::size_t>(col)], 1);
  EXPECT_EQ(aln.cells[2][static_cast<std::size_t>(col)], k_gap);
  EXPECT_EQ(aln.cells[3][static_cast<std::size_t>(col)], k_gap);
  // right insertions present in c only
  col = aln.residue_column[2][3];
  for (auto other : {0, 1, 3}) {
    EXPECT_EQ(aln.cells[static_cast<std::size_t>(other)][static_cast<std::size_t>(col)], k_gap);
  }
}

TEST(TreeHistory, RejectsLeafLengthMismatch) {
  auto t = four_taxon_tree();
  auto h = worked_history(t);
  auto lengths = std::vector<int>{7, 7, 5, 6};
  EXPECT_TRUE(validate_tree_history(t, h, &lengths).has_value());
  h.edge(0).parent_length = 6;
  EXPECT_TRUE(validate_tree_history(t, h).has_value());
}

TEST(Homology, IdentityHistoryGivesUngappedAlignment) {
  auto t = four_taxon_tree();
  auto h = TreeHistory{6, std::vector<EdgeHistory>(6)};
  for (auto e : t.edges()) {
    h.edge(e) = empty_edge(6, t.branch_length(e));
  }
  auto aln = project_alignment(t, h);
  ASSERT_EQ(aln.num_columns(), 6);
  for (auto taxon = 0; taxon < 4; ++taxon) {
    for (auto c = 0; c < 6; ++c) {
      EXPECT_EQ(aln.cells[static_cast<std::size_t>(taxon)][static_cast<std::size_t>(c)], c);
    }
  }
}

TEST(Homology, LeadingInsertionGapsOtherTaxa) {
  auto t = four_taxon_tree();
  auto h = TreeHistory{3, std::vector<EdgeHistory>(6)};
  for (auto e : t.edges()) {
    h.edge(e) = empty_edge(3, t.branch_length(e));
  }
  h.edge(3) = EdgeHistory{{insertion(0.1, 0, 2, 3)}, 3, 5, t.branch_length(3)};
  auto aln = project_alignment(t, h);
  ASSERT_EQ(aln.num_columns(), 5);
  for (auto c = 0; c < 2; ++c) {
    EXPECT_EQ(aln.cells[3][static_cast<std::size_t>(c)], c);
    for (auto other = 0; other < 3; ++other) {
      EXPECT_EQ(aln.cells[static_cast<std::size_t>(other)][static_cast<std::size_t>(c)], k_gap);
    }
  }
}

TEST(Homology, ProjectionMatchesLineageOracleOnSimulatedHistories) {
  auto rng = Rng{11};
  auto cfg = SimulationConfig{};
  cfg.params = Parameters{};
  cfg.params->r = 0.05;
  cfg.params->lambda = 0.5;
  cfg.params->r_d = 0.4;
  cfg.params->gamma = 2.0;
  for (auto rep = 0; rep < 300; ++rep) {
    auto taxa = default_taxon_names(3 + rep % 5);
    auto sim = simulate_dataset(rng, taxa, cfg);
    const auto& t = sim.truth.tree;
    const auto& h = sim.truth.history;
    auto lengths = std::vector<int>{};
    for (const auto& s : sim.sequences) {
      lengths.push_back(s.length());
    }
    ASSERT_FALSE(validate_tree_history(t, h, &lengths).has_value());
    auto aln = project_alignment(t, h);
    ASSERT_FALSE(check_alignment(aln, lengths).has_value());
    EXPECT_EQ(oracle::homologous_pairs(aln), oracle::homologous_pairs_from_ids(oracle::leaf_lineage_ids(t, h)));
    // the column order is a function of the history alone
    EXPECT_EQ(aln, sim.alignment);
  }
}

TEST(Homology, ProjectionIsInvariantUnderRerooting) {
  auto rng = Rng{5};
  auto cfg = SimulationConfig{};
  cfg.params = Parameters{};
  cfg.params->lambda = 0.4;
  cfg.params->r = 0.05;
  cfg.params->gamma = 2.0;
  for (auto rep = 0; rep < 50; ++rep) {
    auto sim = simulate_dataset(rng, default_taxon_names(5), cfg);
    const auto& t = sim.truth.tree;
    auto pairs = oracle::homologous_pairs(project_alignment(t, sim.truth.history));
    for (auto v : t.internal_nodes()) {
      auto [t2, h2] = reroot_history(t, sim.truth.history, v);
      ASSERT_FALSE(validate_tree_history(t2, h2).has_value());
      EXPECT_EQ(oracle::homologous_pairs(project_alignment(t2, h2)), pairs);
    }
  }
}

TEST(Alignment, CheckRejectsBrokenAlignments) {
  auto good = alignment_from_columns({{0, 1}, {1, 2}}, 3);
  EXPECT_FALSE(check_alignment(good, {2, 2}).has_value());
  auto empty_column = alignment_from_columns({{0, 1}, {1, 3}}, 4);
  EXPECT_TRUE(check_alignment(empty_column, {2, 2}).has_value());
  auto out_of_order = alignment_from_columns({{1, 0}, {0, 2}}, 3);
  EXPECT_TRUE(check_alignment(out_of_order, {2, 2}).has_value());
}

TEST(Alignment, RowsReproduceSequences) {
  auto aln = alignment_from_columns({{0, 2}, {1, 2}}, 3);
  auto seqs = std::vector<Sequence>{{"a", "AC"}, {"b", "GT"}};
  auto rows = alignment_rows(aln, seqs);
  EXPECT_EQ(rows[0], "A-C");
  EXPECT_EQ(rows[1], "-GT");
}

TEST(Tree, RandomTopologiesAreValidAndRerootable) {
  auto rng = Rng{3};
  for (auto rep = 0; rep < 200; ++rep) {
    auto t = random_topology(rng, default_taxon_names(4 + rep % 6));
    for (auto e : t.edges()) {
      t.set_branch_length(e, 0.1 + 0.01 * e);
    }
    EXPECT_NO_THROW(Tree(t.taxa(), t.parents(), t.branch_lengths()));
    auto key = topology_key(t);
    for (auto v : t.internal_nodes()) {
      auto r = reroot_tree(t, v);
      EXPECT_EQ(r.root(), v);
      EXPECT_EQ(topology_key(r), key);
      EXPECT_NEAR(r.total_length(), t.total_length(), 1e-12);
    }
  }
}

TEST(Tree, TopologyCountsMatchDoubleFactorial) {
  EXPECT_EQ(num_unrooted_topologies(3), 1.0);
  EXPECT_EQ(num_unrooted_topologies(4), 3.0);
  EXPECT_EQ(num_unrooted_topologies(5), 15.0);
  EXPECT_EQ(num_unrooted_topologies(6), 105.0);
}

TEST(Tree, SplitsAreUnordered) {
  auto t = four_taxon_tree();
  auto s = edge_split(t, 5);
  EXPECT_FALSE(s.is_trivial());
  auto r = reroot_tree(t, 5);
  EXPECT_EQ(edge_split(r, 4), s);
}
