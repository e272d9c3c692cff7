#pragma once

// Forward simulation of the full model: parameters and tree from the prior,
// a root sequence from the equilibrium law, exact indel histories on every
// edge, and HKY substitutions along every residue lineage.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bayescat/core_types.hpp"
#include "bayescat/hky.hpp"
#include "bayescat/homology.hpp"
#include "bayescat/indel_model.hpp"
#include "bayescat/priors.hpp"
#include "bayescat/random.hpp"
#include "bayescat/state.hpp"

namespace bayescat {

// Unconditional indel process on one edge, started from length n0.
inline auto simulate_edge_history(Rng& rng, int n0, double v, const IndelParams& p) -> EdgeHistory {
  if (n0 < 0 || !(v > 0.0)) {
    throw std::invalid_argument{"simulate_edge_history: need n0 >= 0 and v > 0"};
  }
  auto h = EdgeHistory{{}, n0, n0, v};
  auto n = n0;
  auto t = 0.0;
  while (true) {
    auto eta = p.eta(n);
    t += exponential(rng, eta);
    if (!(t < v)) {
      break;
    }
    if (uniform_open01(rng) * eta < (n + 1) * p.lambda()) {
      auto l = p.sample_insertion_size(rng);
      auto pos = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n + 1)));
      h.events.push_back(insertion(t, pos, l, n));
    } else {
      auto l = p.sample_deletion_size(rng, n);
      auto pos = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n - l + 1)));
      h.events.push_back(deletion(t, pos, l, n));
    }
    n = h.events.back().length_after;
  }
  h.child_length = n;
  return h;
}

inline auto sample_equilibrium_length(Rng& rng, double r) -> int {
  // number of failures before the first success
  auto dist = std::geometric_distribution<int>{r};
  return dist(rng);
}

inline auto sample_base(Rng& rng, const std::array<double, 4>& pi) -> char {
  return k_nucleotides[categorical(rng, pi)];
}

struct SimulationConfig {
  PriorConfig prior;
  std::optional<Parameters> params;  // fixed instead of drawn from the prior
  std::optional<Tree> tree;          // fixed topology and branch lengths
  std::optional<int> root_length;    // fixed instead of drawn from q
};

struct SimulatedData {
  std::vector<Sequence> sequences;  // by leaf id
  ModelState truth;
  Alignment alignment;
  std::vector<std::string> node_sequences;  // every node, by node id
};

namespace detail {

// Residues of one node while replaying an edge: the base and the time since
// that base was last fixed (parent node or insertion).
struct LiveResidue {
  int base;
  double born;
};

}  // namespace detail

// Substitutions are drawn once per surviving residue over its whole lifetime
// on the edge, which has the same law as drawing them between indel events.
inline auto simulate_dataset(Rng& rng, const std::vector<std::string>& taxa, const SimulationConfig& cfg) -> SimulatedData {
  if (taxa.size() < 3) {
    throw std::invalid_argument{"simulate_dataset: need at least 3 taxa"};
  }
  auto params = cfg.params ? *cfg.params : sample_parameters(rng, cfg.prior);
  auto tree = Tree{};
  if (cfg.tree) {
    tree = *cfg.tree;
  } else {
    auto draw = random_topology(rng, taxa);
    for (auto e : draw.edges()) {
      auto v = 0.0;
      while (!(v > 0.0)) {
        v = exponential(rng, params.gamma);
      }
      draw.set_branch_length(e, v);
    }
    tree = std::move(draw);
  }
  auto indel = params.indel();
  auto rm = RateMatrix{params.subst};

  auto history = TreeHistory{};
  history.root_length = cfg.root_length ? *cfg.root_length : sample_equilibrium_length(rng, params.r);
  history.edges.resize(static_cast<std::size_t>(tree.num_nodes()));
  auto seqs = std::vector<std::string>(static_cast<std::size_t>(tree.num_nodes()));
  auto& root_seq = seqs[static_cast<std::size_t>(tree.root())];
  for (auto i = 0; i < history.root_length; ++i) {
    root_seq.push_back(sample_base(rng, params.subst.pi));
  }

  for (auto node : tree.preorder()) {
    if (node == tree.root()) {
      continue;
    }
    const auto& parent_seq = seqs[static_cast<std::size_t>(tree.parent(node))];
    auto v = tree.branch_length(node);
    auto h = simulate_edge_history(rng, static_cast<int>(parent_seq.size()), v, indel);
    auto live = std::vector<detail::LiveResidue>{};
    for (auto c : parent_seq) {
      live.push_back({nucleotide_index(c), 0.0});
    }
    for (const auto& e : h.events) {
      auto at = live.begin() + e.position;
      if (e.kind == IndelKind::insertion) {
        auto fresh = std::vector<detail::LiveResidue>{};
        for (auto k = 0; k < e.size; ++k) {
          fresh.push_back({nucleotide_index(sample_base(rng, params.subst.pi)), e.time});
        }
        live.insert(at, fresh.begin(), fresh.end());
      } else {
        live.erase(at, at + e.size);
      }
    }
    auto& out = seqs[static_cast<std::size_t>(node)];
    for (const auto& res : live) {
      auto probs = rm.transition_probabilities(v - res.born);
      out.push_back(k_nucleotides[categorical(rng, probs[static_cast<std::size_t>(res.base)])]);
    }
    history.edge(node) = std::move(h);
  }

  auto data = SimulatedData{};
  for (auto leaf = 0; leaf < tree.num_taxa(); ++leaf) {
    data.sequences.push_back({tree.taxon(leaf), seqs[static_cast<std::size_t>(leaf)]});
  }
  data.alignment = project_alignment(tree, history);
  data.node_sequences = std::move(seqs);
  data.truth = ModelState{std::move(tree), std::move(history), params};
  return data;
}

inline auto default_taxon_names(int n) -> std::vector<std::string> {
  auto out = std::vector<std::string>{};
  for (auto i = 0; i < n; ++i) {
    out.push_back("t" + std::to_string(i + 1));
  }
  return out;
}

}  // namespace bayescat
