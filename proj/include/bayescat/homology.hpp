#pragma once

// Homology implied by a tree history.  Replaying the events from the history
// root gives every residue a lineage id (root residues first, then one fresh
// id per inserted residue).  Residues at different leaves with the same id are
// homologous and share an alignment column.
//
// Column order.  Each inserted residue remembers the residue it was placed
// after (its anchor) at insertion time; root residue i is anchored to i-1.
// The anchors form a forest under a virtual "begin" node, and columns follow a
// preorder walk of that forest in which siblings are visited latest-first by
// (depth of parent node + event time), ties broken by edge preorder index and
// event index.  Along any lineage a later insertion after the same anchor
// lands closer to the anchor, so every row comes out in order.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "bayescat/core_types.hpp"

namespace bayescat {

using LineageId = std::int64_t;

struct LineageReplay {
  // ids at every node, in sequence order
  std::vector<std::vector<LineageId>> node_ids;
  // rank of each id in the canonical column order
  std::vector<std::int64_t> rank;
};

namespace detail {

struct LineageOrigin {
  LineageId anchor;  // -1 for the virtual begin node
  double time;       // cumulative distance from the history root
  int edge_order;    // preorder index of the edge (-1 for root residues)
  int event_index;
};

}  // namespace detail

inline auto replay_lineages(const Tree& tree, const TreeHistory& h) -> LineageReplay {
  auto out = LineageReplay{};
  out.node_ids.resize(static_cast<std::size_t>(tree.num_nodes()));
  auto origins = std::vector<detail::LineageOrigin>{};
  origins.reserve(static_cast<std::size_t>(h.root_length) + static_cast<std::size_t>(h.total_events()) * 2);

  auto& root_ids = out.node_ids[static_cast<std::size_t>(tree.root())];
  for (auto i = 0; i < h.root_length; ++i) {
    root_ids.push_back(i);
    origins.push_back({i - 1, 0.0, -1, 0});
  }

  auto depth = std::vector<double>(static_cast<std::size_t>(tree.num_nodes()), 0.0);
  auto order = tree.preorder();
  for (auto k = std::size_t{1}; k < order.size(); ++k) {
    auto c = order[k];
    auto p = tree.parent(c);
    depth[static_cast<std::size_t>(c)] = depth[static_cast<std::size_t>(p)] + tree.branch_length(c);
    auto seq = out.node_ids[static_cast<std::size_t>(p)];
    const auto& eh = h.edge(c);
    for (auto ev = std::size_t{0}; ev < eh.events.size(); ++ev) {
      const auto& e = eh.events[ev];
      if (e.kind == IndelKind::insertion) {
        if (e.position < 0 || e.position > static_cast<int>(seq.size())) {
          throw std::invalid_argument{"replay_lineages: insertion position out of range"};
        }
        auto anchor = e.position == 0 ? LineageId{-1} : seq[static_cast<std::size_t>(e.position - 1)];
        auto fresh = std::vector<LineageId>{};
        fresh.reserve(static_cast<std::size_t>(e.size));
        for (auto j = 0; j < e.size; ++j) {
          auto id = static_cast<LineageId>(origins.size());
          origins.push_back({anchor, depth[static_cast<std::size_t>(p)] + e.time, static_cast<int>(k), static_cast<int>(ev)});
          fresh.push_back(id);
          anchor = id;
        }
        seq.insert(seq.begin() + e.position, fresh.begin(), fresh.end());
      } else {
        if (e.position < 0 || e.position + e.size > static_cast<int>(seq.size())) {
          throw std::invalid_argument{"replay_lineages: deletion out of range"};
        }
        seq.erase(seq.begin() + e.position, seq.begin() + e.position + e.size);
      }
    }
    out.node_ids[static_cast<std::size_t>(c)] = std::move(seq);
  }

  // Children of each anchor in compressed rows; slot 0 is the virtual begin
  // node.
  auto num_ids = origins.size();
  auto start = std::vector<std::size_t>(num_ids + 2, 0);
  for (const auto& o : origins) {
    ++start[static_cast<std::size_t>(o.anchor + 2)];
  }
  for (auto i = std::size_t{1}; i < start.size(); ++i) {
    start[i] += start[i - 1];
  }
  auto kids = std::vector<LineageId>(num_ids);
  {
    auto fill = start;
    for (auto id = std::size_t{0}; id < num_ids; ++id) {
      kids[fill[static_cast<std::size_t>(origins[id].anchor + 1)]++] = static_cast<LineageId>(id);
    }
  }
  auto later_first = [&](LineageId a, LineageId b) {
    const auto& x = origins[static_cast<std::size_t>(a)];
    const auto& y = origins[static_cast<std::size_t>(b)];
    return std::tuple{-x.time, x.edge_order, x.event_index, a} < std::tuple{-y.time, y.edge_order, y.event_index, b};
  };
  for (auto slot = std::size_t{0}; slot <= num_ids; ++slot) {
    if (start[slot + 1] - start[slot] > 1) {
      std::sort(kids.begin() + static_cast<std::ptrdiff_t>(start[slot]), kids.begin() + static_cast<std::ptrdiff_t>(start[slot + 1]), later_first);
    }
  }
  out.rank.assign(num_ids, -1);
  auto next_rank = std::int64_t{0};
  auto stack = std::vector<LineageId>{};
  auto push_children = [&](std::size_t slot) {
    for (auto i = start[slot + 1]; i-- > start[slot];) {
      stack.push_back(kids[i]);
    }
  };
  push_children(0);
  while (!stack.empty()) {
    auto id = stack.back();
    stack.pop_back();
    out.rank[static_cast<std::size_t>(id)] = next_rank++;
    push_children(static_cast<std::size_t>(id + 1));
  }
  return out;
}

// Alignment of the leaf sequences induced by the history, in canonical column
// order.  Rows are indexed by taxon (leaf node id).
inline auto project_alignment(const Tree& tree, const TreeHistory& h) -> Alignment {
  auto replay = replay_lineages(tree, h);
  auto n = tree.num_taxa();
  // column of a rank = number of ranks below it that reach some leaf
  auto column = std::vector<int>(replay.rank.size() + 1, 0);
  for (auto leaf = 0; leaf < n; ++leaf) {
    for (auto id : replay.node_ids[static_cast<std::size_t>(leaf)]) {
      column[static_cast<std::size_t>(replay.rank[static_cast<std::size_t>(id)]) + 1] = 1;
    }
  }
  for (auto i = std::size_t{1}; i < column.size(); ++i) {
    column[i] += column[i - 1];
  }
  auto num_columns = column.back();

  auto residue_column = std::vector<std::vector<int>>(static_cast<std::size_t>(n));
  for (auto leaf = 0; leaf < n; ++leaf) {
    auto& row = residue_column[static_cast<std::size_t>(leaf)];
    auto prev = -1;
    for (auto id : replay.node_ids[static_cast<std::size_t>(leaf)]) {
      auto r = replay.rank[static_cast<std::size_t>(id)];
      auto col = column[static_cast<std::size_t>(r)];
      if (col <= prev) {
        throw std::logic_error{"project_alignment: row order violated"};
      }
      row.push_back(col);
      prev = col;
    }
  }
  return alignment_from_columns(std::move(residue_column), num_columns);
}

}  // namespace bayescat
