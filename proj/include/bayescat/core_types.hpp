#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bayescat/tree.hpp"

namespace bayescat {

// ---------------------------------------------------------------------------
// Sequences
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> k_nucleotides = {'A', 'C', 'G', 'T'};

// Index of an (uppercase) nucleotide, or -1 for anything else.
inline auto nucleotide_index(char c) -> int {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
    default: return -1;
  }
}

struct Sequence {
  std::string name;
  std::string bases;  // only A, C, G, T

  auto length() const -> int { return static_cast<int>(bases.size()); }
  friend auto operator==(const Sequence&, const Sequence&) -> bool = default;
};

inline auto check_sequence(const Sequence& s) -> void {
  for (auto i = std::size_t{0}; i < s.bases.size(); ++i) {
    if (nucleotide_index(s.bases[i]) < 0) {
      throw std::invalid_argument{"sequence '" + s.name + "' has illegal residue '" +
                                  std::string(1, s.bases[i]) + "' at base " + std::to_string(i + 1)};
    }
  }
}

// ---------------------------------------------------------------------------
// Indel histories
//
// A length-n sequence has positions 0..n; base i sits between positions i-1
// and i.  An insertion at p adds bases right after position p; a deletion at
// p of size l removes the bases between positions p and p+l.
// ---------------------------------------------------------------------------

enum class IndelKind : std::uint8_t { insertion, deletion };

struct IndelEvent {
  double time = 0.0;  // distance from the parent node
  IndelKind kind = IndelKind::insertion;
  int position = 0;
  int size = 1;
  int length_after = 0;

  friend auto operator==(const IndelEvent&, const IndelEvent&) -> bool = default;
};

inline auto insertion(double t, int p, int l, int length_before) -> IndelEvent {
  return {t, IndelKind::insertion, p, l, length_before + l};
}

inline auto deletion(double t, int p, int l, int length_before) -> IndelEvent {
  return {t, IndelKind::deletion, p, l, length_before - l};
}

struct EdgeHistory {
  std::vector<IndelEvent> events;  // strictly increasing times
  int parent_length = 0;
  int child_length = 0;
  double edge_length = 0.0;

  auto num_events() const -> int { return static_cast<int>(events.size()); }
  friend auto operator==(const EdgeHistory&, const EdgeHistory&) -> bool = default;
};

struct HistoryViolation {
  std::size_t event_index;  // events.size() for violations not tied to an event
  std::string message;
};

// Returns nullopt when every EdgeHistory invariant holds, otherwise the first
// violated constraint.
inline auto validate_edge_history(const EdgeHistory& h) -> std::optional<HistoryViolation> {
  auto fail = [](std::size_t i, std::string msg) { return std::optional<HistoryViolation>{HistoryViolation{i, std::move(msg)}}; };
  if (!(h.edge_length >= 0.0) || !std::isfinite(h.edge_length)) {
    return fail(h.events.size(), "edge length must be finite and nonnegative");
  }
  if (h.parent_length < 0 || h.child_length < 0) {
    return fail(h.events.size(), "sequence lengths must be nonnegative");
  }
  auto n = h.parent_length;
  auto t_prev = 0.0;
  for (auto i = std::size_t{0}; i < h.events.size(); ++i) {
    const auto& e = h.events[i];
    if (!(e.time > t_prev) || !(e.time < h.edge_length)) {
      return fail(i, "event time must lie strictly inside (previous time, edge length)");
    }
    if (e.size < 1) {
      return fail(i, "fragment size must be at least 1");
    }
    if (e.kind == IndelKind::insertion) {
      if (e.position < 0 || e.position > n) {
        return fail(i, "insertion position outside 0..n");
      }
      n += e.size;
    } else {
      if (e.position < 0 || e.position > n - 1) {
        return fail(i, "deletion position outside 0..n-1");
      }
      if (e.size > n - e.position) {
        return fail(i, "deletion size exceeds the residues right of the position");
      }
      n -= e.size;
    }
    if (e.length_after != n) {
      return fail(i, "recorded length after event is inconsistent");
    }
    t_prev = e.time;
  }
  if (n != h.child_length) {
    return fail(h.events.size(), "history does not end at the child length");
  }
  return std::nullopt;
}

// Time-reversal of an edge history: insertions become deletions at the same
// position and vice versa, with times mirrored around the edge midpoint.
inline auto reverse_edge_history(const EdgeHistory& h) -> EdgeHistory {
  auto out = EdgeHistory{{}, h.child_length, h.parent_length, h.edge_length};
  out.events.reserve(h.events.size());
  for (auto i = h.events.size(); i-- > 0;) {
    const auto& e = h.events[i];
    auto before = (i == 0) ? h.parent_length : h.events[i - 1].length_after;
    auto kind = e.kind == IndelKind::insertion ? IndelKind::deletion : IndelKind::insertion;
    out.events.push_back({h.edge_length - e.time, kind, e.position, e.size, before});
  }
  return out;
}

// Per-edge histories for a whole tree, keyed by edge child node; the entry at
// the history root is unused.
struct TreeHistory {
  int root_length = 0;
  std::vector<EdgeHistory> edges;

  auto edge(NodeId child) const -> const EdgeHistory& { return edges[static_cast<std::size_t>(child)]; }
  auto edge(NodeId child) -> EdgeHistory& { return edges[static_cast<std::size_t>(child)]; }

  auto total_events() const -> int {
    auto k = 0;
    for (const auto& e : edges) {
      k += e.num_events();
    }
    return k;
  }

  friend auto operator==(const TreeHistory&, const TreeHistory&) -> bool = default;
};

// Sequence length at every node implied by the root length and the edge
// histories (child lengths are read from the histories).
inline auto node_lengths(const Tree& tree, const TreeHistory& h) -> std::vector<int> {
  auto out = std::vector<int>(static_cast<std::size_t>(tree.num_nodes()), 0);
  out[static_cast<std::size_t>(tree.root())] = h.root_length;
  for (auto e : tree.edges()) {
    out[static_cast<std::size_t>(e)] = h.edge(e).child_length;
  }
  return out;
}

// Checks every edge history plus the cross-edge consistency conditions;
// `leaf_lengths`, when given, must match the lengths implied at the leaves.
inline auto validate_tree_history(const Tree& tree, const TreeHistory& h,
                                  const std::vector<int>* leaf_lengths = nullptr) -> std::optional<std::string> {
  if (static_cast<int>(h.edges.size()) != tree.num_nodes()) {
    return "history has the wrong number of edge slots";
  }
  if (h.root_length < 0) {
    return "negative root length";
  }
  auto lengths = node_lengths(tree, h);
  for (auto e : tree.edges()) {
    const auto& eh = h.edge(e);
    if (auto bad = validate_edge_history(eh)) {
      return "edge " + std::to_string(e) + ", event " + std::to_string(bad->event_index) + ": " + bad->message;
    }
    if (eh.parent_length != lengths[static_cast<std::size_t>(tree.parent(e))]) {
      return "edge " + std::to_string(e) + " starts from the wrong parent length";
    }
    if (eh.edge_length != tree.branch_length(e)) {
      return "edge " + std::to_string(e) + " history length differs from the branch length";
    }
  }
  if (leaf_lengths != nullptr) {
    for (auto leaf = 0; leaf < tree.num_taxa(); ++leaf) {
      if (lengths[static_cast<std::size_t>(leaf)] != (*leaf_lengths)[static_cast<std::size_t>(leaf)]) {
        return "leaf " + tree.taxon(leaf) + " length disagrees with its sequence";
      }
    }
  }
  return std::nullopt;
}

// Re-expresses a history relative to another internal root; the density is
// unchanged by time reversibility.
inline auto reroot_history(const Tree& tree, const TreeHistory& h, NodeId new_root) -> std::pair<Tree, TreeHistory> {
  auto out_tree = reroot_tree(tree, new_root);
  auto out = h;
  auto path = std::vector<NodeId>{};
  for (auto cur = new_root; cur != k_no_node; cur = tree.parent(cur)) {
    path.push_back(cur);
  }
  for (auto i = path.size() - 1; i > 0; --i) {
    out.edge(path[i]) = reverse_edge_history(h.edge(path[i - 1]));
  }
  out.edge(new_root) = EdgeHistory{};
  out.root_length = node_lengths(tree, h)[static_cast<std::size_t>(new_root)];
  return {std::move(out_tree), std::move(out)};
}

// ---------------------------------------------------------------------------
// Alignments
// ---------------------------------------------------------------------------

inline constexpr int k_gap = -1;

struct Alignment {
  // cells[taxon][column]: base index within the taxon's sequence, or k_gap.
  std::vector<std::vector<int>> cells;
  // residue_column[taxon][base]: column holding that base.
  std::vector<std::vector<int>> residue_column;

  auto num_taxa() const -> int { return static_cast<int>(cells.size()); }
  auto num_columns() const -> int { return cells.empty() ? 0 : static_cast<int>(cells.front().size()); }

  friend auto operator==(const Alignment&, const Alignment&) -> bool = default;
};

// Builds an Alignment from per-taxon column assignments.
inline auto alignment_from_columns(std::vector<std::vector<int>> residue_column, int num_columns) -> Alignment {
  auto a = Alignment{};
  a.cells.assign(residue_column.size(), std::vector<int>(static_cast<std::size_t>(num_columns), k_gap));
  for (auto t = std::size_t{0}; t < residue_column.size(); ++t) {
    for (auto b = std::size_t{0}; b < residue_column[t].size(); ++b) {
      a.cells[t][static_cast<std::size_t>(residue_column[t][b])] = static_cast<int>(b);
    }
  }
  a.residue_column = std::move(residue_column);
  return a;
}

// Returns a description of the first broken Alignment invariant.
inline auto check_alignment(const Alignment& a, const std::vector<int>& lengths) -> std::optional<std::string> {
  if (a.residue_column.size() != lengths.size() || a.cells.size() != lengths.size()) {
    return "row count mismatch";
  }
  auto occupied = std::vector<bool>(static_cast<std::size_t>(a.num_columns()), false);
  for (auto t = std::size_t{0}; t < lengths.size(); ++t) {
    if (static_cast<int>(a.residue_column[t].size()) != lengths[t]) {
      return "row " + std::to_string(t) + " has the wrong number of residues";
    }
    auto prev = -1;
    for (auto b = std::size_t{0}; b < a.residue_column[t].size(); ++b) {
      auto c = a.residue_column[t][b];
      if (c <= prev || c >= a.num_columns()) {
        return "row " + std::to_string(t) + " columns are not strictly increasing";
      }
      if (a.cells[t][static_cast<std::size_t>(c)] != static_cast<int>(b)) {
        return "cell matrix disagrees with residue map";
      }
      occupied[static_cast<std::size_t>(c)] = true;
      prev = c;
    }
    auto filled = 0;
    for (auto cell : a.cells[t]) {
      filled += (cell != k_gap) ? 1 : 0;
    }
    if (filled != lengths[t]) {
      return "row " + std::to_string(t) + " has stray cells";
    }
  }
  for (auto c = std::size_t{0}; c < occupied.size(); ++c) {
    if (!occupied[c]) {
      return "column " + std::to_string(c) + " is all gaps";
    }
  }
  return std::nullopt;
}

inline auto alignment_rows(const Alignment& a, const std::vector<Sequence>& seqs) -> std::vector<std::string> {
  auto rows = std::vector<std::string>{};
  for (auto t = std::size_t{0}; t < a.cells.size(); ++t) {
    auto row = std::string{};
    row.reserve(a.cells[t].size());
    for (auto cell : a.cells[t]) {
      row.push_back(cell == k_gap ? '-' : seqs[t].bases[static_cast<std::size_t>(cell)]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Substitution parameters
// ---------------------------------------------------------------------------

struct SubstParams {
  double kappa = 1.0;
  std::array<double, 4> pi = {0.25, 0.25, 0.25, 0.25};

  auto valid() const -> bool {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
      return false;
    }
    auto s = 0.0;
    for (auto p : pi) {
      if (!(p > 0.0)) {
        return false;
      }
      s += p;
    }
    return std::abs(s - 1.0) <= 1e-12;
  }

  friend auto operator==(const SubstParams&, const SubstParams&) -> bool = default;
};

}  // namespace bayescat
