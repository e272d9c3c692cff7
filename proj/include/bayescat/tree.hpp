#pragma once

// Unrooted bifurcating trees stored with a designated internal node
// (`root()`) that directs every edge from parent to child.  The root carries
// no biological meaning; it only orients indel histories.
//
// Node numbering: leaves are 0..n-1 in taxon order, internal nodes are
// n..2n-3.  Every edge is identified by its child node.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bayescat/random.hpp"

namespace bayescat {

using NodeId = int;
inline constexpr NodeId k_no_node = -1;

class Tree {
 public:
  Tree() = default;

  // `parent[root] == k_no_node`; `branch_lengths` is indexed by node and the
  // root entry is ignored.
  Tree(std::vector<std::string> taxa, std::vector<NodeId> parent, std::vector<double> branch_lengths)
      : taxa_{std::move(taxa)}, parent_{std::move(parent)}, length_{std::move(branch_lengths)} {
    rebuild();
    validate();
  }

  auto num_taxa() const -> int { return static_cast<int>(taxa_.size()); }
  auto num_nodes() const -> int { return static_cast<int>(parent_.size()); }
  auto num_edges() const -> int { return num_nodes() - 1; }
  auto root() const -> NodeId { return root_; }
  auto taxa() const -> const std::vector<std::string>& { return taxa_; }
  auto taxon(NodeId leaf) const -> const std::string& { return taxa_.at(static_cast<std::size_t>(leaf)); }

  auto is_leaf(NodeId n) const -> bool { return n < num_taxa(); }
  auto parent(NodeId n) const -> NodeId { return parent_[static_cast<std::size_t>(n)]; }
  auto children(NodeId n) const -> std::span<const NodeId> { return children_[static_cast<std::size_t>(n)]; }
  auto branch_length(NodeId child) const -> double { return length_[static_cast<std::size_t>(child)]; }
  auto parents() const -> const std::vector<NodeId>& { return parent_; }
  auto branch_lengths() const -> const std::vector<double>& { return length_; }

  auto set_branch_length(NodeId child, double v) -> void {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument{"branch length must be positive and finite"};
    }
    length_[static_cast<std::size_t>(child)] = v;
  }

  // Replaces the parent pointers and lengths wholesale (used by topology
  // moves), then re-derives child lists and re-checks the shape.
  auto reshape(std::vector<NodeId> parent, std::vector<double> lengths) -> void {
    parent_ = std::move(parent);
    length_ = std::move(lengths);
    rebuild();
    validate();
  }

  // Every non-root node, i.e. every edge, in preorder.
  auto edges() const -> std::vector<NodeId> {
    auto out = preorder();
    out.erase(out.begin());
    return out;
  }

  auto preorder() const -> std::vector<NodeId> {
    auto out = std::vector<NodeId>{};
    out.reserve(parent_.size());
    auto stack = std::vector<NodeId>{root_};
    while (!stack.empty()) {
      auto n = stack.back();
      stack.pop_back();
      out.push_back(n);
      auto kids = children(n);
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
        stack.push_back(*it);
      }
    }
    return out;
  }

  auto postorder() const -> std::vector<NodeId> {
    auto out = preorder();
    std::reverse(out.begin(), out.end());
    return out;
  }

  auto internal_nodes() const -> std::vector<NodeId> {
    auto out = std::vector<NodeId>{};
    for (auto n = num_taxa(); n < num_nodes(); ++n) {
      out.push_back(n);
    }
    return out;
  }

  // True when `n` lies in the subtree hanging below `top` (inclusive).
  auto in_subtree(NodeId n, NodeId top) const -> bool {
    for (auto cur = n; cur != k_no_node; cur = parent(cur)) {
      if (cur == top) {
        return true;
      }
    }
    return false;
  }

  auto leaves_below(NodeId top) const -> std::vector<NodeId> {
    auto out = std::vector<NodeId>{};
    auto stack = std::vector<NodeId>{top};
    while (!stack.empty()) {
      auto n = stack.back();
      stack.pop_back();
      if (is_leaf(n)) {
        out.push_back(n);
      }
      for (auto c : children(n)) {
        stack.push_back(c);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  auto total_length() const -> double {
    auto s = 0.0;
    for (auto e : edges()) {
      s += branch_length(e);
    }
    return s;
  }

  friend auto operator==(const Tree& a, const Tree& b) -> bool {
    return a.taxa_ == b.taxa_ && a.parent_ == b.parent_ && a.root_ == b.root_ && a.edge_lengths_equal(b);
  }

 private:
  auto edge_lengths_equal(const Tree& other) const -> bool {
    for (auto n = 0; n < num_nodes(); ++n) {
      if (n != root_ && length_[static_cast<std::size_t>(n)] != other.length_[static_cast<std::size_t>(n)]) {
        return false;
      }
    }
    return true;
  }

  auto rebuild() -> void {
    children_.assign(parent_.size(), {});
    root_ = k_no_node;
    for (auto n = 0; n < static_cast<int>(parent_.size()); ++n) {
      auto p = parent_[static_cast<std::size_t>(n)];
      if (p == k_no_node) {
        if (root_ != k_no_node) {
          throw std::invalid_argument{"tree has more than one root"};
        }
        root_ = n;
      } else {
        if (p < 0 || p >= static_cast<int>(parent_.size())) {
          throw std::invalid_argument{"parent index out of range"};
        }
        children_[static_cast<std::size_t>(p)].push_back(n);
      }
    }
    if (root_ == k_no_node) {
      throw std::invalid_argument{"tree has no root"};
    }
  }

  auto validate() const -> void {
    auto n = num_taxa();
    if (n < 3) {
      throw std::invalid_argument{"a tree needs at least 3 taxa"};
    }
    if (num_nodes() != 2 * n - 2 || length_.size() != parent_.size()) {
      throw std::invalid_argument{"tree must have 2n-2 nodes and one length per node"};
    }
    if (is_leaf(root_)) {
      throw std::invalid_argument{"history root must be an internal node"};
    }
    for (auto v = 0; v < num_nodes(); ++v) {
      auto degree = children(v).size() + (v == root_ ? 0 : 1);
      if (is_leaf(v) ? degree != 1 : degree != 3) {
        throw std::invalid_argument{"node " + std::to_string(v) + " has the wrong degree"};
      }
      if (v != root_) {
        auto len = length_[static_cast<std::size_t>(v)];
        if (!(len > 0.0) || !std::isfinite(len)) {
          throw std::invalid_argument{"branch lengths must be positive"};
        }
      }
    }
    if (static_cast<int>(preorder().size()) != num_nodes()) {
      throw std::invalid_argument{"tree is not connected"};
    }
  }

  std::vector<std::string> taxa_;
  std::vector<NodeId> parent_;
  std::vector<double> length_;
  std::vector<std::vector<NodeId>> children_;
  NodeId root_ = k_no_node;
};

// A bipartition of the taxa, stored as the side that excludes taxon 0 so
// that complementary descriptions compare equal.
class Split {
 public:
  Split() = default;

  Split(int num_taxa, std::span<const NodeId> side) : n_{num_taxa}, words_((static_cast<std::size_t>(num_taxa) + 63) / 64, 0) {
    for (auto t : side) {
      words_[static_cast<std::size_t>(t) / 64] |= std::uint64_t{1} << (static_cast<std::size_t>(t) % 64);
    }
    if (contains(0)) {
      for (auto i = 0; i < n_; ++i) {
        words_[static_cast<std::size_t>(i) / 64] ^= std::uint64_t{1} << (static_cast<std::size_t>(i) % 64);
      }
    }
  }

  auto contains(int taxon) const -> bool {
    return (words_[static_cast<std::size_t>(taxon) / 64] >> (static_cast<std::size_t>(taxon) % 64)) & 1U;
  }

  auto size() const -> int {
    auto c = 0;
    for (auto i = 0; i < n_; ++i) {
      c += contains(i) ? 1 : 0;
    }
    return c;
  }

  // External splits separate a single taxon from the rest.
  auto is_trivial() const -> bool {
    auto k = size();
    return k <= 1 || k >= n_ - 1;
  }

  auto num_taxa() const -> int { return n_; }

  // "A,B | C,D,E" with the taxon-0 side first.
  auto describe(const std::vector<std::string>& names) const -> std::string {
    auto left = std::string{};
    auto right = std::string{};
    for (auto i = 0; i < n_; ++i) {
      auto& side = contains(i) ? right : left;
      if (!side.empty()) {
        side += ",";
      }
      side += names[static_cast<std::size_t>(i)];
    }
    return left + " | " + right;
  }

  // '*' for the side without taxon 0, '.' otherwise.
  auto pattern() const -> std::string {
    auto s = std::string(static_cast<std::size_t>(n_), '.');
    for (auto i = 0; i < n_; ++i) {
      if (contains(i)) {
        s[static_cast<std::size_t>(i)] = '*';
      }
    }
    return s;
  }

  auto operator<=>(const Split&) const = default;

 private:
  int n_ = 0;
  std::vector<std::uint64_t> words_;
};

inline auto edge_split(const Tree& tree, NodeId child) -> Split {
  auto below = tree.leaves_below(child);
  return Split{tree.num_taxa(), below};
}

// Splits of every edge, indexed by edge child node (root entry is empty).
inline auto all_edge_splits(const Tree& tree) -> std::vector<Split> {
  auto out = std::vector<Split>(static_cast<std::size_t>(tree.num_nodes()));
  for (auto e : tree.edges()) {
    out[static_cast<std::size_t>(e)] = edge_split(tree, e);
  }
  return out;
}

// Sorted nontrivial splits: a canonical key for the unrooted topology.
inline auto topology_key(const Tree& tree) -> std::vector<Split> {
  auto out = std::vector<Split>{};
  for (auto e : tree.edges()) {
    auto s = edge_split(tree, e);
    if (!s.is_trivial()) {
      out.push_back(std::move(s));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline auto num_unrooted_topologies(int num_taxa) -> double {
  auto count = 1.0;
  for (auto k = 3; k <= 2 * num_taxa - 5; k += 2) {
    count *= k;
  }
  return count;
}

// Uniform unrooted topology by random stepwise addition, with the history
// root placed on a uniformly chosen internal node.  Branch lengths are left
// at 1 for the caller to fill in.
inline auto random_topology(Rng& rng, std::vector<std::string> taxa) -> Tree {
  auto n = static_cast<int>(taxa.size());
  if (n < 3) {
    throw std::invalid_argument{"random_topology: need at least 3 taxa"};
  }
  // Undirected edge list; start with the 3-star around internal node n.
  auto edges = std::vector<std::pair<NodeId, NodeId>>{{n, 0}, {n, 1}, {n, 2}};
  auto next_internal = n + 1;
  for (auto leaf = 3; leaf < n; ++leaf) {
    auto k = uniform_index(rng, edges.size());
    auto [a, b] = edges[k];
    auto mid = next_internal++;
    edges[k] = {a, mid};
    edges.emplace_back(mid, b);
    edges.emplace_back(mid, leaf);
  }
  auto num_nodes = 2 * n - 2;
  auto root = n + static_cast<NodeId>(uniform_index(rng, static_cast<std::size_t>(n - 2)));
  auto adjacency = std::vector<std::vector<NodeId>>(static_cast<std::size_t>(num_nodes));
  for (auto [a, b] : edges) {
    adjacency[static_cast<std::size_t>(a)].push_back(b);
    adjacency[static_cast<std::size_t>(b)].push_back(a);
  }
  auto parent = std::vector<NodeId>(static_cast<std::size_t>(num_nodes), k_no_node);
  auto seen = std::vector<bool>(static_cast<std::size_t>(num_nodes), false);
  auto stack = std::vector<NodeId>{root};
  seen[static_cast<std::size_t>(root)] = true;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (auto w : adjacency[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        parent[static_cast<std::size_t>(w)] = v;
        stack.push_back(w);
      }
    }
  }
  return Tree{std::move(taxa), std::move(parent), std::vector<double>(static_cast<std::size_t>(num_nodes), 1.0)};
}

// Re-orients the tree so that `new_root` (internal) directs the edges.  Edge
// identities along the old-root-to-new-root path change: the edge formerly
// keyed by child c on that path becomes keyed by c's old parent.
inline auto reroot_tree(const Tree& tree, NodeId new_root) -> Tree {
  if (tree.is_leaf(new_root)) {
    throw std::invalid_argument{"reroot_tree: root must be internal"};
  }
  auto parent = tree.parents();
  auto lengths = tree.branch_lengths();
  // Walk from new_root up to the old root, flipping each edge.
  auto path = std::vector<NodeId>{};
  for (auto cur = new_root; cur != k_no_node; cur = tree.parent(cur)) {
    path.push_back(cur);
  }
  for (auto i = path.size() - 1; i > 0; --i) {
    auto upper = path[i];
    auto lower = path[i - 1];
    parent[static_cast<std::size_t>(upper)] = lower;
    lengths[static_cast<std::size_t>(upper)] = tree.branch_length(lower);
  }
  parent[static_cast<std::size_t>(new_root)] = k_no_node;
  return Tree{tree.taxa(), std::move(parent), std::move(lengths)};
}

}  // namespace bayescat
