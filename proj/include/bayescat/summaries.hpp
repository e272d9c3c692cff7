#pragma once

// Posterior summaries over a collection of sampled states: pairwise homology
// probabilities, an annealed maximum expected accuracy alignment, topology
// and split tables, per-split indel statistics, the realized fragment size
// distribution and convergence diagnostics.

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "bayescat/core_types.hpp"
#include "bayescat/homology.hpp"
#include "bayescat/state.hpp"
#include "bayescat/tree.hpp"

namespace bayescat {

template <typename T>
auto drop_burn_in(std::span<const T> samples, double fraction) -> std::span<const T> {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw std::invalid_argument{"burn-in fraction must lie in [0, 1)"};
  }
  auto skip = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(samples.size())));
  return samples.subspan(skip);
}

// ---------------------------------------------------------------------------
// Pairwise homology posteriors
// ---------------------------------------------------------------------------

// For every ordered taxon pair (a, b): P(a_i ~ b_j) and P(a_i has no partner
// in b).  Both orders are stored so lookups need no branching.
class HomologyPosteriors {
 public:
  HomologyPosteriors() = default;

  explicit HomologyPosteriors(std::vector<int> lengths) : lengths_{std::move(lengths)} {
    auto n = lengths_.size();
    match_.resize(n * n);
    gap_.resize(n * n);
    for (auto a = std::size_t{0}; a < n; ++a) {
      for (auto b = std::size_t{0}; b < n; ++b) {
        if (a != b) {
          match_[a * n + b].assign(static_cast<std::size_t>(lengths_[a] * lengths_[b]), 0.0);
          gap_[a * n + b].assign(static_cast<std::size_t>(lengths_[a]), 0.0);
        }
      }
    }
  }

  auto num_taxa() const -> int { return static_cast<int>(lengths_.size()); }
  auto length(int a) const -> int { return lengths_[static_cast<std::size_t>(a)]; }
  auto lengths() const -> const std::vector<int>& { return lengths_; }

  auto match(int a, int b, int i, int j) const -> double { return match_[slot(a, b)][cell(b, i, j)]; }
  auto gap(int a, int b, int i) const -> double { return gap_[slot(a, b)][static_cast<std::size_t>(i)]; }

  // Sets P(a_i ~ b_j) symmetrically.
  auto set_match(int a, int b, int i, int j, double p) -> void {
    match_[slot(a, b)][cell(b, i, j)] = p;
    match_[slot(b, a)][cell(a, j, i)] = p;
  }
  auto set_gap(int a, int b, int i, double p) -> void { gap_[slot(a, b)][static_cast<std::size_t>(i)] = p; }

  // Residues of b with nonzero match probability to a_i.
  auto partners(int a, int b, int i) const -> std::vector<int> {
    auto out = std::vector<int>{};
    for (auto j = 0; j < length(b); ++j) {
      if (match(a, b, i, j) > 0.0) {
        out.push_back(j);
      }
    }
    return out;
  }

 private:
  auto slot(int a, int b) const -> std::size_t {
    if (a == b) {
      throw std::invalid_argument{"HomologyPosteriors: a taxon has no pair with itself"};
    }
    return static_cast<std::size_t>(a) * lengths_.size() + static_cast<std::size_t>(b);
  }
  auto cell(int b, int i, int j) const -> std::size_t {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(length(b)) + static_cast<std::size_t>(j);
  }

  std::vector<int> lengths_;
  std::vector<std::vector<double>> match_;
  std::vector<std::vector<double>> gap_;
};

inline auto pair_homology_posteriors(std::span<const Alignment> alignments) -> HomologyPosteriors {
  if (alignments.empty()) {
    throw std::invalid_argument{"pair_homology_posteriors: no samples"};
  }
  auto lengths = std::vector<int>{};
  for (const auto& row : alignments.front().residue_column) {
    lengths.push_back(static_cast<int>(row.size()));
  }
  auto out = HomologyPosteriors{lengths};
  auto n = static_cast<int>(lengths.size());
  auto w = 1.0 / static_cast<double>(alignments.size());
  for (const auto& aln : alignments) {
    for (auto a = 0; a < n; ++a) {
      if (static_cast<int>(aln.residue_column[static_cast<std::size_t>(a)].size()) != lengths[static_cast<std::size_t>(a)]) {
        throw std::invalid_argument{"pair_homology_posteriors: samples disagree on sequence lengths"};
      }
    }
    for (auto a = 0; a < n; ++a) {
      for (auto i = 0; i < lengths[static_cast<std::size_t>(a)]; ++i) {
        auto col = aln.residue_column[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
        for (auto b = 0; b < n; ++b) {
          if (b == a) {
            continue;
          }
          auto j = aln.cells[static_cast<std::size_t>(b)][static_cast<std::size_t>(col)];
          if (j == k_gap) {
            out.set_gap(a, b, i, out.gap(a, b, i) + w);
          } else if (a < b) {
            out.set_match(a, b, i, j, out.match(a, b, i, j) + w);
          }
        }
      }
    }
  }
  return out;
}

inline auto pair_homology_posteriors(std::span<const ModelState> samples) -> HomologyPosteriors {
  auto alignments = std::vector<Alignment>{};
  alignments.reserve(samples.size());
  for (const auto& s : samples) {
    alignments.push_back(project_alignment(s.tree, s.history));
  }
  return pair_homology_posteriors(std::span<const Alignment>{alignments});
}

// ---------------------------------------------------------------------------
// Sequence annealing
// ---------------------------------------------------------------------------

// Expected accuracy objective: over every taxon pair, 2 P(i~j) for each pair
// of residues sharing a column plus gap_factor P(i-) for each residue left
// without a partner in the other sequence.
inline auto expected_accuracy(const Alignment& aln, const HomologyPosteriors& post, double gap_factor) -> double {
  auto total = 0.0;
  auto n = post.num_taxa();
  for (auto a = 0; a < n; ++a) {
    for (auto b = a + 1; b < n; ++b) {
      for (auto i = 0; i < post.length(a); ++i) {
        auto j = aln.cells[static_cast<std::size_t>(b)][static_cast<std::size_t>(aln.residue_column[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)])];
        total += j == k_gap ? gap_factor * post.gap(a, b, i) : 2.0 * post.match(a, b, i, j);
      }
      for (auto j = 0; j < post.length(b); ++j) {
        auto i = aln.cells[static_cast<std::size_t>(a)][static_cast<std::size_t>(aln.residue_column[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)])];
        if (i == k_gap) {
          total += gap_factor * post.gap(b, a, j);
        }
      }
    }
  }
  return total;
}

struct AnnealedAlignment {
  Alignment alignment;
  std::vector<std::vector<double>> accuracy;  // [taxon][column]; gaps carry gap correctness
  std::vector<std::vector<int>> level;        // accuracy binned into 0..9
  double objective = 0.0;
};

namespace detail {

struct Residue {
  int taxon;
  int index;
};

class ColumnGraph {
 public:
  explicit ColumnGraph(const std::vector<int>& lengths) : lengths_{lengths} {
    for (auto a = 0; a < static_cast<int>(lengths.size()); ++a) {
      column_of_.emplace_back();
      for (auto i = 0; i < lengths[static_cast<std::size_t>(a)]; ++i) {
        column_of_.back().push_back(static_cast<int>(members_.size()));
        members_.push_back({Residue{a, i}});
        alive_.push_back(true);
        version_.push_back(0);
      }
    }
  }

  auto column_of(int taxon, int i) const -> int { return column_of_[static_cast<std::size_t>(taxon)][static_cast<std::size_t>(i)]; }
  auto members(int c) const -> const std::vector<Residue>& { return members_[static_cast<std::size_t>(c)]; }
  auto version(int c) const -> int { return version_[static_cast<std::size_t>(c)]; }
  auto alive(int c) const -> bool { return alive_[static_cast<std::size_t>(c)]; }
  auto num_slots() const -> int { return static_cast<int>(members_.size()); }

  auto rows_disjoint(int x, int y) const -> bool {
    for (const auto& r : members(x)) {
      for (const auto& s : members(y)) {
        if (r.taxon == s.taxon) {
          return false;
        }
      }
    }
    return true;
  }

  // Columns that must come right after column c in some row.
  auto successors(int c) const -> std::vector<int> {
    auto out = std::vector<int>{};
    for (const auto& r : members(c)) {
      if (r.index + 1 < lengths_[static_cast<std::size_t>(r.taxon)]) {
        out.push_back(column_of(r.taxon, r.index + 1));
      }
    }
    return out;
  }

  auto reaches(int from, int to) const -> bool {
    auto seen = std::vector<bool>(members_.size(), false);
    auto stack = std::vector<int>{from};
    seen[static_cast<std::size_t>(from)] = true;
    while (!stack.empty()) {
      auto c = stack.back();
      stack.pop_back();
      for (auto d : successors(c)) {
        if (d == to) {
          return true;
        }
        if (!seen[static_cast<std::size_t>(d)]) {
          seen[static_cast<std::size_t>(d)] = true;
          stack.push_back(d);
        }
      }
    }
    return false;
  }

  auto can_merge(int x, int y) const -> bool { return rows_disjoint(x, y) && !reaches(x, y) && !reaches(y, x); }

  // Takes one residue out of its column into a fresh column of its own;
  // returns the new column.
  auto detach(int taxon, int i) -> int {
    auto from = static_cast<std::size_t>(column_of(taxon, i));
    std::erase_if(members_[from], [&](const Residue& r) { return r.taxon == taxon && r.index == i; });
    ++version_[from];
    alive_[from] = !members_[from].empty();
    auto c = static_cast<int>(members_.size());
    members_.push_back({Residue{taxon, i}});
    alive_.push_back(true);
    version_.push_back(0);
    column_of_[static_cast<std::size_t>(taxon)][static_cast<std::size_t>(i)] = c;
    return c;
  }

  // Moves y into x; y dies.
  auto merge(int x, int y) -> void {
    for (const auto& r : members(y)) {
      column_of_[static_cast<std::size_t>(r.taxon)][static_cast<std::size_t>(r.index)] = x;
      members_[static_cast<std::size_t>(x)].push_back(r);
    }
    members_[static_cast<std::size_t>(y)].clear();
    alive_[static_cast<std::size_t>(y)] = false;
    ++version_[static_cast<std::size_t>(x)];
    ++version_[static_cast<std::size_t>(y)];
  }

  // Live columns in an order consistent with every row; ties go to the
  // column holding the smallest (taxon, index) residue.
  auto topological_order() const -> std::vector<int> {
    auto indegree = std::vector<int>(members_.size(), 0);
    for (auto c = 0; c < num_slots(); ++c) {
      if (alive(c)) {
        for (auto d : successors(c)) {
          ++indegree[static_cast<std::size_t>(d)];
        }
      }
    }
    auto key = [&](int c) {
      auto best = std::pair<int, int>{1 << 30, 1 << 30};
      for (const auto& r : members(c)) {
        best = std::min(best, std::pair<int, int>{r.taxon, r.index});
      }
      return best;
    };
    using Item = std::pair<std::pair<int, int>, int>;
    auto ready = std::priority_queue<Item, std::vector<Item>, std::greater<>>{};
    for (auto c = 0; c < num_slots(); ++c) {
      if (alive(c) && indegree[static_cast<std::size_t>(c)] == 0) {
        ready.push({key(c), c});
      }
    }
    auto out = std::vector<int>{};
    while (!ready.empty()) {
      auto c = ready.top().second;
      ready.pop();
      out.push_back(c);
      for (auto d : successors(c)) {
        if (--indegree[static_cast<std::size_t>(d)] == 0) {
          ready.push({key(d), d});
        }
      }
    }
    return out;
  }

 private:
  std::vector<int> lengths_;
  std::vector<std::vector<int>> column_of_;
  std::vector<std::vector<Residue>> members_;
  std::vector<bool> alive_;
  std::vector<int> version_;
};

inline auto merge_gain(const ColumnGraph& g, int x, int y, const HomologyPosteriors& post, double gap_factor) -> double {
  auto gain = 0.0;
  for (const auto& r : g.members(x)) {
    for (const auto& s : g.members(y)) {
      gain += 2.0 * post.match(r.taxon, s.taxon, r.index, s.index) -
              gap_factor * (post.gap(r.taxon, s.taxon, r.index) + post.gap(s.taxon, r.taxon, s.index));
    }
  }
  return gain;
}


// Sum of merge gains within every column: the objective less its value for
// the null alignment.
inline auto layout_score(const ColumnGraph& g, const HomologyPosteriors& post, double gap_factor) -> double {
  auto total = 0.0;
  for (auto c = 0; c < g.num_slots(); ++c) {
    const auto& m = g.members(c);
    for (auto x = std::size_t{0}; x < m.size(); ++x) {
      for (auto y = x + 1; y < m.size(); ++y) {
        total += 2.0 * post.match(m[x].taxon, m[y].taxon, m[x].index, m[y].index) -
                 gap_factor * (post.gap(m[x].taxon, m[y].taxon, m[x].index) + post.gap(m[y].taxon, m[x].taxon, m[y].index));
      }
    }
  }
  return total;
}

// Best placement of row a's residues into the other rows' columns, kept in
// the current column order.
inline auto realign_row(ColumnGraph& g, int a, const HomologyPosteriors& post, double gap_factor) -> void {
  auto len = post.length(a);
  if (len == 0) {
    return;
  }
  // the order before a is taken out keeps its current placement available
  auto order = g.topological_order();
  auto solo = std::vector<int>{};
  for (auto i = 0; i < len; ++i) {
    solo.push_back(g.detach(a, i));
  }
  auto cols = std::vector<int>{};
  for (auto c : order) {
    if (g.alive(c)) {
      cols.push_back(c);
    }
  }
  auto m = cols.size();
  auto rows = static_cast<std::size_t>(len);
  auto score = std::vector<std::vector<double>>(rows + 1, std::vector<double>(m + 1, 0.0));
  auto step = std::vector<std::vector<char>>(rows + 1, std::vector<char>(m + 1, 0));
  for (auto i = std::size_t{1}; i <= rows; ++i) {
    step[i][0] = 'u';
    for (auto j = std::size_t{1}; j <= m; ++j) {
      score[i][j] = score[i - 1][j];
      step[i][j] = 'u';  // residue i left alone
      if (score[i][j - 1] > score[i][j]) {
        score[i][j] = score[i][j - 1];
        step[i][j] = 'l';  // column j left without a residue of a
      }
      auto diag = score[i - 1][j - 1] + merge_gain(g, solo[i - 1], cols[j - 1], post, gap_factor);
      if (diag > score[i][j] + 1e-12) {
        score[i][j] = diag;
        step[i][j] = 'd';
      }
    }
  }
  for (auto i = rows, j = m; i > 0;) {
    if (step[i][j] == 'd') {
      g.merge(cols[j - 1], solo[i - 1]);
      --i;
      --j;
    } else if (step[i][j] == 'l') {
      --j;
    } else {
      --i;
    }
  }
}

}  // namespace detail

// Greedy sequence annealing from the null alignment: repeatedly merge the
// pair of columns with the largest positive gain in the objective above,
// skipping merges that would break the order of some row.
inline auto annealed_alignment(const HomologyPosteriors& post, double gap_factor = 0.5) -> AnnealedAlignment {
  const auto n = post.num_taxa();
  auto graph = detail::ColumnGraph{post.lengths()};

  struct Candidate {
    double gain;
    int x, y, vx, vy;
    auto operator<(const Candidate& o) const -> bool {
      return std::tie(gain, o.x, o.y) < std::tie(o.gain, x, y);  // max gain, then smallest ids
    }
  };
  auto heap = std::priority_queue<Candidate>{};
  auto push = [&](int x, int y) {
    if (x == y || !graph.alive(x) || !graph.alive(y)) {
      return;
    }
    if (x > y) {
      std::swap(x, y);
    }
    if (!graph.rows_disjoint(x, y)) {
      return;
    }
    auto gain = detail::merge_gain(graph, x, y, post, gap_factor);
    if (gain > 0.0) {
      heap.push({gain, x, y, graph.version(x), graph.version(y)});
    }
  };
  auto neighbours = [&](int c) {
    auto out = std::vector<int>{};
    for (const auto& r : graph.members(c)) {
      for (auto b = 0; b < n; ++b) {
        if (b != r.taxon) {
          for (auto j : post.partners(r.taxon, b, r.index)) {
            out.push_back(graph.column_of(b, j));
          }
        }
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };

  for (auto c = 0; c < graph.num_slots(); ++c) {
    for (auto d : neighbours(c)) {
      if (c < d) {
        push(c, d);
      }
    }
  }
  while (!heap.empty()) {
    auto top = heap.top();
    heap.pop();
    if (!graph.alive(top.x) || !graph.alive(top.y)) {
      continue;
    }
    if (top.vx != graph.version(top.x) || top.vy != graph.version(top.y)) {
      push(top.x, top.y);
      continue;
    }
    if (!graph.can_merge(top.x, top.y)) {
      continue;
    }
    graph.merge(top.x, top.y);
    for (auto d : neighbours(top.x)) {
      push(top.x, d);
    }
  }

  // Greedy merging can lock in a column that blocks a better layout.  Refine
  // by taking each sequence out in turn and realigning it exactly (dynamic
  // programming) against the columns of the others, kept in their current
  // order.  The old placement is one of the candidates, so the objective
  // never drops.  A tie can still shift a row and open a gain for another,
  // hence a few passes of patience before stopping.
  auto current = detail::layout_score(graph, post, gap_factor);
  for (auto idle = 0, pass = 0; idle < 3 && pass < 100; ++pass) {
    for (auto a = 0; a < n; ++a) {
      detail::realign_row(graph, a, post, gap_factor);
    }
    auto next = detail::layout_score(graph, post, gap_factor);
    idle = next > current + 1e-12 ? 0 : idle + 1;
    current = std::max(current, next);
  }

  auto order = graph.topological_order();
  auto residue_column = std::vector<std::vector<int>>(static_cast<std::size_t>(n));
  for (auto a = 0; a < n; ++a) {
    residue_column[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(post.length(a)));
  }
  for (auto k = 0; k < static_cast<int>(order.size()); ++k) {
    for (const auto& r : graph.members(order[static_cast<std::size_t>(k)])) {
      residue_column[static_cast<std::size_t>(r.taxon)][static_cast<std::size_t>(r.index)] = k;
    }
  }

  auto out = AnnealedAlignment{};
  out.alignment = alignment_from_columns(std::move(residue_column), static_cast<int>(order.size()));
  const auto& aln = out.alignment;
  auto cols = aln.num_columns();
  out.accuracy.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(cols), 0.0));
  out.level.assign(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(cols), 0));
  for (auto col = 0; col < cols; ++col) {
    for (auto a = 0; a < n; ++a) {
      auto i = aln.cells[static_cast<std::size_t>(a)][static_cast<std::size_t>(col)];
      auto sum = 0.0;
      auto count = 0;
      for (auto b = 0; b < n; ++b) {
        if (b == a) {
          continue;
        }
        auto j = aln.cells[static_cast<std::size_t>(b)][static_cast<std::size_t>(col)];
        if (i != k_gap) {
          sum += j == k_gap ? post.gap(a, b, i) : post.match(a, b, i, j);
          ++count;
        } else if (j != k_gap) {
          // a gap in row a is correct to the extent b_j has no partner in a
          sum += post.gap(b, a, j);
          ++count;
        }
      }
      auto acc = count == 0 ? 1.0 : sum / count;
      out.accuracy[static_cast<std::size_t>(a)][static_cast<std::size_t>(col)] = acc;
      out.level[static_cast<std::size_t>(a)][static_cast<std::size_t>(col)] = std::clamp(static_cast<int>(std::floor(acc * 10.0)), 0, 9);
    }
  }
  out.objective = expected_accuracy(aln, post, gap_factor);
  return out;
}

// ---------------------------------------------------------------------------
// Topologies and splits
// ---------------------------------------------------------------------------

using TopologyKey = std::vector<Split>;

struct SplitTable {
  std::vector<std::pair<TopologyKey, double>> topologies;  // most frequent first
  std::map<Split, double> splits;                          // includes trivial splits
  std::size_t num_samples = 0;
};

inline auto topology_split_table(std::span<const ModelState> samples) -> SplitTable {
  auto topo = std::map<TopologyKey, std::size_t>{};
  auto split_counts = std::map<Split, std::size_t>{};
  for (const auto& s : samples) {
    ++topo[topology_key(s.tree)];
    for (auto e : s.tree.edges()) {
      ++split_counts[edge_split(s.tree, e)];
    }
  }
  auto out = SplitTable{};
  out.num_samples = samples.size();
  if (samples.empty()) {
    return out;
  }
  auto m = static_cast<double>(samples.size());
  for (const auto& [key, count] : topo) {
    out.topologies.emplace_back(key, static_cast<double>(count) / m);
  }
  std::stable_sort(out.topologies.begin(), out.topologies.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });
  for (const auto& [split, count] : split_counts) {
    out.splits[split] = static_cast<double>(count) / m;
  }
  return out;
}

// Nontrivial splits present in more than half of the samples.  These are
// always pairwise compatible, so they define a (possibly unresolved) tree.
inline auto majority_rule_consensus(const SplitTable& table) -> std::vector<Split> {
  auto out = std::vector<Split>{};
  for (const auto& [split, p] : table.splits) {
    if (!split.is_trivial() && p > 0.5) {
      out.push_back(split);
    }
  }
  return out;
}

inline auto describe_topology(const TopologyKey& key, const std::vector<std::string>& names) -> std::string {
  if (key.empty()) {
    return "star";
  }
  auto out = std::string{};
  for (const auto& s : key) {
    out += (out.empty() ? "" : " ") + s.describe(names);
  }
  return out;
}

struct SplitIndelStats {
  double probability = 0.0;
  double mean_events = 0.0;
  double mean_length = 0.0;
};

inline auto split_indel_stats(std::span<const ModelState> samples) -> std::map<Split, SplitIndelStats> {
  auto sums = std::map<Split, std::tuple<std::size_t, double, double>>{};
  for (const auto& s : samples) {
    for (auto e : s.tree.edges()) {
      auto& [count, events, length] = sums[edge_split(s.tree, e)];
      ++count;
      events += s.history.edge(e).num_events();
      length += s.tree.branch_length(e);
    }
  }
  auto out = std::map<Split, SplitIndelStats>{};
  for (const auto& [split, t] : sums) {
    auto [count, events, length] = t;
    auto c = static_cast<double>(count);
    out[split] = {c / static_cast<double>(samples.size()), events / c, length / c};
  }
  return out;
}

struct FragmentSizePosterior {
  std::map<int, double> pmf;
  std::size_t samples_with_events = 0;
  bool empty = true;  // no sample had any event
};

// Per-sample realized fragment size pmf (insertions and deletions pooled),
// averaged over the samples that have at least one event.
inline auto fragment_size_posterior(std::span<const ModelState> samples) -> FragmentSizePosterior {
  auto out = FragmentSizePosterior{};
  for (const auto& s : samples) {
    auto counts = std::map<int, int>{};
    auto total = 0;
    for (auto e : s.tree.edges()) {
      for (const auto& ev : s.history.edge(e).events) {
        ++counts[ev.size];
        ++total;
      }
    }
    if (total == 0) {
      continue;
    }
    ++out.samples_with_events;
    for (const auto& [size, c] : counts) {
      out.pmf[size] += static_cast<double>(c) / total;
    }
  }
  if (out.samples_with_events > 0) {
    out.empty = false;
    for (auto& [size, p] : out.pmf) {
      p /= static_cast<double>(out.samples_with_events);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convergence diagnostics
// ---------------------------------------------------------------------------

struct GelmanRubin {
  double r_hat = 1.0;
  bool degenerate = false;  // zero within-chain variance
};

inline auto gelman_rubin(const std::vector<std::vector<double>>& chains) -> GelmanRubin {
  if (chains.size() < 2) {
    throw std::invalid_argument{"gelman_rubin: need at least 2 chains"};
  }
  auto n = chains.front().size();
  if (n < 2) {
    throw std::invalid_argument{"gelman_rubin: chains need at least 2 draws"};
  }
  auto m = static_cast<double>(chains.size());
  auto means = std::vector<double>{};
  auto w = 0.0;
  for (const auto& c : chains) {
    if (c.size() != n) {
      throw std::invalid_argument{"gelman_rubin: chains differ in length"};
    }
    auto mean = 0.0;
    for (auto x : c) {
      mean += x;
    }
    mean /= static_cast<double>(n);
    auto var = 0.0;
    for (auto x : c) {
      var += (x - mean) * (x - mean);
    }
    w += var / static_cast<double>(n - 1);
    means.push_back(mean);
  }
  w /= m;
  auto grand = 0.0;
  for (auto x : means) {
    grand += x;
  }
  grand /= m;
  auto b = 0.0;
  for (auto x : means) {
    b += (x - grand) * (x - grand);
  }
  auto nn = static_cast<double>(n);
  b *= nn / (m - 1.0);
  if (!(w > 0.0)) {
    return {std::numeric_limits<double>::quiet_NaN(), true};
  }
  return {std::sqrt(((nn - 1.0) / nn * w + b / nn) / w), false};
}

struct CladeSpread {
  Split split;
  std::vector<double> frequencies;  // one per run
  double spread = 0.0;
};

struct CladeDiagnostic {
  std::vector<CladeSpread> clades;
  double max_spread = 0.0;
  bool converged = true;  // every spread below the threshold
};

inline auto clade_frequency_diagnostic(const std::vector<SplitTable>& runs, double threshold = 0.05) -> CladeDiagnostic {
  if (runs.size() < 2) {
    throw std::invalid_argument{"need ≥2 runs"};
  }
  auto all = std::map<Split, std::vector<double>>{};
  for (std::size_t k = 0; k < runs.size(); ++k) {
    for (const auto& [split, p] : runs[k].splits) {
      auto& f = all[split];
      f.resize(runs.size(), 0.0);
      f[k] = p;
    }
  }
  auto out = CladeDiagnostic{};
  for (auto& [split, f] : all) {
    auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    auto spread = *hi - *lo;
    out.clades.push_back({split, f, spread});
    out.max_spread = std::max(out.max_spread, spread);
    out.converged = out.converged && spread < threshold;
  }
  return out;
}

}  // namespace bayescat
