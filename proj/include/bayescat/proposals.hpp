#pragma once

// MCMC proposal kernels.  Each returns the proposed state together with the
// log densities of the forward and reverse proposals and the log Jacobian of
// any deterministic map, so that the reversible-jump acceptance ratio is
//
//   log alpha = dlog posterior + log_reverse - log_forward + log_jacobian.
//
// A kernel returns nullopt when its draw is unusable (for instance an event
// time that rounds onto an edge end); the engine treats that as a rejection.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "bayescat/edge_proposal.hpp"
#include "bayescat/indel_model.hpp"
#include "bayescat/priors.hpp"
#include "bayescat/random.hpp"
#include "bayescat/state.hpp"

namespace bayescat {

struct ProposalConfig {
  GuideTuning guide;
  double guided_fraction = 0.5;   // edge-history moves that use the guided kernel
  double event_swap_fraction = 0.2;  // edge-history moves that swap two events instead
  double branch_window = 0.5;     // log-scale half-width for branch lengths
  int node_length_step = 3;       // node lengths move by +-1..step
  double node_shift_fraction = 0.5;  // node moves that shift a block instead
  double pi_concentration = 500.0;
  double kappa_window = 0.5;
  double gamma_window = 0.5;
  double lambda_window = 0.5;
  double r_window = 0.002;        // reflected walk on (0, 1)
  double r_d_window = 0.05;
};

// What a proposal touched, so cached terms can be refreshed selectively.
struct ChangeSet {
  std::vector<NodeId> edges;  // edges whose history or length changed
  bool homology = false;      // alignment must be re-derived
  bool branch_lengths = false;
  bool root_length = false;
  bool subst_params = false;
  bool indel_params = false;
  bool tree_prior = false;    // gamma or V
};

struct ProposalOutcome {
  ModelState state;
  double log_forward = 0.0;
  double log_reverse = 0.0;
  double log_jacobian = 0.0;
  ChangeSet changes;

  auto log_hastings() const -> double { return log_reverse - log_forward + log_jacobian; }
};

enum class ParameterBlock { pi, kappa, gamma, r, r_d, lambda };

inline constexpr std::array<ParameterBlock, 6> k_parameter_blocks = {
    ParameterBlock::pi, ParameterBlock::kappa, ParameterBlock::gamma,
    ParameterBlock::r, ParameterBlock::r_d, ParameterBlock::lambda};

inline auto block_name(ParameterBlock b) -> const char* {
  switch (b) {
    case ParameterBlock::pi: return "pi";
    case ParameterBlock::kappa: return "kappa";
    case ParameterBlock::gamma: return "gamma";
    case ParameterBlock::r: return "r";
    case ParameterBlock::r_d: return "r_d";
    case ParameterBlock::lambda: return "lambda";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Category 1: branch length with proportional event-time rescaling.
// ---------------------------------------------------------------------------

// v' = v exp(u), u ~ U(-delta, delta); every event time on the edge is scaled
// by the same factor, giving Jacobian (v'/v)^(K+1).
inline auto rescale_branch(const ModelState& s, NodeId edge, double u) -> std::optional<ProposalOutcome> {
  auto out = ProposalOutcome{s};
  auto factor = std::exp(u);
  auto v_new = s.tree.branch_length(edge) * factor;
  if (!(v_new > 0.0) || !std::isfinite(v_new)) {
    return std::nullopt;
  }
  out.state.tree.set_branch_length(edge, v_new);
  auto& h = out.state.history.edge(edge);
  h.edge_length = v_new;
  for (auto& e : h.events) {
    e.time *= factor;
  }
  if (validate_edge_history(h)) {
    return std::nullopt;
  }
  out.log_jacobian = (h.num_events() + 1) * u;
  out.changes.edges = {edge};
  out.changes.branch_lengths = true;
  out.changes.tree_prior = true;
  return out;
}

inline auto propose_branch_length(const ModelState& s, NodeId edge, const ProposalConfig& cfg, Rng& rng)
    -> std::optional<ProposalOutcome> {
  auto u = uniform_real(rng, -cfg.branch_window, cfg.branch_window);
  return rescale_branch(s, edge, u);
}

// ---------------------------------------------------------------------------
// Category 2: new history on one edge, end lengths fixed.
// ---------------------------------------------------------------------------

inline auto propose_edge_history(const ModelState& s, NodeId edge, const GuideTuning& g, Rng& rng)
    -> std::optional<ProposalOutcome> {
  const auto& old = s.history.edge(edge);
  auto indel = s.params.indel();
  auto draw = sample_edge_proposal(rng, old.parent_length, old.child_length, old.edge_length, indel, g);
  if (draw.log_density == k_neg_inf) {
    return std::nullopt;
  }
  auto out = ProposalOutcome{s};
  out.state.history.edge(edge) = std::move(draw.history);
  out.log_forward = draw.log_density;
  out.log_reverse = edge_proposal_log_density(old, indel, g);
  out.changes.edges = {edge};
  out.changes.homology = true;
  return out;
}

// Swaps two neighbouring events on an edge, rewriting their coordinates so
// every residue meets the same fate; the events keep their times.  Homology
// and likelihood are unchanged.  Residues are tracked by label: the block of
// each event keeps its labels, and the swap is accepted only when exactly one
// reordered pair gives the same labelled sequence, and that pair swaps back
// only to the original.  The move is then an involution on its domain.
namespace detail {

inline auto apply_labelled(std::vector<int> seq, IndelKind kind, int p, int l, int label) -> std::vector<int> {
  auto at = seq.begin() + p;
  if (kind == IndelKind::insertion) {
    auto block = std::vector<int>(static_cast<std::size_t>(l));
    std::iota(block.begin(), block.end(), label);
    seq.insert(at, block.begin(), block.end());
  } else {
    seq.erase(at, at + l);
  }
  return seq;
}

// All (second', first') orders reproducing first-then-second from a sequence
// of n residues; labels of inserted blocks are fixed per event.
inline auto reorderings(int n, const IndelEvent& first, const IndelEvent& second, int first_label,
                        int second_label) -> std::vector<std::pair<IndelEvent, IndelEvent>> {
  auto s0 = std::vector<int>(static_cast<std::size_t>(n));
  std::iota(s0.begin(), s0.end(), 0);
  auto s1 = apply_labelled(s0, first.kind, first.position, first.size, first_label);
  auto target = apply_labelled(s1, second.kind, second.position, second.size, second_label);
  auto out = std::vector<std::pair<IndelEvent, IndelEvent>>{};
  auto ins2 = second.kind == IndelKind::insertion;
  auto last_q = ins2 ? n : n - second.size;
  for (auto q = 0; q <= last_q; ++q) {
    auto mid = apply_labelled(s0, second.kind, q, second.size, second_label);
    auto p = 0;
    if (first.kind == IndelKind::deletion) {
      auto it = std::find(mid.begin(), mid.end(), s0[static_cast<std::size_t>(first.position)]);
      if (it == mid.end()) {
        continue;
      }
      p = static_cast<int>(it - mid.begin());
      if (p + first.size > static_cast<int>(mid.size())) {
        continue;
      }
    } else {
      auto it = std::find(target.begin(), target.end(), first_label);
      p = static_cast<int>(it - target.begin());
      if (p > static_cast<int>(mid.size())) {
        continue;
      }
    }
    if (apply_labelled(mid, first.kind, p, first.size, first_label) != target) {
      continue;
    }
    auto m = static_cast<int>(mid.size());
    out.push_back({IndelEvent{first.time, second.kind, q, second.size, m},
                   IndelEvent{second.time, first.kind, p, first.size, static_cast<int>(target.size())}});
  }
  return out;
}

}  // namespace detail

inline auto swap_adjacent_events(const EdgeHistory& h, std::size_t i) -> std::optional<EdgeHistory> {
  if (i + 1 >= h.events.size()) {
    return std::nullopt;
  }
  auto n = i == 0 ? h.parent_length : h.events[i - 1].length_after;
  const auto& a = h.events[i];
  const auto& b = h.events[i + 1];
  // labels past every residue that can exist here
  auto la = n + a.size + b.size + 1;
  auto lb = la + a.size + 1;
  auto fwd = detail::reorderings(n, a, b, la, lb);
  if (fwd.size() != 1) {
    return std::nullopt;
  }
  auto [b2, a2] = fwd.front();
  auto back = detail::reorderings(n, b2, a2, lb, la);
  if (back.size() != 1 || back.front().first != a || back.front().second != b) {
    return std::nullopt;
  }
  auto out = h;
  out.events[i] = b2;
  out.events[i + 1] = a2;
  return out;
}

inline auto propose_event_swap(const ModelState& s, NodeId edge, Rng& rng) -> std::optional<ProposalOutcome> {
  const auto& old = s.history.edge(edge);
  if (old.events.size() < 2) {
    return std::nullopt;
  }
  auto swapped = swap_adjacent_events(old, uniform_index(rng, old.events.size() - 1));
  if (!swapped) {
    return std::nullopt;
  }
  auto out = ProposalOutcome{s};
  out.state.history.edge(edge) = std::move(*swapped);
  out.changes.edges = {edge};
  out.changes.homology = true;
  return out;
}

// ---------------------------------------------------------------------------
// Category 3: internal node length, its three edge histories and lengths.
// ---------------------------------------------------------------------------

// Probability that the reflected integer walk moves m to m2: the step s is
// uniform on {-D..-1, 1..D} and negative results reflect as x -> -x - 1.
inline auto reflected_step_probability(int m, int m2, int max_step) -> double {
  auto hits = 0;
  for (auto step = -max_step; step <= max_step; ++step) {
    if (step == 0) {
      continue;
    }
    auto x = m + step;
    if (x < 0) {
      x = -x - 1;
    }
    hits += (x == m2) ? 1 : 0;
  }
  return static_cast<double>(hits) / (2.0 * max_step);
}

inline auto reflected_step(int m, int max_step, Rng& rng) -> int {
  auto k = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(2 * max_step)));
  auto step = k < max_step ? k - max_step : k - max_step + 1;
  auto x = m + step;
  return x < 0 ? -x - 1 : x;
}

inline auto propose_node_update(const ModelState& s, NodeId node, const ProposalConfig& cfg, Rng& rng)
    -> std::optional<ProposalOutcome> {
  const auto& tree = s.tree;
  if (tree.is_leaf(node)) {
    throw std::invalid_argument{"propose_node_update: node must be internal"};
  }
  auto indel = s.params.indel();
  auto m_old = node_length(s, node);
  auto m_new = reflected_step(m_old, cfg.node_length_step, rng);

  auto out = ProposalOutcome{s};
  out.log_forward = std::log(reflected_step_probability(m_old, m_new, cfg.node_length_step));
  out.log_reverse = std::log(reflected_step_probability(m_new, m_old, cfg.node_length_step));

  auto adjacent = std::vector<NodeId>(tree.children(node).begin(), tree.children(node).end());
  if (node != tree.root()) {
    adjacent.push_back(node);
  }
  for (auto e : adjacent) {
    auto node_is_parent = (e != node);
    const auto& old = s.history.edge(e);
    auto u = uniform_real(rng, -cfg.branch_window, cfg.branch_window);
    auto v_new = old.edge_length * std::exp(u);
    if (!(v_new > 0.0) || !std::isfinite(v_new)) {
      return std::nullopt;
    }
    auto n0 = node_is_parent ? m_new : old.parent_length;
    auto nv = node_is_parent ? old.child_length : m_new;
    auto draw = sample_edge_proposal(rng, n0, nv, v_new, indel, cfg.guide);
    if (draw.log_density == k_neg_inf) {
      return std::nullopt;
    }
    out.log_forward += draw.log_density;
    out.log_reverse += edge_proposal_log_density(old, indel, cfg.guide);
    out.log_jacobian += u;
    out.state.tree.set_branch_length(e, v_new);
    out.state.history.edge(e) = std::move(draw.history);
    out.changes.edges.push_back(e);
  }
  if (node == tree.root()) {
    out.state.history.root_length = m_new;
    out.changes.root_length = true;
  }
  out.changes.homology = true;
  out.changes.branch_lengths = true;
  out.changes.tree_prior = true;
  return out;
}

// Moves one indel block across an internal node.  Seen from node x, the event
// nearest x on an incident edge either holds a block that x has and the far
// side lacks ("here"), or one that the far side has and x lacks ("beyond").
// The two configurations
//
//   beyond-event on edge k, nothing on the other two edges
//   here-events with the same block on the other two edges, nothing on k
//
// give identical leaf sequences and homology, and differ by the block in x.
// Expanding swaps the first for the second, collapsing goes back; new event
// times are uniform in the free stretch next to x.  Only the indel prior
// changes, so this lets node lengths move on data where the node update
// almost never accepts.
namespace detail {

struct NodeEnd {
  NodeId edge;
  bool front;  // x is the parent end, so its events start at x
};

inline auto node_ends(const Tree& tree, NodeId x) -> std::vector<NodeEnd> {
  auto out = std::vector<NodeEnd>{};
  for (auto c : tree.children(x)) {
    out.push_back({c, true});
  }
  if (x != tree.root()) {
    out.push_back({x, false});
  }
  return out;
}

inline auto end_event(const EdgeHistory& h, bool front) -> const IndelEvent* {
  if (h.events.empty()) {
    return nullptr;
  }
  return front ? &h.events.front() : &h.events.back();
}

inline auto holds_here(const IndelEvent& e, bool front) -> bool {
  return (e.kind == IndelKind::deletion) == front;
}

// Free stretch of the edge between x and its nearest event.
inline auto free_stretch(const EdgeHistory& h, bool front) -> std::pair<double, double> {
  if (h.events.empty()) {
    return {0.0, h.edge_length};
  }
  return front ? std::pair{0.0, h.events.front().time} : std::pair{h.events.back().time, h.edge_length};
}

// Adds an event at the x end of the edge; x's length becomes x_length.
inline auto add_end_event(EdgeHistory& h, bool front, bool here, int p, int l, int x_length, Rng& rng)
    -> std::optional<double> {
  auto [lo, hi] = free_stretch(h, front);
  auto t = uniform_real(rng, lo, hi);
  if (!(t > lo) || !(t < hi)) {
    return std::nullopt;
  }
  if (front) {
    auto e = here ? deletion(t, p, l, x_length) : insertion(t, p, l, x_length);
    h.events.insert(h.events.begin(), e);
    h.parent_length = x_length;
  } else {
    auto before = h.events.empty() ? h.parent_length : h.events.back().length_after;
    h.events.push_back(here ? insertion(t, p, l, before) : deletion(t, p, l, before));
    h.child_length = x_length;
  }
  return -std::log(hi - lo);
}

inline auto drop_end_event(EdgeHistory& h, bool front, int x_length) -> void {
  if (front) {
    h.events.erase(h.events.begin());
    h.parent_length = x_length;
  } else {
    h.events.pop_back();
    h.child_length = x_length;
  }
}

}  // namespace detail

inline auto propose_node_shift(const ModelState& s, NodeId x, int k, bool expand, Rng& rng)
    -> std::optional<ProposalOutcome> {
  const auto& tree = s.tree;
  if (tree.is_leaf(x)) {
    throw std::invalid_argument{"propose_node_shift: node must be internal"};
  }
  auto ends = detail::node_ends(tree, x);
  auto kept = ends[static_cast<std::size_t>(k)];
  auto others = std::vector<detail::NodeEnd>{};
  for (auto j = 0; j < 3; ++j) {
    if (j != k) {
      others.push_back(ends[static_cast<std::size_t>(j)]);
    }
  }
  auto m = node_length(s, x);
  auto out = ProposalOutcome{s};
  auto& hist = out.state.history;
  auto p = 0;
  auto l = 0;
  auto m_new = 0;
  if (expand) {
    const auto* ev = detail::end_event(s.history.edge(kept.edge), kept.front);
    if (ev == nullptr || detail::holds_here(*ev, kept.front)) {
      return std::nullopt;
    }
    p = ev->position;
    l = ev->size;
    m_new = m + l;
    detail::drop_end_event(hist.edge(kept.edge), kept.front, m_new);
    auto [lo, hi] = detail::free_stretch(hist.edge(kept.edge), kept.front);
    out.log_reverse = -std::log(hi - lo);
    for (auto o : others) {
      auto lf = detail::add_end_event(hist.edge(o.edge), o.front, true, p, l, m_new, rng);
      if (!lf) {
        return std::nullopt;
      }
      out.log_forward += *lf;
    }
  } else {
    const auto* a = detail::end_event(s.history.edge(others[0].edge), others[0].front);
    const auto* b = detail::end_event(s.history.edge(others[1].edge), others[1].front);
    if (a == nullptr || b == nullptr || !detail::holds_here(*a, others[0].front) ||
        !detail::holds_here(*b, others[1].front) || a->position != b->position || a->size != b->size) {
      return std::nullopt;
    }
    p = a->position;
    l = a->size;
    m_new = m - l;
    for (auto o : others) {
      detail::drop_end_event(hist.edge(o.edge), o.front, m_new);
      auto [lo, hi] = detail::free_stretch(hist.edge(o.edge), o.front);
      out.log_reverse -= std::log(hi - lo);
    }
    auto lf = detail::add_end_event(hist.edge(kept.edge), kept.front, false, p, l, m_new, rng);
    if (!lf) {
      return std::nullopt;
    }
    out.log_forward = *lf;
  }
  for (auto e : ends) {
    out.changes.edges.push_back(e.edge);
  }
  if (x == tree.root()) {
    hist.root_length = m_new;
    out.changes.root_length = true;
  }
  out.changes.homology = true;
  return out;
}

// ---------------------------------------------------------------------------
// Category 4: subtree prune and regraft.
//
// Prune the subtree below u (whose parent w is not the history root), merge
// g->w->s into g->s by concatenating the two histories, regraft w onto a
// uniformly chosen edge c->d of the remaining tree at a uniform fraction U of
// its length, splitting that edge's history at the same time.  The node
// length at w is the sequence length the split edge passes through at that
// time, and only the w->u history is redrawn (guided kernel).  The reverse
// move prunes u again and regrafts onto g->s at U' = v(g,w) / v(g,s).
// Branch-length Jacobian: v(c,d) / v(g,s).
// ---------------------------------------------------------------------------

inline auto spr_prunable_nodes(const Tree& tree) -> std::vector<NodeId> {
  auto out = std::vector<NodeId>{};
  for (auto e : tree.edges()) {
    if (tree.parent(e) != tree.root()) {
      out.push_back(e);
    }
  }
  return out;
}

// Edges (by child node) of the tree left after pruning u: everything except
// the root, u's parent and the subtree of u.
inline auto spr_regraft_targets(const Tree& tree, NodeId u) -> std::vector<NodeId> {
  auto w = tree.parent(u);
  auto out = std::vector<NodeId>{};
  for (auto d = 0; d < tree.num_nodes(); ++d) {
    if (d != tree.root() && d != w && !tree.in_subtree(d, u)) {
      out.push_back(d);
    }
  }
  return out;
}

namespace detail {

inline auto concatenate_histories(const EdgeHistory& first, const EdgeHistory& second) -> EdgeHistory {
  auto out = EdgeHistory{first.events, first.parent_length, second.child_length, first.edge_length + second.edge_length};
  for (auto e : second.events) {
    e.time += first.edge_length;
    out.events.push_back(e);
  }
  return out;
}

// Splits h at time tau into (parent part, child part).
inline auto split_history(const EdgeHistory& h, double tau) -> std::pair<EdgeHistory, EdgeHistory> {
  auto upper = EdgeHistory{{}, h.parent_length, h.parent_length, tau};
  auto lower = EdgeHistory{{}, 0, h.child_length, h.edge_length - tau};
  for (const auto& e : h.events) {
    if (e.time < tau) {
      upper.events.push_back(e);
      upper.child_length = e.length_after;
    } else {
      auto moved = e;
      moved.time -= tau;
      lower.events.push_back(moved);
    }
  }
  lower.parent_length = upper.child_length;
  return {std::move(upper), std::move(lower)};
}

}  // namespace detail

// SPR with an explicit choice of prune node, regraft edge and split fraction.
inline auto spr_move(const ModelState& s, NodeId u, NodeId d, double split_fraction, const ProposalConfig& cfg, Rng& rng)
    -> std::optional<ProposalOutcome> {
  const auto& tree = s.tree;
  const auto& hist = s.history;
  auto w = tree.parent(u);
  if (w == k_no_node || w == tree.root()) {
    return std::nullopt;
  }
  auto g = tree.parent(w);
  auto sib = tree.children(w)[0] == u ? tree.children(w)[1] : tree.children(w)[0];
  auto merged = detail::concatenate_histories(hist.edge(w), hist.edge(sib));

  auto c = (d == sib) ? g : tree.parent(d);
  const auto& target = (d == sib) ? merged : hist.edge(d);
  auto v_target = target.edge_length;
  auto tau = split_fraction * v_target;
  if (!(tau > 0.0 && tau < v_target)) {
    return std::nullopt;
  }
  auto [upper, lower] = detail::split_history(target, tau);

  auto parent = tree.parents();
  auto lengths = tree.branch_lengths();
  parent[static_cast<std::size_t>(sib)] = g;
  lengths[static_cast<std::size_t>(sib)] = merged.edge_length;
  parent[static_cast<std::size_t>(w)] = c;
  lengths[static_cast<std::size_t>(w)] = upper.edge_length;
  parent[static_cast<std::size_t>(d)] = w;
  lengths[static_cast<std::size_t>(d)] = lower.edge_length;
  if (!(lower.edge_length > 0.0)) {
    return std::nullopt;
  }

  auto out = ProposalOutcome{s};
  out.state.tree.reshape(std::move(parent), std::move(lengths));
  auto& nh = out.state.history;
  if (d != sib) {
    nh.edge(sib) = merged;
  }
  auto m_new = upper.child_length;
  nh.edge(w) = std::move(upper);
  nh.edge(d) = std::move(lower);

  auto indel = s.params.indel();
  const auto& old_u = hist.edge(u);
  auto draw = sample_edge_proposal(rng, m_new, old_u.child_length, old_u.edge_length, indel, cfg.guide);
  if (draw.log_density == k_neg_inf) {
    return std::nullopt;
  }
  nh.edge(u) = std::move(draw.history);
  if (validate_tree_history(out.state.tree, nh)) {
    return std::nullopt;
  }

  auto forward_choices = -std::log(static_cast<double>(spr_prunable_nodes(tree).size())) -
                         std::log(static_cast<double>(spr_regraft_targets(tree, u).size()));
  auto reverse_choices = -std::log(static_cast<double>(spr_prunable_nodes(out.state.tree).size())) -
                         std::log(static_cast<double>(spr_regraft_targets(out.state.tree, u).size()));
  out.log_forward = forward_choices + draw.log_density;
  out.log_reverse = reverse_choices + edge_proposal_log_density(old_u, indel, cfg.guide);
  out.log_jacobian = std::log(v_target) - std::log(merged.edge_length);
  out.changes.edges = {w, d, u, sib};
  out.changes.homology = true;
  out.changes.branch_lengths = true;
  out.changes.tree_prior = true;
  return out;
}

inline auto propose_spr(const ModelState& s, const ProposalConfig& cfg, Rng& rng) -> std::optional<ProposalOutcome> {
  auto prunable = spr_prunable_nodes(s.tree);
  if (prunable.empty()) {
    return std::nullopt;
  }
  auto u = prunable[uniform_index(rng, prunable.size())];
  auto targets = spr_regraft_targets(s.tree, u);
  auto d = targets[uniform_index(rng, targets.size())];
  auto fraction = uniform_open01(rng);
  return spr_move(s, u, d, fraction, cfg, rng);
}

// ---------------------------------------------------------------------------
// Parameter blocks.
// ---------------------------------------------------------------------------

namespace detail {

inline auto reflect_unit(double x) -> double {
  while (x < 0.0 || x > 1.0) {
    x = x < 0.0 ? -x : 2.0 - x;
  }
  return x;
}

inline auto log_dirichlet_proposal(const std::array<double, 4>& x, const std::array<double, 4>& center, double concentration) -> double {
  auto alpha = std::array<double, 4>{};
  for (auto i = std::size_t{0}; i < 4; ++i) {
    alpha[i] = concentration * center[i];
  }
  return log_dirichlet_density(x, alpha);
}

}  // namespace detail

inline auto propose_parameters(const ModelState& s, ParameterBlock block, const ProposalConfig& cfg, Rng& rng)
    -> std::optional<ProposalOutcome> {
  auto out = ProposalOutcome{s};
  auto& p = out.state.params;
  auto multiplicative = [&](double& x, double window) {
    auto u = uniform_real(rng, -window, window);
    x *= std::exp(u);
    out.log_jacobian = u;
    return std::isfinite(x) && x > 0.0;
  };
  auto reflected = [&](double& x, double window) {
    x = detail::reflect_unit(x + uniform_real(rng, -window, window));
    return x > 0.0 && x < 1.0;
  };
  auto ok = true;
  switch (block) {
    case ParameterBlock::pi: {
      auto alpha = std::array<double, 4>{};
      for (auto i = std::size_t{0}; i < 4; ++i) {
        alpha[i] = cfg.pi_concentration * s.params.subst.pi[i];
      }
      auto next = dirichlet_variate(rng, alpha);
      auto total = next[0] + next[1] + next[2] + next[3];
      for (auto& x : next) {
        x /= total;
        ok = ok && x > 0.0;
      }
      if (!ok) {
        return std::nullopt;
      }
      p.subst.pi = next;
      out.log_forward = detail::log_dirichlet_proposal(next, s.params.subst.pi, cfg.pi_concentration);
      out.log_reverse = detail::log_dirichlet_proposal(s.params.subst.pi, next, cfg.pi_concentration);
      if (!std::isfinite(out.log_forward) || !std::isfinite(out.log_reverse)) {
        return std::nullopt;
      }
      out.changes.subst_params = true;
      break;
    }
    case ParameterBlock::kappa:
      ok = multiplicative(p.subst.kappa, cfg.kappa_window);
      out.changes.subst_params = true;
      break;
    case ParameterBlock::gamma:
      ok = multiplicative(p.gamma, cfg.gamma_window);
      out.changes.tree_prior = true;
      break;
    case ParameterBlock::lambda:
      ok = multiplicative(p.lambda, cfg.lambda_window);
      out.changes.indel_params = true;
      break;
    case ParameterBlock::r:
      ok = reflected(p.r, cfg.r_window);
      out.changes.indel_params = true;
      break;
    case ParameterBlock::r_d:
      ok = reflected(p.r_d, cfg.r_d_window);
      out.changes.indel_params = true;
      break;
  }
  if (!ok) {
    return std::nullopt;
  }
  return out;
}

}  // namespace bayescat
