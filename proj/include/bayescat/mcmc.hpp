#pragma once

// Random-scan Metropolis-within-Gibbs sampler over (tree, branch lengths,
// indel history, parameters).  The chain caches every term of the log
// posterior and refreshes only what a proposal touched.

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bayescat/core_types.hpp"
#include "bayescat/edge_proposal.hpp"
#include "bayescat/hky.hpp"
#include "bayescat/homology.hpp"
#include "bayescat/indel_model.hpp"
#include "bayescat/priors.hpp"
#include "bayescat/proposals.hpp"
#include "bayescat/random.hpp"
#include "bayescat/state.hpp"

namespace bayescat {

enum class MoveKind { branch, edge_history, node, spr, parameters };

inline constexpr std::array<MoveKind, 5> k_move_kinds = {MoveKind::branch, MoveKind::edge_history, MoveKind::node,
                                                        MoveKind::spr, MoveKind::parameters};

inline auto move_name(MoveKind k) -> const char* {
  switch (k) {
    case MoveKind::branch: return "branch";
    case MoveKind::edge_history: return "edge_history";
    case MoveKind::node: return "node";
    case MoveKind::spr: return "spr";
    case MoveKind::parameters: return "parameters";
  }
  return "?";
}

struct McmcConfig {
  PriorConfig prior;
  ProposalConfig proposals;
  std::array<double, 5> scan_weights = {0.2, 0.3, 0.2, 0.15, 0.15};
  long iterations = 100000;
  long thin = 100;
  bool use_likelihood = true;  // false samples the prior over (tree, V, H, theta)
  long audit_interval = 0;     // full recomputation check every k steps; 0 disables
};

// Cached pieces of the log posterior.
struct PosteriorTerms {
  Alignment alignment;
  double log_likelihood = 0.0;
  double log_root = 0.0;
  std::vector<double> edge_log_density;  // by child node
  double log_prior = 0.0;

  auto log_indel() const -> double {
    auto total = log_root;
    for (auto x : edge_log_density) {
      total += x;
    }
    return total;
  }
};

inline auto compute_terms(const ModelState& s, const std::vector<Sequence>& seqs, const McmcConfig& cfg) -> PosteriorTerms {
  auto out = PosteriorTerms{};
  auto indel = s.params.indel();
  out.alignment = project_alignment(s.tree, s.history);
  out.log_likelihood = cfg.use_likelihood ? alignment_log_likelihood(out.alignment, seqs, s.tree, s.params.subst) : 0.0;
  out.log_root = indel.log_q(s.history.root_length);
  out.edge_log_density.assign(static_cast<std::size_t>(s.tree.num_nodes()), 0.0);
  for (auto e : s.tree.edges()) {
    out.edge_log_density[static_cast<std::size_t>(e)] = edge_history_log_density(s.history.edge(e), indel);
  }
  out.log_prior = log_prior(s.tree, s.params, cfg.prior);
  return out;
}

inline auto total_log_posterior(const PosteriorTerms& t) -> double { return t.log_likelihood + t.log_indel() + t.log_prior; }

// Unnormalized log posterior from scratch; -infinity for an invalid state.
inline auto log_posterior(const ModelState& s, const std::vector<Sequence>& seqs, const McmcConfig& cfg) -> double {
  std::vector<int> leaf_lengths;
  for (const auto& q : seqs) {
    leaf_lengths.push_back(q.length());
  }
  if (validate_tree_history(s.tree, s.history, cfg.use_likelihood ? &leaf_lengths : nullptr)) {
    return k_neg_inf;
  }
  if (log_prior(s.tree, s.params, cfg.prior) == k_neg_inf) {
    return k_neg_inf;
  }
  return total_log_posterior(compute_terms(s, seqs, cfg));
}

struct MoveStats {
  long proposed = 0;
  long accepted = 0;
  long unusable = 0;  // kernel returned no state

  auto rate() const -> double { return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed); }
};

struct StepRecord {
  MoveKind kind = MoveKind::branch;
  bool accepted = false;
  double log_ratio = k_neg_inf;
};

// A starting state that needs only the observed sequences: prior topology and
// branch lengths, every internal node as long as the longest sequence, and
// histories drawn edge by edge with the guided kernel.
inline auto initial_state(const std::vector<Sequence>& seqs, const McmcConfig& cfg, Rng& rng) -> ModelState {
  if (seqs.size() < 3) {
    throw std::invalid_argument{"need at least 3 sequences"};
  }
  auto taxa = std::vector<std::string>{};
  auto longest = 0;
  for (const auto& s : seqs) {
    taxa.push_back(s.name);
    longest = std::max(longest, s.length());
  }
  auto draw = sample_prior(rng, cfg.prior, taxa);
  auto state = ModelState{std::move(draw.tree), TreeHistory{}, draw.params};
  const auto& tree = state.tree;
  state.history.root_length = longest;
  state.history.edges.resize(static_cast<std::size_t>(tree.num_nodes()));
  auto indel = state.params.indel();
  for (auto e : tree.edges()) {
    auto nv = tree.is_leaf(e) ? seqs[static_cast<std::size_t>(e)].length() : longest;
    state.history.edge(e) =
        sample_edge_proposal(rng, longest, nv, tree.branch_length(e), indel, cfg.proposals.guide).history;
  }
  return state;
}

class Chain {
 public:
  Chain(std::vector<Sequence> seqs, McmcConfig cfg, ModelState start, std::uint64_t seed)
      : seqs_{std::move(seqs)}, cfg_{std::move(cfg)}, state_{std::move(start)}, rng_{seed} {
    cfg_.proposals.guide.check();
    for (const auto& s : seqs_) {
      leaf_lengths_.push_back(s.length());
    }
    if (static_cast<int>(seqs_.size()) != state_.tree.num_taxa()) {
      throw std::invalid_argument{"Chain: sequence count does not match the tree"};
    }
    if (auto bad = validate_tree_history(state_.tree, state_.history, cfg_.use_likelihood ? &leaf_lengths_ : nullptr)) {
      throw std::invalid_argument{"Chain: invalid start state: " + *bad};
    }
    terms_ = compute_terms(state_, seqs_, cfg_);
    if (!std::isfinite(total_log_posterior(terms_))) {
      throw std::invalid_argument{"Chain: start state has zero posterior density"};
    }
  }

  // Starts from initial_state() drawn with the chain's own stream.
  static auto from_sequences(std::vector<Sequence> seqs, McmcConfig cfg, std::uint64_t seed) -> Chain {
    auto rng = Rng{seed ^ 0x9e3779b97f4a7c15ULL};
    auto start = initial_state(seqs, cfg, rng);
    return Chain{std::move(seqs), std::move(cfg), std::move(start), seed};
  }

  auto state() const -> const ModelState& { return state_; }
  auto terms() const -> const PosteriorTerms& { return terms_; }
  auto config() const -> const McmcConfig& { return cfg_; }
  auto sequences() const -> const std::vector<Sequence>& { return seqs_; }
  auto iteration() const -> long { return iteration_; }
  auto log_posterior() const -> double { return total_log_posterior(terms_); }
  auto stats() const -> const std::map<std::string, MoveStats>& { return stats_; }
  auto rng() -> Rng& { return rng_; }

  auto step() -> StepRecord {
    auto kind = k_move_kinds[categorical(rng_, cfg_.scan_weights)];
    auto label = std::string{move_name(kind)};
    auto proposal = std::optional<ProposalOutcome>{};
    const auto& tree = state_.tree;
    switch (kind) {
      case MoveKind::branch: {
        auto edges = tree.edges();
        proposal = propose_branch_length(state_, edges[uniform_index(rng_, edges.size())], cfg_.proposals, rng_);
        break;
      }
      case MoveKind::edge_history: {
        auto edges = tree.edges();
        auto e = edges[uniform_index(rng_, edges.size())];
        if (uniform_open01(rng_) < cfg_.proposals.event_swap_fraction) {
          label += ":swap";
          proposal = propose_event_swap(state_, e, rng_);
          break;
        }
        auto guided = uniform_open01(rng_) < cfg_.proposals.guided_fraction;
        label += guided ? ":guided" : ":basic";
        proposal = propose_edge_history(state_, e, guided ? cfg_.proposals.guide : GuideTuning::basic(), rng_);
        break;
      }
      case MoveKind::node: {
        auto internal = tree.internal_nodes();
        auto x = internal[uniform_index(rng_, internal.size())];
        if (uniform_open01(rng_) < cfg_.proposals.node_shift_fraction) {
          auto k = static_cast<int>(uniform_index(rng_, 3));
          auto expand = uniform_open01(rng_) < 0.5;
          label += expand ? ":expand" : ":collapse";
          proposal = propose_node_shift(state_, x, k, expand, rng_);
        } else {
          label += ":resample";
          proposal = propose_node_update(state_, x, cfg_.proposals, rng_);
        }
        break;
      }
      case MoveKind::spr:
        proposal = propose_spr(state_, cfg_.proposals, rng_);
        break;
      case MoveKind::parameters: {
        auto block = k_parameter_blocks[uniform_index(rng_, k_parameter_blocks.size())];
        label += std::string{":"} + block_name(block);
        proposal = propose_parameters(state_, block, cfg_.proposals, rng_);
        break;
      }
    }
    ++iteration_;
    auto& st = stats_[label];
    ++st.proposed;
    auto record = StepRecord{kind, false, k_neg_inf};
    if (!proposal) {
      ++st.unusable;
      maybe_audit();
      return record;
    }
    auto next = refresh(*proposal);
    if (next) {
      record.log_ratio = total_log_posterior(*next) - log_posterior() + proposal->log_hastings();
      if (std::isnan(record.log_ratio)) {
        record.log_ratio = k_neg_inf;
      }
      if (record.log_ratio >= 0.0 || std::log(uniform_open01(rng_)) < record.log_ratio) {
        if (cfg_.audit_interval > 0 && !std::isfinite(proposal->log_reverse)) {
          throw std::logic_error{"accepted move '" + label + "' has no reverse density"};
        }
        state_ = std::move(proposal->state);
        terms_ = std::move(*next);
        record.accepted = true;
        ++st.accepted;
      }
    }
    maybe_audit();
    return record;
  }

  // Recomputes every cached term and returns the largest discrepancy.
  auto audit() const -> double {
    auto fresh = compute_terms(state_, seqs_, cfg_);
    auto worst = std::abs(fresh.log_likelihood - terms_.log_likelihood);
    worst = std::max(worst, std::abs(fresh.log_root - terms_.log_root));
    worst = std::max(worst, std::abs(fresh.log_prior - terms_.log_prior));
    for (auto e : state_.tree.edges()) {
      auto i = static_cast<std::size_t>(e);
      worst = std::max(worst, std::abs(fresh.edge_log_density[i] - terms_.edge_log_density[i]));
    }
    if (!(fresh.alignment == terms_.alignment)) {
      return std::numeric_limits<double>::infinity();
    }
    return worst;
  }

 private:
  // Terms of the proposed state, reusing cached pieces the move left alone;
  // nullopt if the proposal has zero density.
  auto refresh(const ProposalOutcome& p) const -> std::optional<PosteriorTerms> {
    const auto& s = p.state;
    const auto& c = p.changes;
    auto out = terms_;
    out.log_prior = log_prior(s.tree, s.params, cfg_.prior);
    if (out.log_prior == k_neg_inf) {
      return std::nullopt;
    }
    auto indel = s.params.indel();
    if (c.indel_params) {
      out.log_root = indel.log_q(s.history.root_length);
      for (auto e : s.tree.edges()) {
        out.edge_log_density[static_cast<std::size_t>(e)] = edge_history_log_density(s.history.edge(e), indel);
      }
    } else {
      if (c.root_length) {
        out.log_root = indel.log_q(s.history.root_length);
      }
      for (auto e : c.edges) {
        out.edge_log_density[static_cast<std::size_t>(e)] = edge_history_log_density(s.history.edge(e), indel);
      }
    }
    if (c.homology || c.branch_lengths) {
      out.alignment = project_alignment(s.tree, s.history);
    }
    if (cfg_.use_likelihood && (c.homology || c.branch_lengths || c.subst_params)) {
      out.log_likelihood = alignment_log_likelihood(out.alignment, seqs_, s.tree, s.params.subst);
    }
    return out;
  }

  auto maybe_audit() -> void {
    if (cfg_.audit_interval > 0 && iteration_ % cfg_.audit_interval == 0) {
      auto gap = audit();
      if (!(gap <= 1e-8)) {
        throw std::logic_error{"cached posterior terms drifted by " + std::to_string(gap) + " at iteration " +
                               std::to_string(iteration_)};
      }
    }
  }

  std::vector<Sequence> seqs_;
  std::vector<int> leaf_lengths_;
  McmcConfig cfg_;
  ModelState state_;
  PosteriorTerms terms_;
  Rng rng_;
  long iteration_ = 0;
  std::map<std::string, MoveStats> stats_;
};

struct SampleRecord {
  long iteration = 0;
  double log_posterior = 0.0;
  double log_likelihood = 0.0;
  double log_indel = 0.0;
  double log_prior = 0.0;
  ModelState state;
};

inline auto make_sample(const Chain& c) -> SampleRecord {
  const auto& t = c.terms();
  return {c.iteration(), c.log_posterior(), t.log_likelihood, t.log_indel(), t.log_prior, c.state()};
}

// Runs cfg.iterations steps and hands every thin-th state to `emit`
// (iterations thin, 2 thin, ...).
inline auto run_chain(Chain& chain, const std::function<void(const SampleRecord&)>& emit) -> void {
  const auto& cfg = chain.config();
  if (cfg.thin <= 0) {
    throw std::invalid_argument{"thin must be positive"};
  }
  for (auto i = 0L; i < cfg.iterations; ++i) {
    chain.step();
    if (chain.iteration() % cfg.thin == 0) {
      emit(make_sample(chain));
    }
  }
}

}  // namespace bayescat
