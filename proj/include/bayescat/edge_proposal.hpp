#pragma once

// Proposal kernel for the indel history of one edge with both end lengths
// fixed (n0 at the parent, nv at the child).
//
// A provisional history is grown forward with the indel process itself.  If
// it stops at a length other than nv, one repair event is appended at a
// uniform time after the last event, with its type and size forced by the
// deficit and its position uniform.  The proposal density of a history h with
// K events therefore sums two routes to h:
//
//   (a) all K events generated, then the process stopped at nv;
//   (b) K-1 events generated, the process stopped short, and event K is the
//       repair, with density 1 / ((v - t_{K-1}) * #positions).
//
// The guided variant biases the forward steps toward the child length:
//
//   w_stop   when the current length equals nv, stop outright with this
//            probability before drawing the next waiting time;
//   w_dir    type probability moved toward the direction of nv:
//            p_in' = w_dir + (1 - w_dir) p_in below nv, (1 - w_dir) p_in above;
//   w_exact  size drawn as exactly the remaining deficit with this
//            probability, otherwise from the model size law.
//
// With all three weights zero the guided kernel is the basic kernel.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bayescat/core_types.hpp"
#include "bayescat/indel_model.hpp"
#include "bayescat/random.hpp"

namespace bayescat {

struct GuideTuning {
  double w_stop = 0.5;
  double w_dir = 0.8;
  double w_exact = 0.3;

  static auto basic() -> GuideTuning { return {0.0, 0.0, 0.0}; }

  auto check() const -> void {
    for (auto w : {w_stop, w_dir, w_exact}) {
      if (!(w >= 0.0 && w < 1.0)) {
        throw std::domain_error{"guide weights must lie in [0, 1)"};
      }
    }
  }
};

struct EdgeDraw {
  EdgeHistory history;
  double log_density = 0.0;
};

namespace detail {

inline auto log_sum_exp(double a, double b) -> double {
  if (a == k_neg_inf) {
    return b;
  }
  if (b == k_neg_inf) {
    return a;
  }
  auto m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline auto tilted_insertion_probability(int n, int target, const IndelParams& p, const GuideTuning& g) -> double {
  auto p_in = (n + 1) * p.lambda() / p.eta(n);
  if (n < target) {
    return g.w_dir + (1.0 - g.w_dir) * p_in;
  }
  if (n > target) {
    return (1.0 - g.w_dir) * p_in;
  }
  return p_in;
}

// log density of generating event e from (t_prev, n) by a forward step.
inline auto log_forward_step(const IndelEvent& e, double t_prev, int n, int target, const IndelParams& p,
                             const GuideTuning& g) -> double {
  auto eta = p.eta(n);
  auto out = std::log(eta) - eta * (e.time - t_prev);
  if (n == target) {
    out += std::log1p(-g.w_stop);
  }
  auto p_in = tilted_insertion_probability(n, target, p, g);
  if (e.kind == IndelKind::insertion) {
    out += std::log(p_in);
    auto size_prob = (1.0 - (n < target ? g.w_exact : 0.0)) * p.insertion_size(e.size);
    if (n < target && e.size == target - n) {
      size_prob += g.w_exact;
    }
    out += std::log(size_prob) - std::log(static_cast<double>(n + 1));
  } else {
    out += std::log1p(-p_in);
    auto size_prob = (1.0 - (n > target ? g.w_exact : 0.0)) * std::exp(p.log_deletion_size_given_length(e.size, n));
    if (n > target && e.size == n - target) {
      size_prob += g.w_exact;
    }
    out += std::log(size_prob) - std::log(static_cast<double>(n - e.size + 1));
  }
  return out;
}

// log probability that the forward process stops at (t, n) before v.
inline auto log_stop(double t, int n, int target, double v, const IndelParams& p, const GuideTuning& g) -> double {
  auto tail = -p.eta(n) * (v - t);
  if (n == target && g.w_stop > 0.0) {
    return std::log(g.w_stop + (1.0 - g.w_stop) * std::exp(tail));
  }
  return tail;
}

}  // namespace detail

// Exact log proposal density of `h` under the (guided or basic) kernel,
// conditional on its end lengths and edge length; -infinity if the kernel
// cannot produce h.
inline auto edge_proposal_log_density(const EdgeHistory& h, const IndelParams& p, const GuideTuning& g) -> double {
  if (validate_edge_history(h)) {
    return k_neg_inf;
  }
  const auto target = h.child_length;
  const auto v = h.edge_length;
  const auto k = h.events.size();
  auto prefix = 0.0;  // log density of generating events [0, j)
  auto prefix_before_last = 0.0;
  auto n = h.parent_length;
  auto t = 0.0;
  auto n_before_last = n;
  auto t_before_last = t;
  for (auto j = std::size_t{0}; j < k; ++j) {
    if (j + 1 == k) {
      prefix_before_last = prefix;
      n_before_last = n;
      t_before_last = t;
    }
    prefix += detail::log_forward_step(h.events[j], t, n, target, p, g);
    n = h.events[j].length_after;
    t = h.events[j].time;
  }
  auto generated = prefix + detail::log_stop(t, n, target, v, p, g);
  if (k == 0) {
    return generated;
  }
  const auto& last = h.events.back();
  auto positions = last.kind == IndelKind::insertion ? n_before_last + 1 : n_before_last - last.size + 1;
  auto repaired = prefix_before_last + detail::log_stop(t_before_last, n_before_last, target, v, p, g) -
                  std::log(v - t_before_last) - std::log(static_cast<double>(positions));
  return detail::log_sum_exp(generated, repaired);
}

inline auto sample_edge_proposal(Rng& rng, int n0, int nv, double v, const IndelParams& p, const GuideTuning& g) -> EdgeDraw {
  if (n0 < 0 || nv < 0 || !(v > 0.0)) {
    throw std::invalid_argument{"edge proposal needs nonnegative lengths and a positive edge length"};
  }
  auto h = EdgeHistory{{}, n0, nv, v};
  auto n = n0;
  auto t = 0.0;
  while (true) {
    if (n == nv && g.w_stop > 0.0 && uniform_open01(rng) < g.w_stop) {
      break;
    }
    auto dt = exponential(rng, p.eta(n));
    if (t + dt >= v) {
      break;
    }
    t += dt;
    auto p_in = detail::tilted_insertion_probability(n, nv, p, g);
    if (uniform_open01(rng) < p_in) {
      auto l = (n < nv && uniform_open01(rng) < g.w_exact) ? nv - n : p.sample_insertion_size(rng);
      auto pos = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n + 1)));
      h.events.push_back(insertion(t, pos, l, n));
    } else {
      auto l = (n > nv && uniform_open01(rng) < g.w_exact) ? n - nv : p.sample_deletion_size(rng, n);
      auto pos = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n - l + 1)));
      h.events.push_back(deletion(t, pos, l, n));
    }
    n = h.events.back().length_after;
  }
  if (n != nv) {
    // If (t, v) holds no representable interior point the draw stays invalid
    // and its density comes back as -infinity.
    auto t_repair = uniform_real(rng, t, v);
    for (auto tries = 0; tries < 64 && !(t_repair > t && t_repair < v); ++tries) {
      t_repair = uniform_real(rng, t, v);
    }
    if (nv > n) {
      auto pos = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n + 1)));
      h.events.push_back(insertion(t_repair, pos, nv - n, n));
    } else {
      auto pos = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(nv + 1)));
      h.events.push_back(deletion(t_repair, pos, n - nv, n));
    }
  }
  auto log_q = edge_proposal_log_density(h, p, g);
  return {std::move(h), log_q};
}

inline auto propose_edge_history_basic(Rng& rng, int n0, int nv, double v, const IndelParams& p) -> EdgeDraw {
  return sample_edge_proposal(rng, n0, nv, v, p, GuideTuning::basic());
}

inline auto propose_edge_history_guided(Rng& rng, int n0, int nv, double v, const IndelParams& p, const GuideTuning& g) -> EdgeDraw {
  return sample_edge_proposal(rng, n0, nv, v, p, g);
}

}  // namespace bayescat
