#pragma once

// HKY85 substitution model and the pruning likelihood of an alignment.  Gap
// cells are missing data; residues enter at the stationary distribution.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bayescat/core_types.hpp"

namespace bayescat {

using Matrix4 = std::array<std::array<double, 4>, 4>;

inline auto is_transition(int a, int b) -> bool {
  // A<->G (0,2) and C<->T (1,3)
  return a != b && (a % 2) == (b % 2);
}

// HKY generator normalized to one expected substitution per unit time.
class RateMatrix {
 public:
  explicit RateMatrix(const SubstParams& sp) : sp_{sp} {
    if (!sp.valid()) {
      throw std::domain_error{"HKY needs kappa > 0 and pi on the simplex"};
    }
    const auto& pi = sp.pi;
    pi_group_ = {pi[0] + pi[2], pi[1] + pi[3]};
    auto raw_rate = 2.0 * (sp.kappa * (pi[0] * pi[2] + pi[1] * pi[3]) + pi_group_[0] * pi_group_[1]);
    beta_ = 1.0 / raw_rate;
    for (auto g = 0; g < 2; ++g) {
      group_decay_[static_cast<std::size_t>(g)] = beta_ * (pi_group_[static_cast<std::size_t>(g)] * sp.kappa + (1.0 - pi_group_[static_cast<std::size_t>(g)]));
    }
  }

  auto params() const -> const SubstParams& { return sp_; }
  auto pi() const -> const std::array<double, 4>& { return sp_.pi; }

  auto generator() const -> Matrix4 {
    auto q = Matrix4{};
    for (auto a = 0; a < 4; ++a) {
      auto row = 0.0;
      for (auto b = 0; b < 4; ++b) {
        if (a != b) {
          auto rate = beta_ * sp_.pi[static_cast<std::size_t>(b)] * (is_transition(a, b) ? sp_.kappa : 1.0);
          q[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = rate;
          row += rate;
        }
      }
      q[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] = -row;
    }
    return q;
  }

  // Closed-form HKY transition probabilities.
  auto transition_probabilities(double t) const -> Matrix4 {
    if (!(t >= 0.0)) {
      throw std::domain_error{"transition_probabilities: negative time"};
    }
    auto p = Matrix4{};
    auto e_all = std::exp(-beta_ * t);
    for (auto a = 0; a < 4; ++a) {
      for (auto b = 0; b < 4; ++b) {
        auto pb = sp_.pi[static_cast<std::size_t>(b)];
        auto g = static_cast<std::size_t>(b % 2);
        auto pg = pi_group_[g];
        auto e_grp = std::exp(-group_decay_[g] * t);
        auto& out = p[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        if (a == b) {
          out = pb + pb * (1.0 / pg - 1.0) * e_all + ((pg - pb) / pg) * e_grp;
        } else if (is_transition(a, b)) {
          out = pb + pb * (1.0 / pg - 1.0) * e_all - (pb / pg) * e_grp;
        } else {
          out = pb * (1.0 - e_all);
        }
      }
    }
    return p;
  }

 private:
  SubstParams sp_;
  std::array<double, 2> pi_group_{};  // purines, pyrimidines
  std::array<double, 2> group_decay_{};
  double beta_ = 1.0;
};

inline auto transition_probabilities(const RateMatrix& q, double t) -> Matrix4 { return q.transition_probabilities(t); }

// log Pr(S | A, T, theta_sub) by Felsenstein pruning.  Alignment rows are
// indexed by leaf id; `seqs[leaf]` holds that leaf's bases.
inline auto alignment_log_likelihood(const Alignment& a, const std::vector<Sequence>& seqs, const Tree& tree,
                                     const SubstParams& sp) -> double {
  if (a.num_taxa() != tree.num_taxa() || static_cast<int>(seqs.size()) != tree.num_taxa()) {
    throw std::invalid_argument{"alignment_log_likelihood: taxa do not match the tree"};
  }
  for (auto t = 0; t < tree.num_taxa(); ++t) {
    if (static_cast<int>(a.residue_column[static_cast<std::size_t>(t)].size()) != seqs[static_cast<std::size_t>(t)].length()) {
      throw std::invalid_argument{"alignment_log_likelihood: row " + std::to_string(t) + " does not match its sequence"};
    }
  }
  auto rm = RateMatrix{sp};
  auto num_nodes = static_cast<std::size_t>(tree.num_nodes());
  auto probs = std::vector<Matrix4>(num_nodes);
  for (auto e : tree.edges()) {
    probs[static_cast<std::size_t>(e)] = rm.transition_probabilities(tree.branch_length(e));
  }
  auto post = tree.postorder();
  auto partial = std::vector<std::array<double, 4>>(num_nodes);
  auto empty = std::vector<bool>(num_nodes);  // subtree has no residue in this column
  const auto& pi = sp.pi;
  auto total = 0.0;
  for (auto col = 0; col < a.num_columns(); ++col) {
    auto scale = 0.0;
    for (auto v : post) {
      auto& lv = partial[static_cast<std::size_t>(v)];
      if (tree.is_leaf(v)) {
        auto cell = a.cells[static_cast<std::size_t>(v)][static_cast<std::size_t>(col)];
        if (cell == k_gap) {
          empty[static_cast<std::size_t>(v)] = true;
          lv = {1.0, 1.0, 1.0, 1.0};
        } else {
          empty[static_cast<std::size_t>(v)] = false;
          lv = {0.0, 0.0, 0.0, 0.0};
          lv[static_cast<std::size_t>(nucleotide_index(seqs[static_cast<std::size_t>(v)].bases[static_cast<std::size_t>(cell)]))] = 1.0;
        }
        continue;
      }
      lv = {1.0, 1.0, 1.0, 1.0};
      auto all_empty = true;
      for (auto c : tree.children(v)) {
        if (empty[static_cast<std::size_t>(c)]) {
          continue;
        }
        all_empty = false;
        const auto& pc = probs[static_cast<std::size_t>(c)];
        const auto& lc = partial[static_cast<std::size_t>(c)];
        for (auto x = std::size_t{0}; x < 4; ++x) {
          lv[x] *= pc[x][0] * lc[0] + pc[x][1] * lc[1] + pc[x][2] * lc[2] + pc[x][3] * lc[3];
        }
      }
      empty[static_cast<std::size_t>(v)] = all_empty;
      if (!all_empty) {
        auto m = std::max(std::max(lv[0], lv[1]), std::max(lv[2], lv[3]));
        if (m > 0.0 && m < 1e-100) {
          for (auto& x : lv) {
            x /= m;
          }
          scale += std::log(m);
        }
      }
    }
    const auto& lr = partial[static_cast<std::size_t>(tree.root())];
    total += std::log(pi[0] * lr[0] + pi[1] * lr[1] + pi[2] * lr[2] + pi[3] * lr[3]) + scale;
  }
  return total;
}

}  // namespace bayescat
