#pragma once

// Independent reference computations used by the tests.  Nothing here calls
// into the library's numerical code; only plain data types are shared.

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "bayescat/core_types.hpp"
#include "bayescat/tree.hpp"

#ifdef BAYESCAT_WITH_EIGEN
#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#endif

namespace oracle {

using namespace bayescat;

// Geometric pmf on {1, 2, ...}.
inline auto geom(int k, double p) -> double { return k < 1 ? 0.0 : p * std::pow(1.0 - p, k - 1); }

// lambda/mu by brute partial sums.
inline auto ratio_by_series(double r, const std::function<double(int)>& d, int terms = 20000) -> double {
  auto s = 0.0;
  for (auto k = 1; k <= terms; ++k) {
    s += std::pow(1.0 - r, k) * d(k);
  }
  return s;
}

inline auto f_by_sum(int x, const std::function<double(int)>& d) -> double {
  auto s = 0.0;
  for (auto k = 1; k <= x; ++k) {
    s += (x - k + 1) * d(k);
  }
  return s;
}

// Edge density assembled term by term from the definitions, geometric d.
inline auto edge_log_density(const EdgeHistory& h, double r, double r_d, double lambda) -> double {
  auto d = [&](int k) { return geom(k, r_d); };
  auto ratio = ratio_by_series(r, d);
  auto mu = lambda / ratio;
  auto ins = [&](int k) { return std::pow(1.0 - r, k) * d(k) / ratio; };
  auto eta = [&](int n) { return (n + 1) * lambda + f_by_sum(n, d) * mu; };
  auto total = 0.0;
  auto n = h.parent_length;
  auto t = 0.0;
  for (const auto& e : h.events) {
    total -= eta(n) * (e.time - t);
    total += e.kind == IndelKind::insertion ? std::log(lambda * ins(e.size)) : std::log(mu * d(e.size));
    n = e.length_after;
    t = e.time;
  }
  return total - eta(n) * (h.edge_length - t);
}

#ifdef BAYESCAT_WITH_EIGEN

// HKY transition matrix by the matrix exponential of a generator built from
// its definition.
inline auto hky_matrix(double kappa, const std::array<double, 4>& pi, double t) -> Eigen::Matrix4d {
  Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      if (a != b) {
        auto transition = (a == 0 && b == 2) || (a == 2 && b == 0) || (a == 1 && b == 3) || (a == 3 && b == 1);
        q(a, b) = pi[static_cast<std::size_t>(b)] * (transition ? kappa : 1.0);
      }
    }
    q(a, a) = -q.row(a).sum();
  }
  auto rate = 0.0;
  for (int a = 0; a < 4; ++a) {
    rate -= pi[static_cast<std::size_t>(a)] * q(a, a);
  }
  q /= rate;
  return (q * t).exp();
}

// Log likelihood by summing over every assignment of states to internal
// nodes and gapped leaves.
inline auto brute_force_log_likelihood(const Alignment& aln, const std::vector<Sequence>& seqs, const Tree& tree,
                                       double kappa, const std::array<double, 4>& pi) -> double {
  auto probs = std::vector<Eigen::Matrix4d>(static_cast<std::size_t>(tree.num_nodes()));
  for (auto e : tree.edges()) {
    probs[static_cast<std::size_t>(e)] = hky_matrix(kappa, pi, tree.branch_length(e));
  }
  auto total = 0.0;
  for (auto col = 0; col < aln.num_columns(); ++col) {
    auto fixed = std::vector<int>(static_cast<std::size_t>(tree.num_nodes()), -1);
    auto free_nodes = std::vector<int>{};
    for (auto v = 0; v < tree.num_nodes(); ++v) {
      if (tree.is_leaf(v)) {
        auto cell = aln.cells[static_cast<std::size_t>(v)][static_cast<std::size_t>(col)];
        if (cell == k_gap) {
          free_nodes.push_back(v);
        } else {
          fixed[static_cast<std::size_t>(v)] =
              nucleotide_index(seqs[static_cast<std::size_t>(v)].bases[static_cast<std::size_t>(cell)]);
        }
      } else {
        free_nodes.push_back(v);
      }
    }
    auto combos = 1L << (2 * free_nodes.size());
    auto sum = 0.0;
    for (auto code = 0L; code < combos; ++code) {
      auto state = fixed;
      for (auto k = std::size_t{0}; k < free_nodes.size(); ++k) {
        state[static_cast<std::size_t>(free_nodes[k])] = static_cast<int>((code >> (2 * k)) & 3);
      }
      auto p = pi[static_cast<std::size_t>(state[static_cast<std::size_t>(tree.root())])];
      for (auto e : tree.edges()) {
        p *= probs[static_cast<std::size_t>(e)](state[static_cast<std::size_t>(tree.parent(e))], state[static_cast<std::size_t>(e)]);
      }
      sum += p;
    }
    total += std::log(sum);
  }
  return total;
}

// Transition probabilities of the sequence-length process over time v,
// from the generator truncated at max_len.  Insertions of size l leave
// length n at total rate (n+1) lambda i(l), deletions at (n-l+1) mu d(l).
inline auto length_transition(int max_len, double v, double lambda, double mu, const std::function<double(int)>& ins,
                              const std::function<double(int)>& del) -> Eigen::MatrixXd {
  auto m = max_len + 1;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m, m);
  for (auto n = 0; n <= max_len; ++n) {
    auto out_rate = 0.0;
    for (auto l = 1; l <= 400; ++l) {
      auto rate = (n + 1) * lambda * ins(l);
      out_rate += rate;
      if (n + l <= max_len) {
        q(n, n + l) += rate;
      }
    }
    for (auto l = 1; l <= n; ++l) {
      auto rate = (n - l + 1) * mu * del(l);
      out_rate += rate;
      q(n, n - l) += rate;
    }
    q(n, n) = -out_rate;
  }
  return (q * v).exp();
}

#endif

// Every multiple alignment of sequences with the given lengths, each as
// per-taxon column assignments plus the column count.
inline auto all_alignments(const std::vector<int>& lengths) -> std::vector<Alignment> {
  auto out = std::vector<Alignment>{};
  auto n = lengths.size();
  auto pos = std::vector<int>(n, 0);
  auto cols = std::vector<std::vector<int>>(n);
  auto num_cols = 0;
  std::function<void()> rec = [&]() {
    auto done = true;
    for (auto t = std::size_t{0}; t < n; ++t) {
      done = done && pos[t] == lengths[t];
    }
    if (done) {
      out.push_back(alignment_from_columns(cols, num_cols));
      return;
    }
    for (auto mask = 1U; mask < (1U << n); ++mask) {
      auto ok = true;
      for (auto t = std::size_t{0}; t < n; ++t) {
        if ((mask >> t & 1U) && pos[t] == lengths[t]) {
          ok = false;
        }
      }
      if (!ok) {
        continue;
      }
      for (auto t = std::size_t{0}; t < n; ++t) {
        if (mask >> t & 1U) {
          cols[t].push_back(num_cols);
          ++pos[t];
        }
      }
      ++num_cols;
      rec();
      --num_cols;
      for (auto t = std::size_t{0}; t < n; ++t) {
        if (mask >> t & 1U) {
          cols[t].pop_back();
          --pos[t];
        }
      }
    }
  };
  rec();
  return out;
}

// Groups leaf residues by lineage id directly, without any ordering logic:
// returns the set of homologous pairs ((taxon, base), (taxon, base)).
using ResidueRef = std::pair<int, int>;
inline auto homologous_pairs_from_ids(const std::vector<std::vector<long>>& leaf_ids) -> std::set<std::pair<ResidueRef, ResidueRef>> {
  auto by_id = std::map<long, std::vector<ResidueRef>>{};
  for (auto t = 0; t < static_cast<int>(leaf_ids.size()); ++t) {
    for (auto b = 0; b < static_cast<int>(leaf_ids[static_cast<std::size_t>(t)].size()); ++b) {
      by_id[leaf_ids[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)]].push_back({t, b});
    }
  }
  auto out = std::set<std::pair<ResidueRef, ResidueRef>>{};
  for (const auto& [id, refs] : by_id) {
    for (auto i = std::size_t{0}; i < refs.size(); ++i) {
      for (auto j = i + 1; j < refs.size(); ++j) {
        out.insert({refs[i], refs[j]});
      }
    }
  }
  return out;
}

inline auto homologous_pairs(const Alignment& a) -> std::set<std::pair<ResidueRef, ResidueRef>> {
  auto out = std::set<std::pair<ResidueRef, ResidueRef>>{};
  for (auto c = 0; c < a.num_columns(); ++c) {
    auto refs = std::vector<ResidueRef>{};
    for (auto t = 0; t < a.num_taxa(); ++t) {
      auto cell = a.cells[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
      if (cell != k_gap) {
        refs.push_back({t, cell});
      }
    }
    for (auto i = std::size_t{0}; i < refs.size(); ++i) {
      for (auto j = i + 1; j < refs.size(); ++j) {
        out.insert({refs[i], refs[j]});
      }
    }
  }
  return out;
}

// Independent replay that tracks lineage ids per residue (no ordering).
inline auto leaf_lineage_ids(const Tree& tree, const TreeHistory& h) -> std::vector<std::vector<long>> {
  auto ids = std::vector<std::vector<long>>(static_cast<std::size_t>(tree.num_nodes()));
  auto next = 0L;
  for (auto i = 0; i < h.root_length; ++i) {
    ids[static_cast<std::size_t>(tree.root())].push_back(next++);
  }
  for (auto v : tree.preorder()) {
    if (v == tree.root()) {
      continue;
    }
    auto seq = ids[static_cast<std::size_t>(tree.parent(v))];
    for (const auto& e : h.edge(v).events) {
      if (e.kind == IndelKind::insertion) {
        auto fresh = std::vector<long>{};
        for (auto k = 0; k < e.size; ++k) {
          fresh.push_back(next++);
        }
        seq.insert(seq.begin() + e.position, fresh.begin(), fresh.end());
      } else {
        seq.erase(seq.begin() + e.position, seq.begin() + e.position + e.size);
      }
    }
    ids[static_cast<std::size_t>(v)] = std::move(seq);
  }
  ids.resize(static_cast<std::size_t>(tree.num_taxa()));
  return ids;
}

}  // namespace oracle
