#pragma once

// Prior-recovery checks.  Datasets are simulated from the prior and a chain
// is run on each; averaged over datasets, posterior expectations must
// reproduce prior expectations.  Each chain starts from the simulated truth,
// which is an exact posterior draw, so every retained state is (marginally)
// a prior draw when the sampler is correct.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bayescat/mcmc.hpp"
#include "bayescat/simulator.hpp"
#include "bayescat/summaries.hpp"

namespace bayescat {

struct RecoveryStatistic {
  std::string name;
  double prior_mean = 0.0;
  double estimate = 0.0;         // mean over datasets of the posterior mean
  double standard_error = 0.0;   // across datasets
  auto z() const -> double { return standard_error > 0.0 ? (estimate - prior_mean) / standard_error : 0.0; }
};

struct PriorRecoveryConfig {
  McmcConfig mcmc;  // iterations and thin are per dataset
  int taxa = 4;
  int datasets = 100;
  bool start_at_truth = true;
  std::uint64_t seed = 1;
};

struct PriorRecoveryResult {
  std::vector<RecoveryStatistic> stats;
  std::map<std::string, double> acceptance;  // pooled over datasets
};

// Statistics with finite prior means: r, r_d, lambda, and the indicators
// kappa < 1/alpha_kappa and gamma < 1/alpha_gamma (both have prior mean 1/2
// because those thresholds are the prior medians).
inline auto run_prior_recovery(const PriorRecoveryConfig& cfg) -> PriorRecoveryResult {
  const auto& pr = cfg.mcmc.prior;
  auto names = std::vector<std::string>{"r", "r_d", "lambda", "kappa_below_median", "gamma_below_median"};
  auto prior_means = std::vector<double>{pr.r_alpha / (pr.r_alpha + pr.r_beta), pr.rd_alpha / (pr.rd_alpha + pr.rd_beta),
                                         1.0 / pr.lambda_alpha, 0.5, 0.5};
  auto values = [&](const Parameters& p) {
    return std::vector<double>{p.r, p.r_d, p.lambda, p.subst.kappa < 1.0 / pr.kappa_alpha ? 1.0 : 0.0,
                               p.gamma < 1.0 / pr.gamma_alpha ? 1.0 : 0.0};
  };
  auto per_dataset = std::vector<std::vector<double>>(names.size());
  auto proposed = std::map<std::string, long>{};
  auto accepted = std::map<std::string, long>{};
  auto master = Rng{cfg.seed};
  auto taxa = default_taxon_names(cfg.taxa);
  for (auto d = 0; d < cfg.datasets; ++d) {
    auto sim_seed = master();
    auto chain_seed = master();
    auto sim_rng = Rng{sim_seed};
    auto sim = simulate_dataset(sim_rng, taxa, SimulationConfig{pr, {}, {}, {}});
    auto chain = cfg.start_at_truth ? Chain{sim.sequences, cfg.mcmc, sim.truth, chain_seed}
                                    : Chain::from_sequences(sim.sequences, cfg.mcmc, chain_seed);
    auto sums = std::vector<double>(names.size(), 0.0);
    auto count = 0L;
    run_chain(chain, [&](const SampleRecord& rec) {
      auto v = values(rec.state.params);
      for (auto k = std::size_t{0}; k < v.size(); ++k) {
        sums[k] += v[k];
      }
      ++count;
    });
    for (auto k = std::size_t{0}; k < names.size(); ++k) {
      per_dataset[k].push_back(count ? sums[k] / static_cast<double>(count) : 0.0);
    }
    for (const auto& [label, st] : chain.stats()) {
      proposed[label] += st.proposed;
      accepted[label] += st.accepted;
    }
  }
  auto out = PriorRecoveryResult{};
  for (auto k = std::size_t{0}; k < names.size(); ++k) {
    const auto& xs = per_dataset[k];
    auto m = static_cast<double>(xs.size());
    auto mean = 0.0;
    for (auto x : xs) {
      mean += x;
    }
    mean /= m;
    auto var = 0.0;
    for (auto x : xs) {
      var += (x - mean) * (x - mean);
    }
    var /= std::max(1.0, m - 1.0);
    out.stats.push_back({names[k], prior_means[k], mean, std::sqrt(var / m)});
  }
  for (const auto& [label, n] : proposed) {
    out.acceptance[label] = n ? static_cast<double>(accepted[label]) / static_cast<double>(n) : 0.0;
  }
  return out;
}

struct TopologyUniformityResult {
  std::vector<std::pair<TopologyKey, double>> frequencies;  // pooled over chains
  std::vector<double> standard_errors;                      // between-chain
  int expected_topologies = 0;
  int observed_topologies = 0;
  double worst_z = 0.0;
};

// Samples the data-free target (no substitution likelihood) with every leaf
// of the same length; by symmetry every unrooted topology is equally likely.
// Frequencies are pooled over independent chains and their standard errors
// come from the spread between chains.
inline auto run_topology_uniformity(int taxa, int leaf_length, int chains, const McmcConfig& base, std::uint64_t seed)
    -> TopologyUniformityResult {
  auto cfg = base;
  cfg.use_likelihood = false;
  auto names = default_taxon_names(taxa);
  auto seqs = std::vector<Sequence>{};
  for (const auto& n : names) {
    seqs.push_back({n, std::string(static_cast<std::size_t>(leaf_length), 'A')});
  }
  auto per_chain = std::vector<std::map<TopologyKey, double>>{};
  auto all = std::map<TopologyKey, double>{};
  auto master = Rng{seed};
  for (auto c = 0; c < chains; ++c) {
    auto chain = Chain::from_sequences(seqs, cfg, master());
    auto counts = std::map<TopologyKey, double>{};
    auto total = 0.0;
    run_chain(chain, [&](const SampleRecord& rec) {
      counts[topology_key(rec.state.tree)] += 1.0;
      total += 1.0;
    });
    for (auto& [k, v] : counts) {
      v /= total;
      all[k] += 0.0;
    }
    per_chain.push_back(std::move(counts));
  }
  auto out = TopologyUniformityResult{};
  out.expected_topologies = static_cast<int>(std::lround(num_unrooted_topologies(taxa)));
  auto target = 1.0 / out.expected_topologies;
  auto m = static_cast<double>(chains);
  for (const auto& [key, unused] : all) {
    auto mean = 0.0;
    for (const auto& pc : per_chain) {
      auto it = pc.find(key);
      mean += it == pc.end() ? 0.0 : it->second;
    }
    mean /= m;
    auto var = 0.0;
    for (const auto& pc : per_chain) {
      auto it = pc.find(key);
      auto x = it == pc.end() ? 0.0 : it->second;
      var += (x - mean) * (x - mean);
    }
    var /= std::max(1.0, m - 1.0);
    auto se = std::sqrt(var / m);
    out.frequencies.emplace_back(key, mean);
    out.standard_errors.push_back(se);
    out.worst_z = std::max(out.worst_z, se > 0.0 ? std::abs(mean - target) / se : (mean == target ? 0.0 : INFINITY));
  }
  out.observed_topologies = static_cast<int>(out.frequencies.size());
  return out;
}

}  // namespace bayescat
