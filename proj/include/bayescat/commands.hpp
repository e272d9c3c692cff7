#pragma once

// The work behind each command-line subcommand.  Every function writes its
// files and returns a process exit status; argument parsing lives in
// tools/bayescat.cpp.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bayescat/io.hpp"
#include "bayescat/mcmc.hpp"
#include "bayescat/simulator.hpp"
#include "bayescat/summaries.hpp"
#include "bayescat/validation.hpp"

namespace bayescat {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline auto read_file(const fs::path& p) -> std::string {
  auto in = std::ifstream{p, std::ios::binary};
  if (!in) {
    throw std::runtime_error{"cannot open " + p.string()};
  }
  auto ss = std::ostringstream{};
  ss << in.rdbuf();
  return ss.str();
}

inline auto open_output(const fs::path& p) -> std::ofstream {
  if (p.has_parent_path()) {
    fs::create_directories(p.parent_path());
  }
  auto out = std::ofstream{p, std::ios::binary};
  if (!out) {
    throw std::runtime_error{"cannot write " + p.string()};
  }
  return out;
}

// Per-chain seeds derived from one user seed.
inline auto chain_seed(std::uint64_t seed, int chain) -> std::uint64_t {
  auto z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(chain + 1);  // splitmix64
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Keys read by `simulate` on top of the sampler keys: fixed values for any
// parameter, a fixed root length, and burn_in for the summary commands.
inline const std::set<std::string> k_extra_config_keys = {
    "sim_root_length", "sim_kappa", "sim_gamma", "sim_r", "sim_r_d", "sim_lambda", "sim_pi", "sim_tree", "burn_in", "gap_factor"};

inline auto load_config(const std::string& path) -> Config {
  return path.empty() ? Config{} : Config::parse(read_file(path));
}

// ---------------------------------------------------------------------------

struct SampleOptions {
  std::string fasta;
  std::string config;
  std::uint64_t seed = 1;
  int chains = 1;
  std::optional<long> iterations;
  std::optional<long> thin;
  std::string out_dir = "samples";
};

// Samples are streamed to <out>/chain<k>.tsv; acceptance rates go to
// <out>/chain<k>.moves.tsv.
inline auto cmd_sample(const SampleOptions& o, std::ostream& log = std::cerr) -> int {
  auto seqs = parse_fasta(read_file(o.fasta));
  if (seqs.size() < 3) {
    throw UsageError{"need at least 3 sequences"};
  }
  auto cfg_file = load_config(o.config);
  auto mc = McmcConfig{};
  apply_config(cfg_file, mc, k_extra_config_keys);
  if (o.iterations) {
    mc.iterations = *o.iterations;
    cfg_file.set("iterations", std::to_string(*o.iterations));
  }
  if (o.thin) {
    mc.thin = *o.thin;
    cfg_file.set("thin", std::to_string(*o.thin));
  }
  if (o.chains < 1 || mc.thin < 1) {
    throw UsageError{"--chains and --thin must be at least 1"};
  }
  auto hash = hex64(cfg_file.hash());
  for (auto k = 0; k < o.chains; ++k) {
    auto seed = chain_seed(o.seed, k);
    auto chain = Chain::from_sequences(seqs, mc, seed);
    auto out = open_output(fs::path{o.out_dir} / ("chain" + std::to_string(k + 1) + ".tsv"));
    write_sample_header(out, {hash, seed, seqs});
    run_chain(chain, [&](const SampleRecord& r) { write_sample_row(out, r); });
    if (!out) {
      throw std::runtime_error{"write failed for chain " + std::to_string(k + 1)};
    }
    auto moves = open_output(fs::path{o.out_dir} / ("chain" + std::to_string(k + 1) + ".moves.tsv"));
    moves << "move\tproposed\taccepted\tunusable\trate\n";
    for (const auto& [name, st] : chain.stats()) {
      moves << name << '\t' << st.proposed << '\t' << st.accepted << '\t' << st.unusable << '\t' << format_double(st.rate()) << '\n';
    }
    log << "chain " << k + 1 << ": " << mc.iterations << " iterations, final log posterior "
        << format_double(chain.log_posterior()) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
  int taxa = 5;
  std::string config;
  std::uint64_t seed = 1;
  std::string out_dir = "simulated";
};

inline auto simulation_config(const Config& cfg, Rng& rng, const std::vector<std::string>& taxa) -> SimulationConfig {
  auto mc = McmcConfig{};
  apply_config(cfg, mc, k_extra_config_keys);
  auto sc = SimulationConfig{};
  sc.prior = mc.prior;
  auto fixed = std::vector<std::string>{"sim_kappa", "sim_gamma", "sim_r", "sim_r_d", "sim_lambda", "sim_pi"};
  auto any = false;
  for (const auto& k : fixed) {
    any = any || cfg.has(k);
  }
  if (any) {
    auto p = sample_parameters(rng, sc.prior);
    p.subst.kappa = cfg.get_double("sim_kappa").value_or(p.subst.kappa);
    p.gamma = cfg.get_double("sim_gamma").value_or(p.gamma);
    p.r = cfg.get_double("sim_r").value_or(p.r);
    p.r_d = cfg.get_double("sim_r_d").value_or(p.r_d);
    p.lambda = cfg.get_double("sim_lambda").value_or(p.lambda);
    if (auto pi = cfg.get_string("sim_pi")) {
      auto parts = split_string(*pi, ',');
      if (parts.size() != 4) {
        throw ParseError{"config key 'sim_pi' needs 4 comma-separated values"};
      }
      for (auto i = std::size_t{0}; i < 4; ++i) {
        p.subst.pi[i] = parse_double(trim(parts[i])).value_or(-1.0);
      }
    }
    if (!parameters_in_support(p)) {
      throw ParseError{"simulation parameters are out of range"};
    }
    sc.params = p;
  }
  if (auto len = cfg.get_long("sim_root_length")) {
    sc.root_length = static_cast<int>(*len);
  }
  if (auto nwk = cfg.get_string("sim_tree")) {
    sc.tree = parse_newick(*nwk, &taxa);
  }
  return sc;
}

inline auto write_parameters(std::ostream& os, const Parameters& p) -> void {
  os << "pi\t" << format_double(p.subst.pi[0]) << ',' << format_double(p.subst.pi[1]) << ','
     << format_double(p.subst.pi[2]) << ',' << format_double(p.subst.pi[3]) << '\n'
     << "kappa\t" << format_double(p.subst.kappa) << '\n'
     << "gamma\t" << format_double(p.gamma) << '\n'
     << "r\t" << format_double(p.r) << '\n'
     << "r_d\t" << format_double(p.r_d) << '\n'
     << "lambda\t" << format_double(p.lambda) << '\n';
}

inline auto cmd_simulate(const SimulateOptions& o) -> int {
  if (o.taxa < 3) {
    throw UsageError{"--taxa must be at least 3"};
  }
  auto rng = Rng{o.seed};
  auto taxa = default_taxon_names(o.taxa);
  auto sc = simulation_config(load_config(o.config), rng, taxa);
  auto data = simulate_dataset(rng, taxa, sc);
  auto dir = fs::path{o.out_dir};
  {
    auto f = open_output(dir / "sequences.fasta");
    write_fasta(f, data.sequences);
  }
  {
    auto f = open_output(dir / "true_alignment.fasta");
    write_alignment_fasta(f, data.alignment, data.sequences);
  }
  {
    auto f = open_output(dir / "true_tree.nwk");
    f << write_newick(data.truth.tree, {true}) << '\n';
  }
  {
    auto f = open_output(dir / "true_history.txt");
    f << write_history(data.truth.tree, data.truth.history) << '\n';
  }
  {
    auto f = open_output(dir / "true_parameters.tsv");
    write_parameters(f, data.truth.params);
  }
  return 0;
}

// ---------------------------------------------------------------------------

inline auto load_samples(const std::string& path, double burn_in) -> std::pair<SampleLogHeader, std::vector<ModelState>> {
  auto in = std::ifstream{path};
  if (!in) {
    throw std::runtime_error{"cannot open " + path};
  }
  auto log = read_sample_log(in);
  auto states = std::vector<ModelState>{};
  auto kept = drop_burn_in(std::span<const SampleRecord>{log.records}, burn_in);
  for (const auto& r : kept) {
    states.push_back(r.state);
  }
  return {std::move(log.header), std::move(states)};
}

struct SummarizeOptions {
  std::vector<std::string> samples;
  double burn_in = 0.25;
  double gap_factor = 0.5;
  std::string report_dir = "report";
};

inline auto cmd_summarize(const SummarizeOptions& o) -> int {
  if (o.samples.empty()) {
    throw UsageError{"--samples needs at least one sample log"};
  }
  auto header = SampleLogHeader{};
  auto states = std::vector<ModelState>{};
  for (const auto& path : o.samples) {
    auto [h, s] = load_samples(path, o.burn_in);
    if (!header.sequences.empty() && (h.sequences != header.sequences || h.config_hash != header.config_hash)) {
      throw UsageError{path + " comes from different data or a different config"};
    }
    header = h;
    states.insert(states.end(), s.begin(), s.end());
  }
  if (states.empty()) {
    throw UsageError{"no samples left after burn-in"};
  }
  auto names = std::vector<std::string>{};
  for (const auto& s : header.sequences) {
    names.push_back(s.name);
  }
  auto all = std::span<const ModelState>{states};
  auto dir = fs::path{o.report_dir};

  auto table = topology_split_table(all);
  {
    auto f = open_output(dir / "topologies.tsv");
    f << "probability\tsplits\n";
    for (const auto& [key, p] : table.topologies) {
      f << format_double(p) << '\t' << describe_topology(key, names) << '\n';
    }
  }
  auto stats = split_indel_stats(all);
  {
    auto f = open_output(dir / "splits.tsv");
    f << "split\tprobability\tmean_events\tmean_length\n";
    for (const auto& [split, st] : stats) {
      f << split.describe(names) << '\t' << format_double(st.probability) << '\t' << format_double(st.mean_events) << '\t'
        << format_double(st.mean_length) << '\n';
    }
  }
  {
    auto f = open_output(dir / "consensus.txt");
    f << describe_topology(majority_rule_consensus(table), names) << '\n';
  }
  {
    auto frag = fragment_size_posterior(all);
    auto f = open_output(dir / "fragment_sizes.tsv");
    f << "size\tprobability\n";
    for (const auto& [size, p] : frag.pmf) {
      f << size << '\t' << format_double(p) << '\n';
    }
    if (frag.empty) {
      f << "# no sample contains an indel event\n";
    }
  }
  {
    auto f = open_output(dir / "parameters.tsv");
    f << "parameter\tposterior_mean\n";
    auto names_p = std::vector<std::string>{"pi_A", "pi_C", "pi_G", "pi_T", "kappa", "gamma", "r", "r_d", "lambda", "tree_length", "root_length", "events"};
    auto sums = std::vector<double>(names_p.size(), 0.0);
    for (const auto& s : states) {
      auto v = std::vector<double>{s.params.subst.pi[0], s.params.subst.pi[1], s.params.subst.pi[2], s.params.subst.pi[3],
                                   s.params.subst.kappa, s.params.gamma, s.params.r, s.params.r_d, s.params.lambda,
                                   s.tree.total_length(), static_cast<double>(s.history.root_length),
                                   static_cast<double>(s.history.total_events())};
      for (auto k = std::size_t{0}; k < v.size(); ++k) {
        sums[k] += v[k];
      }
    }
    for (auto k = std::size_t{0}; k < names_p.size(); ++k) {
      f << names_p[k] << '\t' << format_double(sums[k] / static_cast<double>(states.size())) << '\n';
    }
  }
  auto post = pair_homology_posteriors(all);
  auto annealed = annealed_alignment(post, o.gap_factor);
  {
    auto f = open_output(dir / "alignment.fasta");
    write_alignment_fasta(f, annealed.alignment, header.sequences);
  }
  {
    auto f = open_output(dir / "alignment.html");
    f << render_alignment_html(annealed, header.sequences);
  }
  {
    auto f = open_output(dir / "alignment.ansi");
    f << render_alignment_ansi(annealed, header.sequences);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct DiagnoseOptions {
  std::vector<std::string> runs;
  double burn_in = 0.25;
};

inline auto continuous_traces(const ModelState& s) -> std::vector<std::pair<std::string, double>> {
  return {{"pi_A", s.params.subst.pi[0]}, {"pi_C", s.params.subst.pi[1]}, {"pi_G", s.params.subst.pi[2]},
          {"pi_T", s.params.subst.pi[3]}, {"kappa", s.params.subst.kappa}, {"gamma", s.params.gamma},
          {"r", s.params.r},              {"r_d", s.params.r_d},          {"lambda", s.params.lambda},
          {"tree_length", s.tree.total_length()}};
}

struct DiagnoseReport {
  std::vector<std::pair<std::string, GelmanRubin>> r_hat;
  CladeDiagnostic clades;
  bool r_hat_ok = true;
};

inline auto diagnose_runs(const std::vector<std::vector<ModelState>>& runs) -> DiagnoseReport {
  if (runs.size() < 2) {
    throw UsageError{"need ≥2 runs"};
  }
  auto n = runs.front().size();
  for (const auto& r : runs) {
    n = std::min(n, r.size());
  }
  if (n < 2) {
    throw UsageError{"every run needs at least 2 samples after burn-in"};
  }
  auto report = DiagnoseReport{};
  auto names = continuous_traces(runs.front().front());
  for (auto k = std::size_t{0}; k < names.size(); ++k) {
    auto chains = std::vector<std::vector<double>>{};
    for (const auto& r : runs) {
      auto trace = std::vector<double>{};
      for (auto i = std::size_t{0}; i < n; ++i) {
        trace.push_back(continuous_traces(r[i])[k].second);
      }
      chains.push_back(std::move(trace));
    }
    auto gr = gelman_rubin(chains);
    report.r_hat_ok = report.r_hat_ok && !gr.degenerate && gr.r_hat < 1.05;
    report.r_hat.emplace_back(names[k].first, gr);
  }
  auto tables = std::vector<SplitTable>{};
  for (const auto& r : runs) {
    tables.push_back(topology_split_table(std::span<const ModelState>{r}));
  }
  report.clades = clade_frequency_diagnostic(tables);
  return report;
}

inline auto cmd_diagnose(const DiagnoseOptions& o, std::ostream& out = std::cout) -> int {
  if (o.runs.size() < 2) {
    throw UsageError{"need ≥2 runs"};
  }
  auto runs = std::vector<std::vector<ModelState>>{};
  auto names = std::vector<std::string>{};
  for (const auto& path : o.runs) {
    auto [h, s] = load_samples(path, o.burn_in);
    names.clear();
    for (const auto& q : h.sequences) {
      names.push_back(q.name);
    }
    runs.push_back(std::move(s));
  }
  auto report = diagnose_runs(runs);
  out << "parameter\tR\n";
  for (const auto& [name, gr] : report.r_hat) {
    out << name << '\t' << (gr.degenerate ? std::string{"degenerate"} : format_double(gr.r_hat)) << '\n';
  }
  out << "\nsplit\tspread\n";
  for (const auto& c : report.clades.clades) {
    if (!c.split.is_trivial()) {
      out << c.split.describe(names) << '\t' << format_double(c.spread) << '\n';
    }
  }
  out << "\nR below 1.05: " << (report.r_hat_ok ? "yes" : "no") << '\n'
      << "clade spreads below 0.05: " << (report.clades.converged ? "yes" : "no") << '\n';
  return report.r_hat_ok && report.clades.converged ? 0 : 2;
}

// ---------------------------------------------------------------------------

struct ValidatePriorOptions {
  int datasets = 100;
  long iterations = 50000;
  long thin = 50;
  int taxa = 4;
  std::string config;
  std::uint64_t seed = 1;
};

inline auto cmd_validate_prior(const ValidatePriorOptions& o, std::ostream& out = std::cout) -> int {
  auto pc = PriorRecoveryConfig{};
  apply_config(load_config(o.config), pc.mcmc, k_extra_config_keys);
  pc.mcmc.iterations = o.iterations;
  pc.mcmc.thin = o.thin;
  pc.datasets = o.datasets;
  pc.taxa = o.taxa;
  pc.seed = o.seed;
  if (pc.datasets < 2 || pc.taxa < 3 || pc.mcmc.thin < 1) {
    throw UsageError{"need --datasets >= 2, --taxa >= 3 and --thin >= 1"};
  }
  auto res = run_prior_recovery(pc);
  auto ok = true;
  out << "statistic\tprior_mean\testimate\tse\tz\n";
  for (const auto& s : res.stats) {
    out << s.name << '\t' << format_double(s.prior_mean) << '\t' << format_double(s.estimate) << '\t'
        << format_double(s.standard_error) << '\t' << format_double(s.z()) << '\n';
    ok = ok && std::abs(s.z()) <= 3.0;
  }
  out << "\nmove\tacceptance\n";
  for (const auto& [name, rate] : res.acceptance) {
    out << name << '\t' << format_double(rate) << '\n';
  }
  out << "\nall statistics within 3 standard errors: " << (ok ? "yes" : "no") << '\n';
  return ok ? 0 : 2;
}

}  // namespace bayescat
