#include <iostream>

#include <CLI11.hpp>

#include "bayescat/commands.hpp"

int main(int argc, char** argv) {
  using namespace bayescat;
  CLI::App app{"Joint Bayesian sampling of phylogenies, alignments and indel histories"};
  app.require_subcommand(1);

  auto sample = SampleOptions{};
  auto* sc = app.add_subcommand("sample", "run MCMC chains on a FASTA file");
  sc->add_option("--fasta", sample.fasta, "unaligned sequences")->required()->check(CLI::ExistingFile);
  sc->add_option("--config", sample.config, "key=value config file")->check(CLI::ExistingFile);
  sc->add_option("--seed", sample.seed, "random seed");
  sc->add_option("--chains", sample.chains, "number of independent chains");
  sc->add_option("--iters", sample.iterations, "iterations per chain");
  sc->add_option("--thin", sample.thin, "keep every k-th state");
  sc->add_option("--out-dir", sample.out_dir, "output directory");

  auto simulate = SimulateOptions{};
  auto* sim = app.add_subcommand("simulate", "simulate a dataset from the model");
  sim->add_option("--taxa", simulate.taxa, "number of taxa");
  sim->add_option("--config", simulate.config, "key=value config file")->check(CLI::ExistingFile);
  sim->add_option("--seed", simulate.seed, "random seed");
  sim->add_option("--out-dir", simulate.out_dir, "output directory");

  auto summarize = SummarizeOptions{};
  auto* sum = app.add_subcommand("summarize", "summarize sample logs");
  sum->add_option("--samples", summarize.samples, "sample logs (pooled)")->required()->check(CLI::ExistingFile);
  sum->add_option("--burn-in", summarize.burn_in, "fraction of each log to discard")->check(CLI::Range(0.0, 0.99));
  sum->add_option("--gap-factor", summarize.gap_factor, "gap weight in the annealing objective");
  sum->add_option("--report-dir", summarize.report_dir, "output directory");

  auto validate = ValidatePriorOptions{};
  auto* val = app.add_subcommand("validate-prior", "prior-recovery check on datasets simulated from the prior");
  val->add_option("--datasets", validate.datasets, "number of simulated datasets");
  val->add_option("--iters", validate.iterations, "iterations per dataset");
  val->add_option("--thin", validate.thin, "keep every k-th state");
  val->add_option("--taxa", validate.taxa, "taxa per dataset");
  val->add_option("--config", validate.config, "key=value config file")->check(CLI::ExistingFile);
  val->add_option("--seed", validate.seed, "random seed");

  auto diagnose = DiagnoseOptions{};
  auto* dia = app.add_subcommand("diagnose", "convergence diagnostics across runs");
  dia->add_option("--runs", diagnose.runs, "sample logs, one per run")->required()->check(CLI::ExistingFile);
  dia->add_option("--burn-in", diagnose.burn_in, "fraction of each log to discard")->check(CLI::Range(0.0, 0.99));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sc) {
      return cmd_sample(sample);
    }
    if (*sim) {
      return cmd_simulate(simulate);
    }
    if (*sum) {
      return cmd_summarize(summarize);
    }
    if (*val) {
      return cmd_validate_prior(validate);
    }
    if (*dia) {
      return cmd_diagnose(diagnose);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
