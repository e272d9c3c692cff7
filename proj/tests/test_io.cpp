#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bayescat/commands.hpp"

using namespace bayescat;
namespace fs = std::filesystem;

namespace {

auto random_tree(Rng& rng, int taxa) -> Tree {
  auto t = random_topology(rng, default_taxon_names(taxa));
  for (auto e : t.edges()) {
    t.set_branch_length(e, uniform_real(rng, 1e-6, 3.0));
  }
  return t;
}

// Edge lengths keyed by split: equal maps mean the same unrooted tree.
auto lengths_by_split(const Tree& t) -> std::map<Split, double> {
  auto out = std::map<Split, double>{};
  for (auto e : t.edges()) {
    out[edge_split(t, e)] += t.branch_length(e);
  }
  return out;
}

auto scratch_dir(const std::string& name) -> fs::path {
  auto d = fs::temp_directory_path() / ("bayescat_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

auto expect_parse_error(std::string_view text, const std::string& fragment) -> void {
  try {
    parse_fasta(text);
    ADD_FAILURE() << "no error for " << text;
  } catch (const ParseError& e) {
    EXPECT_NE(std::string{e.what()}.find(fragment), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(Fasta, TwoRecords) {
  auto seqs = parse_fasta(">a\nACGT\n>b\nAC\n");
  ASSERT_EQ(seqs.size(), 2U);
  EXPECT_EQ(seqs[0].name, "a");
  EXPECT_EQ(seqs[0].length(), 4);
  EXPECT_EQ(seqs[1].length(), 2);
}

TEST(Fasta, NormalizesCaseAndJoinsLines) {
  auto seqs = parse_fasta(">x some description\r\nac\ngt\n\n>y\n\n");
  EXPECT_EQ(seqs[0].name, "x");
  EXPECT_EQ(seqs[0].bases, "ACGT");
  EXPECT_EQ(seqs[1].bases, "");
}

TEST(Fasta, Errors) {
  expect_parse_error(">a\nACGT\n>a\nAC\n", "duplicate");
  expect_parse_error("", "no sequences");
  expect_parse_error(">a\nACXT\n", "line 2, column 3");
  expect_parse_error("ACGT\n", "before the first");
  expect_parse_error(">\nACGT\n", "empty sequence name");
}

TEST(Fasta, RoundTrip) {
  auto seqs = std::vector<Sequence>{{"a", std::string(130, 'G')}, {"b", ""}, {"c", "ACGTTGCA"}};
  auto os = std::ostringstream{};
  write_fasta(os, seqs);
  EXPECT_EQ(parse_fasta(os.str()), seqs);
}

TEST(Newick, ThreeTaxonCanonicalForm) {
  auto t = Tree{{"a", "b", "c"}, {3, 3, 3, k_no_node}, {0.1, 0.2, 0.3, 0.0}};
  EXPECT_EQ(write_newick(t), "(a:0.1,b:0.2,c:0.3);");
  EXPECT_EQ(parse_newick("(a:0.1,b:0.2,c:0.3);"), t);
}

TEST(Newick, RoundTripFuzz) {
  auto rng = Rng{501};
  for (auto rep = 0; rep < 10000; ++rep) {
    auto t = random_tree(rng, 3 + static_cast<int>(uniform_index(rng, 10)));
    // with node labels the ids come back as well
    auto taxa = t.taxa();
    EXPECT_EQ(parse_newick(write_newick(t, {true}), &taxa), t);
    // without, the unrooted tree is the same up to node numbering
    auto plain = parse_newick(write_newick(t), &taxa);
    ASSERT_EQ(lengths_by_split(plain), lengths_by_split(t));
  }
}

TEST(Newick, ParseErrors) {
  try {
    parse_newick("(a:0.1,b:0.2;");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string{e.what()}.find("position 12"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_newick("(a:0.1,b,c:0.3);"), ParseError);
  EXPECT_THROW(parse_newick("(a:0.1,b:0.2,c:0.3)"), ParseError);
  EXPECT_THROW(parse_newick("((a:0.1,b:0.2):0.1,c:0.3);"), ParseError);
  EXPECT_THROW(parse_newick("(a:0.1,a:0.2,c:0.3);"), ParseError);
  EXPECT_THROW(parse_newick("(a:0.1,b:x,c:0.3);"), ParseError);
}

TEST(Config, ParsesAndRoundTrips) {
  auto cfg = Config::parse("# comment\niterations = 500\n thin=5 # trailing\n\nuse_likelihood=false\npi_alpha=1,2,3,4\n");
  EXPECT_EQ(cfg.get_long("iterations"), 500);
  EXPECT_EQ(cfg.get_bool("use_likelihood"), false);
  EXPECT_EQ(Config::parse(cfg.to_string()), cfg);
  auto mc = McmcConfig{};
  apply_config(cfg, mc);
  EXPECT_EQ(mc.iterations, 500);
  EXPECT_EQ(mc.thin, 5);
  EXPECT_FALSE(mc.use_likelihood);
  EXPECT_EQ(mc.prior.pi_alpha[3], 4.0);
}

TEST(Config, Errors) {
  EXPECT_THROW(Config::parse("a=1\na=2\n"), ParseError);
  EXPECT_THROW(Config::parse("justtext\n"), ParseError);
  auto mc = McmcConfig{};
  EXPECT_THROW(apply_config(Config::parse("iteratoins=5\n"), mc), ParseError);
  EXPECT_THROW(apply_config(Config::parse("thin=0\n"), mc), ParseError);
  EXPECT_THROW(apply_config(Config::parse("r_alpha=-1\n"), mc), ParseError);
  EXPECT_THROW(apply_config(Config::parse("kappa_alpha=abc\n"), mc), ParseError);
  auto fresh = McmcConfig{};
  EXPECT_NO_THROW(apply_config(Config::parse("sim_r=0.1\n"), fresh, k_extra_config_keys));
}

TEST(History, RoundTripIsExact) {
  auto rng = Rng{503};
  for (auto rep = 0; rep < 500; ++rep) {
    auto data = simulate_dataset(rng, default_taxon_names(3 + static_cast<int>(uniform_index(rng, 6))), SimulationConfig{});
    const auto& s = data.truth;
    auto text = write_history(s.tree, s.history);
    EXPECT_EQ(parse_history(text, s.tree), s.history);
  }
}

TEST(History, Errors) {
  auto t = Tree{{"a", "b", "c"}, {3, 3, 3, k_no_node}, {0.1, 0.2, 0.3, 0.0}};
  EXPECT_NO_THROW(parse_history("R2;0:;1:(0.05,I,0,1);2:", t));
  EXPECT_THROW(parse_history("2;0:;1:;2:", t), ParseError);
  EXPECT_THROW(parse_history("R2;0:;1:", t), ParseError);
  EXPECT_THROW(parse_history("R2;0:;1:(0.05,X,0,1);2:", t), ParseError);
  // event past the end of the edge
  EXPECT_THROW(parse_history("R2;0:;1:(0.5,I,0,1);2:", t), ParseError);
  // deleting more than is there
  EXPECT_THROW(parse_history("R2;0:(0.05,D,0,3);1:;2:", t), ParseError);
}

TEST(SampleLog, RoundTrip) {
  auto rng = Rng{505};
  auto data = simulate_dataset(rng, default_taxon_names(5), SimulationConfig{});
  auto cfg = McmcConfig{};
  cfg.iterations = 2000;
  cfg.thin = 100;
  auto chain = Chain{data.sequences, cfg, data.truth, 9};
  auto records = std::vector<SampleRecord>{};
  auto os = std::ostringstream{};
  write_sample_header(os, {"abc", 9, data.sequences});
  run_chain(chain, [&](const SampleRecord& r) {
    records.push_back(r);
    write_sample_row(os, r);
  });
  auto is = std::istringstream{os.str()};
  auto log = read_sample_log(is);
  EXPECT_EQ(log.header.config_hash, "abc");
  EXPECT_EQ(log.header.seed, 9U);
  EXPECT_EQ(log.header.sequences, data.sequences);
  ASSERT_EQ(log.records.size(), records.size());
  for (auto i = std::size_t{0}; i < records.size(); ++i) {
    EXPECT_EQ(log.records[i].iteration, records[i].iteration);
    EXPECT_EQ(log.records[i].log_posterior, records[i].log_posterior);
    EXPECT_EQ(log.records[i].state, records[i].state);
  }
}

TEST(SampleLog, RejectsForeignHeader) {
  auto is = std::istringstream{"#bayescat_samples\niteration\tfoo\n"};
  EXPECT_THROW(read_sample_log(is), ParseError);
  auto empty = std::istringstream{""};
  EXPECT_THROW(read_sample_log(empty), ParseError);
}

TEST(Commands, SimulateIsDeterministic) {
  auto a = scratch_dir("sim_a");
  auto b = scratch_dir("sim_b");
  EXPECT_EQ(cmd_simulate({5, "", 1, a.string()}), 0);
  EXPECT_EQ(cmd_simulate({5, "", 1, b.string()}), 0);
  for (const auto& name : {"sequences.fasta", "true_alignment.fasta", "true_tree.nwk", "true_history.txt", "true_parameters.tsv"}) {
    EXPECT_EQ(read_file(a / name), read_file(b / name)) << name;
  }
  auto c = scratch_dir("sim_c");
  EXPECT_EQ(cmd_simulate({5, "", 2, c.string()}), 0);
  EXPECT_NE(read_file(a / "true_history.txt"), read_file(c / "true_history.txt"));
  EXPECT_THROW(cmd_simulate({2, "", 1, c.string()}), UsageError);
}

TEST(Commands, SampleThenSummarize) {
  auto dir = scratch_dir("pipeline");
  {
    auto f = std::ofstream{dir / "in.fasta"};
    f << ">a\nACGTACGTAC\n>b\nACGTTCGTA\n>c\nACTACGTAC\n>d\nAGTACGTACC\n";
  }
  auto so = SampleOptions{};
  so.fasta = (dir / "in.fasta").string();
  so.chains = 2;
  so.iterations = 4000;
  so.thin = 20;
  so.out_dir = (dir / "samples").string();
  auto log = std::ostringstream{};
  ASSERT_EQ(cmd_sample(so, log), 0);
  EXPECT_TRUE(fs::exists(dir / "samples" / "chain1.tsv"));
  EXPECT_TRUE(fs::exists(dir / "samples" / "chain2.moves.tsv"));
  auto sum = SummarizeOptions{};
  sum.samples = {(dir / "samples" / "chain1.tsv").string(), (dir / "samples" / "chain2.tsv").string()};
  sum.report_dir = (dir / "report").string();
  EXPECT_EQ(cmd_summarize(sum), 0);
  EXPECT_FALSE(fs::is_empty(dir / "report"));
  auto diag = DiagnoseOptions{};
  diag.runs = sum.samples;
  auto out = std::ostringstream{};
  auto status = cmd_diagnose(diag, out);
  EXPECT_TRUE(status == 0 || status == 2);
  EXPECT_NE(out.str().find("clade spreads below 0.05"), std::string::npos);
}

TEST(Commands, DiagnoseNeedsTwoRuns) {
  auto diag = DiagnoseOptions{};
  diag.runs = {"only.tsv"};
  try {
    cmd_diagnose(diag);
    FAIL() << "expected a usage error";
  } catch (const UsageError& e) {
    EXPECT_STREQ(e.what(), "need ≥2 runs");
  }
}

TEST(Format, ShortestRoundTrip) {
  auto rng = Rng{507};
  for (auto i = 0; i < 10000; ++i) {
    auto x = uniform_real(rng, -1e3, 1e3) * std::pow(10.0, uniform_real(rng, -20, 20));
    EXPECT_EQ(parse_double(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_FALSE(parse_double("1.0x").has_value());
}
