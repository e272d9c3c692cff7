#pragma once

// Text formats: FASTA, Newick, flat key=value configs, compact history
// strings and the tab-separated sample log.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "bayescat/core_types.hpp"
#include "bayescat/mcmc.hpp"
#include "bayescat/priors.hpp"
#include "bayescat/state.hpp"
#include "bayescat/summaries.hpp"
#include "bayescat/tree.hpp"

namespace bayescat {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest decimal form that reads back to the same double.
inline auto format_double(double x) -> std::string {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return {buf, res.ptr};
}

inline auto parse_double(std::string_view s) -> std::optional<double> {
  auto x = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return x;
}

inline auto parse_long(std::string_view s) -> std::optional<long> {
  auto x = 0L;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return x;
}

inline auto split_string(std::string_view s, char sep) -> std::vector<std::string> {
  auto out = std::vector<std::string>{};
  auto start = std::size_t{0};
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) {
      return out;
    }
    start = pos + 1;
  }
}

inline auto trim(std::string_view s) -> std::string_view {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

// ---------------------------------------------------------------------------
// FASTA
// ---------------------------------------------------------------------------

inline auto parse_fasta(std::string_view text) -> std::vector<Sequence> {
  auto out = std::vector<Sequence>{};
  auto names = std::set<std::string>{};
  auto line_no = 0;
  for (const auto& raw : split_string(text, '\n')) {
    ++line_no;
    auto line = std::string_view{raw};
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (line.empty()) {
      continue;
    }
    if (line.front() == '>') {
      auto header = trim(line.substr(1));
      auto name = std::string{header.substr(0, std::min(header.size(), header.find_first_of(" \t")))};
      if (name.empty()) {
        throw ParseError{"line " + std::to_string(line_no) + ": empty sequence name"};
      }
      if (!names.insert(name).second) {
        throw ParseError{"line " + std::to_string(line_no) + ": duplicate sequence name '" + name + "'"};
      }
      out.push_back({name, ""});
      continue;
    }
    if (out.empty()) {
      throw ParseError{"line " + std::to_string(line_no) + ": sequence data before the first '>' header"};
    }
    for (auto col = std::size_t{0}; col < line.size(); ++col) {
      auto c = static_cast<char>(std::toupper(static_cast<unsigned char>(line[col])));
      if (std::isspace(static_cast<unsigned char>(c))) {
        continue;
      }
      if (nucleotide_index(c) < 0) {
        throw ParseError{"line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) +
                         ": illegal residue '" + std::string(1, line[col]) + "'"};
      }
      out.back().bases.push_back(c);
    }
  }
  if (out.empty()) {
    throw ParseError{"FASTA input holds no sequences"};
  }
  return out;
}

inline auto write_fasta(std::ostream& os, const std::vector<Sequence>& seqs, std::size_t width = 60) -> void {
  for (const auto& s : seqs) {
    os << '>' << s.name << '\n';
    for (auto i = std::size_t{0}; i < s.bases.size(); i += width) {
      os << s.bases.substr(i, width) << '\n';
    }
  }
}

inline auto write_alignment_fasta(std::ostream& os, const Alignment& a, const std::vector<Sequence>& seqs) -> void {
  auto rows = alignment_rows(a, seqs);
  for (auto t = std::size_t{0}; t < rows.size(); ++t) {
    os << '>' << seqs[t].name << '\n' << rows[t] << '\n';
  }
}

// ---------------------------------------------------------------------------
// Newick
// ---------------------------------------------------------------------------

struct NewickOptions {
  bool internal_labels = false;  // label internal nodes "n<id>" so node ids survive a round trip
};

// Written from the history root; children appear in order of their smallest
// leaf id, so one rooted tree always gives the same string.
inline auto write_newick(const Tree& tree, NewickOptions opts = {}) -> std::string {
  auto min_leaf = std::vector<NodeId>(static_cast<std::size_t>(tree.num_nodes()), 0);
  for (auto v : tree.postorder()) {
    if (tree.is_leaf(v)) {
      min_leaf[static_cast<std::size_t>(v)] = v;
    } else {
      auto m = tree.num_nodes();
      for (auto c : tree.children(v)) {
        m = std::min(m, min_leaf[static_cast<std::size_t>(c)]);
      }
      min_leaf[static_cast<std::size_t>(v)] = m;
    }
  }
  auto out = std::string{};
  auto emit = [&](auto&& self, NodeId v) -> void {
    if (tree.is_leaf(v)) {
      out += tree.taxon(v);
    } else {
      auto kids = std::vector<NodeId>(tree.children(v).begin(), tree.children(v).end());
      std::sort(kids.begin(), kids.end(), [&](NodeId a, NodeId b) {
        return min_leaf[static_cast<std::size_t>(a)] < min_leaf[static_cast<std::size_t>(b)];
      });
      out += '(';
      for (auto k = std::size_t{0}; k < kids.size(); ++k) {
        if (k > 0) {
          out += ',';
        }
        self(self, kids[k]);
      }
      out += ')';
      if (opts.internal_labels) {
        out += "n" + std::to_string(v);
      }
    }
    if (v != tree.root()) {
      out += ':' + format_double(tree.branch_length(v));
    }
  };
  emit(emit, tree.root());
  out += ';';
  return out;
}

namespace detail {

class NewickParser {
 public:
  explicit NewickParser(std::string_view text) : text_{text} {}

  struct RawNode {
    std::string label;
    std::optional<double> length;
    std::vector<int> children;
  };

  auto parse() -> std::vector<RawNode> {
    skip_space();
    node();
    skip_space();
    expect(';');
    skip_space();
    if (pos_ != text_.size()) {
      fail("unexpected text after ';'");
    }
    return std::move(nodes_);
  }

  [[noreturn]] auto fail(const std::string& msg) const -> void {
    throw ParseError{"Newick parse error at position " + std::to_string(pos_) + ": " + msg};
  }

 private:
  auto node() -> int {
    auto id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    skip_space();
    if (peek() == '(') {
      ++pos_;
      while (true) {
        auto child = node();
        nodes_[static_cast<std::size_t>(id)].children.push_back(child);
        skip_space();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        if (peek() == ')') {
          ++pos_;
          break;
        }
        fail(pos_ >= text_.size() ? "unbalanced parentheses" : "expected ',' or ')'");
      }
    }
    skip_space();
    nodes_[static_cast<std::size_t>(id)].label = label();
    skip_space();
    if (peek() == ':') {
      ++pos_;
      skip_space();
      auto start = pos_;
      while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                                     std::string_view{"+-.eE"}.find(text_[pos_]) != std::string_view::npos)) {
        ++pos_;
      }
      auto v = parse_double(text_.substr(start, pos_ - start));
      if (!v) {
        pos_ = start;
        fail("malformed branch length");
      }
      nodes_[static_cast<std::size_t>(id)].length = *v;
    }
    return id;
  }

  auto label() -> std::string {
    auto start = pos_;
    while (pos_ < text_.size() && std::string_view{"(),:;"}.find(text_[pos_]) == std::string_view::npos &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    return std::string{text_.substr(start, pos_ - start)};
  }

  auto peek() const -> char { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  auto expect(char c) -> void {
    if (peek() != c) {
      fail(pos_ >= text_.size() ? std::string{"unexpected end of input, expected '"} + c + "'"
                                : std::string{"expected '"} + c + "'");
    }
    ++pos_;
  }
  auto skip_space() -> void {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<RawNode> nodes_;
};

}  // namespace detail

// Parses a Newick tree whose outermost node has three children.  Leaf ids
// follow `taxa` when given, otherwise the order of appearance.  Internal
// nodes labelled "n<id>" keep those ids when every internal node carries
// one; otherwise ids are assigned in preorder.  Every edge needs a length.
inline auto parse_newick(std::string_view text, const std::vector<std::string>* taxa = nullptr) -> Tree {
  auto parser = detail::NewickParser{text};
  auto raw = parser.parse();
  auto leaves = std::vector<int>{};
  auto internal = std::vector<int>{};
  for (auto i = 0; i < static_cast<int>(raw.size()); ++i) {
    (raw[static_cast<std::size_t>(i)].children.empty() ? leaves : internal).push_back(i);
  }
  auto n = static_cast<int>(leaves.size());
  auto names = taxa ? *taxa : std::vector<std::string>{};
  if (!taxa) {
    for (auto i : leaves) {
      names.push_back(raw[static_cast<std::size_t>(i)].label);
    }
  }
  if (static_cast<int>(names.size()) != n) {
    throw ParseError{"Newick tree has " + std::to_string(n) + " leaves, expected " + std::to_string(names.size())};
  }
  if (n < 3 || static_cast<int>(internal.size()) != n - 2) {
    throw ParseError{"Newick tree must be unrooted and bifurcating with a trifurcating outer node"};
  }
  auto id_of = std::vector<NodeId>(raw.size(), k_no_node);
  auto seen = std::set<std::string>{};
  for (auto i : leaves) {
    const auto& name = raw[static_cast<std::size_t>(i)].label;
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
      throw ParseError{"Newick leaf '" + name + "' is not a known taxon"};
    }
    if (!seen.insert(name).second) {
      throw ParseError{"Newick leaf '" + name + "' appears twice"};
    }
    id_of[static_cast<std::size_t>(i)] = static_cast<NodeId>(it - names.begin());
  }
  auto labelled = true;
  auto used = std::set<NodeId>{};
  for (auto i : internal) {
    const auto& lab = raw[static_cast<std::size_t>(i)].label;
    auto id = (lab.size() > 1 && lab[0] == 'n') ? parse_long(std::string_view{lab}.substr(1)) : std::nullopt;
    if (!id || *id < n || *id >= 2 * n - 2 || !used.insert(static_cast<NodeId>(*id)).second) {
      labelled = false;
      break;
    }
    id_of[static_cast<std::size_t>(i)] = static_cast<NodeId>(*id);
  }
  if (!labelled) {
    auto next = n;
    for (auto i : internal) {  // raw nodes are numbered in preorder
      id_of[static_cast<std::size_t>(i)] = next++;
    }
  }
  auto parent = std::vector<NodeId>(static_cast<std::size_t>(2 * n - 2), k_no_node);
  auto lengths = std::vector<double>(static_cast<std::size_t>(2 * n - 2), 0.0);
  for (auto i = 0; i < static_cast<int>(raw.size()); ++i) {
    for (auto c : raw[static_cast<std::size_t>(i)].children) {
      const auto& child = raw[static_cast<std::size_t>(c)];
      if (!child.length) {
        throw ParseError{"Newick edge above '" + (child.label.empty() ? std::string{"(internal)"} : child.label) +
                         "' has no branch length"};
      }
      parent[static_cast<std::size_t>(id_of[static_cast<std::size_t>(c)])] = id_of[static_cast<std::size_t>(i)];
      lengths[static_cast<std::size_t>(id_of[static_cast<std::size_t>(c)])] = *child.length;
    }
  }
  try {
    return Tree{std::move(names), std::move(parent), std::move(lengths)};
  } catch (const std::invalid_argument& e) {
    throw ParseError{std::string{"Newick tree rejected: "} + e.what()};
  }
}

// ---------------------------------------------------------------------------
// Config files: one key=value per line, '#' starts a comment.
// ---------------------------------------------------------------------------

class Config {
 public:
  Config() = default;

  static auto parse(std::string_view text) -> Config {
    auto cfg = Config{};
    auto line_no = 0;
    for (const auto& raw : split_string(text, '\n')) {
      ++line_no;
      auto line = std::string_view{raw};
      line = line.substr(0, line.find('#'));
      line = trim(line);
      if (line.empty()) {
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError{"config line " + std::to_string(line_no) + ": expected key=value"};
      }
      auto key = std::string{trim(line.substr(0, eq))};
      auto value = std::string{trim(line.substr(eq + 1))};
      if (key.empty()) {
        throw ParseError{"config line " + std::to_string(line_no) + ": empty key"};
      }
      if (cfg.values_.count(key) != 0) {
        throw ParseError{"config line " + std::to_string(line_no) + ": duplicate key '" + key + "'"};
      }
      cfg.values_[key] = value;
    }
    return cfg;
  }

  auto set(const std::string& key, const std::string& value) -> void { values_[key] = value; }
  auto has(const std::string& key) const -> bool { return values_.count(key) != 0; }
  auto values() const -> const std::map<std::string, std::string>& { return values_; }

  auto get_string(const std::string& key) const -> std::optional<std::string> {
    auto it = values_.find(key);
    return it == values_.end() ? std::nullopt : std::optional<std::string>{it->second};
  }

  auto get_double(const std::string& key) const -> std::optional<double> {
    auto s = get_string(key);
    if (!s) {
      return std::nullopt;
    }
    auto v = parse_double(*s);
    if (!v) {
      throw ParseError{"config key '" + key + "': '" + *s + "' is not a number"};
    }
    return v;
  }

  auto get_long(const std::string& key) const -> std::optional<long> {
    auto s = get_string(key);
    if (!s) {
      return std::nullopt;
    }
    auto v = parse_long(*s);
    if (!v) {
      throw ParseError{"config key '" + key + "': '" + *s + "' is not an integer"};
    }
    return v;
  }

  auto get_bool(const std::string& key) const -> std::optional<bool> {
    auto s = get_string(key);
    if (!s) {
      return std::nullopt;
    }
    if (*s == "true" || *s == "1" || *s == "yes") {
      return true;
    }
    if (*s == "false" || *s == "0" || *s == "no") {
      return false;
    }
    throw ParseError{"config key '" + key + "': '" + *s + "' is not a boolean"};
  }

  // Sorted key=value lines; parse(to_string()) gives back the same config.
  auto to_string() const -> std::string {
    auto out = std::string{};
    for (const auto& [k, v] : values_) {
      out += k + "=" + v + "\n";
    }
    return out;
  }

  auto hash() const -> std::uint64_t {
    auto h = std::uint64_t{14695981039346656037ULL};  // FNV-1a
    for (auto c : to_string()) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    return h;
  }

  friend auto operator==(const Config&, const Config&) -> bool = default;

 private:
  std::map<std::string, std::string> values_;
};

inline auto hex64(std::uint64_t x) -> std::string {
  char buf[17];
  auto res = std::to_chars(buf, buf + sizeof(buf), x, 16);
  auto s = std::string(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

// Maps the recognized keys onto an McmcConfig; unknown keys are an error so
// typos do not silently fall back to defaults.  `extra` lists keys consumed
// elsewhere (for example by the simulator).
inline auto apply_config(const Config& cfg, McmcConfig& mc, const std::set<std::string>& extra = {}) -> void {
  auto& pr = mc.prior;
  auto& pp = mc.proposals;
  auto dbl = std::map<std::string, double*>{
      {"gamma_alpha", &pr.gamma_alpha},    {"kappa_alpha", &pr.kappa_alpha},
      {"r_alpha", &pr.r_alpha},            {"r_beta", &pr.r_beta},
      {"rd_alpha", &pr.rd_alpha},          {"rd_beta", &pr.rd_beta},
      {"lambda_alpha", &pr.lambda_alpha},  {"w_stop", &pp.guide.w_stop},
      {"w_dir", &pp.guide.w_dir},          {"w_exact", &pp.guide.w_exact},
      {"guided_fraction", &pp.guided_fraction}, {"node_shift_fraction", &pp.node_shift_fraction},
      {"event_swap_fraction", &pp.event_swap_fraction},
      {"branch_window", &pp.branch_window},
      {"pi_concentration", &pp.pi_concentration}, {"kappa_window", &pp.kappa_window},
      {"gamma_window", &pp.gamma_window},  {"lambda_window", &pp.lambda_window},
      {"r_window", &pp.r_window},          {"r_d_window", &pp.r_d_window},
      {"scan_branch", &mc.scan_weights[0]}, {"scan_edge_history", &mc.scan_weights[1]},
      {"scan_node", &mc.scan_weights[2]},  {"scan_spr", &mc.scan_weights[3]},
      {"scan_parameters", &mc.scan_weights[4]},
  };
  for (const auto& [key, value] : cfg.values()) {
    if (auto it = dbl.find(key); it != dbl.end()) {
      *it->second = *cfg.get_double(key);
    } else if (key == "iterations") {
      mc.iterations = *cfg.get_long(key);
    } else if (key == "thin") {
      mc.thin = *cfg.get_long(key);
    } else if (key == "audit_interval") {
      mc.audit_interval = *cfg.get_long(key);
    } else if (key == "node_length_step") {
      pp.node_length_step = static_cast<int>(*cfg.get_long(key));
    } else if (key == "use_likelihood") {
      mc.use_likelihood = *cfg.get_bool(key);
    } else if (key == "pi_alpha") {
      auto parts = split_string(value, ',');
      if (parts.size() != 4) {
        throw ParseError{"config key 'pi_alpha' needs 4 comma-separated values"};
      }
      for (auto i = std::size_t{0}; i < 4; ++i) {
        auto v = parse_double(trim(parts[i]));
        if (!v) {
          throw ParseError{"config key 'pi_alpha': '" + parts[i] + "' is not a number"};
        }
        pr.pi_alpha[i] = *v;
      }
    } else if (extra.count(key) == 0) {
      throw ParseError{"unknown config key '" + key + "'"};
    }
  }
  if (!pr.valid()) {
    throw ParseError{"prior hyperparameters must be positive"};
  }
  pp.guide.check();
  if (mc.thin <= 0 || mc.iterations < 0 || pp.node_length_step < 1) {
    throw ParseError{"iterations must be >= 0, thin >= 1 and node_length_step >= 1"};
  }
}

// ---------------------------------------------------------------------------
// History strings:  R<root length>;<edge>:(t,I,p,l)(t,D,p,l);<edge>:;...
// Edges appear in node-id order and every non-root node is listed.
// ---------------------------------------------------------------------------

inline auto write_history(const Tree& tree, const TreeHistory& h) -> std::string {
  auto out = "R" + std::to_string(h.root_length);
  for (auto v = 0; v < tree.num_nodes(); ++v) {
    if (v == tree.root()) {
      continue;
    }
    out += ';' + std::to_string(v) + ':';
    for (const auto& e : h.edge(v).events) {
      out += '(' + format_double(e.time) + ',' + (e.kind == IndelKind::insertion ? 'I' : 'D') + ',' +
             std::to_string(e.position) + ',' + std::to_string(e.size) + ')';
    }
  }
  return out;
}

inline auto parse_history(std::string_view text, const Tree& tree) -> TreeHistory {
  auto fail = [](const std::string& msg) -> void { throw ParseError{"history: " + msg}; };
  auto parts = split_string(text, ';');
  if (parts.empty() || parts[0].size() < 2 || parts[0][0] != 'R') {
    fail("must start with R<root length>");
  }
  auto out = TreeHistory{};
  auto root_len = parse_long(std::string_view{parts[0]}.substr(1));
  if (!root_len || *root_len < 0) {
    fail("bad root length");
  }
  out.root_length = static_cast<int>(*root_len);
  out.edges.resize(static_cast<std::size_t>(tree.num_nodes()));
  auto seen = std::vector<bool>(static_cast<std::size_t>(tree.num_nodes()), false);
  auto raw = std::vector<std::vector<IndelEvent>>(static_cast<std::size_t>(tree.num_nodes()));
  for (auto k = std::size_t{1}; k < parts.size(); ++k) {
    auto part = std::string_view{parts[k]};
    auto colon = part.find(':');
    auto edge = colon == std::string_view::npos ? std::nullopt : parse_long(part.substr(0, colon));
    if (!edge || *edge < 0 || *edge >= tree.num_nodes() || *edge == tree.root() || seen[static_cast<std::size_t>(*edge)]) {
      fail("bad edge entry '" + std::string{part} + "'");
    }
    seen[static_cast<std::size_t>(*edge)] = true;
    auto rest = part.substr(colon + 1);
    while (!rest.empty()) {
      auto close = rest.find(')');
      if (rest.front() != '(' || close == std::string_view::npos) {
        fail("malformed event list on edge " + std::to_string(*edge));
      }
      auto fields = split_string(rest.substr(1, close - 1), ',');
      auto t = fields.size() == 4 ? parse_double(fields[0]) : std::nullopt;
      auto p = fields.size() == 4 ? parse_long(fields[2]) : std::nullopt;
      auto l = fields.size() == 4 ? parse_long(fields[3]) : std::nullopt;
      if (!t || !p || !l || (fields[1] != "I" && fields[1] != "D")) {
        fail("malformed event on edge " + std::to_string(*edge));
      }
      raw[static_cast<std::size_t>(*edge)].push_back(
          {*t, fields[1] == "I" ? IndelKind::insertion : IndelKind::deletion, static_cast<int>(*p), static_cast<int>(*l), 0});
      rest.remove_prefix(close + 1);
    }
  }
  auto lengths = std::vector<int>(static_cast<std::size_t>(tree.num_nodes()), 0);
  lengths[static_cast<std::size_t>(tree.root())] = out.root_length;
  for (auto v : tree.preorder()) {
    if (v == tree.root()) {
      continue;
    }
    if (!seen[static_cast<std::size_t>(v)]) {
      fail("edge " + std::to_string(v) + " is missing");
    }
    auto& h = out.edge(v);
    h.parent_length = lengths[static_cast<std::size_t>(tree.parent(v))];
    h.edge_length = tree.branch_length(v);
    auto n = h.parent_length;
    for (auto e : raw[static_cast<std::size_t>(v)]) {
      n += e.kind == IndelKind::insertion ? e.size : -e.size;
      e.length_after = n;
      h.events.push_back(e);
    }
    h.child_length = n;
    lengths[static_cast<std::size_t>(v)] = n;
  }
  if (auto bad = validate_tree_history(tree, out)) {
    fail(*bad);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sample log
// ---------------------------------------------------------------------------

inline const std::vector<std::string> k_sample_columns = {
    "iteration", "log_posterior", "log_likelihood", "log_indel", "log_prior", "pi_A", "pi_C", "pi_G", "pi_T",
    "kappa", "gamma", "r", "r_d", "lambda", "root_length", "tree_length", "events", "insertions", "deletions",
    "mean_fragment", "newick", "history"};

struct SampleLogHeader {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<Sequence> sequences;
};

inline auto write_sample_header(std::ostream& os, const SampleLogHeader& h) -> void {
  os << "#bayescat_samples\n";
  os << "#config_hash\t" << h.config_hash << '\n';
  os << "#seed\t" << h.seed << '\n';
  for (const auto& s : h.sequences) {
    os << "#sequence\t" << s.name << '\t' << s.bases << '\n';
  }
  for (auto i = std::size_t{0}; i < k_sample_columns.size(); ++i) {
    os << (i ? "\t" : "") << k_sample_columns[i];
  }
  os << '\n';
}

inline auto write_sample_row(std::ostream& os, const SampleRecord& r) -> void {
  const auto& s = r.state;
  const auto& p = s.params;
  auto ins = 0;
  auto del = 0;
  auto size_sum = 0L;
  for (auto e : s.tree.edges()) {
    for (const auto& ev : s.history.edge(e).events) {
      (ev.kind == IndelKind::insertion ? ins : del) += 1;
      size_sum += ev.size;
    }
  }
  auto events = ins + del;
  auto f = [](double x) { return format_double(x); };
  os << r.iteration << '\t' << f(r.log_posterior) << '\t' << f(r.log_likelihood) << '\t' << f(r.log_indel) << '\t'
     << f(r.log_prior);
  for (auto x : p.subst.pi) {
    os << '\t' << f(x);
  }
  os << '\t' << f(p.subst.kappa) << '\t' << f(p.gamma) << '\t' << f(p.r) << '\t' << f(p.r_d) << '\t' << f(p.lambda)
     << '\t' << s.history.root_length << '\t' << f(s.tree.total_length()) << '\t' << events << '\t' << ins << '\t'
     << del << '\t' << (events ? f(static_cast<double>(size_sum) / events) : std::string{"NA"}) << '\t'
     << write_newick(s.tree, {true}) << '\t' << write_history(s.tree, s.history) << '\n';
}

struct SampleLog {
  SampleLogHeader header;
  std::vector<SampleRecord> records;
};

inline auto read_sample_log(std::istream& is) -> SampleLog {
  auto log = SampleLog{};
  auto line = std::string{};
  auto line_no = 0;
  auto columns = std::vector<std::string>{};
  auto fail = [&](const std::string& msg) -> void { throw ParseError{"sample log line " + std::to_string(line_no) + ": " + msg}; };
  auto taxa = std::vector<std::string>{};
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    auto fields = split_string(line, '\t');
    if (line[0] == '#') {
      if (fields[0] == "#config_hash" && fields.size() == 2) {
        log.header.config_hash = fields[1];
      } else if (fields[0] == "#seed" && fields.size() == 2) {
        log.header.seed = static_cast<std::uint64_t>(std::stoull(fields[1]));
      } else if (fields[0] == "#sequence" && fields.size() == 3) {
        log.header.sequences.push_back({fields[1], fields[2]});
        taxa.push_back(fields[1]);
      }
      continue;
    }
    if (columns.empty()) {
      columns = fields;
      if (columns != k_sample_columns) {
        fail("unexpected column header");
      }
      continue;
    }
    if (fields.size() != columns.size()) {
      fail("expected " + std::to_string(columns.size()) + " fields");
    }
    auto num = [&](std::size_t i) {
      auto v = parse_double(fields[i]);
      if (!v) {
        fail("column " + columns[i] + " is not a number");
      }
      return *v;
    };
    auto rec = SampleRecord{};
    auto it = parse_long(fields[0]);
    if (!it) {
      fail("bad iteration");
    }
    rec.iteration = *it;
    rec.log_posterior = num(1);
    rec.log_likelihood = num(2);
    rec.log_indel = num(3);
    rec.log_prior = num(4);
    auto& p = rec.state.params;
    for (auto i = std::size_t{0}; i < 4; ++i) {
      p.subst.pi[i] = num(5 + i);
    }
    p.subst.kappa = num(9);
    p.gamma = num(10);
    p.r = num(11);
    p.r_d = num(12);
    p.lambda = num(13);
    rec.state.tree = parse_newick(fields[20], &taxa);
    rec.state.history = parse_history(fields[21], rec.state.tree);
    log.records.push_back(std::move(rec));
  }
  if (columns.empty()) {
    throw ParseError{"sample log has no column header"};
  }
  return log;
}

// ---------------------------------------------------------------------------
// Alignment rendering with accuracy levels 0..9
// ---------------------------------------------------------------------------

inline auto render_alignment_html(const AnnealedAlignment& a, const std::vector<Sequence>& seqs) -> std::string {
  static const char* palette[10] = {"#d73027", "#f46d43", "#fdae61", "#fee08b", "#ffffbf",
                                    "#d9ef8b", "#a6d96a", "#66bd63", "#1a9850", "#006837"};
  auto rows = alignment_rows(a.alignment, seqs);
  auto out = std::string{"<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>alignment</title>\n"
                         "<style>td{font-family:monospace;padding:0 1px}</style></head><body>\n<table>\n"};
  for (auto t = std::size_t{0}; t < rows.size(); ++t) {
    out += "<tr><td>" + seqs[t].name + "</td>";
    for (auto c = std::size_t{0}; c < rows[t].size(); ++c) {
      auto level = a.level[t][c];
      out += "<td style=\"background:" + std::string{palette[level]} + "\" title=\"" +
             format_double(a.accuracy[t][c]) + "\">" + rows[t][c] + "</td>";
    }
    out += "</tr>\n";
  }
  out += "</table>\n</body></html>\n";
  return out;
}

inline auto render_alignment_ansi(const AnnealedAlignment& a, const std::vector<Sequence>& seqs) -> std::string {
  // 256-colour ramp from red (0) to green (9)
  static const int ramp[10] = {196, 202, 208, 214, 220, 226, 190, 154, 118, 46};
  auto rows = alignment_rows(a.alignment, seqs);
  auto width = std::size_t{0};
  for (const auto& s : seqs) {
    width = std::max(width, s.name.size());
  }
  auto out = std::string{};
  for (auto t = std::size_t{0}; t < rows.size(); ++t) {
    out += seqs[t].name + std::string(width - seqs[t].name.size() + 1, ' ');
    for (auto c = std::size_t{0}; c < rows[t].size(); ++c) {
      out += "\x1b[30;48;5;" + std::to_string(ramp[a.level[t][c]]) + "m" + rows[t][c];
    }
    out += "\x1b[0m\n";
  }
  return out;
}

}  // namespace bayescat
