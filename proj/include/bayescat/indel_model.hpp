#pragma once

// The general indel process.  Given the equilibrium-length parameter r, any
// deletion size law d(.) with d(1) > 0 and the insertion rate lambda:
//
//   q(x)          = r (1-r)^x                       equilibrium length law
//   lambda / mu   = sum_k (1-r)^k d(k)  < 1
//   i(k)          = (mu / lambda) (1-r)^k d(k)      insertion size law
//   f(x)          = sum_{k=1..x} (x-k+1) d(k)       position-summed deletion mass
//   eta(n)        = (n+1) lambda + f(n) mu          total event intensity
//
// Everything is kept in log space.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "bayescat/core_types.hpp"
#include "bayescat/random.hpp"

namespace bayescat {

inline constexpr double k_neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double k_default_tail_tolerance = 1e-12;

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline auto equilibrium_length_log_pmf(int x, double r) -> double {
  if (!(r > 0.0 && r < 1.0)) {
    throw std::domain_error{"equilibrium length parameter r must lie in (0, 1)"};
  }
  if (x < 0) {
    return k_neg_inf;
  }
  return std::log(r) + x * std::log1p(-r);
}

// Deletion fragment-size law d(.) on the positive integers.
//
//   geometric(r_d):            d(k) = r_d (1-r_d)^(k-1),   0 < r_d <= 1
//   negative_binomial(s, p):   d(k) = NB(k-1; s, p) = C(k-2+s, k-1) p^s (1-p)^(k-1)
//   power_law(a, c):           d(k) proportional to k^-a exp(-k/c)
//
// The last two are normalized numerically; their tables extend until the
// remaining tail mass is below the tail tolerance.
class SizeDistribution {
 public:
  enum class Kind { geometric, negative_binomial, power_law };

  static auto geometric(double r_d) -> SizeDistribution {
    if (!(r_d > 0.0 && r_d <= 1.0)) {
      throw std::domain_error{"geometric deletion size parameter must lie in (0, 1]"};
    }
    auto d = SizeDistribution{};
    d.kind_ = Kind::geometric;
    d.a_ = r_d;
    return d;
  }

  static auto negative_binomial(double shape, double prob, double tail_tolerance = k_default_tail_tolerance) -> SizeDistribution {
    if (!(shape > 0.0) || !(prob > 0.0 && prob <= 1.0)) {
      throw std::domain_error{"negative binomial needs shape > 0 and prob in (0, 1]"};
    }
    auto d = SizeDistribution{};
    d.kind_ = Kind::negative_binomial;
    d.a_ = shape;
    d.b_ = prob;
    d.tail_ = tail_tolerance;
    d.build_table();
    return d;
  }

  static auto power_law(double exponent, double cutoff, double tail_tolerance = k_default_tail_tolerance) -> SizeDistribution {
    if (!(exponent >= 0.0) || !(cutoff > 0.0)) {
      throw std::domain_error{"power law needs exponent >= 0 and cutoff > 0"};
    }
    auto d = SizeDistribution{};
    d.kind_ = Kind::power_law;
    d.a_ = exponent;
    d.b_ = cutoff;
    d.tail_ = tail_tolerance;
    d.build_table();
    return d;
  }

  auto kind() const -> Kind { return kind_; }
  auto tail_tolerance() const -> double { return tail_; }
  // r_d for the geometric law.
  auto geometric_parameter() const -> double { return a_; }
  auto first_parameter() const -> double { return a_; }
  auto second_parameter() const -> double { return b_; }

  auto log_pmf(int k) const -> double {
    if (k < 1) {
      return k_neg_inf;
    }
    switch (kind_) {
      case Kind::geometric:
        if (a_ == 1.0) {
          return k == 1 ? 0.0 : k_neg_inf;
        }
        return std::log(a_) + (k - 1) * std::log1p(-a_);
      case Kind::negative_binomial:
        return raw_log_weight(k);
      case Kind::power_law:
        return raw_log_weight(k) - log_norm_;
    }
    return k_neg_inf;
  }

  auto pmf(int k) const -> double { return std::exp(log_pmf(k)); }

  // Sum of d(1..k).
  auto cdf(int k) const -> double {
    if (k < 1) {
      return 0.0;
    }
    if (kind_ == Kind::geometric) {
      return a_ == 1.0 ? 1.0 : -std::expm1(k * std::log1p(-a_));
    }
    if (static_cast<std::size_t>(k) < cumulative_.size()) {
      return cumulative_[static_cast<std::size_t>(k)];
    }
    auto s = cumulative_.back();
    for (auto j = static_cast<int>(cumulative_.size()); j <= k; ++j) {
      s += pmf(j);
    }
    return std::min(s, 1.0);
  }

  auto sample(Rng& rng) const -> int {
    if (kind_ == Kind::geometric) {
      if (a_ == 1.0) {
        return 1;
      }
      // Inverse CDF of the geometric law on {1, 2, ...}.
      auto u = uniform_open01(rng);
      auto k = std::ceil(std::log(u) / std::log1p(-a_));
      return std::max(1, static_cast<int>(std::min(k, 1e9)));
    }
    auto u = uniform_open01(rng);
    auto it = std::upper_bound(cumulative_.begin() + 1, cumulative_.end(), u);
    if (it == cumulative_.end()) {
      return static_cast<int>(cumulative_.size()) - 1;
    }
    return static_cast<int>(it - cumulative_.begin());
  }

 private:
  SizeDistribution() = default;

  auto raw_log_weight(int k) const -> double {
    if (kind_ == Kind::negative_binomial) {
      auto j = static_cast<double>(k - 1);
      return std::lgamma(j + a_) - std::lgamma(a_) - std::lgamma(j + 1.0) + a_ * std::log(b_) +
             (b_ == 1.0 ? (j == 0.0 ? 0.0 : k_neg_inf) : j * std::log1p(-b_));
    }
    return -a_ * std::log(static_cast<double>(k)) - k / b_;
  }

  auto build_table() -> void {
    log_norm_ = 0.0;
    if (kind_ == Kind::power_law) {
      // Weights are bounded by exp(-k/c), so the tail beyond K is at most
      // exp(-(K+1)/c) / (1 - exp(-1/c)).
      auto z = 0.0;
      auto decay = std::exp(-1.0 / b_);
      for (auto k = 1; k < 10'000'000; ++k) {
        z += std::exp(raw_log_weight(k));
        if (std::exp(-(k + 1) / b_) / (1.0 - decay) < tail_ * z) {
          break;
        }
      }
      log_norm_ = std::log(z);
    }
    cumulative_.assign(1, 0.0);
    auto s = 0.0;
    for (auto k = 1; k < 10'000'000; ++k) {
      s += pmf(k);
      cumulative_.push_back(s);
      if (1.0 - s < tail_ && k > 1) {
        return;
      }
    }
    throw NumericalError{"size distribution tail did not reach tolerance"};
  }

  Kind kind_ = Kind::geometric;
  double a_ = 1.0;
  double b_ = 1.0;
  double tail_ = k_default_tail_tolerance;
  double log_norm_ = 0.0;
  std::vector<double> cumulative_;  // cumulative_[k] = d(1) + ... + d(k)
};

// lambda / mu = sum_{k>=1} (1-r)^k d(k).  Closed form for the geometric law,
// otherwise a series stopped once the bound (1-r)^(k+1) * (1 - D(k)) on the
// remaining tail drops below the tail tolerance.
inline auto rate_ratio(double r, const SizeDistribution& d) -> double {
  if (!(r > 0.0 && r < 1.0)) {
    throw std::domain_error{"equilibrium length parameter r must lie in (0, 1)"};
  }
  if (d.kind() == SizeDistribution::Kind::geometric) {
    auto rd = d.geometric_parameter();
    auto ri = 1.0 - (1.0 - rd) * (1.0 - r);
    return rd * (1.0 - r) / ri;
  }
  auto s = 0.0;
  auto log_keep = std::log1p(-r);
  for (auto k = 1; k <= 1'000'000; ++k) {
    s += std::exp(k * log_keep + d.log_pmf(k));
    auto tail_bound = std::exp((k + 1) * log_keep) * std::max(0.0, 1.0 - d.cdf(k));
    if (tail_bound < d.tail_tolerance()) {
      return s;
    }
  }
  throw NumericalError{"rate_ratio series failed to converge within 1e6 terms"};
}

// Parameters of the indel process: r, d(.), lambda, and the derived mu.
// Holds a lazily grown memo of f(x) for non-geometric d, so one instance must
// not be shared between threads.
class IndelParams {
 public:
  IndelParams(double r, SizeDistribution d, double lambda)
      : r_{r}, d_{std::move(d)}, lambda_{lambda} {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw std::domain_error{"insertion rate lambda must be positive"};
    }
    ratio_ = rate_ratio(r_, d_);
    if (!(ratio_ > 0.0 && ratio_ < 1.0)) {
      throw std::domain_error{"lambda/mu must lie in (0, 1)"};
    }
    mu_ = lambda_ / ratio_;
    log_lambda_ = std::log(lambda_);
    log_mu_ = std::log(mu_);
    log_keep_ = std::log1p(-r_);
    log_r_ = std::log(r_);
    memo_f_.assign(1, 0.0);
  }

  static auto geometric(double r, double r_d, double lambda) -> IndelParams {
    return IndelParams{r, SizeDistribution::geometric(r_d), lambda};
  }

  auto r() const -> double { return r_; }
  auto lambda() const -> double { return lambda_; }
  auto mu() const -> double { return mu_; }
  auto ratio() const -> double { return ratio_; }
  auto deletion_sizes() const -> const SizeDistribution& { return d_; }
  auto is_geometric() const -> bool { return d_.kind() == SizeDistribution::Kind::geometric; }
  // Geometric only: r_d and the induced insertion parameter r_i.
  auto r_d() const -> double { return d_.geometric_parameter(); }
  auto r_i() const -> double { return 1.0 - (1.0 - r_d()) * (1.0 - r_); }

  auto log_q(int x) const -> double { return x < 0 ? k_neg_inf : log_r_ + x * log_keep_; }

  auto log_insertion_size(int k) const -> double {
    if (k < 1) {
      return k_neg_inf;
    }
    return log_mu_ - log_lambda_ + k * log_keep_ + d_.log_pmf(k);
  }

  auto insertion_size(int k) const -> double { return std::exp(log_insertion_size(k)); }

  // f(x); closed form x - (1-r_d)(1-(1-r_d)^x)/r_d for the geometric law.
  auto f(int x) const -> double {
    if (x <= 0) {
      return 0.0;
    }
    if (is_geometric()) {
      auto rd = r_d();
      if (rd == 1.0) {
        return x;
      }
      return x + (1.0 - rd) * std::expm1(x * std::log1p(-rd)) / rd;
    }
    while (static_cast<int>(memo_f_.size()) <= x) {
      auto m = static_cast<int>(memo_f_.size());
      memo_f_.push_back(memo_f_.back() + d_.cdf(m));
    }
    return memo_f_[static_cast<std::size_t>(x)];
  }

  auto eta(int n) const -> double { return (n + 1) * lambda_ + f(n) * mu_; }

  auto log_insertion_rate(int k) const -> double {  // log(lambda i(k))
    return log_mu_ + k * log_keep_ + d_.log_pmf(k);
  }

  auto log_deletion_rate(int k) const -> double {  // log(mu d(k))
    return log_mu_ + d_.log_pmf(k);
  }

  // Size of a deletion on a length-n sequence drawn with probability
  // (n-l+1) d(l) / f(n).
  auto sample_deletion_size(Rng& rng, int n) const -> int {
    auto target = uniform_open01(rng) * f(n);
    auto acc = 0.0;
    for (auto l = 1; l <= n; ++l) {
      acc += (n - l + 1) * d_.pmf(l);
      if (target < acc) {
        return l;
      }
    }
    for (auto l = n; l >= 1; --l) {
      if (d_.pmf(l) > 0.0) {
        return l;
      }
    }
    return 1;
  }

  auto log_deletion_size_given_length(int l, int n) const -> double {
    if (l < 1 || l > n) {
      return k_neg_inf;
    }
    return std::log(static_cast<double>(n - l + 1)) + d_.log_pmf(l) - std::log(f(n));
  }

  auto sample_insertion_size(Rng& rng) const -> int {
    if (is_geometric()) {
      auto ri = r_i();
      if (ri >= 1.0) {
        return 1;
      }
      auto k = std::ceil(std::log(uniform_open01(rng)) / std::log1p(-ri));
      return std::max(1, static_cast<int>(std::min(k, 1e9)));
    }
    auto u = uniform_open01(rng);
    auto acc = 0.0;
    for (auto k = 1; k < 100'000'000; ++k) {
      acc += insertion_size(k);
      if (u < acc) {
        return k;
      }
    }
    throw NumericalError{"insertion size sampler ran off the table"};
  }

 private:
  double r_;
  SizeDistribution d_;
  double lambda_;
  double ratio_ = 0.0;
  double mu_ = 0.0;
  double log_lambda_ = 0.0;
  double log_mu_ = 0.0;
  double log_keep_ = 0.0;
  double log_r_ = 0.0;
  mutable std::vector<double> memo_f_;
};

// Free-function forms of the model quantities.

inline auto insertion_size_log_pmf(int k, const IndelParams& p) -> double { return p.log_insertion_size(k); }

inline auto deletion_position_mass(int x, const IndelParams& p) -> double { return p.f(x); }

inline auto total_event_rate(int n, const IndelParams& p) -> double { return p.eta(n); }

// log Pr(h | v, n0): exponential waiting times, a no-event tail, and one rate
// factor lambda i(l) or mu d(l) per event.
inline auto edge_history_log_density(const EdgeHistory& h, const IndelParams& p) -> double {
  if (auto bad = validate_edge_history(h)) {
    throw std::invalid_argument{"edge_history_log_density: " + bad->message};
  }
  auto total = 0.0;
  auto n = h.parent_length;
  auto t_prev = 0.0;
  for (const auto& e : h.events) {
    total -= p.eta(n) * (e.time - t_prev);
    total += e.kind == IndelKind::insertion ? p.log_insertion_rate(e.size) : p.log_deletion_rate(e.size);
    n = e.length_after;
    t_prev = e.time;
  }
  total -= p.eta(n) * (h.edge_length - t_prev);
  return total;
}

// log Pr(H | T) = log q(n_root) + sum over edges of the edge log-density.
inline auto tree_history_log_density(const Tree& tree, const TreeHistory& h, const IndelParams& p) -> double {
  if (auto bad = validate_tree_history(tree, h)) {
    throw std::invalid_argument{"tree_history_log_density: " + *bad};
  }
  auto total = p.log_q(h.root_length);
  for (auto e : tree.edges()) {
    total += edge_history_log_density(h.edge(e), p);
  }
  return total;
}

}  // namespace bayescat
