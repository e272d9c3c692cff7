#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "bayescat/core_types.hpp"
#include "bayescat/indel_model.hpp"
#include "bayescat/random.hpp"
#include "bayescat/tree.hpp"

namespace bayescat {

// Hyperparameters.  alpha_pi, (r_alpha, r_beta) and (rd_alpha, rd_beta)
// default to the 5S rRNA settings; gamma_alpha, kappa_alpha and
// lambda_alpha are weakly informative choices.
struct PriorConfig {
  double gamma_alpha = 0.1;  // g(gamma) = a / (1 + a gamma)^2, median 1/a
  std::array<double, 4> pi_alpha = {13.3, 21.7, 23.1, 11.9};
  double kappa_alpha = 1.0;  // same ratio-of-exponentials family as gamma
  double r_alpha = 100.0;
  double r_beta = 12200.0;
  double rd_alpha = 3.0;
  double rd_beta = 15.0;
  double lambda_alpha = 10.0;  // Exponential rate; mean 1/lambda_alpha

  auto valid() const -> bool {
    auto ok = gamma_alpha > 0 && kappa_alpha > 0 && r_alpha > 0 && r_beta > 0 && rd_alpha > 0 && rd_beta > 0 &&
              lambda_alpha > 0;
    for (auto a : pi_alpha) {
      ok = ok && a > 0;
    }
    return ok;
  }
};

// Model parameters Theta = (pi, kappa, gamma, r, r_d, lambda) with a
// geometric deletion size law.
struct Parameters {
  SubstParams subst;
  double gamma = 10.0;
  double r = 0.01;
  double r_d = 0.5;
  double lambda = 0.1;

  auto indel() const -> IndelParams { return IndelParams::geometric(r, r_d, lambda); }

  friend auto operator==(const Parameters&, const Parameters&) -> bool = default;
};

namespace detail {

inline auto log_beta_density(double x, double a, double b) -> double {
  if (!(x > 0.0 && x < 1.0)) {
    return k_neg_inf;
  }
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

inline auto log_ratio_of_exponentials(double x, double alpha) -> double {
  if (!(x > 0.0) || !std::isfinite(x)) {
    return k_neg_inf;
  }
  return std::log(alpha) - 2.0 * std::log1p(alpha * x);
}

}  // namespace detail

inline auto log_dirichlet_density(const std::array<double, 4>& x, const std::array<double, 4>& alpha) -> double {
  auto total_alpha = 0.0;
  auto out = 0.0;
  auto sum = 0.0;
  for (auto i = std::size_t{0}; i < 4; ++i) {
    if (!(x[i] > 0.0)) {
      return k_neg_inf;
    }
    total_alpha += alpha[i];
    out += (alpha[i] - 1.0) * std::log(x[i]) - std::lgamma(alpha[i]);
    sum += x[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    return k_neg_inf;
  }
  return out + std::lgamma(total_alpha);
}

inline auto log_gamma_prior(double gamma, const PriorConfig& cfg) -> double {
  return detail::log_ratio_of_exponentials(gamma, cfg.gamma_alpha);
}

// Sum of the log prior densities of every block, including the uniform
// topology term and the branch lengths given gamma.  Out-of-support values
// give -infinity.
inline auto parameters_in_support(const Parameters& p) -> bool {
  return p.subst.valid() && p.gamma > 0.0 && std::isfinite(p.gamma) && p.lambda > 0.0 && std::isfinite(p.lambda) &&
         p.r > 0.0 && p.r < 1.0 && p.r_d > 0.0 && p.r_d < 1.0;
}

inline auto log_prior(const Tree& tree, const Parameters& p, const PriorConfig& cfg) -> double {
  if (!parameters_in_support(p)) {
    return k_neg_inf;
  }
  auto total = -std::log(num_unrooted_topologies(tree.num_taxa()));
  auto log_g = std::log(p.gamma);
  for (auto e : tree.edges()) {
    auto v = tree.branch_length(e);
    if (!(v > 0.0)) {
      return k_neg_inf;
    }
    total += log_g - p.gamma * v;
  }
  total += log_gamma_prior(p.gamma, cfg);
  total += log_dirichlet_density(p.subst.pi, cfg.pi_alpha);
  total += detail::log_ratio_of_exponentials(p.subst.kappa, cfg.kappa_alpha);
  total += detail::log_beta_density(p.r, cfg.r_alpha, cfg.r_beta);
  total += detail::log_beta_density(p.r_d, cfg.rd_alpha, cfg.rd_beta);
  total += std::log(cfg.lambda_alpha) - cfg.lambda_alpha * p.lambda;
  return total;
}

// Inverse CDF of g: G(x) = a x / (1 + a x).
inline auto sample_ratio_of_exponentials(Rng& rng, double alpha) -> double {
  auto u = uniform_open01(rng);
  return u / (alpha * (1.0 - u));
}

inline auto sample_parameters(Rng& rng, const PriorConfig& cfg) -> Parameters {
  auto p = Parameters{};
  p.gamma = sample_ratio_of_exponentials(rng, cfg.gamma_alpha);
  p.subst.pi = dirichlet_variate(rng, cfg.pi_alpha);
  p.subst.kappa = sample_ratio_of_exponentials(rng, cfg.kappa_alpha);
  p.r = beta_variate(rng, cfg.r_alpha, cfg.r_beta);
  p.r_d = beta_variate(rng, cfg.rd_alpha, cfg.rd_beta);
  p.lambda = exponential(rng, cfg.lambda_alpha);
  // Renormalize so the simplex check holds to rounding.
  auto s = p.subst.pi[0] + p.subst.pi[1] + p.subst.pi[2] + p.subst.pi[3];
  for (auto& x : p.subst.pi) {
    x /= s;
  }
  return p;
}

struct PriorDraw {
  Parameters params;
  Tree tree;
};

// Parameters from their priors, a uniform topology, and iid Exponential(gamma)
// branch lengths.
inline auto sample_prior(Rng& rng, const PriorConfig& cfg, std::vector<std::string> taxa) -> PriorDraw {
  auto params = sample_parameters(rng, cfg);
  auto tree = random_topology(rng, std::move(taxa));
  for (auto e : tree.edges()) {
    auto v = 0.0;
    while (!(v > 0.0)) {
      v = exponential(rng, params.gamma);
    }
    tree.set_branch_length(e, v);
  }
  return {params, std::move(tree)};
}

}  // namespace bayescat
