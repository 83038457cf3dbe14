#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/stats.hpp"

namespace rwre::quenched {

inline constexpr std::uint64_t kDefaultValueBudget = std::uint64_t{1} << 22;

// Realized A-values for every vertex of depth 1..n, in lexicographic order
// inside each level. Regenerating from (spec, seed) reproduces the arrays
// bit-exactly, so lazy walkers and the truncation always agree.
class TruncatedEnv {
  public:
    TruncatedEnv(const EnvSpec& spec, std::uint64_t seed, int n,
                 std::uint64_t value_budget = kDefaultValueBudget);

    const EnvSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }
    int b() const { return spec_.b(); }
    int n() const { return n_; }

    // depth in 1..n; index is the address read as a base-b number.
    const std::vector<double>& level(int depth) const { return levels_[static_cast<std::size_t>(depth - 1)]; }
    double A(int depth, std::size_t index) const { return level(depth)[index]; }

    double A_at(const VertexAddress& addr) const;

    // Flat text dump, one line per level, 17 significant digits.
    void dump(std::ostream& os) const;

  private:
    EnvSpec spec_;
    std::uint64_t seed_;
    int n_;
    std::vector<std::vector<double>> levels_;
};

// beta[depth-1][index] = quenched probability of hitting generation n before
// the parent, starting from the vertex; 1 on the boundary level n.
struct BetaTable {
    std::vector<std::vector<double>> levels;

    double at(int depth, std::size_t index) const { return levels[static_cast<std::size_t>(depth - 1)][index]; }
};

BetaTable beta_recursion(const TruncatedEnv& env);

// rho_n = sum_i omega(e, e_i) beta_n(e_i), the quenched escape probability.
double rho(const TruncatedEnv& env, const BetaTable& beta);

// The root-level copy beta_n(e) = s/(1+s) with s = sum_i A(e_i) beta_n(e_i);
// distinct from rho_n (their denominators differ) and exposed separately.
double beta_root(const TruncatedEnv& env, const BetaTable& beta);

struct GammaTable {
    std::vector<std::vector<double>> levels;
    double gamma_root = 0.0;

    double at(int depth, std::size_t index) const { return levels[static_cast<std::size_t>(depth - 1)][index]; }
};

// gamma recursion with boundary 0 at level n; the root value carries a
// leading 1 (the step out of the root), validated against the dense-chain
// solver: gamma_root = 1 + sum_i omega(e, e_i) gamma_n(e_i).
GammaTable gamma_recursion(const TruncatedEnv& env, const BetaTable& beta);

// E_omega(tau_n) = gamma_n(e) / rho_n.
double expected_tau(const TruncatedEnv& env);

// Exit formula along a fixed path: omega(e, x1) e^{V(x1)} / sum_z e^{V(z)},
// evaluated with the running maximum factored out.
double path_hit_prob(const TruncatedEnv& env, const VertexAddress& leaf);

struct Prop24 {
    double max_path_hit = 0.0;  // max over leaves of the exact path bound
    double corollary = 0.0;     // explicit-prefactor form with min barrier
    double min_barrier = 0.0;
};

Prop24 prop24_bound(const TruncatedEnv& env);

struct AnnealedRho {
    Estimate estimate;
    bool exact = false;  // true when every sample came from the recursion
};

// Monte Carlo average of the quenched rho_n over environment seeds; exact
// per-environment recursion when b^n fits the budget, excursion sampling
// otherwise.
AnnealedRho annealed_rho(const EnvSpec& spec, int n, std::uint64_t env_samples,
                         std::uint64_t seed, std::uint64_t value_budget = kDefaultValueBudget,
                         std::uint64_t excursions_per_env = 100000,
                         std::uint64_t step_budget = std::uint64_t{1} << 32);

}  // namespace rwre::quenched
