#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/stats.hpp"

namespace rwre::brw {

// V along the path from the root to addr, root-to-leaf order;
// v_values[k] - v_values[k-1] = -log A of the k-th vertex on the path.
struct PotentialPath {
    VertexAddress addr;
    std::vector<double> v_values;

    // max of V over the path excluding the root.
    double barrier() const;
};

PotentialPath potential_along(const EnvSpec& spec, std::uint64_t seed,
                              const VertexAddress& addr);

struct BarrierMin {
    double value = 0.0;
    VertexAddress witness;
    std::uint64_t visited = 0;
};

// Exact min over generation n of the path maximum of V, by depth-first
// branch and bound: the running maximum only grows along a path, so pruning
// any prefix whose bound already reaches the incumbent is lossless.
// Exceeding prune_budget throws rather than returning an unverified value.
BarrierMin barrier_min(const EnvSpec& spec, std::uint64_t seed, int n,
                       std::uint64_t prune_budget);

// Exact count of generation-m vertices whose path stays in [-K, K].
std::uint64_t count_Em(const EnvSpec& spec, std::uint64_t seed, int m, double K);

inline constexpr std::uint64_t kDefaultLeafBudget = std::uint64_t{1} << 26;

// M_n = sum over generation n of B(x) = prod A along the path; streaming DFS,
// no storage beyond the current path.
double additive_martingale(const EnvSpec& spec, std::uint64_t seed, int n,
                           std::uint64_t leaf_budget = kDefaultLeafBudget);

struct OneStepCheck {
    double m_n = 0.0;
    double conditional_mean_next = 0.0;  // = m_n * b * E(A), computed symbolically
};

OneStepCheck one_step_martingale_check(const EnvSpec& spec, std::uint64_t seed, int n,
                                       std::uint64_t leaf_budget = kDefaultLeafBudget);

// Step law of the spine walk S_1: atoms (log a, b p_a a) from the marginal
// law of A; a valid probability law iff E(A) = 1/b.
struct SpineLaw {
    std::vector<std::pair<double, double>> atoms;

    double mean() const;
    double variance() const;
    double total_prob() const;
    double sample_step(double u) const;
};

SpineLaw spine_step_distribution(const EnvSpec& spec);

// Bounded path functionals G for the many-to-one identity.
enum class Functional {
    ConstOne,            // G = 1
    MaxLe,               // 1{max_i S_i <= K}
    MaxAbsLe,            // 1{max_i |S_i| <= K}
    TerminalNonpositive  // 1{S_n <= 0}
};

struct ManyToOne {
    Estimate lhs;  // sum over T_n of B(x) G(path), averaged over environments
    Estimate rhs;  // G along the spine walk
};

ManyToOne many_to_one_check(const EnvSpec& spec, int n, Functional functional, double K,
                            std::uint64_t samples, std::uint64_t seed);

// Fixed point of phi(t) = E prod_i phi(t A(e_i)) on a geometric t-grid.
// Stored in log space; phi_at clamps exp underflow away from zero.
struct PhiTable {
    std::vector<double> t_grid;    // t_grid[0] = 0
    std::vector<double> phi;       // phi[0] = 1, non-increasing
    std::vector<double> log_phi;
    double residual = 0.0;
    std::string spec_hash;

    double log_phi_at(double t) const;
    double phi_at(double t) const;
    double t_max() const { return t_grid.back(); }
};

// Fixed-point iteration from phi_0 = exp(-t). The plain map drifts to the
// trivial fixed point 1 (its iterates are the Laplace transforms of M_n,
// which vanishes), so each sweep re-pins the scale freedom phi -> phi(c t)
// at a reference value; the final table is normalized so that
// -log phi(t) / (t log(1/t)) -> 1 for small t, matching the known
// small-argument growth of the non-trivial solution.
PhiTable solve_phi_star(const EnvSpec& spec, double t_max, int grid_size, int max_iters,
                        double tol);

// log of M_n* = prod over generation n of phi(B(x)); throws GridUnderflow if
// some B(x) lands beyond the solved grid.
double log_multiplicative_martingale(const EnvSpec& spec, std::uint64_t seed, int n,
                                     const PhiTable& phi,
                                     std::uint64_t leaf_budget = kDefaultLeafBudget);

double multiplicative_martingale(const EnvSpec& spec, std::uint64_t seed, int n,
                                 const PhiTable& phi,
                                 std::uint64_t leaf_budget = kDefaultLeafBudget);

// Empirical frequency of {M_n < n^{-chi}} over sampled environments.
double mn_lower_tail(const EnvSpec& spec, int n, double chi, std::uint64_t samples,
                     std::uint64_t seed);

// Exact min of V over generation n; pruned by the provable per-step bound
// on how fast V can still decrease.
double min_leaf_potential(const EnvSpec& spec, std::uint64_t seed, int n,
                          std::uint64_t prune_budget);

}  // namespace rwre::brw
