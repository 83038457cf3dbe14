#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/quenched.hpp"

namespace rwre::walker {

struct WalkRecord {
    std::uint64_t seed_env = 0;
    std::uint64_t seed_walk = 0;
    std::optional<std::uint64_t> tau_n;  // present iff the target level was reached
    std::uint64_t returns_to_root = 0;   // L(tau_n)
    std::vector<std::pair<std::uint64_t, int>> xstar_checkpoints;
    bool truncated = false;
    std::uint64_t steps = 0;
    int xstar_final = 0;
};

struct Excursion {
    bool success = false;   // reached generation n before returning to the root
    bool truncated = false; // step budget hit; counted separately, never as failure
    std::uint64_t steps = 0;
};

// One excursion from the root, simulated lazily on the infinite tree;
// deterministic given (seed_env, seed_walk).
Excursion run_excursion(const EnvSpec& spec, std::uint64_t seed_env, std::uint64_t seed_walk,
                        int n, std::uint64_t step_budget);

struct RhoEstimate {
    double value = 0.0;
    double se = 0.0;
    std::uint64_t successes = 0;
    std::uint64_t excursions = 0;
    std::uint64_t truncated = 0;
};

// Binomial estimate of the quenched rho_n for one fixed environment. Each
// excursion owns a stream derived from (seed_walk, index), so the result does
// not depend on thread count. Errors out if more than 1e-3 of the sample was
// truncated.
RhoEstimate estimate_rho_mc(const EnvSpec& spec, std::uint64_t seed_env, int n,
                            std::uint64_t excursions, std::uint64_t seed_walk,
                            std::uint64_t step_budget = std::uint64_t{1} << 32,
                            int threads = 1);

// Run until the first visit to generation n (or the budget), recording
// returns to the root and the running maximum at geometric checkpoints
// (ratio 2 starting at 2^10).
WalkRecord first_passage(const EnvSpec& spec, std::uint64_t seed_env, std::uint64_t seed_walk,
                         int n, std::uint64_t step_budget);

// One long trajectory with X* sampled at the given step counts.
WalkRecord track_xstar(const EnvSpec& spec, std::uint64_t seed_env, std::uint64_t seed_walk,
                       std::uint64_t total_steps, std::span<const std::uint64_t> checkpoints);

// The walk restricted to a fixed root-to-leaf path: a birth-death chain with
// up-probability A(x^{i+1}) / (1 + A(x^{i+1})) at interior state i and
// reflection at 0.
struct PathChain {
    int n = 0;
    std::vector<double> up_probs;  // up_probs[i-1] at state i, i = 1..n-1
};

PathChain restricted_chain(const quenched::TruncatedEnv& env, const VertexAddress& leaf);

// Gambler's-ruin probability of hitting n before 0 from state 1.
double chain_ruin_up(const PathChain& chain);

// Reversible measure with pi(0) = 1; detailed balance holds exactly.
std::vector<double> reversible_measure(const PathChain& chain);
double detailed_balance_error(const PathChain& chain);

struct PassageBound {
    double lhs = 0.0;  // exact P{T(n) <= m} for the reflected chain from 0
    double rhs = 0.0;  // m e^{-Vbar(x)} times the boundary factor C
};

// The reversibility bound on the first passage of the restricted chain; C =
// (1 + a_max) / (1 + a_min) absorbs the boundary terms of the exact measure.
PassageBound path_passage_bound_check(const PathChain& chain, const quenched::TruncatedEnv& env,
                                      const VertexAddress& leaf, std::uint64_t m);

}  // namespace rwre::walker
