#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/quenched.hpp"

namespace rwre::oracle {

enum class Target { LevelN, RootReturn, Leaf };

// Explicit quenched chain on the depth <= n tree. The return to the root is
// absorbed in a duplicated state so "first return" is unambiguous in matrix
// form. Generation-n vertices either absorb or reflect to their parent;
// reflecting is exact for hitting probabilities of path vertices because
// any sojourn at or below an off-target leaf exits through it.
struct DenseChain {
    int b = 0;
    int n = 0;
    std::size_t num_states = 0;
    std::vector<double> matrix;  // row-major transition probabilities
    std::size_t root_start = 0;
    std::optional<std::size_t> root_return;
    std::optional<std::size_t> target_leaf;
    bool absorb_level_n = false;

    double p(std::size_t from, std::size_t to) const { return matrix[from * num_states + to]; }
    std::size_t state_of(int depth, std::size_t index) const;
    bool is_absorbing(std::size_t state) const;
    bool in_target(std::size_t state, Target target) const;
    std::vector<char> target_mask(Target target) const;

    std::vector<std::size_t> perm;  // vertex slot -> state id
};

// States capped at 1e5; a shuffle_seed permutes the enumeration, which must
// not change any result.
DenseChain build(const quenched::TruncatedEnv& env, bool absorb_at_level_n,
                 bool absorb_at_root_return,
                 std::optional<VertexAddress> absorb_leaf = std::nullopt,
                 std::uint64_t shuffle_seed = 0);

// Absorption probability into the target class from `start`, by a dense
// direct solve of (I-Q)h = r; the residual is rechecked below 1e-12.
double hit_probability(const DenseChain& chain, std::size_t start, Target target);

// Expected steps to absorption; requires level-n absorption only.
double expected_absorption_time(const DenseChain& chain, std::size_t start);

// Cumulative P{T <= m} for m = 1..m_max into the target class.
std::vector<double> passage_time_distribution(const DenseChain& chain, std::size_t start,
                                              Target target, int m_max);

}  // namespace rwre::oracle
