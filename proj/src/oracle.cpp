#include "rwre/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rwre/errors.hpp"
#include "rwre/rng.hpp"

namespace rwre::oracle {

namespace {

std::size_t tree_states(int b, int n) {
    std::size_t total = 1, level = 1;
    for (int d = 1; d <= n; ++d) {
        level *= static_cast<std::size_t>(b);
        total += level;
    }
    return total;
}

std::size_t level_offset(int b, int depth) {
    std::size_t off = 0, level = 1;
    for (int d = 0; d < depth; ++d) {
        off += level;
        level *= static_cast<std::size_t>(b);
    }
    return off;
}

// Dense solve of M x = rhs by Gaussian elimination with partial pivoting.
std::vector<double> solve_dense(std::vector<double> m, std::vector<double> rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row)
            if (std::fabs(m[row * n + col]) > std::fabs(m[pivot * n + col])) pivot = row;
        if (m[pivot * n + col] == 0.0) throw std::runtime_error("singular system");
        if (pivot != col) {
            for (std::size_t k = 0; k < n; ++k) std::swap(m[col * n + k], m[pivot * n + k]);
            std::swap(rhs[col], rhs[pivot]);
        }
        const double inv = 1.0 / m[col * n + col];
        for (std::size_t row = col + 1; row < n; ++row) {
            const double f = m[row * n + col] * inv;
            if (f == 0.0) continue;
            for (std::size_t k = col; k < n; ++k) m[row * n + k] -= f * m[col * n + k];
            rhs[row] -= f * rhs[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t row = n; row-- > 0;) {
        double acc = rhs[row];
        for (std::size_t k = row + 1; k < n; ++k) acc -= m[row * n + k] * x[k];
        x[row] = acc / m[row * n + row];
    }
    return x;
}

}  // namespace

std::size_t DenseChain::state_of(int depth, std::size_t index) const {
    return perm[level_offset(b, depth) + index];
}

bool DenseChain::is_absorbing(std::size_t state) const {
    return p(state, state) == 1.0;
}

std::vector<char> DenseChain::target_mask(Target target) const {
    std::vector<char> mask(num_states, 0);
    switch (target) {
        case Target::RootReturn:
            if (!root_return) throw std::invalid_argument("chain has no root-return state");
            mask[*root_return] = 1;
            break;
        case Target::Leaf:
            if (!target_leaf) throw std::invalid_argument("chain has no absorbing leaf");
            mask[*target_leaf] = 1;
            break;
        case Target::LevelN: {
            const std::size_t off = level_offset(b, n);
            for (std::size_t i = off; i < tree_states(b, n); ++i) mask[perm[i]] = 1;
            break;
        }
    }
    return mask;
}

bool DenseChain::in_target(std::size_t state, Target target) const {
    return target_mask(target)[state] != 0;
}

DenseChain build(const quenched::TruncatedEnv& env, bool absorb_at_level_n,
                 bool absorb_at_root_return, std::optional<VertexAddress> absorb_leaf,
                 std::uint64_t shuffle_seed) {
    DenseChain chain;
    chain.b = env.b();
    chain.n = env.n();
    chain.absorb_level_n = absorb_at_level_n;
    const std::size_t vertices = tree_states(chain.b, chain.n);
    if (vertices > 100000) throw BudgetExceeded("oracle chain exceeds the state cap");
    chain.num_states = vertices + (absorb_at_root_return ? 1 : 0);

    chain.perm.resize(vertices);
    std::iota(chain.perm.begin(), chain.perm.end(), std::size_t{0});
    if (shuffle_seed != 0) {
        SplitMix64 rng(shuffle_seed);
        for (std::size_t i = vertices; i-- > 1;)
            std::swap(chain.perm[i], chain.perm[rng.next() % (i + 1)]);
    }

    chain.root_start = chain.perm[0];
    if (absorb_at_root_return) chain.root_return = vertices;  // appended, never permuted

    std::optional<std::size_t> leaf_state;
    if (absorb_leaf) {
        if (static_cast<int>(absorb_leaf->depth()) != chain.n)
            throw std::invalid_argument("absorb_leaf must live at generation n");
        std::size_t index = 0;
        for (auto d : absorb_leaf->digits)
            index = index * static_cast<std::size_t>(chain.b) + d;
        leaf_state = chain.state_of(chain.n, index);
        chain.target_leaf = leaf_state;
    }

    const auto b = static_cast<std::size_t>(chain.b);
    chain.matrix.assign(chain.num_states * chain.num_states, 0.0);
    auto set_p = [&](std::size_t from, std::size_t to, double v) {
        chain.matrix[from * chain.num_states + to] = v;
    };

    // Root transitions, proportional to the children's A-values.
    {
        const auto& a = env.level(1);
        double sum = 0.0;
        for (double v : a) sum += v;
        for (std::size_t i = 0; i < b; ++i)
            set_p(chain.root_start, chain.state_of(1, i), a[i] / sum);
    }

    const std::size_t into_root = absorb_at_root_return ? *chain.root_return : chain.root_start;

    for (int depth = 1; depth < chain.n; ++depth) {
        const auto& child_a = env.level(depth + 1);
        const std::size_t count = env.level(depth).size();
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t from = chain.state_of(depth, i);
            double sum = 0.0;
            for (std::size_t j = 0; j < b; ++j) sum += child_a[i * b + j];
            const std::size_t parent =
                depth == 1 ? into_root : chain.state_of(depth - 1, i / b);
            set_p(from, parent, 1.0 / (1.0 + sum));
            for (std::size_t j = 0; j < b; ++j)
                set_p(from, chain.state_of(depth + 1, i * b + j), child_a[i * b + j] / (1.0 + sum));
        }
    }

    // Generation n: absorb, or reflect to the parent.
    const std::size_t leaf_count = env.level(chain.n).size();
    for (std::size_t i = 0; i < leaf_count; ++i) {
        const std::size_t state = chain.state_of(chain.n, i);
        const bool absorbing = absorb_at_level_n || (leaf_state && state == *leaf_state);
        if (absorbing) {
            set_p(state, state, 1.0);
        } else if (chain.n == 1) {
            set_p(state, into_root, 1.0);
        } else {
            set_p(state, chain.state_of(chain.n - 1, i / b), 1.0);
        }
    }
    if (chain.root_return) set_p(*chain.root_return, *chain.root_return, 1.0);
    return chain;
}

namespace {

struct TransientSystem {
    std::vector<std::size_t> transient;        // state ids
    std::vector<std::size_t> slot_of;          // state id -> slot (or npos)
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

TransientSystem transient_states(const DenseChain& chain) {
    TransientSystem sys;
    sys.slot_of.assign(chain.num_states, TransientSystem::npos);
    for (std::size_t s = 0; s < chain.num_states; ++s) {
        if (!chain.is_absorbing(s)) {
            sys.slot_of[s] = sys.transient.size();
            sys.transient.push_back(s);
        }
    }
    return sys;
}

// Solves (I-Q) x = rhs over the transient states and rechecks the residual.
std::vector<double> solve_transient(const DenseChain& chain, const TransientSystem& sys,
                                    const std::vector<double>& rhs) {
    const std::size_t m = sys.transient.size();
    std::vector<double> lhs(m * m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            const double q = chain.p(sys.transient[r], sys.transient[c]);
            lhs[r * m + c] = (r == c ? 1.0 : 0.0) - q;
        }
    }
    auto x = solve_dense(lhs, rhs);
    double residual = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        double acc = -rhs[r];
        for (std::size_t c = 0; c < m; ++c) acc += lhs[r * m + c] * x[c];
        residual = std::max(residual, std::fabs(acc));
    }
    if (residual > 1e-12) throw std::runtime_error("linear solve residual above 1e-12");
    return x;
}

}  // namespace

double hit_probability(const DenseChain& chain, std::size_t start, Target target) {
    const auto mask = chain.target_mask(target);
    if (chain.is_absorbing(start)) return mask[start] != 0 ? 1.0 : 0.0;
    const auto sys = transient_states(chain);
    std::vector<double> rhs(sys.transient.size(), 0.0);
    for (std::size_t r = 0; r < sys.transient.size(); ++r) {
        double acc = 0.0;
        for (std::size_t s = 0; s < chain.num_states; ++s)
            if (mask[s] != 0 && chain.is_absorbing(s)) acc += chain.p(sys.transient[r], s);
        rhs[r] = acc;
    }
    const auto h = solve_transient(chain, sys, rhs);
    return h[sys.slot_of[start]];
}

double expected_absorption_time(const DenseChain& chain, std::size_t start) {
    if (!chain.absorb_level_n || chain.root_return)
        throw std::invalid_argument("expected_absorption_time needs level-n absorption only");
    if (chain.is_absorbing(start)) return 0.0;
    const auto sys = transient_states(chain);
    std::vector<double> rhs(sys.transient.size(), 1.0);
    const auto t = solve_transient(chain, sys, rhs);
    return t[sys.slot_of[start]];
}

std::vector<double> passage_time_distribution(const DenseChain& chain, std::size_t start,
                                              Target target, int m_max) {
    const auto mask = chain.target_mask(target);
    std::vector<double> prob(chain.num_states, 0.0), nextp(chain.num_states, 0.0);
    prob[start] = 1.0;
    std::vector<double> cumulative;
    cumulative.reserve(static_cast<std::size_t>(m_max));
    for (int m = 0; m < m_max; ++m) {
        std::fill(nextp.begin(), nextp.end(), 0.0);
        for (std::size_t s = 0; s < chain.num_states; ++s) {
            if (prob[s] == 0.0) continue;
            const double* row = &chain.matrix[s * chain.num_states];
            for (std::size_t to = 0; to < chain.num_states; ++to)
                if (row[to] != 0.0) nextp[to] += prob[s] * row[to];
        }
        std::swap(prob, nextp);
        double mass = 0.0;
        for (std::size_t s = 0; s < chain.num_states; ++s)
            if (mask[s] != 0 && chain.is_absorbing(s)) mass += prob[s];
        cumulative.push_back(mass);
    }
    return cumulative;
}

}  // namespace rwre::oracle
