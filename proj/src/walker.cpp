#include "rwre/walker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "rwre/errors.hpp"

namespace rwre::walker {

namespace {

// Per-atom transition thresholds, shared by every vertex that drew the atom.
struct AtomTables {
    double parent_w = 0.0;          // omega(x, parent) at a non-root vertex
    std::vector<double> cum;        // cumulative child thresholds, non-root
    std::vector<double> cum_root;   // cumulative child thresholds at the root
};

struct CompiledEnv {
    const EnvSpec& spec;
    std::vector<AtomTables> tables;

    explicit CompiledEnv(const EnvSpec& s) : spec(s) {
        tables.reserve(s.atoms().size());
        for (const auto& atom : s.atoms()) {
            AtomTables t;
            double sum = 0.0;
            for (double a : atom.values) sum += a;
            t.parent_w = 1.0 / (1.0 + sum);
            t.cum.reserve(atom.values.size());
            t.cum_root.reserve(atom.values.size());
            double acc = t.parent_w, acc_root = 0.0;
            for (double a : atom.values) {
                acc += a / (1.0 + sum);
                acc_root += a / sum;
                t.cum.push_back(acc);
                t.cum_root.push_back(acc_root);
            }
            t.cum.back() = 1.0;
            t.cum_root.back() = 1.0;
            tables.push_back(std::move(t));
        }
    }

    const AtomTables& at(std::uint64_t chain_state) const {
        return tables[spec.pick_atom(chain_state)];
    }
};

// Walk state along the current root path; popping and re-descending
// recomputes everything from the chain hash, so no cache is needed for
// correctness and memory stays proportional to the current depth.
struct PathWalk {
    const CompiledEnv& env;
    std::vector<std::uint64_t> chain;
    std::vector<const AtomTables*> tables;
    int depth = 0;

    PathWalk(const CompiledEnv& e, std::uint64_t seed_env) : env(e) {
        chain.push_back(chain_root(seed_env));
        tables.push_back(&env.at(chain.back()));
    }

    // Takes one step; returns the new depth.
    int step(double u) {
        const AtomTables& t = *tables[static_cast<std::size_t>(depth)];
        if (depth > 0 && u < t.parent_w) {
            --depth;
            chain.pop_back();
            tables.pop_back();
            return depth;
        }
        const auto& cum = depth == 0 ? t.cum_root : t.cum;
        unsigned digit = 0;
        while (digit + 1 < cum.size() && u >= cum[digit]) ++digit;
        chain.push_back(chain_child(chain.back(), digit));
        tables.push_back(&env.at(chain.back()));
        ++depth;
        return depth;
    }
};

}  // namespace

Excursion run_excursion(const EnvSpec& spec, std::uint64_t seed_env, std::uint64_t seed_walk,
                        int n, std::uint64_t step_budget) {
    if (n < 1) throw std::invalid_argument("run_excursion needs n >= 1");
    const CompiledEnv compiled(spec);
    return [&] {
        PathWalk walk(compiled, seed_env);
        SplitMix64 rng(seed_walk);
        Excursion exc;
        while (exc.steps < step_budget) {
            const int d = walk.step(rng.uniform01());
            ++exc.steps;
            if (d == n) {
                exc.success = true;
                return exc;
            }
            if (d == 0) return exc;
        }
        exc.truncated = true;
        return exc;
    }();
}

namespace {

struct BlockCounts {
    std::uint64_t successes = 0;
    std::uint64_t truncated = 0;
};

BlockCounts run_excursion_block(const CompiledEnv& compiled, std::uint64_t seed_env,
                                std::uint64_t seed_walk, int n, std::uint64_t step_budget,
                                std::uint64_t first, std::uint64_t last) {
    BlockCounts counts;
    for (std::uint64_t i = first; i < last; ++i) {
        PathWalk walk(compiled, seed_env);
        SplitMix64 rng = SplitMix64::stream(seed_walk, i);
        std::uint64_t steps = 0;
        while (true) {
            if (steps >= step_budget) {
                ++counts.truncated;
                break;
            }
            const int d = walk.step(rng.uniform01());
            ++steps;
            if (d == n) {
                ++counts.successes;
                break;
            }
            if (d == 0) break;
        }
    }
    return counts;
}

}  // namespace

RhoEstimate estimate_rho_mc(const EnvSpec& spec, std::uint64_t seed_env, int n,
                            std::uint64_t excursions, std::uint64_t seed_walk,
                            std::uint64_t step_budget, int threads) {
    if (excursions == 0) throw std::invalid_argument("estimate_rho_mc needs excursions > 0");
    if (n < 1) throw std::invalid_argument("estimate_rho_mc needs n >= 1");
    const CompiledEnv compiled(spec);

    RhoEstimate est;
    est.excursions = excursions;
    if (threads <= 1) {
        const auto counts =
            run_excursion_block(compiled, seed_env, seed_walk, n, step_budget, 0, excursions);
        est.successes = counts.successes;
        est.truncated = counts.truncated;
    } else {
        const auto t = static_cast<std::uint64_t>(threads);
        std::vector<BlockCounts> results(t);
        std::vector<std::thread> pool;
        pool.reserve(t);
        for (std::uint64_t k = 0; k < t; ++k) {
            const std::uint64_t first = excursions * k / t;
            const std::uint64_t last = excursions * (k + 1) / t;
            pool.emplace_back([&, k, first, last] {
                results[k] = run_excursion_block(compiled, seed_env, seed_walk, n, step_budget,
                                                 first, last);
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& c : results) {
            est.successes += c.successes;
            est.truncated += c.truncated;
        }
    }

    if (est.truncated * 1000 > excursions)
        throw BudgetExceeded("estimate_rho_mc: truncated fraction above 1e-3");
    const double p = static_cast<double>(est.successes) / static_cast<double>(excursions);
    est.value = p;
    est.se = std::sqrt(p * (1.0 - p) / static_cast<double>(excursions));
    return est;
}

WalkRecord first_passage(const EnvSpec& spec, std::uint64_t seed_env, std::uint64_t seed_walk,
                         int n, std::uint64_t step_budget) {
    if (n < 1) throw std::invalid_argument("first_passage needs n >= 1");
    const CompiledEnv compiled(spec);
    PathWalk walk(compiled, seed_env);
    SplitMix64 rng(seed_walk);

    WalkRecord rec;
    rec.seed_env = seed_env;
    rec.seed_walk = seed_walk;
    std::uint64_t next_checkpoint = std::uint64_t{1} << 10;
    int xstar = 0;
    while (rec.steps < step_budget) {
        const int d = walk.step(rng.uniform01());
        ++rec.steps;
        xstar = std::max(xstar, d);
        if (d == 0) ++rec.returns_to_root;
        if (rec.steps == next_checkpoint) {
            rec.xstar_checkpoints.emplace_back(rec.steps, xstar);
            next_checkpoint *= 2;
        }
        if (d == n) {
            rec.tau_n = rec.steps;
            break;
        }
    }
    rec.truncated = !rec.tau_n.has_value();
    rec.xstar_final = xstar;
    return rec;
}

WalkRecord track_xstar(const EnvSpec& spec, std::uint64_t seed_env, std::uint64_t seed_walk,
                       std::uint64_t total_steps, std::span<const std::uint64_t> checkpoints) {
    const CompiledEnv compiled(spec);
    PathWalk walk(compiled, seed_env);
    SplitMix64 rng(seed_walk);

    WalkRecord rec;
    rec.seed_env = seed_env;
    rec.seed_walk = seed_walk;
    std::vector<std::uint64_t> marks(checkpoints.begin(), checkpoints.end());
    std::sort(marks.begin(), marks.end());
    std::size_t next = 0;
    int xstar = 0;
    for (std::uint64_t step = 1; step <= total_steps; ++step) {
        const int d = walk.step(rng.uniform01());
        xstar = std::max(xstar, d);
        if (d == 0) ++rec.returns_to_root;
        while (next < marks.size() && marks[next] == step) {
            rec.xstar_checkpoints.emplace_back(step, xstar);
            ++next;
        }
    }
    rec.steps = total_steps;
    rec.xstar_final = xstar;
    return rec;
}

PathChain restricted_chain(const quenched::TruncatedEnv& env, const VertexAddress& leaf) {
    if (static_cast<int>(leaf.depth()) != env.n())
        throw std::invalid_argument("restricted_chain needs a generation-n leaf");
    PathChain chain;
    chain.n = env.n();
    chain.up_probs.reserve(leaf.depth());
    std::size_t index = 0;
    const auto b = static_cast<std::size_t>(env.b());
    for (std::size_t d = 0; d < leaf.depth(); ++d) {
        index = index * b + leaf.digits[d];
        if (d >= 1) {
            const double a = env.A(static_cast<int>(d) + 1, index);
            chain.up_probs.push_back(a / (1.0 + a));
        }
    }
    return chain;
}

double chain_ruin_up(const PathChain& chain) {
    // P_1(hit n before 0) = 1 / sum_{k=0}^{n-1} prod_{j<=k} (q_j/p_j).
    long double sum = 0.0L, prod = 1.0L;
    sum += prod;
    for (double p : chain.up_probs) {
        prod *= (1.0L - p) / p;
        sum += prod;
    }
    return static_cast<double>(1.0L / sum);
}

std::vector<double> reversible_measure(const PathChain& chain) {
    // pi(0) = 1; detailed balance pi(y) p(y,y+1) = pi(y+1) p(y+1,y) with
    // p(0,1) = 1 and down-probability 1 - p at interior states.
    std::vector<double> pi(static_cast<std::size_t>(chain.n), 0.0);
    pi[0] = 1.0;
    for (int y = 1; y < chain.n; ++y) {
        const double up_prev = y == 1 ? 1.0 : chain.up_probs[static_cast<std::size_t>(y) - 2];
        const double down_here = 1.0 - chain.up_probs[static_cast<std::size_t>(y) - 1];
        pi[static_cast<std::size_t>(y)] = pi[static_cast<std::size_t>(y) - 1] * up_prev / down_here;
    }
    return pi;
}

double detailed_balance_error(const PathChain& chain) {
    const auto pi = reversible_measure(chain);
    double err = 0.0;
    for (int y = 0; y + 1 < chain.n; ++y) {
        const double up = y == 0 ? 1.0 : chain.up_probs[static_cast<std::size_t>(y) - 1];
        const double down = 1.0 - chain.up_probs[static_cast<std::size_t>(y)];
        err = std::max(err, std::fabs(pi[static_cast<std::size_t>(y)] * up -
                                      pi[static_cast<std::size_t>(y) + 1] * down));
    }
    return err;
}

PassageBound path_passage_bound_check(const PathChain& chain, const quenched::TruncatedEnv& env,
                                      const VertexAddress& leaf, std::uint64_t m) {
    if (static_cast<int>(leaf.depth()) != chain.n)
        throw std::invalid_argument("leaf depth does not match the chain");
    const auto n = static_cast<std::size_t>(chain.n);

    // Exact P{T(n) <= m} from 0 by forward propagation; state n absorbs.
    std::vector<double> prob(n + 1, 0.0), nextp(n + 1, 0.0);
    prob[0] = 1.0;
    double absorbed = 0.0;
    for (std::uint64_t step = 0; step < m; ++step) {
        std::fill(nextp.begin(), nextp.end(), 0.0);
        nextp[1] += prob[0];
        for (std::size_t y = 1; y < n; ++y) {
            if (prob[y] == 0.0) continue;
            const double up = chain.up_probs[y - 1];
            nextp[y + 1] += prob[y] * up;
            nextp[y - 1] += prob[y] * (1.0 - up);
        }
        absorbed += nextp[n];
        nextp[n] = 0.0;
        std::swap(prob, nextp);
    }

    double vbar = -std::numeric_limits<double>::infinity(), v = 0.0;
    std::size_t index = 0;
    const auto b = static_cast<std::size_t>(env.b());
    for (std::size_t d = 0; d < leaf.depth(); ++d) {
        index = index * b + leaf.digits[d];
        v -= std::log(env.A(static_cast<int>(d) + 1, index));
        vbar = std::max(vbar, v);
    }
    const double c = (1.0 + env.spec().a_max()) / (1.0 + env.spec().a_min());
    return {absorbed, static_cast<double>(m) * std::exp(-vbar) * c};
}

}  // namespace rwre::walker
