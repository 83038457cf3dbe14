#include "rwre/quenched.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "rwre/errors.hpp"
#include "rwre/walker.hpp"

namespace rwre::quenched {

TruncatedEnv::TruncatedEnv(const EnvSpec& spec, std::uint64_t seed, int n,
                           std::uint64_t value_budget)
    : spec_(spec), seed_(seed), n_(n) {
    if (n < 1) throw std::invalid_argument("truncate needs n >= 1");
    const auto b = static_cast<std::uint64_t>(spec.b());
    std::uint64_t total = 0, level_size = 1;
    for (int d = 1; d <= n; ++d) {
        if (level_size > value_budget / b) throw BudgetExceeded("truncate: b^n exceeds the value budget");
        level_size *= b;
        total += level_size;
        if (total > value_budget) throw BudgetExceeded("truncate: b^n exceeds the value budget");
    }

    levels_.resize(static_cast<std::size_t>(n));
    std::vector<std::uint64_t> parent_chain{chain_root(seed)};
    for (int d = 1; d <= n; ++d) {
        auto& level = levels_[static_cast<std::size_t>(d - 1)];
        level.reserve(parent_chain.size() * b);
        std::vector<std::uint64_t> child_chain;
        const bool need_children = d < n;
        if (need_children) child_chain.reserve(parent_chain.size() * b);
        for (std::uint64_t state : parent_chain) {
            const auto& atom = spec_.atoms()[spec_.pick_atom(state)].values;
            level.insert(level.end(), atom.begin(), atom.end());
            if (need_children)
                for (std::uint64_t i = 0; i < b; ++i)
                    child_chain.push_back(chain_child(state, static_cast<unsigned>(i)));
        }
        parent_chain = std::move(child_chain);
    }
}

double TruncatedEnv::A_at(const VertexAddress& addr) const {
    const int d = static_cast<int>(addr.depth());
    if (d < 1 || d > n_) throw std::out_of_range("address depth outside 1..n");
    std::size_t index = 0;
    for (auto digit : addr.digits) index = index * static_cast<std::size_t>(b()) + digit;
    return A(d, index);
}

void TruncatedEnv::dump(std::ostream& os) const {
    os << "b " << b() << " n " << n_ << " seed " << seed_ << " spec " << spec_.hash_hex()
       << '\n';
    os.precision(17);
    for (int d = 1; d <= n_; ++d) {
        os << d;
        for (double a : level(d)) os << ' ' << a;
        os << '\n';
    }
}

BetaTable beta_recursion(const TruncatedEnv& env) {
    const int n = env.n();
    const auto b = static_cast<std::size_t>(env.b());
    BetaTable table;
    table.levels.resize(static_cast<std::size_t>(n));
    table.levels[static_cast<std::size_t>(n - 1)].assign(env.level(n).size(), 1.0);
    for (int d = n - 1; d >= 1; --d) {
        const auto& child_a = env.level(d + 1);
        const auto& child_beta = table.levels[static_cast<std::size_t>(d)];
        auto& mine = table.levels[static_cast<std::size_t>(d - 1)];
        mine.resize(env.level(d).size());
        for (std::size_t i = 0; i < mine.size(); ++i) {
            long double s = 0.0L;
            for (std::size_t j = 0; j < b; ++j)
                s += static_cast<long double>(child_a[i * b + j]) * child_beta[i * b + j];
            mine[i] = static_cast<double>(s / (1.0L + s));
        }
    }
    return table;
}

double rho(const TruncatedEnv& env, const BetaTable& beta) {
    const auto& a = env.level(1);
    const auto& bva = beta.levels.front();
    long double num = 0.0L, den = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += static_cast<long double>(a[i]) * bva[i];
        den += a[i];
    }
    return static_cast<double>(num / den);
}

double beta_root(const TruncatedEnv& env, const BetaTable& beta) {
    const auto& a = env.level(1);
    const auto& bva = beta.levels.front();
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * bva[i];
    return static_cast<double>(s / (1.0L + s));
}

GammaTable gamma_recursion(const TruncatedEnv& env, const BetaTable& beta) {
    const int n = env.n();
    const auto b = static_cast<std::size_t>(env.b());
    GammaTable table;
    table.levels.resize(static_cast<std::size_t>(n));
    table.levels[static_cast<std::size_t>(n - 1)].assign(env.level(n).size(), 0.0);
    for (int d = n - 1; d >= 1; --d) {
        const auto& child_a = env.level(d + 1);
        const auto& child_beta = beta.levels[static_cast<std::size_t>(d)];
        const auto& child_gamma = table.levels[static_cast<std::size_t>(d)];
        auto& mine = table.levels[static_cast<std::size_t>(d - 1)];
        mine.resize(env.level(d).size());
        for (std::size_t i = 0; i < mine.size(); ++i) {
            long double sum_a = 0.0L, sum_ab = 0.0L, sum_ag = 0.0L;
            for (std::size_t j = 0; j < b; ++j) {
                const long double a = child_a[i * b + j];
                sum_a += a;
                sum_ab += a * child_beta[i * b + j];
                sum_ag += a * child_gamma[i * b + j];
            }
            // 1/omega(x, parent) = 1 + sum of the children's A-values.
            mine[i] = static_cast<double>((1.0L + sum_a + sum_ag) / (1.0L + sum_ab));
        }
    }
    const auto& a = env.level(1);
    const auto& g = table.levels.front();
    long double num = 0.0L, den = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += static_cast<long double>(a[i]) * g[i];
        den += a[i];
    }
    table.gamma_root = static_cast<double>(1.0L + num / den);
    return table;
}

double expected_tau(const TruncatedEnv& env) {
    const BetaTable beta = beta_recursion(env);
    const GammaTable gamma = gamma_recursion(env, beta);
    return gamma.gamma_root / rho(env, beta);
}

double path_hit_prob(const TruncatedEnv& env, const VertexAddress& leaf) {
    if (static_cast<int>(leaf.depth()) != env.n())
        throw std::invalid_argument("path_hit_prob needs a generation-n leaf");
    const auto b = static_cast<std::size_t>(env.b());
    std::size_t index = 0;
    double v = 0.0, vmax = -std::numeric_limits<double>::infinity();
    std::vector<double> vs;
    vs.reserve(leaf.depth());
    for (std::size_t d = 0; d < leaf.depth(); ++d) {
        index = index * b + leaf.digits[d];
        v -= std::log(env.A(static_cast<int>(d) + 1, index));
        vs.push_back(v);
        vmax = std::max(vmax, v);
    }
    long double denom = 0.0L;
    for (double z : vs) denom += std::exp(z - vmax);

    const auto& first = env.level(1);
    long double sum_a = 0.0L;
    for (double a : first) sum_a += a;
    const double omega1 = first[leaf.digits.front()] / static_cast<double>(sum_a);
    return omega1 * std::exp(vs.front() - vmax) / static_cast<double>(denom);
}

Prop24 prop24_bound(const TruncatedEnv& env) {
    const int n = env.n();
    const auto b = static_cast<std::size_t>(env.b());
    Prop24 out;
    out.min_barrier = std::numeric_limits<double>::infinity();

    // One pass over all leaves, carrying V, its running maximum, and the
    // rescaled partial sum S = sum_z exp(V(z) - curmax).
    struct Frame {
        std::size_t index;
        int digit;
        double v, vmax, sumexp, v1;
    };
    std::vector<Frame> stack(static_cast<std::size_t>(n) + 1);
    stack[0] = {0, 0, 0.0, -std::numeric_limits<double>::infinity(), 0.0, 0.0};
    const auto& first = env.level(1);
    long double sum_a_root = 0.0L;
    for (double a : first) sum_a_root += a;

    int d = 0;
    while (true) {
        if (stack[static_cast<std::size_t>(d)].digit == static_cast<int>(b)) {
            if (d == 0) break;
            --d;
            continue;
        }
        Frame& cur = stack[static_cast<std::size_t>(d)];
        const int digit = cur.digit++;
        const std::size_t child_index = cur.index * b + static_cast<std::size_t>(digit);
        const double a = env.A(d + 1, child_index);
        const double v = cur.v - std::log(a);
        double vmax = cur.vmax, sumexp = cur.sumexp;
        if (v > vmax) {
            sumexp = sumexp * std::exp(vmax - v) + 1.0;
            vmax = v;
        } else {
            sumexp += std::exp(v - vmax);
        }
        const double v1 = d == 0 ? v : cur.v1;
        if (d + 1 == n) {
            const double omega1 =
                d == 0 ? a / static_cast<double>(sum_a_root)
                       : first[stack[1].index] / static_cast<double>(sum_a_root);
            const double hit = omega1 * std::exp(v1 - vmax) / sumexp;
            out.max_path_hit = std::max(out.max_path_hit, hit);
            out.min_barrier = std::min(out.min_barrier, vmax);
            continue;
        }
        ++d;
        stack[static_cast<std::size_t>(d)] = {child_index, 0, v, vmax, sumexp, v1};
    }

    // min_i omega(e, e_i) e^{V(e_i)} = 1 / sum_j A(e_j), the same for every i.
    const double prefactor = 1.0 / static_cast<double>(sum_a_root);
    out.corollary = prefactor / (static_cast<double>(n) * std::exp(out.min_barrier));
    return out;
}

AnnealedRho annealed_rho(const EnvSpec& spec, int n, std::uint64_t env_samples,
                         std::uint64_t seed, std::uint64_t value_budget,
                         std::uint64_t excursions_per_env, std::uint64_t step_budget) {
    if (env_samples == 0) throw std::invalid_argument("annealed_rho needs env_samples > 0");
    bool exact = true;
    {
        // Probe whether the exact recursion fits the budget.
        std::uint64_t total = 0, level = 1;
        for (int d = 1; d <= n && exact; ++d) {
            if (level > value_budget / static_cast<std::uint64_t>(spec.b())) exact = false;
            level *= static_cast<std::uint64_t>(spec.b());
            total += level;
            if (total > value_budget) exact = false;
        }
    }
    std::vector<double> values;
    values.reserve(env_samples);
    for (std::uint64_t s = 0; s < env_samples; ++s) {
        const std::uint64_t env_seed = SplitMix64::stream(seed, s).next();
        if (exact) {
            TruncatedEnv env(spec, env_seed, n, value_budget);
            values.push_back(rho(env, beta_recursion(env)));
        } else {
            const auto est = walker::estimate_rho_mc(spec, env_seed, n, excursions_per_env,
                                                     seed ^ 0x5CA1AB1EULL, step_budget);
            values.push_back(est.value);
        }
    }
    return {mean_se(values), exact};
}

}  // namespace rwre::quenched
