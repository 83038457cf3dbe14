#include "rwre/brw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rwre/errors.hpp"

namespace rwre::brw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool power_fits(int b, int n, std::uint64_t budget) {
    std::uint64_t total = 1;
    for (int i = 0; i < n; ++i) {
        if (total > budget / static_cast<std::uint64_t>(b)) return false;
        total *= static_cast<std::uint64_t>(b);
    }
    return total <= budget;
}

// Shared iterative DFS scaffolding over the first n generations: chain
// states, the sibling atom at each path vertex, and the next-child cursor.
struct DfsPath {
    const EnvSpec& spec;
    std::vector<std::uint64_t> chain;
    std::vector<const std::vector<double>*> child_a;
    std::vector<int> next;

    DfsPath(const EnvSpec& s, std::uint64_t seed, int n) : spec(s) {
        chain.assign(static_cast<std::size_t>(n) + 1, 0);
        child_a.assign(static_cast<std::size_t>(n) + 1, nullptr);
        next.assign(static_cast<std::size_t>(n) + 1, 0);
        chain[0] = chain_root(seed);
        child_a[0] = &values_at(chain[0]);
    }

    const std::vector<double>& values_at(std::uint64_t state) const {
        return spec.atoms()[spec.pick_atom(state)].values;
    }

    void descend(int d, int digit) {
        chain[static_cast<std::size_t>(d) + 1] =
            chain_child(chain[static_cast<std::size_t>(d)], static_cast<unsigned>(digit));
        child_a[static_cast<std::size_t>(d) + 1] =
            &values_at(chain[static_cast<std::size_t>(d) + 1]);
        next[static_cast<std::size_t>(d) + 1] = 0;
    }
};

}  // namespace

double PotentialPath::barrier() const {
    double m = kNegInf;
    for (double v : v_values) m = std::max(m, v);
    return m;
}

PotentialPath potential_along(const EnvSpec& spec, std::uint64_t seed,
                              const VertexAddress& addr) {
    if (addr.depth() < 1) throw std::invalid_argument("potential_along needs depth >= 1");
    PotentialPath path;
    path.addr = addr;
    path.v_values.reserve(addr.depth());
    std::uint64_t state = chain_root(seed);
    double v = 0.0;
    for (auto d : addr.digits) {
        const auto& a = spec.atoms()[spec.pick_atom(state)].values;
        v -= std::log(a[d]);
        path.v_values.push_back(v);
        state = chain_child(state, d);
    }
    return path;
}

BarrierMin barrier_min(const EnvSpec& spec, std::uint64_t seed, int n,
                       std::uint64_t prune_budget) {
    if (n < 1) throw std::invalid_argument("barrier_min needs n >= 1");
    const int b = spec.b();
    // Smallest possible increment of V per step; positive when a_max < 1, in
    // which case the remaining-depth bound prunes constant environments to a
    // single path.
    const double min_step = -std::log(spec.a_max());

    DfsPath dfs(spec, seed, n);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> vbar(static_cast<std::size_t>(n) + 1, kNegInf);
    std::vector<std::vector<int>> order(static_cast<std::size_t>(n) + 1);
    std::vector<std::uint8_t> path;
    path.reserve(static_cast<std::size_t>(n));

    auto sort_children = [&](int d) {
        auto& ord = order[static_cast<std::size_t>(d)];
        ord.resize(static_cast<std::size_t>(b));
        const auto& a = *dfs.child_a[static_cast<std::size_t>(d)];
        for (int i = 0; i < b; ++i) ord[static_cast<std::size_t>(i)] = i;
        // Largest A first: the child with the smallest V-increase.
        std::sort(ord.begin(), ord.end(), [&](int x, int y) { return a[static_cast<std::size_t>(x)] > a[static_cast<std::size_t>(y)]; });
    };

    BarrierMin best;
    best.value = std::numeric_limits<double>::infinity();
    sort_children(0);
    int d = 0;
    while (true) {
        if (dfs.next[static_cast<std::size_t>(d)] == b) {
            if (d == 0) break;
            --d;
            path.pop_back();
            continue;
        }
        const int digit = order[static_cast<std::size_t>(d)][static_cast<std::size_t>(dfs.next[static_cast<std::size_t>(d)]++)];
        const double a = (*dfs.child_a[static_cast<std::size_t>(d)])[static_cast<std::size_t>(digit)];
        const double vc = v[static_cast<std::size_t>(d)] - std::log(a);
        const double barrier_c = std::max(vbar[static_cast<std::size_t>(d)], vc);
        const double remaining = static_cast<double>(n - d - 1);
        const double bound = std::max(barrier_c, vc + remaining * min_step);
        if (bound >= best.value) continue;

        if (++best.visited > prune_budget)
            throw BudgetExceeded("barrier_min: prune budget exhausted");

        path.push_back(static_cast<std::uint8_t>(digit));
        if (d + 1 == n) {
            best.value = barrier_c;
            best.witness.digits = path;
            path.pop_back();
            continue;
        }
        dfs.descend(d, digit);
        ++d;
        v[static_cast<std::size_t>(d)] = vc;
        vbar[static_cast<std::size_t>(d)] = barrier_c;
        sort_children(d);
    }
    if (!std::isfinite(best.value)) throw std::logic_error("barrier_min found no leaf");
    return best;
}

std::uint64_t count_Em(const EnvSpec& spec, std::uint64_t seed, int m, double K) {
    if (m < 1) throw std::invalid_argument("count_Em needs m >= 1");
    if (!(K > 0.0)) throw std::invalid_argument("count_Em needs K > 0");
    const int b = spec.b();
    DfsPath dfs(spec, seed, m);
    std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
    std::uint64_t count = 0;
    int d = 0;
    while (true) {
        if (dfs.next[static_cast<std::size_t>(d)] == b) {
            if (d == 0) break;
            --d;
            continue;
        }
        const int digit = dfs.next[static_cast<std::size_t>(d)]++;
        const double a = (*dfs.child_a[static_cast<std::size_t>(d)])[static_cast<std::size_t>(digit)];
        const double vc = v[static_cast<std::size_t>(d)] - std::log(a);
        if (std::fabs(vc) > K) continue;
        if (d + 1 == m) {
            ++count;
            continue;
        }
        dfs.descend(d, digit);
        ++d;
        v[static_cast<std::size_t>(d)] = vc;
    }
    return count;
}

double additive_martingale(const EnvSpec& spec, std::uint64_t seed, int n,
                           std::uint64_t leaf_budget) {
    if (n < 1) throw std::invalid_argument("additive_martingale needs n >= 1");
    if (!power_fits(spec.b(), n, leaf_budget))
        throw BudgetExceeded("additive_martingale: b^n exceeds the leaf budget");
    const int b = spec.b();
    DfsPath dfs(spec, seed, n);
    std::vector<double> prod(static_cast<std::size_t>(n) + 1, 1.0);
    long double sum = 0.0L;
    int d = 0;
    while (true) {
        if (dfs.next[static_cast<std::size_t>(d)] == b) {
            if (d == 0) break;
            --d;
            continue;
        }
        const int digit = dfs.next[static_cast<std::size_t>(d)]++;
        const double p = prod[static_cast<std::size_t>(d)] * (*dfs.child_a[static_cast<std::size_t>(d)])[static_cast<std::size_t>(digit)];
        if (d + 1 == n) {
            sum += p;
            continue;
        }
        dfs.descend(d, digit);
        ++d;
        prod[static_cast<std::size_t>(d)] = p;
    }
    return static_cast<double>(sum);
}

OneStepCheck one_step_martingale_check(const EnvSpec& spec, std::uint64_t seed, int n,
                                       std::uint64_t leaf_budget) {
    OneStepCheck check;
    check.m_n = additive_martingale(spec, seed, n, leaf_budget);
    double ea = 0.0;
    for (const auto& [a, p] : spec.marginal()) ea += p * a;
    check.conditional_mean_next = check.m_n * spec.b() * ea;
    return check;
}

double SpineLaw::mean() const {
    double m = 0.0;
    for (const auto& [s, p] : atoms) m += p * s;
    return m;
}

double SpineLaw::variance() const {
    const double m = mean();
    double v = 0.0;
    for (const auto& [s, p] : atoms) v += p * (s - m) * (s - m);
    return v;
}

double SpineLaw::total_prob() const {
    double t = 0.0;
    for (const auto& [s, p] : atoms) t += p;
    return t;
}

double SpineLaw::sample_step(double u) const {
    double acc = 0.0;
    for (const auto& [s, p] : atoms) {
        acc += p;
        if (u < acc) return s;
    }
    return atoms.back().first;
}

SpineLaw spine_step_distribution(const EnvSpec& spec) {
    SpineLaw law;
    law.atoms.reserve(spec.marginal().size());
    for (const auto& [a, p] : spec.marginal())
        law.atoms.emplace_back(std::log(a), spec.b() * p * a);
    if (std::fabs(law.total_prob() - 1.0) > 1e-9)
        throw NotNormalized("spine step law needs E(A) = 1/b");
    return law;
}

namespace {

// Exact inner sum over generation n of B(x) G(path) for one environment.
double many_to_one_lhs_term(const EnvSpec& spec, std::uint64_t env_seed, int n,
                            Functional functional, double K) {
    const int b = spec.b();
    const double hi = std::exp(K);
    const double lo = std::exp(-K);
    DfsPath dfs(spec, env_seed, n);
    std::vector<double> prod(static_cast<std::size_t>(n) + 1, 1.0);
    std::vector<double> max_b(static_cast<std::size_t>(n) + 1, 1.0);
    std::vector<double> min_b(static_cast<std::size_t>(n) + 1, 1.0);
    long double sum = 0.0L;
    int d = 0;
    while (true) {
        if (dfs.next[static_cast<std::size_t>(d)] == b) {
            if (d == 0) break;
            --d;
            continue;
        }
        const int digit = dfs.next[static_cast<std::size_t>(d)]++;
        const double p = prod[static_cast<std::size_t>(d)] * (*dfs.child_a[static_cast<std::size_t>(d)])[static_cast<std::size_t>(digit)];
        const double mx = std::max(max_b[static_cast<std::size_t>(d)], p);
        const double mn = std::min(min_b[static_cast<std::size_t>(d)], p);
        if (d + 1 == n) {
            bool g = true;
            switch (functional) {
                case Functional::ConstOne: g = true; break;
                case Functional::MaxLe: g = mx <= hi; break;
                case Functional::MaxAbsLe: g = mx <= hi && mn >= lo; break;
                case Functional::TerminalNonpositive: g = p <= 1.0; break;
            }
            if (g) sum += p;
            continue;
        }
        dfs.descend(d, digit);
        ++d;
        prod[static_cast<std::size_t>(d)] = p;
        max_b[static_cast<std::size_t>(d)] = mx;
        min_b[static_cast<std::size_t>(d)] = mn;
    }
    return static_cast<double>(sum);
}

}  // namespace

ManyToOne many_to_one_check(const EnvSpec& spec, int n, Functional functional, double K,
                            std::uint64_t samples, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("many_to_one_check needs n >= 1");
    ManyToOne result;
    if (functional == Functional::ConstOne) {
        // E M_n = 1 exactly on both sides; nothing to sample.
        result.lhs = {1.0, 0.0};
        result.rhs = {1.0, 0.0};
        return result;
    }
    if (samples == 0) throw std::invalid_argument("many_to_one_check needs samples > 0");

    std::vector<double> lhs_samples;
    lhs_samples.reserve(samples);
    for (std::uint64_t s = 0; s < samples; ++s) {
        const std::uint64_t env_seed = SplitMix64::stream(seed, 2 * s).next();
        lhs_samples.push_back(many_to_one_lhs_term(spec, env_seed, n, functional, K));
    }
    result.lhs = mean_se(lhs_samples);

    const SpineLaw law = spine_step_distribution(spec);
    std::vector<double> rhs_samples;
    rhs_samples.reserve(samples);
    for (std::uint64_t s = 0; s < samples; ++s) {
        SplitMix64 rng = SplitMix64::stream(seed, 2 * s + 1);
        // The empty prefix S_0 = 0 is tracked on both sides alike.
        double sum = 0.0, mx = 0.0, mn = 0.0;
        for (int i = 0; i < n; ++i) {
            sum += law.sample_step(rng.uniform01());
            mx = std::max(mx, sum);
            mn = std::min(mn, sum);
        }
        bool g = true;
        switch (functional) {
            case Functional::ConstOne: g = true; break;
            case Functional::MaxLe: g = mx <= K; break;
            case Functional::MaxAbsLe: g = mx <= K && mn >= -K; break;
            case Functional::TerminalNonpositive: g = sum <= 0.0; break;
        }
        rhs_samples.push_back(g ? 1.0 : 0.0);
    }
    result.rhs = mean_se(rhs_samples);
    return result;
}

namespace {

// Piecewise evaluator over the working grid, linear in (log t, log phi) with
// a linear head on [0, t_lo] and a last-cell extrapolated tail.
struct PhiEval {
    const std::vector<double>& t;
    const std::vector<double>& lp;
    double log_tlo, dlog;

    double operator()(double u) const {
        if (u <= 0.0) return 0.0;
        if (u <= t[1]) {
            const double phi1 = std::exp(lp[1]);
            return std::log1p((phi1 - 1.0) * (u / t[1]));
        }
        const std::size_t last = t.size() - 1;
        const double pos = (std::log(u) - log_tlo) / dlog;
        if (pos >= static_cast<double>(last - 1)) {
            const double slope = (lp[last] - lp[last - 1]) / dlog;
            return lp[last] + slope * (pos - static_cast<double>(last - 1));
        }
        const auto j = static_cast<std::size_t>(pos);
        const double w = pos - static_cast<double>(j);
        return lp[j + 1] * (1.0 - w) + lp[j + 2] * w;
    }
};

}  // namespace

double PhiTable::log_phi_at(double t) const {
    if (t < 0.0) throw std::invalid_argument("phi argument must be >= 0");
    if (t > t_max()) throw GridUnderflow("phi grid does not cover the requested argument");
    const double log_tlo = std::log(t_grid[1]);
    const double dlog = std::log(t_grid[2]) - log_tlo;
    return PhiEval{t_grid, log_phi, log_tlo, dlog}(t);
}

double PhiTable::phi_at(double t) const {
    return std::max(std::exp(log_phi_at(t)), std::numeric_limits<double>::denorm_min());
}

PhiTable solve_phi_star(const EnvSpec& spec, double t_max, int grid_size, int max_iters,
                        double tol) {
    if (grid_size < 16) throw std::invalid_argument("phi grid too small");
    if (!(t_max > 1.0)) throw std::invalid_argument("t_max must exceed 1");
    {
        double ea = 0.0;
        for (const auto& [a, p] : spec.marginal()) ea += p * a;
        if (std::fabs(ea - 1.0 / spec.b()) > 1e-9 || std::fabs(psi_prime(spec, 1.0)) > 1e-9)
            throw std::invalid_argument("solve_phi_star needs a critical spec");
    }

    const double t_lo = 1e-9;
    const std::size_t g = static_cast<std::size_t>(grid_size);
    std::vector<double> t(g), lp(g), next(g);
    t[0] = 0.0;
    const double dlog = std::log(t_max / t_lo) / static_cast<double>(g - 2);
    const double log_tlo = std::log(t_lo);
    for (std::size_t j = 1; j < g; ++j) t[j] = std::exp(log_tlo + dlog * static_cast<double>(j - 1));
    t[g - 1] = t_max;
    for (std::size_t j = 0; j < g; ++j) lp[j] = -t[j];  // phi_0 = exp(-t)

    const auto& atoms = spec.atoms();
    const double pin_target = std::log(0.5);

    auto apply_map = [&](const PhiEval& eval, double arg) {
        // log E prod_i phi(arg * A_i), stabilized across atoms.
        double best = kNegInf;
        std::vector<double> terms;
        terms.reserve(atoms.size());
        for (const auto& atom : atoms) {
            double s = std::log(atom.prob);
            for (double a : atom.values) s += eval(arg * a);
            terms.push_back(s);
            best = std::max(best, s);
        }
        double acc = 0.0;
        for (double s : terms) acc += std::exp(s - best);
        return best + std::log(acc);
    };

    auto pin_scale = [&](const PhiEval& eval) {
        // c with log phi(c) = pin_target; phi decreases in t.
        double lo = 0.0, hi = t_max;
        if (eval(hi) > pin_target) return 1.0;  // cannot pin; leave unscaled
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (eval(mid) > pin_target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };

    bool converged = false;
    for (int iter = 0; iter < max_iters; ++iter) {
        const PhiEval eval{t, lp, log_tlo, dlog};
        next[0] = 0.0;
        for (std::size_t j = 1; j < g; ++j) next[j] = apply_map(eval, t[j]);
        const PhiEval eval_next{t, next, log_tlo, dlog};
        const double c = pin_scale(eval_next);
        double delta = 0.0;
        for (std::size_t j = 1; j < g; ++j) {
            const double v = eval_next(c * t[j]);
            delta = std::max(delta, std::fabs(std::exp(v) - std::exp(lp[j])));
            lp[j] = v;
        }
        if (delta < tol) {
            converged = true;
            break;
        }
    }
    if (!converged) throw NonConvergence("phi solver did not reach the requested tolerance");

    {
        // Normalize the scale freedom phi -> phi(alpha t) so the small-t
        // growth matches t log(1/t) with unit coefficient.
        const PhiEval eval{t, lp, log_tlo, dlog};
        const double t_ref = 1e-3;
        const double target = t_ref * std::log(1.0 / t_ref);
        auto deficit = [&](double alpha) { return -eval(alpha * t_ref) - target; };
        double lo = 1e-6, hi = 1e6;
        if (deficit(lo) < 0.0 && deficit(hi) > 0.0) {
            for (int i = 0; i < 200; ++i) {
                const double mid = std::sqrt(lo * hi);
                (deficit(mid) < 0.0 ? lo : hi) = mid;
            }
            const double alpha = std::sqrt(lo * hi);
            for (std::size_t j = 1; j < g; ++j) next[j] = eval(alpha * t[j]);
            std::swap(lp, next);
            lp[0] = 0.0;
        }
    }

    PhiTable table;
    table.t_grid = std::move(t);
    table.log_phi = std::move(lp);
    table.phi.resize(g);
    for (std::size_t j = 0; j < g; ++j)
        table.phi[j] = std::max(std::exp(table.log_phi[j]),
                                std::numeric_limits<double>::denorm_min());
    table.spec_hash = spec.hash_hex();

    double trivial_gap = 0.0;
    for (double v : table.phi) trivial_gap = std::max(trivial_gap, 1.0 - v);
    if (trivial_gap < 10.0 * tol)
        throw TrivialFixedPoint("phi solver collapsed to the trivial fixed point 1");

    const PhiEval eval{table.t_grid, table.log_phi, log_tlo, dlog};
    double residual = 0.0;
    for (std::size_t j = 1; j < g; ++j) {
        const double mapped = apply_map(eval, table.t_grid[j]);
        residual = std::max(residual, std::fabs(std::exp(mapped) - table.phi[j]));
    }
    table.residual = residual;
    return table;
}

double log_multiplicative_martingale(const EnvSpec& spec, std::uint64_t seed, int n,
                                     const PhiTable& phi, std::uint64_t leaf_budget) {
    if (n < 1) throw std::invalid_argument("multiplicative_martingale needs n >= 1");
    if (!power_fits(spec.b(), n, leaf_budget))
        throw BudgetExceeded("multiplicative_martingale: b^n exceeds the leaf budget");
    const int b = spec.b();
    DfsPath dfs(spec, seed, n);
    std::vector<double> prod(static_cast<std::size_t>(n) + 1, 1.0);
    long double sum = 0.0L;
    int d = 0;
    while (true) {
        if (dfs.next[static_cast<std::size_t>(d)] == b) {
            if (d == 0) break;
            --d;
            continue;
        }
        const int digit = dfs.next[static_cast<std::size_t>(d)]++;
        const double p = prod[static_cast<std::size_t>(d)] * (*dfs.child_a[static_cast<std::size_t>(d)])[static_cast<std::size_t>(digit)];
        if (d + 1 == n) {
            sum += phi.log_phi_at(p);
            continue;
        }
        dfs.descend(d, digit);
        ++d;
        prod[static_cast<std::size_t>(d)] = p;
    }
    return static_cast<double>(sum);
}

double multiplicative_martingale(const EnvSpec& spec, std::uint64_t seed, int n,
                                 const PhiTable& phi, std::uint64_t leaf_budget) {
    return std::exp(log_multiplicative_martingale(spec, seed, n, phi, leaf_budget));
}

double mn_lower_tail(const EnvSpec& spec, int n, double chi, std::uint64_t samples,
                     std::uint64_t seed) {
    if (!(chi > 0.5)) throw std::invalid_argument("mn_lower_tail needs chi > 1/2");
    if (samples == 0) throw std::invalid_argument("mn_lower_tail needs samples > 0");
    const double threshold = std::pow(static_cast<double>(n), -chi);
    std::uint64_t hits = 0;
    for (std::uint64_t s = 0; s < samples; ++s) {
        const std::uint64_t env_seed = SplitMix64::stream(seed, s).next();
        if (additive_martingale(spec, env_seed, n) < threshold) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(samples);
}

double min_leaf_potential(const EnvSpec& spec, std::uint64_t seed, int n,
                          std::uint64_t prune_budget) {
    if (n < 1) throw std::invalid_argument("min_leaf_potential needs n >= 1");
    const int b = spec.b();
    const double min_step = -std::log(spec.a_max());

    DfsPath dfs(spec, seed, n);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<std::vector<int>> order(static_cast<std::size_t>(n) + 1);
    auto sort_children = [&](int d) {
        auto& ord = order[static_cast<std::size_t>(d)];
        ord.resize(static_cast<std::size_t>(b));
        const auto& a = *dfs.child_a[static_cast<std::size_t>(d)];
        for (int i = 0; i < b; ++i) ord[static_cast<std::size_t>(i)] = i;
        std::sort(ord.begin(), ord.end(), [&](int x, int y) { return a[static_cast<std::size_t>(x)] > a[static_cast<std::size_t>(y)]; });
    };

    double best = std::numeric_limits<double>::infinity();
    std::uint64_t visited = 0;
    sort_children(0);
    int d = 0;
    while (true) {
        if (dfs.next[static_cast<std::size_t>(d)] == b) {
            if (d == 0) break;
            --d;
            continue;
        }
        const int digit = order[static_cast<std::size_t>(d)][static_cast<std::size_t>(dfs.next[static_cast<std::size_t>(d)]++)];
        const double a = (*dfs.child_a[static_cast<std::size_t>(d)])[static_cast<std::size_t>(digit)];
        const double vc = v[static_cast<std::size_t>(d)] - std::log(a);
        const double remaining = static_cast<double>(n - d - 1);
        if (vc + remaining * min_step >= best) continue;
        if (++visited > prune_budget)
            throw BudgetExceeded("min_leaf_potential: prune budget exhausted");
        if (d + 1 == n) {
            best = std::min(best, vc);
            continue;
        }
        dfs.descend(d, digit);
        ++d;
        v[static_cast<std::size_t>(d)] = vc;
        sort_children(d);
    }
    return best;
}

}  // namespace rwre::brw
