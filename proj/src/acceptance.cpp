#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "rwre/brw.hpp"
#include "rwre/oracle.hpp"
#include "rwre/parallel.hpp"
#include "rwre/quenched.hpp"
#include "rwre/stats.hpp"
#include "rwre/walker.hpp"
#include "rwre/xlab.hpp"

namespace rwre::xlab {

namespace {

using Clock = std::chrono::steady_clock;

struct Ctx {
    ExperimentConfig cfg;
    EnvSpec critical2 = make_critical_two_point(2);
    int threads = 0;

    const brw::PhiTable& phi() {
        if (!phi_) phi_ = brw::solve_phi_star(critical2, 65536.0, 8192, 50000, 1e-8);
        return *phi_;
    }

  private:
    std::optional<brw::PhiTable> phi_;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

VertexAddress random_leaf(int b, int n, SplitMix64& rng) {
    VertexAddress leaf;
    leaf.digits.reserve(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d)
        leaf.digits.push_back(static_cast<std::uint8_t>(rng.next() % static_cast<std::uint64_t>(b)));
    return leaf;
}

// ---- criterion 1: recursion vs dense-chain oracle --------------------------

CriterionResult c01(Ctx& ctx) {
    CriterionResult res{1, "oracle-equivalence", "",
                        "rho 1e-10, tau rel 1e-8, path 1e-10, < 120 s single-threaded", false, 0};
    const auto start = Clock::now();
    double max_rho = 0.0, max_tau = 0.0, max_path = 0.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        for (int n = 2; n <= 6; ++n) {
            quenched::TruncatedEnv env(ctx.critical2, seed, n);
            const auto beta = quenched::beta_recursion(env);
            const double rho_rec = quenched::rho(env, beta);

            const auto chain = oracle::build(env, true, true);
            const double rho_or = oracle::hit_probability(chain, chain.root_start, oracle::Target::LevelN);
            max_rho = std::max(max_rho, std::fabs(rho_rec - rho_or));

            const auto chain_tau = oracle::build(env, true, false);
            const double tau_or = oracle::expected_absorption_time(chain_tau, chain_tau.root_start);
            const double tau_rec = quenched::expected_tau(env);
            max_tau = std::max(max_tau, std::fabs(tau_rec - tau_or) / tau_or);

            SplitMix64 rng = SplitMix64::stream(seed, static_cast<std::uint64_t>(n));
            for (int k = 0; k < 5; ++k) {
                const auto leaf = random_leaf(2, n, rng);
                const double ph = quenched::path_hit_prob(env, leaf);
                const auto chain_leaf = oracle::build(env, false, true, leaf);
                const double ph_or =
                    oracle::hit_probability(chain_leaf, chain_leaf.root_start, oracle::Target::Leaf);
                max_path = std::max(max_path, std::fabs(ph - ph_or));
            }
        }
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    res.measured = "rho " + fmt(max_rho) + ", tau " + fmt(max_tau) + ", path " + fmt(max_path) +
                   ", " + fmt(elapsed) + "s";
    res.pass = max_rho < 1e-10 && max_tau < 1e-8 && max_path < 1e-10 && elapsed < 120.0;
    return res;
}

// ---- criterion 2: closed forms on the constant environment -----------------

struct Collapsed {
    double rho = 0.0, gamma_root = 0.0, tau = 0.0;
};

// Gambler's-ruin reduction of the beta/gamma recursions for A = const: every
// vertex of a level carries the same value, so one scalar per level suffices.
Collapsed collapsed_constant_chain(int b, double a, int n) {
    const double ba = static_cast<double>(b) * a;
    double r = 1.0, g = 0.0;
    for (int k = n - 1; k >= 1; --k) {
        const double s = ba * r;
        g = (1.0 + ba + ba * g) / (1.0 + s);
        r = s / (1.0 + s);
    }
    Collapsed out;
    out.rho = r;
    out.gamma_root = 1.0 + (n >= 2 ? g : 0.0);
    if (n == 1) out.gamma_root = 1.0;
    out.tau = out.gamma_root / out.rho;
    return out;
}

CriterionResult c02(Ctx&) {
    CriterionResult res{2, "closed-form-fixtures", "", "1e-9 absolute", false, 0};
    const EnvSpec env_spec = make_constant_env(2, 0.5);
    constexpr int kTreeMax = 18;  // b^n memory bound for the per-vertex recursion
    double err_rho = 0.0, err_tau = 0.0, err_gamma = 0.0;
    for (int n = 1; n <= 50; ++n) {
        double rho_v, gamma_v, tau_v;
        if (n <= kTreeMax) {
            quenched::TruncatedEnv env(env_spec, 1, n);
            const auto beta = quenched::beta_recursion(env);
            rho_v = quenched::rho(env, beta);
            const auto gamma = quenched::gamma_recursion(env, beta);
            gamma_v = gamma.gamma_root;
            tau_v = gamma_v / rho_v;
        } else {
            const auto c = collapsed_constant_chain(2, 0.5, n);
            rho_v = c.rho;
            gamma_v = c.gamma_root;
            tau_v = c.tau;
        }
        const double nd = static_cast<double>(n);
        err_rho = std::max(err_rho, std::fabs(rho_v - 1.0 / nd));
        err_gamma = std::max(err_gamma, std::fabs(gamma_v - nd));
        err_tau = std::max(err_tau, std::fabs(tau_v - nd * nd));
    }
    res.measured =
        "rho " + fmt(err_rho) + ", gamma " + fmt(err_gamma) + ", tau " + fmt(err_tau);
    res.pass = err_rho < 1e-9 && err_gamma < 1e-9 && err_tau < 1e-9;
    return res;
}

// ---- criterion 3: the escape probability dominates every path bound --------

CriterionResult c03(Ctx& ctx) {
    CriterionResult res{3, "prop24-inequality", "", "zero violations", false, 0};
    double min_slack = std::numeric_limits<double>::infinity();
    std::uint64_t cases = 0;
    auto check = [&](std::uint64_t seed, int n) {
        quenched::TruncatedEnv env(ctx.critical2, seed, n);
        const auto beta = quenched::beta_recursion(env);
        const double r = quenched::rho(env, beta);
        const auto bound = quenched::prop24_bound(env);
        min_slack = std::min(min_slack, r - bound.max_path_hit);
        min_slack = std::min(min_slack, r - bound.corollary);
        ++cases;
    };
    for (std::uint64_t seed = 1; seed <= 50; ++seed)
        for (int n = 2; n <= 6; ++n) check(seed, n);
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
        for (int n = 7; n <= 14; ++n) check(seed, n);
    res.measured = "min slack " + fmt(min_slack) + " over " + std::to_string(cases) + " cases";
    res.pass = min_slack >= 0.0;
    return res;
}

// ---- criterion 4: martingale means ------------------------------------------

CriterionResult c04(Ctx& ctx) {
    CriterionResult res{4, "martingale-checks", "",
                        "one-step 1e-12; |mean-1| <= 3se; |mean-phi(1)| <= 3se", false, 0};
    double max_onestep = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto check = brw::one_step_martingale_check(ctx.critical2, seed, 6);
        max_onestep = std::max(max_onestep, std::fabs(check.conditional_mean_next - check.m_n));
    }

    std::vector<double> m10(10000);
    parallel_for(m10.size(), ctx.threads, [&](std::size_t i) {
        m10[i] = brw::additive_martingale(ctx.critical2, SplitMix64::stream(11, i).next(), 10);
    });
    const Estimate add = mean_se(m10);

    const auto& phi = ctx.phi();
    std::vector<double> m8(1000);
    parallel_for(m8.size(), ctx.threads, [&](std::size_t i) {
        m8[i] = brw::multiplicative_martingale(ctx.critical2, SplitMix64::stream(12, i).next(), 8, phi);
    });
    const Estimate mult = mean_se(m8);
    // E M_n* = phi(1) for every n: the martingale mean is the fixed point at
    // t = 1, not 1 itself (the product over generation 1 already averages to
    // the cascade value).
    const double mult_target = phi.phi_at(1.0);

    res.measured = "one-step " + fmt(max_onestep) + "; M10 " + fmt(add.value) + "+-" +
                   fmt(add.se) + "; M8* " + fmt(mult.value) + "+-" + fmt(mult.se) +
                   " vs phi(1)=" + fmt(mult_target);
    res.pass = max_onestep < 1e-12 && std::fabs(add.value - 1.0) <= 3.0 * add.se &&
               std::fabs(mult.value - mult_target) <= 3.0 * mult.se;
    return res;
}

// ---- criterion 5: many-to-one identity --------------------------------------

CriterionResult c05(Ctx& ctx) {
    CriterionResult res{5, "many-to-one", "", "exact for G=1; 3 combined se; < 300 s", false, 0};
    const auto start = Clock::now();
    const auto unit = brw::many_to_one_check(ctx.critical2, 4, brw::Functional::ConstOne, 0.0, 0, 21);
    const bool unit_ok = unit.lhs.value == 1.0 && unit.rhs.value == 1.0;

    const double K = 10.0 * std::log(2.0 + std::sqrt(3.0));
    const auto maxabs =
        brw::many_to_one_check(ctx.critical2, 6, brw::Functional::MaxAbsLe, K, 100000, 22);
    const double gap1 = std::fabs(maxabs.lhs.value - maxabs.rhs.value);
    const double se1 = std::sqrt(maxabs.lhs.se * maxabs.lhs.se + maxabs.rhs.se * maxabs.rhs.se);

    const auto term =
        brw::many_to_one_check(ctx.critical2, 4, brw::Functional::TerminalNonpositive, 0.0, 100000, 23);
    const double gap2 = std::fabs(term.lhs.value - term.rhs.value);
    const double se2 = std::sqrt(term.lhs.se * term.lhs.se + term.rhs.se * term.rhs.se);

    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    res.measured = "G=1 exact " + std::string(unit_ok ? "yes" : "no") + "; maxabs gap " +
                   fmt(gap1) + " vs 3se " + fmt(3.0 * se1) + "; terminal gap " + fmt(gap2) +
                   " vs 3se " + fmt(3.0 * se2);
    res.pass = unit_ok && gap1 <= 3.0 * se1 && gap2 <= 3.0 * se2 && elapsed < 300.0;
    return res;
}

// ---- criterion 6: spine law normalization and centering ---------------------

CriterionResult c06(Ctx&) {
    CriterionResult res{6, "spine-law", "", "sum and mean within 1e-12", false, 0};
    double worst_sum = 0.0, worst_mean = 0.0;
    for (int b = 2; b <= 4; ++b) {
        const auto law = brw::spine_step_distribution(make_critical_two_point(b));
        worst_sum = std::max(worst_sum, std::fabs(law.total_prob() - 1.0));
        worst_mean = std::max(worst_mean, std::fabs(law.mean()));
    }
    res.measured = "sum " + fmt(worst_sum) + ", mean " + fmt(worst_mean);
    res.pass = worst_sum < 1e-12 && worst_mean < 1e-12;
    return res;
}

// ---- criterion 7: cascade fixed point ---------------------------------------

CriterionResult c07(Ctx& ctx) {
    CriterionResult res{7, "phi-star-solver", "",
                        "residual 1e-6; strict monotone; doubling 1e-5; band [0.5,2]", false, 0};
    const auto& phi = ctx.phi();
    const bool head_ok = phi.phi[0] == 1.0;
    bool monotone = phi.log_phi[1] < 0.0;
    for (std::size_t j = 2; j < phi.log_phi.size() && monotone; ++j)
        monotone = phi.log_phi[j] < phi.log_phi[j - 1];

    const auto fine = brw::solve_phi_star(ctx.critical2, 65536.0, 16384, 50000, 1e-8);
    double doubling = 0.0;
    for (std::size_t j = 1; j < phi.t_grid.size(); ++j)
        doubling = std::max(doubling, std::fabs(phi.phi[j] - fine.phi_at(phi.t_grid[j])));

    double band_lo = std::numeric_limits<double>::infinity(), band_hi = 0.0;
    for (int k = 0; k <= 8; ++k) {
        const double t = 1e-4 * std::pow(100.0, k / 8.0);
        const double ratio = -phi.log_phi_at(t) / (t * std::log(1.0 / t));
        band_lo = std::min(band_lo, ratio);
        band_hi = std::max(band_hi, ratio);
    }

    res.measured = "residual " + fmt(phi.residual) + "; doubling " + fmt(doubling) + "; band [" +
                   fmt(band_lo) + "," + fmt(band_hi) + "]";
    res.pass = phi.residual < 1e-6 && head_ok && monotone && doubling < 1e-5 && band_lo >= 0.5 &&
               band_hi <= 2.0;
    return res;
}

// ---- criterion 8: excursion-count law ---------------------------------------

CriterionResult c08(Ctx& ctx) {
    CriterionResult res{8, "excursion-law-ks", "", "KS below the 1% critical value", false, 0};
    const std::uint64_t seed_env = 7;
    const int n = 8;
    quenched::TruncatedEnv env(ctx.critical2, seed_env, n);
    const double rho_exact = quenched::rho(env, quenched::beta_recursion(env));

    constexpr std::size_t kSamples = 10000;
    std::vector<std::uint64_t> counts(kSamples);
    parallel_for(kSamples, ctx.threads, [&](std::size_t i) {
        const auto rec = walker::first_passage(ctx.critical2, seed_env,
                                               SplitMix64::stream(31, i).next(), n,
                                               std::uint64_t{1} << 32);
        counts[i] = rec.returns_to_root;
    });
    const double d = ks_distance_geometric(counts, rho_exact);
    const double crit = ks_critical_value(0.01, kSamples);
    res.measured = "KS " + fmt(d) + " (rho " + fmt(rho_exact) + ")";
    res.tolerance = "KS < " + fmt(crit);
    res.pass = d < crit;
    return res;
}

// ---- criterion 9: escape probability trend -----------------------------------

CriterionResult c09(Ctx& ctx) {
    CriterionResult res{9, "rho-trend", "",
                        "slope in [0.2,0.55]; exact series monotone; < 1800 s", false, 0};
    const auto start = Clock::now();
    const std::uint64_t seed_env = 1;

    bool monotone = true;
    double prev = 2.0;
    for (int n = 1; n <= 14; ++n) {
        quenched::TruncatedEnv env(ctx.critical2, seed_env, n);
        const double r = quenched::rho(env, quenched::beta_recursion(env));
        if (r >= prev) monotone = false;
        prev = r;
    }

    std::vector<std::pair<double, double>> series;
    {
        quenched::TruncatedEnv env(ctx.critical2, seed_env, 8);
        series.emplace_back(8.0, quenched::rho(env, quenched::beta_recursion(env)));
    }
    for (int n = 16; n <= 512; n *= 2) {
        const std::uint64_t excursions = n == 512 ? 4000000 : 1000000;
        const auto est = walker::estimate_rho_mc(ctx.critical2, seed_env, n, excursions,
                                                 41 + static_cast<std::uint64_t>(n),
                                                 std::uint64_t{1} << 32, ctx.threads);
        series.emplace_back(n, est.value);
    }
    const auto fit = fit_exponent(series, Transform::LogNegLogVsLog);
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    res.measured = "slope " + fmt(fit.slope) + ", monotone " + (monotone ? "yes" : "no") +
                   ", rho512 " + fmt(series.back().second) + ", " + fmt(elapsed) + "s";
    res.pass = monotone && fit.slope >= 0.2 && fit.slope <= 0.55 && elapsed < 1800.0;
    return res;
}

// ---- criterion 10: barrier trend ----------------------------------------------

CriterionResult c10(Ctx& ctx) {
    CriterionResult res{10, "barrier-trend", "", "critical slope in [0.25,0.45]; constant > 0.9",
                        false, 0};
    const std::vector<int> depths{64, 128, 256, 512};

    auto scan_slope = [&](const EnvSpec& spec) {
        std::vector<std::pair<int, std::uint64_t>> cells;
        for (int n : depths)
            for (std::uint64_t seed = 1; seed <= 20; ++seed) cells.emplace_back(n, seed);
        std::vector<double> values(cells.size());
        parallel_for(cells.size(), ctx.threads, [&](std::size_t i) {
            values[i] = brw::barrier_min(spec, cells[i].second, cells[i].first,
                                         std::uint64_t{1} << 31)
                            .value;
        });
        std::map<int, std::vector<double>> by_n;
        for (std::size_t i = 0; i < cells.size(); ++i) by_n[cells[i].first].push_back(values[i]);
        std::vector<std::pair<double, double>> series;
        for (auto& [n, vs] : by_n) {
            std::sort(vs.begin(), vs.end());
            series.emplace_back(n, 0.5 * (vs[9] + vs[10]));
        }
        return fit_exponent(series, Transform::LogVsLog).slope;
    };

    const double crit_slope = scan_slope(ctx.critical2);
    const double flat_slope = scan_slope(make_constant_env(2, 0.5));
    res.measured = "critical " + fmt(crit_slope) + ", constant " + fmt(flat_slope);
    res.pass = crit_slope >= 0.25 && crit_slope <= 0.45 && flat_slope > 0.9;
    return res;
}

// ---- criterion 11: slow-movement band ----------------------------------------

CriterionResult c11(Ctx& ctx) {
    CriterionResult res{11, "xstar-band", "", "per-replica max/min < 8 for both envs; < 1200 s",
                        false, 0};
    const auto start = Clock::now();
    const EnvSpec tilted = make_two_point_env(2, 8.0, 0.125, (2.0 - std::sqrt(3.0)) / 4.0);

    auto worst_band = [&](const EnvSpec& spec, std::uint64_t env_seed) {
        constexpr std::uint64_t kSteps = 10000000;
        std::vector<std::uint64_t> checkpoints;
        for (std::uint64_t t = std::uint64_t{1} << 10; t <= kSteps; t *= 2) checkpoints.push_back(t);
        std::vector<double> ratios(8, 0.0);
        parallel_for(8, ctx.threads, [&](std::size_t r) {
            const auto rec = walker::track_xstar(spec, env_seed, SplitMix64::stream(55, r).next(),
                                                 kSteps, checkpoints);
            double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
            for (const auto& [t, x] : rec.xstar_checkpoints) {
                if (t < 10000) continue;
                const double ratio =
                    static_cast<double>(x) / std::pow(std::log(static_cast<double>(t)), 3);
                lo = std::min(lo, ratio);
                hi = std::max(hi, ratio);
            }
            ratios[r] = hi / lo;
        });
        double worst = 0.0;
        for (double r : ratios) worst = std::max(worst, r);
        return worst;
    };

    const double critical_band = worst_band(ctx.critical2, 3);
    const double tilted_band = worst_band(tilted, 3);
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    res.measured = "critical " + fmt(critical_band) + ", psi'(1)>0 env " + fmt(tilted_band);
    res.pass = critical_band < 8.0 && tilted_band < 8.0 && elapsed < 1200.0;
    return res;
}

// ---- criterion 12: reversibility bound ----------------------------------------

CriterionResult c12(Ctx& ctx) {
    CriterionResult res{12, "reversibility-bound", "", "lhs <= rhs always; balance 1e-12", false, 0};
    double min_slack = std::numeric_limits<double>::infinity();
    double worst_balance = 0.0;
    const int n = 8;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        quenched::TruncatedEnv env(ctx.critical2, seed, n);
        SplitMix64 rng = SplitMix64::stream(61, seed);
        const auto leaf = random_leaf(2, n, rng);
        const auto chain = walker::restricted_chain(env, leaf);
        worst_balance = std::max(worst_balance, walker::detailed_balance_error(chain));
        for (std::uint64_t m : {std::uint64_t{8}, std::uint64_t{64}, std::uint64_t{512}}) {
            const auto bound = walker::path_passage_bound_check(chain, env, leaf, m);
            min_slack = std::min(min_slack, bound.rhs - bound.lhs);
        }
    }
    res.measured = "min slack " + fmt(min_slack) + ", balance " + fmt(worst_balance);
    res.pass = min_slack >= 0.0 && worst_balance < 1e-12;
    return res;
}

// ---- criterion 13: Laplace-transform comparison --------------------------------

CriterionResult c13(Ctx& ctx) {
    CriterionResult res{13, "laplace-comparison", "", "lhs <= rhs + 3 combined se", false, 0};
    bool ok = true;
    std::ostringstream detail;
    for (int k : {4, 6}) {
        std::vector<double> beta_samples(10000), m_samples(10000);
        parallel_for(beta_samples.size(), ctx.threads, [&](std::size_t i) {
            quenched::TruncatedEnv env(ctx.critical2, SplitMix64::stream(71, i).next(), k);
            beta_samples[i] = quenched::beta_root(env, quenched::beta_recursion(env));
        });
        parallel_for(m_samples.size(), ctx.threads, [&](std::size_t i) {
            m_samples[i] =
                brw::additive_martingale(ctx.critical2, SplitMix64::stream(72, i).next(), k);
        });
        const double beta_mean = mean_se(beta_samples).value;
        for (double t : {0.5, 1.0, 2.0}) {
            std::vector<double> lhs_exp(beta_samples.size()), rhs_exp(m_samples.size());
            for (std::size_t i = 0; i < beta_samples.size(); ++i)
                lhs_exp[i] = std::exp(-t * beta_samples[i] / beta_mean);
            for (std::size_t i = 0; i < m_samples.size(); ++i)
                rhs_exp[i] = std::exp(-t * m_samples[i]);
            const Estimate lhs = mean_se(lhs_exp), rhs = mean_se(rhs_exp);
            const double margin = 3.0 * std::sqrt(lhs.se * lhs.se + rhs.se * rhs.se);
            if (lhs.value > rhs.value + margin) ok = false;
            detail << " k" << k << " t" << t << ": " << fmt(rhs.value - lhs.value);
        }
    }
    res.measured = "rhs-lhs margins" + detail.str();
    res.pass = ok;
    return res;
}

// ---- criterion 14: additive-martingale lower tail --------------------------------

CriterionResult c14(Ctx& ctx) {
    CriterionResult res{14, "mn-lower-tail", "", "non-increasing; freq(16) < 0.05", false, 0};
    std::vector<double> freqs;
    for (int n : {4, 8, 16})
        freqs.push_back(brw::mn_lower_tail(ctx.critical2, n, 0.6, 1000, 81));
    const bool non_increasing = freqs[0] >= freqs[1] && freqs[1] >= freqs[2];
    res.measured =
        "freqs " + fmt(freqs[0]) + ", " + fmt(freqs[1]) + ", " + fmt(freqs[2]);
    res.pass = non_increasing && freqs[2] < 0.05;
    return res;
}

}  // namespace

AcceptanceReport run_acceptance(const ExperimentConfig& cfg, const std::vector<int>& criteria,
                                std::ostream& log) {
    Ctx ctx;
    ctx.cfg = cfg;
    ctx.threads = cfg.threads;

    const std::map<int, std::function<CriterionResult(Ctx&)>> table{
        {1, c01}, {2, c02}, {3, c03}, {4, c04}, {5, c05}, {6, c06}, {7, c07},
        {8, c08}, {9, c09}, {10, c10}, {11, c11}, {12, c12}, {13, c13}, {14, c14},
    };

    std::vector<int> selected = criteria;
    if (selected.empty())
        for (const auto& [id, fn] : table) selected.push_back(id);

    AcceptanceReport report;
    for (int id : selected) {
        const auto it = table.find(id);
        if (it == table.end()) throw std::invalid_argument("unknown criterion id");
        const auto start = Clock::now();
        CriterionResult result = it->second(ctx);
        result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        log << (result.pass ? "[PASS] " : "[FAIL] ") << "criterion " << result.id << " "
            << result.name << ": " << result.measured << " (tolerance: " << result.tolerance
            << ", " << fmt(result.seconds) << "s)\n";
        log.flush();
        report.results.push_back(std::move(result));
    }
    return report;
}

}  // namespace rwre::xlab
