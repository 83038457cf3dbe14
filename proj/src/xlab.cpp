#include "rwre/xlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rwre/errors.hpp"
#include "rwre/oracle.hpp"
#include "rwre/parallel.hpp"
#include "rwre/quenched.hpp"

namespace rwre::xlab {

namespace {

std::string metadata_line(const ExperimentConfig& cfg, const EnvSpec& spec) {
    std::ostringstream os;
    os << "# version=" << kToolVersion << " spec=" << spec.hash_hex() << " seed=" << cfg.seed
       << " seeds=" << cfg.num_seeds << " excursions=" << cfg.excursions
       << " budget_nodes=" << cfg.budget_nodes << " budget_steps=" << cfg.budget_steps
       << " budget_values=" << cfg.budget_values;
    return os.str();
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

bool recursion_fits(const EnvSpec& spec, int n, std::uint64_t value_budget) {
    std::uint64_t total = 0, level = 1;
    for (int d = 1; d <= n; ++d) {
        if (level > value_budget / static_cast<std::uint64_t>(spec.b())) return false;
        level *= static_cast<std::uint64_t>(spec.b());
        total += level;
        if (total > value_budget) return false;
    }
    return true;
}

std::ofstream open_out(const std::string& dir, const std::string& name, std::string& path_out) {
    std::filesystem::create_directories(dir);
    path_out = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path_out);
    if (!out) throw std::runtime_error("cannot open output file: " + path_out);
    out.precision(17);
    return out;
}

}  // namespace

const char* to_string(Transform t) {
    switch (t) {
        case Transform::LogNegLogVsLog: return "log_neglog_vs_log";
        case Transform::LogVsLog: return "log_vs_log";
        case Transform::RatioBand: return "ratio_band";
    }
    return "?";
}

FitResult fit_exponent(const std::vector<std::pair<double, double>>& series,
                       Transform transform) {
    if (series.size() < 3) throw std::invalid_argument("fit_exponent needs >= 3 points");
    std::vector<double> xs, ys;
    xs.reserve(series.size());
    ys.reserve(series.size());
    FitResult fit;
    fit.transform = transform;
    fit.points_used = static_cast<int>(series.size());

    if (transform == Transform::RatioBand) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& [n, v] : series) {
            if (!(v > 0.0) || !(n > 1.0))
                throw std::invalid_argument("ratio band needs positive values and n > 1");
            const double r = v / std::pow(std::log(n), 3);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        fit.slope = hi / lo;
        fit.intercept = lo;
        fit.r_squared = 0.0;
        return fit;
    }

    for (const auto& [n, v] : series) {
        if (!(v > 0.0)) throw std::invalid_argument("fit_exponent needs positive values");
        if (transform == Transform::LogNegLogVsLog && !(v < 1.0))
            throw std::invalid_argument("log(-log v) needs v < 1");
        xs.push_back(std::log(n));
        ys.push_back(transform == Transform::LogNegLogVsLog ? std::log(-std::log(v))
                                                            : std::log(v));
    }
    const LineFit line = least_squares(xs, ys);
    fit.slope = line.slope;
    fit.intercept = line.intercept;
    fit.r_squared = line.r_squared;
    return fit;
}

RhoScan run_rho_scan(const ExperimentConfig& cfg) {
    if (cfg.schedule.empty()) throw std::invalid_argument("rho scan needs a depth schedule");
    const EnvSpec spec = cfg.make_env();
    RhoScan scan;
    scan.rows.resize(cfg.schedule.size() * cfg.num_seeds);

    std::vector<std::pair<int, std::uint64_t>> cells;
    cells.reserve(scan.rows.size());
    for (int n : cfg.schedule)
        for (std::uint64_t s = 0; s < cfg.num_seeds; ++s) cells.emplace_back(n, cfg.seed + s);

    parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
        const auto [n, seed] = cells[i];
        RhoScanRow row;
        row.seed = seed;
        row.n = n;
        if (recursion_fits(spec, n, cfg.budget_values)) {
            quenched::TruncatedEnv env(spec, seed, n, cfg.budget_values);
            const auto beta = quenched::beta_recursion(env);
            row.rho = quenched::rho(env, beta);
            const auto gamma = quenched::gamma_recursion(env, beta);
            row.gamma_root = gamma.gamma_root;
            row.expected_tau = gamma.gamma_root / row.rho;
            row.prop24 = quenched::prop24_bound(env).max_path_hit;
            row.exact = true;
        } else {
            const auto est = walker::estimate_rho_mc(spec, seed, n, cfg.excursions,
                                                     cfg.seed ^ 0xA5A5A5A5ULL, cfg.budget_steps);
            row.rho = est.value;
        }
        row.log_rho = row.rho > 0.0 ? std::log(row.rho) : -std::numeric_limits<double>::infinity();
        scan.rows[i] = row;
    });

    auto out = open_out(cfg.out_dir, "rho_scan.csv", scan.csv_path);
    out << metadata_line(cfg, spec) << '\n';
    out << "seed,n,rho,log_rho,gamma_root,expected_tau,prop24_bound\n";
    for (const auto& row : scan.rows) {
        out << row.seed << ',' << row.n << ',' << row.rho << ',' << row.log_rho << ',';
        if (row.gamma_root) out << *row.gamma_root;
        out << ',';
        if (row.expected_tau) out << *row.expected_tau;
        out << ',';
        if (row.prop24) out << *row.prop24;
        out << '\n';
    }

    std::map<int, std::vector<double>> by_n;
    for (const auto& row : scan.rows) by_n[row.n].push_back(row.rho);
    std::vector<std::pair<double, double>> med_series, mean_series;
    for (const auto& [n, values] : by_n) {
        const double med = median(values);
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        if (med > 0.0 && med < 1.0) med_series.emplace_back(n, med);
        if (mean > 0.0 && mean < 1.0) mean_series.emplace_back(n, mean);
    }
    if (med_series.size() >= 3)
        scan.quenched_fit = fit_exponent(med_series, Transform::LogNegLogVsLog);
    if (mean_series.size() >= 3)
        scan.annealed_fit = fit_exponent(mean_series, Transform::LogNegLogVsLog);
    return scan;
}

BarrierScan run_barrier_scan(const ExperimentConfig& cfg) {
    if (cfg.schedule.empty()) throw std::invalid_argument("barrier scan needs a depth schedule");
    const EnvSpec spec = cfg.make_env();
    BarrierScan scan;

    std::vector<std::pair<int, std::uint64_t>> cells;
    for (int n : cfg.schedule)
        for (std::uint64_t s = 0; s < cfg.num_seeds; ++s) cells.emplace_back(n, cfg.seed + s);
    scan.rows.resize(cells.size());

    parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
        const auto [n, seed] = cells[i];
        BarrierScanRow row;
        row.seed = seed;
        row.n = n;
        try {
            const auto result = brw::barrier_min(spec, seed, n, cfg.budget_nodes);
            row.barrier = result.value;
            row.witness = result.witness.to_string();
            row.visited = result.visited;
        } catch (const BudgetExceeded&) {
            row.budget_exceeded = true;
        }
        scan.rows[i] = row;
    });

    auto out = open_out(cfg.out_dir, "barrier_scan.csv", scan.csv_path);
    out << metadata_line(cfg, spec) << '\n';
    out << "seed,n,barrier_min,witness,visited_nodes\n";
    for (const auto& row : scan.rows) {
        out << row.seed << ',' << row.n << ',';
        if (!row.budget_exceeded)
            out << row.barrier << ',' << row.witness << ',' << row.visited << '\n';
        else
            out << ",budget_exceeded," << '\n';
    }

    std::map<int, std::vector<double>> by_n;
    for (const auto& row : scan.rows)
        if (!row.budget_exceeded) by_n[row.n].push_back(row.barrier);
    std::vector<std::pair<double, double>> series;
    for (const auto& [n, values] : by_n) {
        const double med = median(values);
        if (med > 0.0) series.emplace_back(n, med);
    }
    if (series.size() >= 3) scan.fit = fit_exponent(series, Transform::LogVsLog);
    return scan;
}

WalkExperiment run_walk_experiment(const ExperimentConfig& cfg, std::uint64_t t_min) {
    const EnvSpec spec = cfg.make_env();
    WalkExperiment exp;
    exp.records.resize(cfg.replicas);

    std::vector<std::uint64_t> checkpoints;
    for (std::uint64_t t = std::uint64_t{1} << 10; t <= cfg.total_steps; t *= 2)
        checkpoints.push_back(t);

    parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
        const std::uint64_t seed_walk = SplitMix64::stream(cfg.seed, r).next();
        exp.records[r] =
            walker::track_xstar(spec, cfg.seed, seed_walk, cfg.total_steps, checkpoints);
    });

    for (const auto& rec : exp.records) {
        ReplicaBand band;
        band.seed_walk = rec.seed_walk;
        band.min_ratio = std::numeric_limits<double>::infinity();
        band.max_ratio = 0.0;
        for (const auto& [t, x] : rec.xstar_checkpoints) {
            if (t < t_min) continue;
            const double ratio = static_cast<double>(x) / std::pow(std::log(static_cast<double>(t)), 3);
            band.min_ratio = std::min(band.min_ratio, ratio);
            band.max_ratio = std::max(band.max_ratio, ratio);
        }
        exp.bands.push_back(band);
    }

    nlohmann::json doc = nlohmann::json::array();
    for (const auto& rec : exp.records) {
        nlohmann::json j;
        j["seed_env"] = rec.seed_env;
        j["seed_walk"] = rec.seed_walk;
        if (rec.tau_n)
            j["tau_n"] = *rec.tau_n;
        else
            j["tau_n"] = nullptr;
        j["returns_to_root"] = rec.returns_to_root;
        j["truncated"] = rec.truncated;
        j["steps"] = rec.steps;
        j["xstar_final"] = rec.xstar_final;
        nlohmann::json cps = nlohmann::json::array();
        for (const auto& [t, x] : rec.xstar_checkpoints) cps.push_back({t, x});
        j["xstar_checkpoints"] = std::move(cps);
        j["spec_hash"] = spec.hash_hex();
        j["budget_steps"] = cfg.budget_steps;
        j["version"] = kToolVersion;
        doc.push_back(std::move(j));
    }
    auto out = open_out(cfg.out_dir, "walk_records.json", exp.json_path);
    out << doc.dump(2) << '\n';
    return exp;
}

bool AcceptanceReport::all_pass() const {
    for (const auto& r : results)
        if (!r.pass) return false;
    return !results.empty();
}

std::string AcceptanceReport::to_json() const {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& r : results) {
        doc.push_back({{"criterion", r.id},
                       {"name", r.name},
                       {"measured", r.measured},
                       {"tolerance", r.tolerance},
                       {"verdict", r.pass ? "pass" : "fail"},
                       {"seconds", r.seconds}});
    }
    return doc.dump(2);
}

}  // namespace rwre::xlab
