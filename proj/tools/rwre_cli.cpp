#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rwre/brw.hpp"
#include "rwre/config.hpp"
#include "rwre/oracle.hpp"
#include "rwre/quenched.hpp"
#include "rwre/walker.hpp"
#include "rwre/xlab.hpp"

namespace {

using namespace rwre;

ExperimentConfig load_config(const std::string& config_path) {
    if (config_path.empty()) return ExperimentConfig{};
    return config_from_file(config_path);
}

void apply_common(ExperimentConfig& cfg, std::uint64_t seed, const std::string& out, int threads,
                  std::uint64_t budget_nodes, std::uint64_t budget_steps) {
    if (seed != 0) cfg.seed = seed;
    if (!out.empty()) cfg.out_dir = out;
    if (threads != -1) cfg.threads = threads;
    if (budget_nodes != 0) cfg.budget_nodes = budget_nodes;
    if (budget_steps != 0) cfg.budget_steps = budget_steps;
}

void print_fit(const char* label, const std::optional<xlab::FitResult>& fit) {
    if (!fit) {
        std::cout << label << ": not enough points\n";
        return;
    }
    std::cout << label << ": slope " << fit->slope << " intercept " << fit->intercept << " r2 "
              << fit->r_squared << " points " << fit->points_used << " (" << to_string(fit->transform)
              << ")\n";
}

int cmd_classify(const ExperimentConfig& cfg) {
    const EnvSpec spec = cfg.make_env();
    const Regime regime = classify_regime(spec);
    nlohmann::json j;
    j["spec_hash"] = spec.hash_hex();
    j["b"] = spec.b();
    j["regime"] = to_string(regime.tag);
    j["p"] = regime.p;
    j["psi_prime_1"] = regime.psi_prime_1;
    if (regime.theta) j["theta"] = *regime.theta;
    if (regime.kappa) j["kappa"] = *regime.kappa;
    j["epsilon0"] = epsilon0(spec);
    j["degenerate"] = spec.is_degenerate();
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_rho_scan(ExperimentConfig cfg) {
    if (cfg.schedule.empty()) cfg.schedule = {2, 4, 6, 8, 10, 12};
    auto scan = xlab::run_rho_scan(cfg);
    std::cout << "wrote " << scan.csv_path << " (" << scan.rows.size() << " rows)\n";
    print_fit("quenched fit", scan.quenched_fit);
    print_fit("annealed fit", scan.annealed_fit);
    return 0;
}

int cmd_barrier_scan(ExperimentConfig cfg) {
    if (cfg.schedule.empty()) cfg.schedule = {16, 32, 64, 128};
    auto scan = xlab::run_barrier_scan(cfg);
    std::cout << "wrote " << scan.csv_path << " (" << scan.rows.size() << " rows)\n";
    print_fit("barrier fit", scan.fit);
    return 0;
}

int cmd_walk(const ExperimentConfig& cfg) {
    const EnvSpec spec = cfg.make_env();
    const int n = cfg.schedule.empty() ? 8 : cfg.schedule.back();
    nlohmann::json doc = nlohmann::json::array();
    for (std::uint64_t r = 0; r < cfg.replicas; ++r) {
        const auto rec = walker::first_passage(spec, cfg.seed, SplitMix64::stream(cfg.seed, r).next(),
                                               n, cfg.budget_steps);
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
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = std::filesystem::path(cfg.out_dir) / "walk_records.json";
    std::ofstream out(path);
    out << doc.dump(2) << '\n';
    std::cout << "wrote " << path.string() << " (" << cfg.replicas << " replicas, n=" << n << ")\n";
    return 0;
}

int cmd_xstar(const ExperimentConfig& cfg) {
    auto exp = xlab::run_walk_experiment(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    for (std::size_t r = 0; r < exp.records.size(); ++r) {
        const auto path =
            std::filesystem::path(cfg.out_dir) / ("xstar_" + std::to_string(r) + ".csv");
        std::ofstream out(path);
        out.precision(17);
        out << "# version=" << kToolVersion << " seed_env=" << cfg.seed
            << " seed_walk=" << exp.records[r].seed_walk << '\n';
        out << "t,xstar,ratio_logcube\n";
        for (const auto& [t, x] : exp.records[r].xstar_checkpoints) {
            const double lt = std::log(static_cast<double>(t));
            out << t << ',' << x << ',' << static_cast<double>(x) / (lt * lt * lt) << '\n';
        }
    }
    std::cout << "wrote " << exp.records.size() << " xstar csv files and " << exp.json_path << '\n';
    for (const auto& band : exp.bands)
        std::cout << "replica seed " << band.seed_walk << ": ratio band [" << band.min_ratio
                  << ", " << band.max_ratio << "]\n";
    return 0;
}

int cmd_oracle_check(const ExperimentConfig& cfg) {
    const EnvSpec spec = cfg.make_env();
    const int n_max = cfg.schedule.empty() ? 6 : cfg.schedule.back();
    double max_rho = 0.0, max_tau = 0.0;
    for (std::uint64_t s = 0; s < cfg.num_seeds; ++s) {
        for (int n = 2; n <= n_max; ++n) {
            quenched::TruncatedEnv env(spec, cfg.seed + s, n, cfg.budget_values);
            const auto beta = quenched::beta_recursion(env);
            const double rec = quenched::rho(env, beta);
            const auto chain = oracle::build(env, true, true);
            const double ora =
                oracle::hit_probability(chain, chain.root_start, oracle::Target::LevelN);
            max_rho = std::max(max_rho, std::fabs(rec - ora));
            const auto chain_tau = oracle::build(env, true, false);
            const double tau_or =
                oracle::expected_absorption_time(chain_tau, chain_tau.root_start);
            max_tau = std::max(max_tau, std::fabs(quenched::expected_tau(env) - tau_or) / tau_or);
        }
    }
    std::cout << "max |rho_recursion - rho_oracle| = " << max_rho << '\n';
    std::cout << "max relative expected-tau error = " << max_tau << '\n';
    return max_rho < 1e-10 && max_tau < 1e-8 ? 0 : 1;
}

int cmd_phi_star(const ExperimentConfig& cfg) {
    const EnvSpec spec = cfg.make_env();
    const auto table = brw::solve_phi_star(spec, 65536.0, 8192, 50000, 1e-8);
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = std::filesystem::path(cfg.out_dir) / "phi_star.csv";
    std::ofstream out(path);
    out.precision(17);
    out << "# version=" << kToolVersion << " spec=" << table.spec_hash
        << " residual=" << table.residual << '\n';
    out << "t,phi\n";
    for (std::size_t j = 0; j < table.t_grid.size(); ++j)
        out << table.t_grid[j] << ',' << table.phi[j] << '\n';
    std::cout << "wrote " << path.string() << " residual " << table.residual << '\n';
    return 0;
}

int cmd_accept(const ExperimentConfig& cfg, const std::vector<int>& criteria) {
    const auto report = xlab::run_acceptance(cfg, criteria, std::cout);
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = std::filesystem::path(cfg.out_dir) / "accept_report.json";
    std::ofstream out(path);
    out << report.to_json() << '\n';
    std::cout << "wrote " << path.string() << '\n';
    return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"critical RWRE on a regular tree: analytics, recursions, and experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0, budget_nodes = 0, budget_steps = 0;
    int threads = -1;
    app.add_option("--config", config_path, "JSON experiment config");
    app.add_option("--seed", seed, "base environment seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads (0 = hardware)");
    app.add_option("--budget-nodes", budget_nodes, "search node budget");
    app.add_option("--budget-steps", budget_steps, "walk step budget");

    auto* classify = app.add_subcommand("classify", "regime analytics for the environment");
    auto* rho_scan = app.add_subcommand("rho-scan", "quenched/annealed escape probabilities");
    auto* barrier_scan = app.add_subcommand("barrier-scan", "min barrier over generations");
    auto* walk = app.add_subcommand("walk", "first-passage replicas");
    auto* xstar = app.add_subcommand("xstar", "running-maximum trajectories");
    auto* oracle_check = app.add_subcommand("oracle-check", "recursions vs dense-chain oracle");
    auto* phi_star = app.add_subcommand("phi-star", "cascade fixed point table");
    auto* accept = app.add_subcommand("accept", "run the acceptance suite");
    std::vector<int> criteria;
    accept->add_option("--criteria", criteria, "criterion ids (default: all)");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = load_config(config_path);
        apply_common(cfg, seed, out_dir, threads, budget_nodes, budget_steps);
        if (classify->parsed()) return cmd_classify(cfg);
        if (rho_scan->parsed()) return cmd_rho_scan(cfg);
        if (barrier_scan->parsed()) return cmd_barrier_scan(cfg);
        if (walk->parsed()) return cmd_walk(cfg);
        if (xstar->parsed()) return cmd_xstar(cfg);
        if (oracle_check->parsed()) return cmd_oracle_check(cfg);
        if (phi_star->parsed()) return cmd_phi_star(cfg);
        if (accept->parsed()) return cmd_accept(cfg, criteria);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
