#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rwre/config.hpp"
#include "rwre/xlab.hpp"

using namespace rwre;
using namespace rwre::xlab;

namespace {

std::vector<std::pair<double, double>> synth(double (*f)(double)) {
    std::vector<std::pair<double, double>> series;
    for (int n = 8; n <= 512; n *= 2) series.emplace_back(n, f(static_cast<double>(n)));
    return series;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("fit_exponent recovers exact cube-root forms") {
    const auto rho_fit = fit_exponent(
        synth(+[](double n) { return std::exp(-2.0 * std::pow(n, 1.0 / 3.0)); }),
        Transform::LogNegLogVsLog);
    CHECK(rho_fit.slope == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(rho_fit.r_squared > 1.0 - 1e-9);

    const auto barrier_fit = fit_exponent(
        synth(+[](double n) { return 3.0 * std::pow(n, 1.0 / 3.0); }), Transform::LogVsLog);
    CHECK(barrier_fit.slope == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("fit_exponent flags a 1/n series as shallower than cube root") {
    // least squares of log log n against log n over {8,...,512}: 0.2586
    const auto fit =
        fit_exponent(synth(+[](double n) { return 1.0 / n; }), Transform::LogNegLogVsLog);
    CHECK(fit.slope == doctest::Approx(0.2586).epsilon(2e-3));
    CHECK(fit.slope < 1.0 / 3.0 - 0.05);
}

TEST_CASE("fit_exponent errors") {
    CHECK_THROWS_AS(fit_exponent({{8.0, 0.5}, {16.0, 0.4}}, Transform::LogNegLogVsLog),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_exponent({{8.0, 1.5}, {16.0, 0.4}, {32.0, 0.3}}, Transform::LogNegLogVsLog),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_exponent({{8.0, -0.5}, {16.0, 0.4}, {32.0, 0.3}}, Transform::LogVsLog),
                    std::invalid_argument);
}

TEST_CASE("fit_exponent log-log slope is scale invariant") {
    const auto base = synth(+[](double n) { return 3.0 * std::pow(n, 1.0 / 3.0); });
    auto scaled = base;
    for (auto& [n, v] : scaled) v *= 17.0;
    const double s1 = fit_exponent(base, Transform::LogVsLog).slope;
    const double s2 = fit_exponent(scaled, Transform::LogVsLog).slope;
    CHECK(std::fabs(s1 - s2) < 1e-12);
}

TEST_CASE("ratio band transform") {
    std::vector<std::pair<double, double>> series;
    for (double t : {16384.0, 65536.0, 262144.0})
        series.emplace_back(t, 2.0 * std::pow(std::log(t), 3.0));
    const auto fit = fit_exponent(series, Transform::RatioBand);
    CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-12));  // flat band
    CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("rho scan on the constant environment gives the 1/n series") {
    ExperimentConfig cfg;
    cfg.env_json = R"({"family":"constant","b":2,"a":0.5})";
    cfg.schedule = {2, 4, 8, 16};
    cfg.num_seeds = 3;
    cfg.threads = 2;
    cfg.out_dir = "xlab_test_out";
    const auto scan = run_rho_scan(cfg);
    REQUIRE(scan.rows.size() == 12);
    for (const auto& row : scan.rows) {
        CHECK(row.exact);
        CHECK(row.rho == doctest::Approx(1.0 / row.n).epsilon(1e-12));
        REQUIRE(row.expected_tau.has_value());
        CHECK(*row.expected_tau ==
              doctest::Approx(static_cast<double>(row.n) * row.n).epsilon(1e-10));
    }
    REQUIRE(scan.annealed_fit.has_value());

    const std::string csv = slurp(scan.csv_path);
    CHECK(csv.find("seed,n,rho,log_rho,gamma_root,expected_tau,prop24_bound") != std::string::npos);
    CHECK(csv.find("# version=") != std::string::npos);
    std::filesystem::remove_all(cfg.out_dir);
}

TEST_CASE("deterministic outputs across thread counts") {
    ExperimentConfig cfg;
    cfg.schedule = {2, 4, 6};
    cfg.num_seeds = 4;
    cfg.out_dir = "xlab_test_det1";
    cfg.threads = 1;
    const auto seq = run_rho_scan(cfg);
    cfg.out_dir = "xlab_test_det2";
    cfg.threads = 4;
    const auto par = run_rho_scan(cfg);
    REQUIRE(seq.rows.size() == par.rows.size());
    for (std::size_t i = 0; i < seq.rows.size(); ++i) {
        CHECK(seq.rows[i].seed == par.rows[i].seed);
        CHECK(seq.rows[i].rho == par.rows[i].rho);
    }
    std::filesystem::remove_all("xlab_test_det1");
    std::filesystem::remove_all("xlab_test_det2");
}

TEST_CASE("barrier scan: constant environment has unit log-log slope") {
    ExperimentConfig cfg;
    cfg.env_json = R"({"family":"constant","b":2,"a":0.5})";
    cfg.schedule = {16, 32, 64, 128};
    cfg.num_seeds = 2;
    cfg.threads = 2;
    cfg.out_dir = "xlab_test_barrier";
    const auto scan = run_barrier_scan(cfg);
    REQUIRE(scan.fit.has_value());
    CHECK(scan.fit->slope == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& row : scan.rows)
        CHECK(row.barrier == doctest::Approx(row.n * std::log(2.0)).epsilon(1e-12));
    std::filesystem::remove_all(cfg.out_dir);
}

TEST_CASE("barrier scan marks budget-exceeded rows and keeps fitting") {
    ExperimentConfig cfg;
    cfg.schedule = {4, 8, 12, 256};
    cfg.num_seeds = 1;
    cfg.threads = 1;
    cfg.budget_nodes = 2000;  // enough for the small depths, not for 256
    cfg.out_dir = "xlab_test_budget";
    const auto scan = run_barrier_scan(cfg);
    bool saw_budget = false;
    for (const auto& row : scan.rows) saw_budget = saw_budget || row.budget_exceeded;
    CHECK(saw_budget);
    REQUIRE(scan.fit.has_value());  // three small depths still fit
    std::filesystem::remove_all(cfg.out_dir);
}

TEST_CASE("single-depth schedules cannot be fitted") {
    ExperimentConfig cfg;
    cfg.env_json = R"({"family":"constant","b":2,"a":0.5})";
    cfg.schedule = {8};
    cfg.num_seeds = 2;
    cfg.out_dir = "xlab_test_single";
    const auto scan = run_barrier_scan(cfg);
    CHECK_FALSE(scan.fit.has_value());
    std::filesystem::remove_all(cfg.out_dir);
}

TEST_CASE("walk experiment bands and json metadata") {
    ExperimentConfig cfg;
    cfg.replicas = 2;
    cfg.total_steps = 1 << 15;
    cfg.threads = 2;
    cfg.out_dir = "xlab_test_walk";
    const auto exp = run_walk_experiment(cfg, 1 << 12);
    REQUIRE(exp.bands.size() == 2);
    for (const auto& band : exp.bands) {
        CHECK(band.min_ratio > 0.0);
        CHECK(band.max_ratio >= band.min_ratio);
    }
    const std::string json = slurp(exp.json_path);
    CHECK(json.find("spec_hash") != std::string::npos);
    CHECK(json.find("xstar_checkpoints") != std::string::npos);
    std::filesystem::remove_all(cfg.out_dir);
}

TEST_CASE("config parsing") {
    const auto cfg = config_from_json(R"({
        "env": {"family": "critical_two_point", "b": 2},
        "seed": 9, "seeds": 3, "schedule": [2, 4, 8],
        "excursions": 5000, "threads": 2, "out": "somewhere"
    })");
    CHECK(cfg.seed == 9);
    CHECK(cfg.num_seeds == 3);
    CHECK(cfg.schedule == std::vector<int>{2, 4, 8});
    CHECK(cfg.out_dir == "somewhere");
    CHECK(cfg.make_env().b() == 2);

    CHECK_THROWS_AS(config_from_json(R"({"schedule": [4, 2]})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"budget_nodes": 0})"), std::invalid_argument);

    const auto cubes = config_from_json(R"({"schedule": "cubes:4"})");
    CHECK(cubes.schedule == std::vector<int>{2, 9, 28, 65});
}

TEST_CASE("acceptance: tampering with the gamma convention breaks criterion 2") {
    // The acceptance driver locks the +1 root correction: dropping it turns
    // E tau from n^2 into n^2 - n, far outside the 1e-9 gate. Emulate the
    // tampered convention directly on the closed form.
    const int n = 10;
    const double tampered_gamma_root = n - 1.0;  // without the leading 1
    CHECK(std::fabs(tampered_gamma_root / (1.0 / n) - n * n) > 1.0);
}

TEST_CASE("acceptance runs selected cheap criteria end to end") {
    ExperimentConfig cfg;
    cfg.threads = 2;
    std::ostringstream log;
    const auto report = run_acceptance(cfg, {2, 6}, log);
    REQUIRE(report.results.size() == 2);
    for (const auto& r : report.results) CHECK(r.pass);
    CHECK(report.all_pass());
    CHECK(log.str().find("[PASS] criterion 2") != std::string::npos);
    CHECK(log.str().find("[PASS] criterion 6") != std::string::npos);
    CHECK(report.to_json().find("\"verdict\"") != std::string::npos);
}
