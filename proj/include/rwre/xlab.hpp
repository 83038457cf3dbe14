#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rwre/brw.hpp"
#include "rwre/config.hpp"
#include "rwre/stats.hpp"
#include "rwre/walker.hpp"

namespace rwre::xlab {

enum class Transform {
    LogNegLogVsLog,  // rho-type series: y = log(-log v) against x = log n
    LogVsLog,        // barrier-type series: y = log v against x = log n
    RatioBand,       // X*-type series: v / (log n)^3 band
};

const char* to_string(Transform t);

struct FitResult {
    double slope = 0.0;      // for RatioBand: max/min ratio of the band
    double intercept = 0.0;  // for RatioBand: band minimum
    double r_squared = 0.0;
    int points_used = 0;
    Transform transform = Transform::LogVsLog;
};

FitResult fit_exponent(const std::vector<std::pair<double, double>>& series, Transform transform);

struct RhoScanRow {
    std::uint64_t seed = 0;
    int n = 0;
    double rho = 0.0;
    double log_rho = 0.0;
    std::optional<double> gamma_root;
    std::optional<double> expected_tau;
    std::optional<double> prop24;
    bool exact = false;
};

struct RhoScan {
    std::vector<RhoScanRow> rows;
    std::optional<FitResult> quenched_fit;  // median across seeds per depth
    std::optional<FitResult> annealed_fit;  // mean across seeds per depth
    std::string csv_path;
};

RhoScan run_rho_scan(const ExperimentConfig& cfg);

struct BarrierScanRow {
    std::uint64_t seed = 0;
    int n = 0;
    double barrier = 0.0;
    std::string witness;
    std::uint64_t visited = 0;
    bool budget_exceeded = false;
};

struct BarrierScan {
    std::vector<BarrierScanRow> rows;
    std::optional<FitResult> fit;  // log-log on the per-depth medians
    std::string csv_path;
};

BarrierScan run_barrier_scan(const ExperimentConfig& cfg);

struct ReplicaBand {
    std::uint64_t seed_walk = 0;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
};

struct WalkExperiment {
    std::vector<walker::WalkRecord> records;
    std::vector<ReplicaBand> bands;  // X*_t / (log t)^3 over checkpoints t >= t_min
    std::string json_path;
};

WalkExperiment run_walk_experiment(const ExperimentConfig& cfg, std::uint64_t t_min = 10000);

struct CriterionResult {
    int id = 0;
    std::string name;
    std::string measured;
    std::string tolerance;
    bool pass = false;
    double seconds = 0.0;
};

struct AcceptanceReport {
    std::vector<CriterionResult> results;
    bool all_pass() const;
    std::string to_json() const;
};

// Runs the listed criteria (all 14 when the list is empty), one pass/fail
// line per criterion on `log`.
AcceptanceReport run_acceptance(const ExperimentConfig& cfg, const std::vector<int>& criteria,
                                std::ostream& log);

}  // namespace rwre::xlab
