#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rwre/env.hpp"

namespace rwre {

inline constexpr const char* kToolVersion = "rwre 0.1.0";

// Structured text form of an EnvSpec: keys `b`, `atoms`, and an optional
// `family` shorthand (two_point / critical_two_point / constant).
std::string env_to_json(const EnvSpec& spec);
EnvSpec env_from_json(const std::string& text);
EnvSpec env_from_json_file(const std::string& path);

struct ExperimentConfig {
    std::optional<std::string> env_json;  // inline env object, serialized
    std::uint64_t seed = 1;
    std::uint64_t num_seeds = 1;
    std::vector<int> schedule;
    std::uint64_t excursions = 100000;
    std::uint64_t replicas = 1;
    std::uint64_t total_steps = 1000000;
    std::uint64_t budget_nodes = std::uint64_t{1} << 30;
    std::uint64_t budget_steps = std::uint64_t{1} << 32;
    std::uint64_t budget_values = std::uint64_t{1} << 22;
    std::uint64_t samples = 10000;
    int threads = 0;  // 0: hardware concurrency
    std::string out_dir = ".";

    EnvSpec make_env() const;
};

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig config_from_file(const std::string& path);

// Depth schedules: explicit arrays, or the cube-spaced preset "cubes:J"
// giving n = j^3 + 1 for j = 1..J.
std::vector<int> cube_schedule(int j_max);

}  // namespace rwre
