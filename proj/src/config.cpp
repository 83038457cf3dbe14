#include "rwre/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rwre {

using nlohmann::json;

namespace {

json env_json_object(const EnvSpec& spec) {
    json atoms = json::array();
    for (const auto& atom : spec.atoms()) {
        json entry;
        entry["values"] = atom.values;
        entry["prob"] = atom.prob;
        atoms.push_back(std::move(entry));
    }
    return json{{"b", spec.b()}, {"atoms", std::move(atoms)}};
}

EnvSpec env_from_json_object(const json& j) {
    if (j.contains("family")) {
        const std::string family = j.at("family").get<std::string>();
        const int b = j.at("b").get<int>();
        if (family == "two_point")
            return make_two_point_env(b, j.at("a_hi").get<double>(), j.at("a_lo").get<double>(),
                                      j.at("q").get<double>());
        if (family == "critical_two_point") return make_critical_two_point(b);
        if (family == "constant") return make_constant_env(b, j.at("a").get<double>());
        throw std::invalid_argument("unknown env family: " + family);
    }
    const int b = j.at("b").get<int>();
    std::vector<SiblingAtom> atoms;
    for (const auto& entry : j.at("atoms")) {
        SiblingAtom atom;
        atom.values = entry.at("values").get<std::vector<double>>();
        atom.prob = entry.at("prob").get<double>();
        atoms.push_back(std::move(atom));
    }
    return EnvSpec(b, std::move(atoms));
}

}  // namespace

std::string env_to_json(const EnvSpec& spec) { return env_json_object(spec).dump(2); }

EnvSpec env_from_json(const std::string& text) {
    return env_from_json_object(json::parse(text));
}

EnvSpec env_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open env config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return env_from_json(buf.str());
}

EnvSpec ExperimentConfig::make_env() const {
    if (!env_json) return make_critical_two_point(2);
    return env_from_json(*env_json);
}

std::vector<int> cube_schedule(int j_max) {
    if (j_max < 1) throw std::invalid_argument("cube schedule needs j_max >= 1");
    std::vector<int> schedule;
    schedule.reserve(static_cast<std::size_t>(j_max));
    for (int j = 1; j <= j_max; ++j) schedule.push_back(j * j * j + 1);
    return schedule;
}

ExperimentConfig config_from_json(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig cfg;
    if (j.contains("env")) cfg.env_json = j.at("env").dump();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("seeds")) cfg.num_seeds = j.at("seeds").get<std::uint64_t>();
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        if (s.is_string()) {
            const std::string text_s = s.get<std::string>();
            if (text_s.rfind("cubes:", 0) != 0)
                throw std::invalid_argument("schedule string must be \"cubes:J\"");
            cfg.schedule = cube_schedule(std::stoi(text_s.substr(6)));
        } else {
            cfg.schedule = s.get<std::vector<int>>();
        }
    }
    if (j.contains("excursions")) cfg.excursions = j.at("excursions").get<std::uint64_t>();
    if (j.contains("replicas")) cfg.replicas = j.at("replicas").get<std::uint64_t>();
    if (j.contains("total_steps")) cfg.total_steps = j.at("total_steps").get<std::uint64_t>();
    if (j.contains("budget_nodes")) cfg.budget_nodes = j.at("budget_nodes").get<std::uint64_t>();
    if (j.contains("budget_steps")) cfg.budget_steps = j.at("budget_steps").get<std::uint64_t>();
    if (j.contains("budget_values")) cfg.budget_values = j.at("budget_values").get<std::uint64_t>();
    if (j.contains("samples")) cfg.samples = j.at("samples").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();

    for (std::size_t i = 1; i < cfg.schedule.size(); ++i)
        if (cfg.schedule[i] <= cfg.schedule[i - 1])
            throw std::invalid_argument("schedule must be strictly increasing");
    if (cfg.budget_nodes == 0 || cfg.budget_steps == 0 || cfg.budget_values == 0)
        throw std::invalid_argument("budgets must be positive");
    return cfg;
}

ExperimentConfig config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

}  // namespace rwre
