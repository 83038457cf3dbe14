#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include "rwre/config.hpp"
#include "rwre/xlab.hpp"

// Acceptance suite entry point: runs every criterion at its pinned tolerance
// and prints one pass/fail line per criterion. Non-zero exit on any failure.
int main(int argc, char** argv) {
    rwre::ExperimentConfig cfg;
    std::vector<int> criteria;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--threads" && i + 1 < argc) {
            cfg.threads = std::atoi(argv[++i]);
        } else if (arg == "--criteria" && i + 1 < argc) {
            std::string list = argv[++i];
            for (std::size_t pos = 0; pos < list.size();) {
                std::size_t comma = list.find(',', pos);
                if (comma == std::string::npos) comma = list.size();
                criteria.push_back(std::stoi(list.substr(pos, comma - pos)));
                pos = comma + 1;
            }
        } else {
            std::cerr << "usage: acceptance [--threads N] [--criteria 1,2,...]\n";
            return 2;
        }
    }

    const auto report = rwre::xlab::run_acceptance(cfg, criteria, std::cout);
    std::cout << (report.all_pass() ? "ACCEPTANCE: all criteria passed\n"
                                    : "ACCEPTANCE: failures present\n");
    return report.all_pass() ? 0 : 1;
}
