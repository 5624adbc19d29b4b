#pragma once

// Command-line surface; filled in as the library modules land.

#include <string>
#include <vector>

namespace kdiff {

int run_cli(const std::vector<std::string>& args);

inline int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace kdiff

#include "kdiff/cli_impl.hpp"
