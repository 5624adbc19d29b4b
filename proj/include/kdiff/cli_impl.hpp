#pragma once

#include <iostream>

namespace kdiff {

inline int run_cli(const std::vector<std::string>& args) {
    (void)args;
    std::cerr << "kdiff: not yet wired\n";
    return 2;
}

}  // namespace kdiff
