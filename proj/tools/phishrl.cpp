#include <iostream>
#include <string>
#include <vector>

#include "phishrl/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return phishrl::cli::run(args, std::cout, std::cerr);
}
