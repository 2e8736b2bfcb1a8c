#include <iostream>

#include "ddss/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return ddss::run_cli(args, std::cout, std::cerr);
}
