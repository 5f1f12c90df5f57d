#include <iostream>
#include <string>
#include <vector>

#include "stackelberg/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return stackelberg::cli::run(args, std::cout, std::cerr);
}
