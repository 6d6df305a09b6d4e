#include <iostream>

#include "enscore/cli.hpp"

int main(int argc, char** argv) {
    return enscore::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
