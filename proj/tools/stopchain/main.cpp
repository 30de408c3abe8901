#include <iostream>

#include "stopchain/cli.hpp"

int main(int argc, char** argv) {
    return stopchain::cli::run_cli(argc, argv, std::cout, std::cerr);
}
